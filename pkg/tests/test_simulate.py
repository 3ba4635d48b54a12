from collections import Counter

import numpy as np
import pytest
from scipy import stats

from factortree.copula import BVN, FRANK, GUMBEL, INDEPENDENCE, T5, tau_to_theta
from factortree.data import CutpointSet
from factortree.errors import DomainError
from factortree.likelihood import all_patterns, logpmf_rows
from factortree.model import ModelSpec, ParamVector
from factortree.simulate import (SimDesign, draw, builtin_designs, path_tree, prufer_to_tree,
                                 random_spanning_tree, sample)


def cell_gap(spec, params, cut, n, seed, root=None):
    data = sample(n, cut, spec, params, np.random.default_rng(seed), root)
    Y = all_patterns(cut.category_counts)
    p = np.exp(logpmf_rows(Y, cut, spec, params))
    code = np.ravel_multi_index(data.values.T, cut.category_counts)
    freq = np.bincount(code, minlength=len(Y)) / n
    return np.max(np.abs(freq - p))


def test_independence_margins():
    d = 4
    cut = CutpointSet.from_lists([[0, .1, .5, 1], [0, .3, 1], [0, .2, .4, .9, 1], [0, .5, 1]])
    spec = ModelSpec.build(d, 1, f1=INDEPENDENCE, tree=path_tree(d), tree_family=INDEPENDENCE)
    data = sample(100_000, cut, spec, ParamVector(np.zeros(d), delta=np.zeros(d - 1)),
                  np.random.default_rng(0))
    for j in range(d):
        obs = np.bincount(data.values[:, j], minlength=cut.category_counts[j])
        exp = np.diff(cut.item(j)) * data.n
        assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_one_factor_tree_cells():
    cut = CutpointSet.from_lists([[0, .4, 1], [0, .55, 1], [0, .3, 1]])
    spec = ModelSpec.build(3, 1, f1=GUMBEL, tree=[(0, 1), (1, 2)], tree_family=GUMBEL)
    par = ParamVector([2.0, 1.6, 2.5], delta=[1.5, 1.3])
    assert cell_gap(spec, par, cut, 200_000, 1) < 0.004


def test_mixed_two_factor_tree_cells():
    cut = CutpointSet.from_lists([[0, .4, .8, 1], [0, .5, 1], [0, .3, 1], [0, .6, 1]])
    spec = ModelSpec(4, 2, families_f1=[GUMBEL, BVN, T5, FRANK],
                     families_f2=[BVN, GUMBEL, FRANK, T5],
                     tree=[(0, 1), (1, 2), (1, 3)], families_tree=[T5, FRANK, GUMBEL])
    par = ParamVector([1.8, .6, .5, 4.0], [.3, 1.3, 2.0, .2], [.3, 2.5, 1.4])
    assert cell_gap(spec, par, cut, 200_000, 2) < 0.004


def test_root_choice_does_not_change_distribution():
    cut = CutpointSet.from_lists([[0, .4, 1], [0, .55, 1], [0, .3, 1], [0, .5, 1]])
    spec = ModelSpec.build(4, 1, f1=GUMBEL, tree=[(0, 1), (1, 2), (2, 3)], tree_family=GUMBEL)
    par = ParamVector([2.0, 1.6, 2.5, 1.4], delta=[2.0, 1.3, 1.7])
    for root in (0, 2, 3):
        assert cell_gap(spec, par, cut, 200_000, 10 + root, root=root) < 0.004


def test_determinism():
    des = builtin_designs(n=50, seed=7, replications=3)["d8-1ftree-drawable"]
    a, b = draw(des, 1), draw(des, 1)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(draw(des, 0).values, a.values)


def test_builtin_designs():
    designs = builtin_designs()
    assert len(designs) == 12
    des = designs["d8-1ftree-drawable"]
    assert des.spec.tree == tuple(path_tree(8))
    np.testing.assert_allclose(des.taus.theta1, np.linspace(0.7, 0.4, 8))
    np.testing.assert_allclose(des.taus.delta, np.linspace(0.4, 0.1, 7))
    assert des.taus.theta1[0] == 0.7 and des.taus.delta[-1] == pytest.approx(0.1)
    assert des.n == 500 and des.cut.category_counts == (5,) * 8
    np.testing.assert_allclose(des.cut.item(0), [0, .2, .4, .6, .8, 1])
    assert des.params.theta1[0] == pytest.approx(1 / 0.3)
    two = designs["d16-2ftree-regular"]
    np.testing.assert_allclose(two.taus.theta2, np.linspace(0.55, 0.25, 16))
    assert all(f == GUMBEL for f in two.spec.families_f2)
    assert two.spec.tree == designs["d16-1ftree-regular"].spec.tree
    assert two.spec.tree != tuple(path_tree(16))


def test_design_validation():
    with pytest.raises(DomainError):
        SimDesign(1, ModelSpec.build(3, 1), ParamVector([.1, .1, .1]), CutpointSet.equal(3, 2))
    with pytest.raises(DomainError):
        SimDesign(10, ModelSpec.build(3, 1, f1=GUMBEL), ParamVector([-.1, .1, .1]),
                  CutpointSet.equal(3, 2))


def test_prufer_examples():
    assert sorted(prufer_to_tree([3, 3, 3], 5)) == [(0, 3), (1, 3), (2, 3), (3, 4)]
    assert sorted(prufer_to_tree([1, 2, 3], 5)) == [(0, 1), (1, 2), (2, 3), (3, 4)]


def test_random_spanning_tree_uniform():
    rng = np.random.default_rng(3)
    counts = Counter(tuple(sorted(random_spanning_tree(4, rng))) for _ in range(32_000))
    assert len(counts) == 16
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3
