"""Sampling ordinal data from factor tree copula models."""

import heapq
from dataclasses import dataclass

import numpy as np

from .copula import GUMBEL, U_EPS, cond_cdf_unchecked, inv_cond_cdf_unchecked, tau_to_theta
from .data import CutpointSet, ResponseMatrix
from .errors import DomainError
from .model import ModelSpec, ParamVector, bfs_order

DESIGN_SEED = 20230517


@dataclass(frozen=True)
class SimDesign:
    """A simulation scenario with parameters on the Kendall-tau scale."""

    n: int
    spec: ModelSpec
    taus: ParamVector
    cut: CutpointSet
    seed: int = 0
    replications: int = 1
    name: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("sample size must be at least 2")
        if self.cut.d != self.spec.d:
            raise DomainError("cutpoints and model disagree on the number of items")
        self.params  # validates the tau grids

    @property
    def params(self):
        groups = {}
        for g in ("theta1", "theta2", "delta"):
            t = self.taus.get(g)
            groups[g] = None if t is None else np.zeros(len(t))
        for g, i, f in self.spec.slots():
            if f.has_param:
                groups[g][i] = tau_to_theta(f, self.taus.get(g)[i])
        return ParamVector(**groups).validate(self.spec)


def _item_cdfs(cut, spec, params, x1, x2):
    """Conditional cdf values ``Pr(Y_j <= y | x)`` per respondent -> (n, d, K+1)."""
    a = cut.a[None, :, :]
    if spec.p == 0:
        return np.broadcast_to(a, (len(x1),) + cut.a.shape)
    F = np.empty((len(x1),) + cut.a.shape)
    for j, fam in enumerate(spec.families_f1):
        F[:, j, :] = cond_cdf_unchecked(fam, params.theta1[j], cut.a[j][None, :], x1[:, None])
    if spec.p == 2:
        for j, fam in enumerate(spec.families_f2):
            F[:, j, :] = cond_cdf_unchecked(fam, params.theta2[j], F[:, j, :], x2[:, None])
    return F


def sample(n, cut, spec, params, rng, root=None):
    """Draw ``n`` response vectors.

    Latent factors are uniform. The residual tree is traversed breadth-first
    from ``root`` (lowest-index node by default). A child is drawn as
    ``inv_cond_cdf(w | u)`` where ``u`` is uniform on the parent's observed
    category interval, so the categories form a Markov tree given the
    factors, which is the structure the pmf describes. All edge families here
    are exchangeable, so edge orientation does not matter.
    """
    params.validate(spec)
    d = spec.d
    x1 = rng.random(n) if spec.p >= 1 else np.zeros(n)
    x2 = rng.random(n) if spec.p == 2 else np.zeros(n)
    F = _item_cdfs(cut, spec, params, x1, x2)
    counts = cut.category_counts
    rows = np.arange(n)

    def categorise(j, v):
        y = np.zeros(n, dtype=np.int64)
        for k in range(1, counts[j]):
            y += F[:, j, k] <= v
        return y

    y = np.zeros((n, d), dtype=np.int64)
    if not spec.has_tree:
        v = rng.random((n, d))
        for j in range(d):
            y[:, j] = categorise(j, v[:, j])
        return ResponseMatrix(y, counts)
    order, parent, parent_edge = bfs_order(spec.tree, d, root)
    for node in order:
        w = rng.random(n)
        par = parent[node]
        if par < 0:
            y[:, node] = categorise(node, w)
            continue
        lo = F[rows, par, y[:, par]]
        hi = F[rows, par, y[:, par] + 1]
        u = np.clip(lo + rng.random(n) * (hi - lo), U_EPS, 1.0 - U_EPS)
        e = parent_edge[node]
        v = inv_cond_cdf_unchecked(spec.families_tree[e], params.delta[e], w, u)
        y[:, node] = categorise(node, v)
    return ResponseMatrix(y, counts)


def draw(design, replicate=0, root=None):
    """Replicate ``replicate`` of ``design``; streams are keyed by ``(seed, replicate)``."""
    rng = np.random.default_rng([int(design.seed), int(replicate)])
    return sample(design.n, design.cut, design.spec, design.params, rng, root)


def draw_all(design):
    return [draw(design, r) for r in range(design.replications)]


def prufer_to_tree(seq, d):
    """Decode a Prüfer sequence of length ``d - 2`` into a list of edges."""
    degree = [1] * d
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(d) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(u, w), max(u, w)))
    return edges


def random_spanning_tree(d, rng):
    """Uniformly random labelled spanning tree via a random Prüfer sequence."""
    if d == 2:
        return [(0, 1)]
    return prufer_to_tree(rng.integers(0, d, size=d - 2).tolist(), d)


def path_tree(d):
    return [(j, j + 1) for j in range(d - 1)]


def _grid(hi, lo, m):
    return np.linspace(hi, lo, m)


def builtin_designs(n=500, k=5, seed=1, replications=1000):
    """The Monte Carlo scenarios: ``d in {8, 16, 24}`` for 1- and 2-factor tree
    models with Gumbel links, each with a drawable (path) tree and a random
    spanning tree.

    Factor 1 taus run from 0.70 to 0.40, factor 2 from 0.55 to 0.25 and tree
    edges from 0.40 to 0.10, all equally spaced.
    """
    out = {}
    for d in (8, 16, 24):
        trees = {"drawable": path_tree(d),
                 "regular": random_spanning_tree(d, np.random.default_rng([DESIGN_SEED, d]))}
        for p, label in ((1, "1ftree"), (2, "2ftree")):
            for kind, tree in trees.items():
                spec = ModelSpec.build(d, p, f1=GUMBEL, f2=GUMBEL if p == 2 else None,
                                       tree=tree, tree_family=GUMBEL)
                taus = ParamVector(theta1=_grid(0.70, 0.40, d),
                                   theta2=_grid(0.55, 0.25, d) if p == 2 else None,
                                   delta=_grid(0.40, 0.10, d - 1))
                name = f"d{d}-{label}-{kind}"
                out[name] = SimDesign(n, spec, taus, CutpointSet.equal(d, k), seed,
                                      replications, name)
    return out
