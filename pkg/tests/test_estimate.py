import warnings

import numpy as np
import pytest
from scipy import stats

from factortree.copula import BVN, FRANK, GUMBEL, SGUMBEL, T2, T5, tau_to_theta
from factortree.data import CutpointSet, ResponseMatrix, estimate_cutpoints
from factortree.errors import InitializationError
from factortree.estimate import (FitOptions, default_start, fit_ifm, independence_loglik,
                                 params_to_taus, slot_gradient, standard_errors, transform,
                                 untransform)
from factortree.likelihood import LikelihoodCache, loglik
from factortree.model import ModelSpec, ParamVector
from factortree.optimize import central_gradient, numerical_hessian, variable_metric
from factortree.quadrature import gauss_legendre_unit
from factortree.simulate import path_tree, sample


def simulate(spec, taus, n, seed, K=5):
    cut = CutpointSet.equal(spec.d, K)
    params = ParamVector(*[None if t is None else
                           [tau_to_theta(f, x) if f.has_param else 0.0 for f, x in zip(fams, t)]
                           for t, fams in ((taus[0], spec.families_f1),
                                           (taus[1], spec.families_f2),
                                           (taus[2], spec.families_tree))])
    data = sample(n, cut, spec, params, np.random.default_rng(seed))
    return data, params


# ------------------------------------------------------------- transforms

def test_transform_examples():
    spec = ModelSpec(3, 1, families_f1=[BVN, GUMBEL, FRANK])
    p = untransform(spec, np.zeros(3))
    assert p.theta1[0] == 0.0 and p.theta1[1] == 2.0
    assert params_to_taus(spec, p).theta1[1] == pytest.approx(0.5)
    assert p.theta1[2] != 0.0  # Frank stays away from its degenerate value


def test_transform_round_trip():
    rng = np.random.default_rng(0)
    fams = [BVN, GUMBEL, SGUMBEL, T2, T5, FRANK]
    spec = ModelSpec(6, 2, families_f1=fams, families_f2=fams[::-1],
                     tree=path_tree(6), families_tree=fams[:5])
    worst = 0.0
    for _ in range(10_000):
        g = rng.uniform(-4, 4, spec.n_params)
        g[np.abs(g) < 1e-4] = 1e-4
        back = transform(spec, untransform(spec, g))
        worst = max(worst, float(np.max(np.abs(back - g))))
    assert worst < 1e-12


# ---------------------------------------------------------------- optimizer

def test_variable_metric_rosenbrock():
    f = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2  # noqa: E731
    res = variable_metric(f, [-1.2, 1.0], gtol=1e-7, maxiter=2000)
    assert res.converged
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-4)
    assert np.all(np.diff(res.history) <= 0)


def test_variable_metric_reports_non_convergence():
    f = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2  # noqa: E731
    res = variable_metric(f, [-1.2, 1.0], maxiter=3)
    assert not res.converged and res.iterations == 3
    assert res.fun == min(res.history) and res.fun < f([-1.2, 1.0])


def test_variable_metric_bad_start():
    with pytest.raises(InitializationError):
        variable_metric(lambda x: np.inf, [0.0])


def test_hessian_of_quadratic():
    A = np.array([[3.0, 1.0, 0.5], [1.0, 2.0, -0.3], [0.5, -0.3, 1.5]])
    f = lambda x: 0.5 * x @ A @ x + x.sum()  # noqa: E731
    np.testing.assert_allclose(numerical_hessian(f, np.array([0.2, -0.1, 0.4])), A, atol=1e-6)


# ----------------------------------------------------------------- gradient

@pytest.mark.parametrize("p,tree", [(1, False), (1, True), (2, True)])
def test_gradient_against_richardson_reference(p, tree):
    d = 5
    fams = [GUMBEL, BVN, T5, FRANK, SGUMBEL]
    spec = ModelSpec(d, p, families_f1=fams, families_f2=fams[::-1] if p == 2 else None,
                     tree=path_tree(d) if tree else None,
                     families_tree=[BVN, FRANK, GUMBEL, T2] if tree else None)
    taus = ([0.6, 0.5, 0.55, 0.4, 0.45], [0.3, 0.2, 0.25, 0.3, 0.2] if p == 2 else None,
            [0.2, 0.15, 0.25, 0.1] if tree else None)
    data, params = simulate(spec, taus, 300, 4)
    cache = LikelihoodCache(data, estimate_cutpoints(data), spec, gauss_legendre_unit())
    gamma = transform(spec, params) + 0.05
    f = lambda g: cache(untransform(spec, g))  # noqa: E731
    g1 = central_gradient(f, gamma, 1e-3)
    g2 = central_gradient(f, gamma, 5e-4)
    ref = (4 * g2 - g1) / 3
    fast = slot_gradient(cache, spec, gamma)
    plain = central_gradient(f, gamma, 1e-6)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(fast - ref)) / scale < 1e-4
    assert np.max(np.abs(plain - ref)) / scale < 1e-4


# ------------------------------------------------------------------ fitting

@pytest.fixture(scope="module")
def gumbel_tree_fit():
    d = 6
    spec = ModelSpec.build(d, 1, f1=GUMBEL, tree=path_tree(d), tree_family=GUMBEL)
    taus = (np.linspace(0.7, 0.4, d), None, np.linspace(0.4, 0.1, d - 1))
    data, params = simulate(spec, taus, 500, 11)
    return data, spec, params, fit_ifm(data, spec)


def test_fit_converges_and_beats_truth(gumbel_tree_fit):
    data, spec, params, fit = gumbel_tree_fit
    assert fit.converged and fit.n_params == 11
    true_ll = loglik(data, fit.cut, spec, params)
    assert fit.loglik >= true_ll - 1e-8
    assert fit.loglik == pytest.approx(loglik(data, fit.cut, spec, fit.params), abs=1e-8)
    assert fit.aic == pytest.approx(-2 * fit.loglik + 22)


def test_history_monotone(gumbel_tree_fit):
    hist = np.array(gumbel_tree_fit[3].history)
    assert len(hist) > 2 and np.all(np.diff(hist) >= -1e-12)


def test_fit_reaches_same_optimum_from_truth(gumbel_tree_fit):
    data, spec, params, fit = gumbel_tree_fit
    again = fit_ifm(data, spec, start=params)
    assert again.loglik == pytest.approx(fit.loglik, abs=1e-6)
    np.testing.assert_allclose(again.taus.theta1, fit.taus.theta1, atol=1e-3)
    assert np.mean(np.abs(fit.taus.theta1 - np.linspace(0.7, 0.4, 6))) < 0.1


def test_iteration_cap_returns_best_iterate(gumbel_tree_fit):
    data, spec, _, _ = gumbel_tree_fit
    fit = fit_ifm(data, spec, options=FitOptions(maxiter=2))
    assert not fit.converged and fit.iterations == 2
    assert fit.loglik == pytest.approx(max(fit.history))


def test_bad_start_raises():
    data = ResponseMatrix(np.array([[0, 1, 0], [1, 0, 1], [1, 1, 0], [0, 0, 1]]))
    spec = ModelSpec.build(3, 1)

    class Broken(LikelihoodCache):
        def __call__(self, params):
            return np.nan

    import factortree.estimate as est
    orig = est.LikelihoodCache
    est.LikelihoodCache = Broken
    try:
        with pytest.raises(InitializationError):
            fit_ifm(data, spec, start=ParamVector([0.1, 0.1, 0.1]))
    finally:
        est.LikelihoodCache = orig


def test_default_start_in_domain():
    fams = [BVN, GUMBEL, SGUMBEL, T2, T5, FRANK]
    spec = ModelSpec(6, 2, families_f1=fams, families_f2=fams, tree=path_tree(6),
                     families_tree=fams[:5])
    R = 0.3 * np.ones((6, 6)) + 0.7 * np.eye(6)
    default_start(spec, R).validate(spec)
    default_start(spec).validate(spec)


def test_identification_fixes_one_link():
    d = 5
    spec = ModelSpec.build(d, 2)
    taus = ([0.5, 0.45, 0.4, 0.5, 0.35], [0.3, -0.2, 0.25, 0.1, 0.3], None)
    data, _ = simulate(spec, taus, 400, 3, K=3)
    for rule in ("pilot", "last"):
        fit = fit_ifm(data, spec, options=FitOptions(identification=rule))
        assert fit.spec.fixed_f2 is not None and fit.n_params == 2 * d - 1
        assert fit.params.theta2[fit.spec.fixed_f2] == 0.0
    assert fit.spec.fixed_f2 == d - 1


# ------------------------------------------------------- independence data

@pytest.fixture(scope="module")
def independence_fits():
    d, n = 4, 500
    out = []
    for r in range(200):
        rng = np.random.default_rng([7, r])
        data = ResponseMatrix(rng.integers(0, 3, size=(n, d)), (3,) * d)
        fit = fit_ifm(data, ModelSpec.build(d, 1))
        out.append((fit, independence_loglik(data)))
    return n, out


@pytest.mark.slow
def test_independence_loadings_small(independence_fits):
    # Stated bound 2.5/sqrt(n) on every loading. At theta = 0 the likelihood
    # depends on the loadings only through products, so single loadings are
    # weakly identified; expected to fail.
    n, fits = independence_fits
    ok = [np.all(np.abs(f.params.theta1) < 2.5 / np.sqrt(n)) for f, _ in fits]
    assert np.mean(ok) >= 0.95


@pytest.mark.slow
def test_independence_likelihood_ratio_small(independence_fits):
    _, fits = independence_fits
    lr = np.array([2 * (f.loglik - l0) for f, l0 in fits])
    assert np.all(lr >= -1e-6)
    assert np.mean(lr < stats.chi2.ppf(0.99, 4)) >= 0.95


# ------------------------------------------------------------ standard errors

def test_se_delta_method_and_shrinkage():
    d = 5
    spec = ModelSpec.build(d, 1)
    taus = (np.linspace(0.6, 0.3, d), None, None)
    ses = []
    for n in (500, 2000):
        data, _ = simulate(spec, taus, n, 21 + n, K=4)
        fit = fit_ifm(data, spec, options=FitOptions(compute_se=True))
        assert fit.se.positive_definite and fit.se.method == "naive inverse Hessian"
        th = fit.params.theta1
        np.testing.assert_allclose(fit.se.se_tau.theta1,
                                   fit.se.se_theta.theta1 * 2 / (np.pi * np.sqrt(1 - th ** 2)),
                                   rtol=1e-12)
        ses.append(fit.se.se_tau.theta1)
    ratio = np.mean(ses[1] / ses[0])
    assert ratio == pytest.approx(0.5, rel=0.15)


def test_indefinite_hessian_flagged():
    d = 4
    spec = ModelSpec.build(d, 1)
    rng = np.random.default_rng(2)
    data = ResponseMatrix(rng.integers(0, 2, size=(300, d)), (2,) * d)
    fit = fit_ifm(data, spec, options=FitOptions(maxiter=1))
    fit.params = ParamVector([0.0, 0.9, -0.9, 0.0])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        se = standard_errors(data, spec, fit)
    if not se.positive_definite:
        assert any("positive definite" in str(w.message) for w in rec)
    assert np.all(np.isfinite(se.se_theta.theta1))
