"""Implied correlations, discrepancy measures and Vuong comparisons."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .likelihood import PMF_FLOOR, logpmf_rows
from .model import tree_path
from .quadrature import gauss_legendre_unit


def model_corr_matrix(spec, params):
    """Latent correlation matrix implied by an all-BVN model.

    The residual correlation of items ``j`` and ``k`` given the factors is
    the product of the edge parameters along the tree path between them; it
    is then combined with the factor loadings level by level.
    """
    for _, _, f in spec.slots():
        if f.name not in ("bvn", "independence"):
            raise DomainError(f"implied correlations need BVN links, found {f.label}")
    d = spec.d
    t1 = np.asarray(params.theta1) if spec.p >= 1 else np.zeros(d)
    t2 = np.asarray(params.theta2) if spec.p == 2 else np.zeros(d)
    R = np.eye(d)
    for j in range(d):
        for k in range(j + 1, d):
            resid = 0.0
            if spec.has_tree:
                resid = float(np.prod([params.delta[e] for e in tree_path(spec.tree, d, j, k)]))
            inner = t2[j] * t2[k] + np.sqrt((1 - t2[j] ** 2) * (1 - t2[k] ** 2)) * resid
            R[j, k] = R[k, j] = (t1[j] * t1[k]
                                 + np.sqrt((1 - t1[j] ** 2) * (1 - t1[k] ** 2)) * inner)
    return R


def discrepancies(R_model, R_observed):
    """``(D1, D2, D3)``: max and mean absolute off-diagonal difference and
    the normal-theory divergence ``log det Rm - log det Ro + tr(Rm^-1 Ro) - d``."""
    Rm = np.asarray(R_model, dtype=float)
    Ro = np.asarray(R_observed, dtype=float)
    if Rm.shape != Ro.shape:
        raise DomainError("correlation matrices differ in dimension")
    d = Rm.shape[0]
    iu = np.triu_indices(d, 1)
    diff = np.abs(Rm[iu] - Ro[iu])
    sm, ldm = np.linalg.slogdet(Rm)
    if sm <= 0 or not np.isfinite(ldm):
        raise NumericError("model correlation matrix is singular or not positive definite")
    so, ldo = np.linalg.slogdet(Ro)
    if so <= 0:
        raise NumericError("observed correlation matrix is not positive definite")
    d3 = ldm - ldo + np.trace(np.linalg.solve(Rm, Ro)) - d
    return float(diff.max()), float(diff.mean()), float(d3)


@dataclass(frozen=True)
class VuongResult:
    dbar: float
    s: float
    ci_low: float
    ci_high: float
    verdict: str
    n: int
    dim_diff: int
    floored: bool = False

    def to_dict(self):
        return dict(self.__dict__)


def vuong_from_logpmfs(l1, l2, k1, k2, floored=False):
    """AIC-adjusted Vuong 95% interval from pointwise log pmfs.

    ``D_i = l2_i - l1_i``; the interval is ``Dbar - (k2 - k1)/n +- 1.96 s/sqrt(n)``
    with ``s`` the sample standard deviation (divisor ``n - 1``).
    """
    D = np.asarray(l2, dtype=float) - np.asarray(l1, dtype=float)
    n = len(D)
    dbar = float(D.mean())
    s = float(D.std(ddof=1)) if n > 1 else 0.0
    centre = dbar - (k2 - k1) / n
    half = 1.96 * s / np.sqrt(n)
    lo, hi = centre - half, centre + half
    verdict = "model2-better" if lo > 0 else "model1-better" if hi < 0 else "indistinguishable"
    return VuongResult(dbar, s, float(lo), float(hi), verdict, n, int(k2 - k1), floored)


def vuong(data, fit1, fit2, rule=None):
    """Compare two fitted models on the same data (model 2 against model 1)."""
    rule = rule or gauss_legendre_unit()
    l1 = logpmf_rows(data.values, fit1.cut, fit1.spec, fit1.params, rule)
    l2 = logpmf_rows(data.values, fit2.cut, fit2.spec, fit2.params, rule)
    floor = np.log(PMF_FLOOR)
    floored = bool(np.any(l1 <= floor) or np.any(l2 <= floor))
    return vuong_from_logpmfs(l1, l2, fit1.n_params, fit2.n_params, floored)
