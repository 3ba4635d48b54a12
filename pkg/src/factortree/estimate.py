"""Two-step IFM estimation and standard errors.

Step one fixes the cutpoints at cumulative sample proportions. Step two
maximises the joint log-likelihood over the copula parameters, which are
mapped to an unconstrained scale first:

* BVN and t: ``theta = tanh(gamma)``
* Gumbel and survival Gumbel: ``theta = 1 + exp(gamma)``
* Frank: ``theta = gamma``, kept away from zero by ``|theta| >= 1e-5``
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .copula import FRANK_EPS, dtau_dtheta, tau_range, tau_to_theta, theta_to_tau
from .data import estimate_cutpoints
from .errors import InitializationError
from .likelihood import LikelihoodCache
from .model import ModelSpec, ParamVector
from .optimize import numerical_hessian, variable_metric
from .polychoric import polychoric_matrix
from .quadrature import gauss_legendre_unit

_GAMMA_MAX = 30.0


# ---------------------------------------------------------------- transforms

def _to_gamma(fam, theta):
    if fam.name in ("bvn", "t"):
        return float(np.arctanh(theta))
    if fam.name in ("gumbel", "sgumbel"):
        return float(np.log(theta - 1.0)) if theta > 1.0 else -np.inf
    return float(theta)


def _from_gamma(fam, gamma):
    if fam.name in ("bvn", "t"):
        return float(np.tanh(gamma))
    if fam.name in ("gumbel", "sgumbel"):
        return 1.0 + float(np.exp(min(gamma, _GAMMA_MAX)))
    if abs(gamma) < FRANK_EPS:
        return FRANK_EPS if gamma >= 0 else -FRANK_EPS
    return float(gamma)


def transform(spec, params):
    """Free parameters of ``params`` on the unconstrained scale."""
    return np.array([_to_gamma(f, params.get(g)[i]) for g, i, f in spec.free_slots()])


def untransform(spec, gamma):
    """Inverse of :func:`transform`."""
    vals = [_from_gamma(f, x) for (_, _, f), x in zip(spec.free_slots(), gamma)]
    return ParamVector.from_free(spec, vals)


def _dtheta_dgamma(fam, theta):
    if fam.name in ("bvn", "t"):
        return 1.0 - theta * theta
    if fam.name in ("gumbel", "sgumbel"):
        return theta - 1.0
    return 1.0


# ------------------------------------------------------------------- results

@dataclass
class FitOptions:
    """Step-two settings.

    ``gtol`` applies to the gradient of the average log-likelihood on the
    transformed scale. ``identification`` chooses which second-factor link
    is fixed for an all-BVN 2-factor model: ``"pilot"`` (smallest
    ``|theta2|`` in a loose pilot fit) or ``"last"``.
    """

    maxiter: int = 500
    gtol: float = 1e-6
    grad_step: float = 1e-6
    identification: str = "pilot"
    compute_se: bool = False
    hessian_step: float = 1e-4


@dataclass
class StandardErrors:
    """Naive inverse-Hessian standard errors of the step-two estimates."""

    se_theta: ParamVector
    se_tau: ParamVector
    hessian: np.ndarray
    positive_definite: bool
    method: str = "naive inverse Hessian"


@dataclass
class FitResult:
    spec: ModelSpec
    params: ParamVector
    taus: ParamVector
    loglik: float
    n_params: int
    n: int
    converged: bool
    iterations: int
    message: str
    cut: object = None
    history: list = field(default_factory=list)
    se: StandardErrors = None

    @property
    def aic(self):
        return -2.0 * self.loglik + 2.0 * self.n_params

    @property
    def se_tau(self):
        return None if self.se is None else self.se.se_tau


def params_to_taus(spec, params):
    groups = {g: (None if params.get(g) is None else np.zeros(len(params.get(g))))
              for g in ("theta1", "theta2", "delta")}
    for g, i, f in spec.slots():
        groups[g][i] = theta_to_tau(f, params.get(g)[i]) if f.has_param else 0.0
    return ParamVector(**groups)


# ------------------------------------------------------------ starting values

def _clamped_theta(fam, tau):
    lo, hi = tau_range(fam)
    lo = max(lo, 0.02) if fam.name in ("gumbel", "sgumbel") else lo
    tau = float(np.clip(tau, lo + 0.01, hi - 0.05))
    if fam.name == "frank" and abs(tau) < 0.01:
        tau = 0.01
    return tau_to_theta(fam, tau)


def crude_loadings(R, p):
    """Principal-component loadings of a correlation matrix, as ``(d, p)``.

    Signs are chosen so that each column sums to a non-negative value; the
    rows are shrunk when needed to keep ``sum_l lambda_l**2 < 0.95``.
    """
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(vals)[::-1][:p]
    L = vecs[:, order] * np.sqrt(np.maximum(vals[order], 0.0))
    for c in range(p):
        if L[:, c].sum() < 0:
            L[:, c] = -L[:, c]
    norm = np.sqrt((L ** 2).sum(axis=1))
    scale = np.where(norm > 0.95, 0.95 / np.maximum(norm, 1e-300), 1.0)
    return L * scale[:, None]


def default_start(spec, R=None):
    """Heuristic starting values.

    With a polychoric matrix ``R`` the factor links start at the
    principal-component loadings and tree edges at the implied partial
    correlations; both are converted to Kendall's tau and clamped to the
    family range. Without ``R`` factor 1 starts at tau 0.5, factor 2 at 0.1
    and the tree at 0.1.
    """
    d = spec.d
    t1 = np.full(d, 0.5)
    t2 = np.full(d, 0.1)
    td = np.full(len(spec.edges), 0.1)
    if R is not None:
        L = crude_loadings(R, max(spec.p, 1))
        lam1 = L[:, 0] if spec.p >= 1 else np.zeros(d)
        lam2 = L[:, 1] if spec.p == 2 else np.zeros(d)
        if spec.p >= 1:
            t1 = 2.0 / np.pi * np.arcsin(lam1)
        if spec.p == 2:
            # second-factor link is the partial loading given factor 1
            t2 = 2.0 / np.pi * np.arcsin(np.clip(lam2 / np.sqrt(1.0 - lam1 ** 2), -0.95, 0.95))
        resid = 1.0 - lam1 ** 2 - lam2 ** 2
        for e, (j, k) in enumerate(spec.edges):
            r = (R[j, k] - lam1[j] * lam1[k] - lam2[j] * lam2[k]) / np.sqrt(resid[j] * resid[k])
            td[e] = 2.0 / np.pi * np.arcsin(np.clip(r, -0.9, 0.9))
    groups = {"theta1": np.zeros(d) if spec.p >= 1 else None,
              "theta2": np.zeros(d) if spec.p == 2 else None,
              "delta": np.zeros(len(spec.edges)) if spec.has_tree else None}
    src = {"theta1": t1, "theta2": t2, "delta": td}
    for g, i, f in spec.free_slots():
        groups[g][i] = _clamped_theta(f, src[g][i])
    return ParamVector(**groups)


def convert_start(old_spec, old_params, new_spec):
    """Carry estimates to a spec with other families by matching Kendall's tau."""
    taus = params_to_taus(old_spec, old_params)
    groups = {"theta1": np.zeros(new_spec.d) if new_spec.p >= 1 else None,
              "theta2": np.zeros(new_spec.d) if new_spec.p == 2 else None,
              "delta": np.zeros(len(new_spec.edges)) if new_spec.has_tree else None}
    fallback = default_start(new_spec)
    for g, i, f in new_spec.free_slots():
        src = taus.get(g)
        if src is not None and _same_slot(old_spec, new_spec, g):
            groups[g][i] = _clamped_theta(f, src[i])
        else:
            groups[g][i] = fallback.get(g)[i]
    return ParamVector(**groups)


def _same_slot(old, new, group):
    if group == "delta":
        return old.has_tree and new.has_tree and old.tree == new.tree
    return True


# ---------------------------------------------------------------- estimation

def slot_gradient(cache, spec, gamma, h=1e-6):
    """Central-difference gradient of the log-likelihood on the transformed scale.

    Uses one-parameter partial updates of the likelihood state; the result
    agrees with plain central differences up to rounding.
    """
    state = cache.state(untransform(spec, gamma))
    g = np.empty(len(gamma))
    for i, (grp, idx, fam) in enumerate(spec.free_slots()):
        up = state.replaced(grp, idx, _from_gamma(fam, gamma[i] + h))
        dn = state.replaced(grp, idx, _from_gamma(fam, gamma[i] - h))
        g[i] = (up - dn) / (2.0 * h)
    return g


def _optimise(cache, spec, start, options, n):
    def objective(gamma):
        try:
            return -cache(untransform(spec, gamma)) / n
        except (ValueError, ArithmeticError):
            return np.inf

    grad = None
    if cache.supports_state:
        def grad(gamma):
            return -slot_gradient(cache, spec, gamma, options.grad_step) / n

    gamma0 = transform(spec, start)
    gamma0 = np.clip(gamma0, -_GAMMA_MAX, _GAMMA_MAX)
    try:
        res = variable_metric(objective, gamma0, grad=grad, gtol=options.gtol,
                              maxiter=options.maxiter, grad_step=options.grad_step)
    except InitializationError as exc:
        raise InitializationError("log-likelihood not finite at the starting values",
                                  start=start.to_dict(), **exc.diagnostics) from None
    return res


def fit_ifm(data, spec, rule=None, options=None, cut=None, start=None, R=None):
    """Fit ``spec`` to ``data`` by IFM.

    Parameters
    ----------
    data : ResponseMatrix
    spec : ModelSpec
    rule : QuadratureRule, optional
        Defaults to 15-point Gauss-Legendre.
    options : FitOptions, optional
    cut : CutpointSet, optional
        Step-one cutpoints; estimated from ``data`` when omitted.
    start : ParamVector, optional
        Starting values; otherwise :func:`default_start` is used with the
        polychoric matrix ``R`` (computed when omitted).

    Returns
    -------
    FitResult
        When the iteration limit is hit ``converged`` is False and the best
        iterate is returned.

    Raises
    ------
    InitializationError
        When the log-likelihood is not finite at the starting values.
    """
    rule = rule or gauss_legendre_unit()
    options = options or FitOptions()
    cut = cut if cut is not None else estimate_cutpoints(data)
    if start is None:
        if R is None and (spec.p >= 1 or spec.has_tree):
            R = polychoric_matrix(data, cut)
        start = default_start(spec, R)
    if spec.needs_identification():
        if options.identification == "last":
            j = spec.d - 1
        elif options.identification == "pilot":
            pilot_opts = replace(options, gtol=max(options.gtol, 1e-4), compute_se=False)
            pilot = _fit(data, spec, rule, pilot_opts, cut, start)
            j = int(np.argmin(np.abs(pilot.params.theta2)))
            start = pilot.params
        else:
            raise ValueError("identification must be 'pilot' or 'last'")
        spec = replace(spec, fixed_f2=j)
        start = ParamVector(start.theta1, np.where(np.arange(spec.d) == j, 0.0, start.theta2),
                            start.delta)
    result = _fit(data, spec, rule, options, cut, start)
    if options.compute_se:
        result.se = standard_errors(data, spec, result, rule, step=options.hessian_step)
    return result


def _fit(data, spec, rule, options, cut, start):
    start.validate(spec)
    cache = LikelihoodCache(data, cut, spec, rule)
    res = _optimise(cache, spec, start, options, data.n)
    params = untransform(spec, res.x)
    return FitResult(spec=spec, params=params, taus=params_to_taus(spec, params),
                     loglik=-res.fun * data.n, n_params=spec.n_params, n=data.n,
                     converged=res.converged, iterations=res.iterations,
                     message=res.message, cut=cut,
                     history=[-h * data.n for h in res.history])


def standard_errors(data, spec, fit, rule=None, step=1e-4):
    """Naive inverse-Hessian standard errors, delta method to theta and tau.

    The Hessian of the negative log-likelihood is taken by central
    differences on the transformed scale. An indefinite Hessian is reported
    through ``positive_definite=False`` together with a warning, and the
    pseudo-inverse is used in that case.
    """
    rule = rule or gauss_legendre_unit()
    cache = LikelihoodCache(data, fit.cut, spec, rule)
    gamma = transform(spec, fit.params)

    def nll(g):
        return -cache(untransform(spec, g))

    H = numerical_hessian(nll, gamma, h=step)
    H = 0.5 * (H + H.T)
    pd = True
    try:
        np.linalg.cholesky(H)
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        pd = False
        warnings.warn("Hessian is not positive definite; standard errors use the pseudo-inverse",
                      stacklevel=2)
        cov = np.linalg.pinv(H)
    se_gamma = np.sqrt(np.abs(np.diag(cov)))
    se_theta, se_tau = [], []
    for (g, i, f), s in zip(spec.free_slots(), se_gamma):
        th = fit.params.get(g)[i]
        st = abs(_dtheta_dgamma(f, th)) * s
        se_theta.append(st)
        se_tau.append(abs(dtau_dtheta(f, th)) * st)
    return StandardErrors(ParamVector.from_free(spec, se_theta),
                          ParamVector.from_free(spec, se_tau), H, pd)


def independence_loglik(data, cut=None):
    """Log-likelihood with every item independent (closed form)."""
    cut = cut if cut is not None else estimate_cutpoints(data)
    probs = cut.probs()
    table = data.category_table()
    with np.errstate(divide="ignore"):
        logp = np.where(table > 0, np.log(np.maximum(probs[:, : table.shape[1]], 1e-300)), 0.0)
    return float(np.sum(table * logp))


__all__ = ["FitOptions", "FitResult", "StandardErrors", "fit_ifm", "standard_errors",
           "transform", "untransform", "default_start", "convert_start", "crude_loadings",
           "params_to_taus", "independence_loglik"]
