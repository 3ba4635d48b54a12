"""Bivariate copula kernels.

Every kernel broadcasts over numpy arrays in ``theta``, ``u1`` and ``u2``.
The conditional cdf ``cond_cdf(fam, theta, u2, u1)`` is ``dC(u1, u2)/du1``,
i.e. the distribution of the second coordinate given the first.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import expit, ndtr, ndtri, stdtr, stdtrit

from .errors import BoundaryError, DomainError, InvalidInputError, NumericError
from .special import _bvnu, _bvt_dunnett_sobel, _bvt_quadrature, debye1

U_EPS = 1e-12
FRANK_EPS = 1e-5
_RHO_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class CopulaFamily:
    """A parametric bivariate copula family.

    ``nu`` is only set for the Student-t family and is a structural constant,
    never estimated.
    """

    name: str
    nu: float | None = None

    def __post_init__(self):
        if self.name not in _NAMES:
            raise DomainError(f"unknown copula family {self.name!r}")
        if self.name == "t":
            if self.nu is None or not self.nu > 0:
                raise DomainError("Student-t family needs nu > 0")
        elif self.nu is not None:
            raise DomainError(f"{self.name} family takes no degrees of freedom")

    @property
    def label(self):
        if self.name == "t":
            nu = int(self.nu) if float(self.nu).is_integer() else self.nu
            return f"t{nu}"
        return self.name

    @property
    def has_param(self):
        return self.name != "independence"

    def __str__(self):
        return self.label


_NAMES = ("independence", "bvn", "frank", "gumbel", "sgumbel", "t")

INDEPENDENCE = CopulaFamily("independence")
BVN = CopulaFamily("bvn")
FRANK = CopulaFamily("frank")
GUMBEL = CopulaFamily("gumbel")
SGUMBEL = CopulaFamily("sgumbel")
T2 = CopulaFamily("t", 2.0)
T5 = CopulaFamily("t", 5.0)

_ALIASES = {
    "indep": INDEPENDENCE, "independence": INDEPENDENCE, "i": INDEPENDENCE,
    "bvn": BVN, "normal": BVN, "gaussian": BVN, "n": BVN,
    "frank": FRANK, "f": FRANK,
    "gumbel": GUMBEL, "g": GUMBEL,
    "sgumbel": SGUMBEL, "s.gumbel": SGUMBEL, "survival-gumbel": SGUMBEL, "sg": SGUMBEL,
}


def family_from_name(name):
    """Parse labels such as ``"bvn"``, ``"s.gumbel"``, ``"t2"`` or ``"t3.5"``."""
    if isinstance(name, CopulaFamily):
        return name
    key = str(name).strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    if key.startswith("t") and len(key) > 1:
        try:
            return CopulaFamily("t", float(key[1:].lstrip("_")))
        except ValueError:
            pass
    raise DomainError(f"unknown copula family {name!r}")


# ------------------------------------------------------------------ #
# validation helpers
# ------------------------------------------------------------------ #

def check_theta(family, theta):
    """Raise :class:`DomainError` unless ``theta`` is admissible for ``family``."""
    if family.name == "independence":
        return
    theta = np.asarray(theta, dtype=float)
    if np.any(np.isnan(theta)):
        raise InvalidInputError("copula parameter is NaN")
    if family.name in ("bvn", "t"):
        ok = np.all(np.abs(theta) < 1.0)
    elif family.name in ("gumbel", "sgumbel"):
        ok = np.all(theta >= 1.0) and np.all(np.isfinite(theta))
    else:
        ok = np.all(theta != 0.0) and np.all(np.isfinite(theta))
    if not ok:
        raise DomainError(f"parameter {theta} outside the domain of {family.label}")


def _as_unit(u, name):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)):
        raise InvalidInputError(f"{name} is NaN")
    if np.any((u < 0.0) | (u > 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return u


def _clamp(u):
    return np.clip(u, U_EPS, 1.0 - U_EPS)


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _frank_theta(theta):
    theta = np.asarray(theta, dtype=float)
    return np.where(np.abs(theta) < FRANK_EPS, np.where(theta < 0, -FRANK_EPS, FRANK_EPS), theta)


# ------------------------------------------------------------------ #
# cdf kernels on clamped interior arguments
# ------------------------------------------------------------------ #

def _gumbel_logA(theta, x, y):
    lx = theta * np.log(x)
    ly = theta * np.log(y)
    return np.logaddexp(lx, ly)


def _gumbel_cdf(theta, u1, u2):
    x = -np.log(u1)
    y = -np.log(u2)
    return np.exp(-np.exp(_gumbel_logA(theta, x, y) / theta))


def _frank_log_terms(theta, u, v):
    # theta > 0: D = A + B with both terms positive (no cancellation)
    log_a = -theta * u + np.log(-np.expm1(-theta * v))
    log_b = -theta * v + np.log(-np.expm1(-theta * (1.0 - v)))
    return log_a, log_b


def _frank_cdf_pos(theta, u1, u2):
    log_a, log_b = _frank_log_terms(theta, u1, u2)
    log_d = np.logaddexp(log_a, log_b)
    return -(log_d - np.log(-np.expm1(-theta))) / theta


def _frank_cdf(theta, u1, u2):
    theta = _frank_theta(theta)
    pos = theta > 0
    at = np.abs(theta)
    # C(u, v; -t) = u - C(u, 1 - v; t)
    return np.where(pos, _frank_cdf_pos(at, u1, u2), u1 - _frank_cdf_pos(at, u1, 1.0 - u2))


def _t_cdf(theta, u1, u2, nu):
    theta = np.clip(theta, -_RHO_MAX, _RHO_MAX)
    z1 = stdtrit(nu, u1)
    z2 = stdtrit(nu, u2)
    if float(nu).is_integer() and nu >= 1:
        return _bvt_dunnett_sobel(z1, z2, theta, nu)
    return _bvt_quadrature(z1, z2, theta, nu)


def _cdf_interior(family, theta, u1, u2):
    name = family.name
    if name == "independence":
        return u1 * u2
    if name == "bvn":
        theta = np.clip(theta, -_RHO_MAX, _RHO_MAX)
        return _bvnu(-ndtri(u1), -ndtri(u2), theta)
    if name == "gumbel":
        return _gumbel_cdf(theta, u1, u2)
    if name == "sgumbel":
        return u1 + u2 - 1.0 + _gumbel_cdf(theta, 1.0 - u1, 1.0 - u2)
    if name == "frank":
        return _frank_cdf(theta, u1, u2)
    return _t_cdf(theta, u1, u2, family.nu)


def cdf_unchecked(family, theta, u1, u2):
    """Copula cdf without argument validation; exact on the boundary of the square."""
    u1, u2 = np.broadcast_arrays(np.asarray(u1, float), np.asarray(u2, float))
    theta = np.broadcast_to(np.asarray(theta, float), u1.shape) if family.has_param else 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = _cdf_interior(family, theta, _clamp(u1), _clamp(u2))
    val = np.clip(val, 0.0, np.minimum(u1, u2))
    val = np.where(u1 >= 1.0, u2, val)
    val = np.where(u2 >= 1.0, u1, val)
    val = np.where((u1 <= 0.0) | (u2 <= 0.0), 0.0, val)
    return val


def cdf(family, theta, u1, u2):
    """Bivariate copula cdf ``C(u1, u2; theta)``.

    Raises
    ------
    DomainError
        If ``theta`` or the arguments are outside their domains.
    InvalidInputError
        On NaN input.
    """
    check_theta(family, theta)
    u1 = _as_unit(u1, "u1")
    u2 = _as_unit(u2, "u2")
    return _scalar(cdf_unchecked(family, theta, u1, u2))


# ------------------------------------------------------------------ #
# conditional cdfs
# ------------------------------------------------------------------ #

def _gumbel_hfunc(theta, u2, u1):
    x = -np.log(u1)
    y = -np.log(u2)
    log_a = _gumbel_logA(theta, x, y)
    log_h = (-np.exp(log_a / theta) + (1.0 / theta - 1.0) * log_a
             + (theta - 1.0) * np.log(x) + x)
    return np.exp(log_h)


def _frank_hfunc_pos(theta, u2, u1):
    log_a, log_b = _frank_log_terms(theta, u1, u2)
    return expit(log_a - log_b)


def _frank_hfunc(theta, u2, u1):
    theta = _frank_theta(theta)
    at = np.abs(theta)
    return np.where(theta > 0, _frank_hfunc_pos(at, u2, u1),
                    1.0 - _frank_hfunc_pos(at, 1.0 - u2, u1))


def _t_hfunc(theta, u2, u1, nu):
    theta = np.clip(theta, -_RHO_MAX, _RHO_MAX)
    t1 = stdtrit(nu, u1)
    t2 = stdtrit(nu, u2)
    scale = np.sqrt((nu + t1 * t1) * (1.0 - theta * theta) / (nu + 1.0))
    return stdtr(nu + 1.0, (t2 - theta * t1) / scale)


def _hfunc_interior(family, theta, u2, u1):
    name = family.name
    if name == "independence":
        return u2 + 0.0 * u1
    if name == "bvn":
        theta = np.clip(theta, -_RHO_MAX, _RHO_MAX)
        return ndtr((ndtri(u2) - theta * ndtri(u1)) / np.sqrt(1.0 - theta * theta))
    if name == "gumbel":
        return _gumbel_hfunc(theta, u2, u1)
    if name == "sgumbel":
        return 1.0 - _gumbel_hfunc(theta, 1.0 - u2, 1.0 - u1)
    if name == "frank":
        return _frank_hfunc(theta, u2, u1)
    return _t_hfunc(theta, u2, u1, family.nu)


def cond_cdf_unchecked(family, theta, u2, u1):
    """``C_{2|1}(u2 | u1)`` without validation; exact at ``u2`` in {0, 1}."""
    u2, u1 = np.broadcast_arrays(np.asarray(u2, float), np.asarray(u1, float))
    theta = np.broadcast_to(np.asarray(theta, float), u2.shape) if family.has_param else 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        val = _hfunc_interior(family, theta, _clamp(u2), _clamp(u1))
    val = np.clip(val, 0.0, 1.0)
    val = np.where(u2 <= 0.0, 0.0, val)
    val = np.where(u2 >= 1.0, 1.0, val)
    return val


def cond_cdf(family, theta, u2, u1):
    """Conditional cdf ``C_{2|1}(u2 | u1) = dC(u1, u2) / du1``.

    Raises
    ------
    BoundaryError
        If the conditioning value ``u1`` is 0 or 1.
    """
    check_theta(family, theta)
    u2 = _as_unit(u2, "u2")
    u1 = _as_unit(u1, "u1")
    if np.any((u1 <= 0.0) | (u1 >= 1.0)):
        raise BoundaryError("conditioning value must lie strictly inside (0, 1)")
    return _scalar(cond_cdf_unchecked(family, theta, u2, u1))


# ------------------------------------------------------------------ #
# inverse conditional cdfs
# ------------------------------------------------------------------ #

def _gumbel_hinv(theta, w, u1, tol=1e-14, maxiter=200):
    """Invert the Gumbel h-function.

    With ``x = -log u1`` and ``z = (x^theta + y^theta)^(1/theta)`` the
    equation ``h = w`` reads ``g(z) = -z + (1 - theta) log z = c``. ``g`` is
    convex and decreasing on ``z >= x`` and the root lies to the right of
    ``x``, so Newton iterates from ``z = x`` increase monotonically into the
    root; a bisection step is taken whenever Newton would leave the bracket.
    """
    theta, w, u1 = np.broadcast_arrays(np.asarray(theta, float), w, u1)
    x = -np.log(u1)
    c = np.log(w) - (theta - 1.0) * np.log(x) - x
    lo = x.copy()
    # g(z) <= -z, so any z >= -c beyond x brackets the root
    hi = np.maximum(x, -c) + 1.0
    z = x.copy()
    done = np.zeros(z.shape, dtype=bool)
    for it in range(maxiter):
        g = -z + (1.0 - theta) * np.log(z) - c
        done = np.abs(g) <= tol * np.maximum(1.0, np.abs(c))
        if np.all(done):
            break
        lo = np.where(g > 0, z, lo)
        hi = np.where(g < 0, z, hi)
        dg = -1.0 + (1.0 - theta) / z
        znew = z - g / dg
        bad = ~np.isfinite(znew) | (znew <= lo) | (znew >= hi)
        znew = np.where(bad, 0.5 * (lo + hi), znew)
        z = np.where(done, z, znew)
    else:
        g = -z + (1.0 - theta) * np.log(z) - c
        done = np.abs(g) <= 1e3 * tol * np.maximum(1.0, np.abs(c))
        if not np.all(done):
            raise NumericError("Gumbel inverse h-function did not converge",
                               iterations=maxiter, max_residual=float(np.max(np.abs(g))))
    # y^theta = z^theta - x^theta, evaluated in log space
    with np.errstate(divide="ignore"):
        log_yt = theta * np.log(z) + np.log(-np.expm1(theta * (np.log(x) - np.log(z))))
    y = np.exp(log_yt / theta)
    return np.exp(-y)


def _frank_hinv(theta, w, u1):
    theta = _frank_theta(theta)
    lw = np.log(w)
    l1w = np.log1p(-w)
    num = np.logaddexp(l1w - theta * u1, lw - theta)
    den = np.logaddexp(lw, l1w - theta * u1)
    return -(num - den) / theta


def inv_cond_cdf_unchecked(family, theta, w, u1):
    w, u1 = np.broadcast_arrays(np.asarray(w, float), np.asarray(u1, float))
    theta = np.broadcast_to(np.asarray(theta, float), w.shape) if family.has_param else 0.0
    wc = _clamp(w)
    u1c = _clamp(u1)
    name = family.name
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        if name == "independence":
            out = w.copy()
        elif name == "bvn":
            th = np.clip(theta, -_RHO_MAX, _RHO_MAX)
            out = ndtr(th * ndtri(u1c) + np.sqrt(1.0 - th * th) * ndtri(wc))
        elif name == "t":
            nu = family.nu
            th = np.clip(theta, -_RHO_MAX, _RHO_MAX)
            t1 = stdtrit(nu, u1c)
            scale = np.sqrt((nu + t1 * t1) * (1.0 - th * th) / (nu + 1.0))
            out = stdtr(nu, th * t1 + scale * stdtrit(nu + 1.0, wc))
        elif name == "frank":
            out = _frank_hinv(theta, wc, u1c)
        elif name == "gumbel":
            out = _gumbel_hinv(theta, wc, u1c)
        else:
            out = 1.0 - _gumbel_hinv(theta, 1.0 - wc, 1.0 - u1c)
    return np.clip(out, 0.0, 1.0)


def inv_cond_cdf(family, theta, w, u1):
    """Return ``u2`` solving ``cond_cdf(family, theta, u2, u1) = w``.

    Closed forms are used for the elliptical and Frank families; the Gumbel
    and survival Gumbel inverses are found iteratively.

    Raises
    ------
    NumericError
        If the iterative Gumbel inversion hits its iteration cap.
    """
    check_theta(family, theta)
    w = _as_unit(w, "w")
    u1 = _as_unit(u1, "u1")
    if np.any((u1 <= 0.0) | (u1 >= 1.0)):
        raise BoundaryError("conditioning value must lie strictly inside (0, 1)")
    return _scalar(inv_cond_cdf_unchecked(family, theta, w, u1))


# ------------------------------------------------------------------ #
# Kendall's tau
# ------------------------------------------------------------------ #

def _frank_tau(theta):
    theta = _frank_theta(theta)
    return 1.0 - 4.0 / theta + 4.0 * debye1(theta) / theta


def theta_to_tau(family, theta):
    """Kendall's tau implied by a copula parameter."""
    if family.name == "independence":
        return 0.0
    check_theta(family, theta)
    theta = np.asarray(theta, dtype=float)
    if family.name in ("bvn", "t"):
        out = 2.0 / np.pi * np.arcsin(theta)
    elif family.name in ("gumbel", "sgumbel"):
        out = 1.0 - 1.0 / theta
    else:
        out = _frank_tau(theta)
    return _scalar(np.asarray(out))


def dtau_dtheta(family, theta):
    """Derivative of :func:`theta_to_tau`, used for delta-method standard errors."""
    if family.name == "independence":
        return 0.0
    theta = np.asarray(theta, dtype=float)
    if family.name in ("bvn", "t"):
        out = 2.0 / (np.pi * np.sqrt(1.0 - theta * theta))
    elif family.name in ("gumbel", "sgumbel"):
        out = theta ** -2.0
    else:
        th = _frank_theta(theta)
        out = 4.0 / th ** 2 + 4.0 / (th * np.expm1(th)) - 8.0 * debye1(th) / th ** 2
    return _scalar(np.asarray(out))


def tau_range(family):
    """Closed-open bounds of attainable Kendall's tau."""
    if family.name in ("gumbel", "sgumbel"):
        return 0.0, 1.0
    if family.name == "independence":
        return 0.0, 0.0
    return -1.0, 1.0


def _frank_theta_from_tau(tau):
    if abs(tau) < 1e-9:
        return FRANK_EPS if tau >= 0 else -FRANK_EPS
    sign = 1.0 if tau > 0 else -1.0
    target = abs(tau)
    hi = 1.0
    while _frank_tau(hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError(f"tau {tau} not attainable by Frank copula")
    root = optimize.brentq(lambda t: _frank_tau(t) - target, FRANK_EPS, hi,
                           xtol=1e-15, rtol=1e-15, maxiter=200)
    return sign * max(root, FRANK_EPS)


def tau_to_theta(family, tau):
    """Copula parameter with Kendall's tau equal to ``tau``.

    Raises
    ------
    DomainError
        When ``tau`` is not attainable (for instance negative tau for Gumbel).
    """
    if family.name == "independence":
        if np.any(np.asarray(tau) != 0):
            raise DomainError("independence copula only attains tau = 0")
        return 0.0
    tau = np.asarray(tau, dtype=float)
    if np.any(np.isnan(tau)):
        raise InvalidInputError("tau is NaN")
    lo, hi = tau_range(family)
    if np.any(tau < lo) or np.any(tau >= hi) or (lo < 0 and np.any(tau <= lo)):
        raise DomainError(f"tau {tau} not attainable by {family.label}")
    if family.name in ("bvn", "t"):
        out = np.sin(0.5 * np.pi * tau)
    elif family.name in ("gumbel", "sgumbel"):
        out = 1.0 / (1.0 - tau)
    else:
        out = np.vectorize(_frank_theta_from_tau, otypes=[float])(tau)
    return _scalar(np.asarray(out))
