"""Normal-scores correlations and semi-correlations.

Theoretical values integrate the copula density on the normal-score scale
with a tensor Gauss-Legendre rule over ``[-Z_MAX, Z_MAX]^2``, split at zero.
"""

import warnings

import numpy as np
from scipy import optimize, special

from .copula import check_theta, family_from_name, tau_to_theta
from .data import estimate_cutpoints
from .polychoric import polychoric_from_table

Z_MAX = 10.0
N_HALF = 160


def _half_rule(n=N_HALF):
    x, w = np.polynomial.legendre.leggauss(n)
    z = 0.5 * Z_MAX * (x - 1.0)  # (-Z_MAX, 0)
    return z, 0.5 * Z_MAX * w


def _log_density_z(family, theta, z1, z2):
    """Log joint density of the normal scores ``(Phi^-1(U1), Phi^-1(U2))``."""
    name = family.name
    lphi = -0.5 * (z1 ** 2 + z2 ** 2) - np.log(2.0 * np.pi)
    if name == "independence":
        return lphi
    if name == "bvn":
        r = theta
        q = (z1 ** 2 - 2 * r * z1 * z2 + z2 ** 2) / (1 - r * r)
        return -0.5 * q - np.log(2 * np.pi) - 0.5 * np.log1p(-r * r)
    if name == "t":
        nu, r = family.nu, theta
        # t quantiles of Phi(z), using the lower tail for accuracy
        x1 = np.where(z1 < 0, special.stdtrit(nu, special.ndtr(z1)),
                      -special.stdtrit(nu, special.ndtr(-z1)))
        x2 = np.where(z2 < 0, special.stdtrit(nu, special.ndtr(z2)),
                      -special.stdtrit(nu, special.ndtr(-z2)))

        def lt1(x):
            return (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
                    - 0.5 * np.log(nu * np.pi) - (nu + 1) / 2 * np.log1p(x * x / nu))

        q = (x1 ** 2 - 2 * r * x1 * x2 + x2 ** 2) / (1 - r * r)
        lt2 = (-np.log(2 * np.pi) - 0.5 * np.log1p(-r * r) - (nu + 2) / 2 * np.log1p(q / nu))
        return lt2 - lt1(x1) - lt1(x2) + lphi
    if name in ("gumbel", "sgumbel"):
        s = 1.0 if name == "gumbel" else -1.0
        lu = special.log_ndtr(s * z1)
        lv = special.log_ndtr(s * z2)
        x, y = -lu, -lv
        th = theta
        lx, ly = np.log(x), np.log(y)
        lA = np.logaddexp(th * lx, th * ly) / th
        A = np.exp(lA)
        lc = (-A - lu - lv + (th - 1) * (lx + ly) + (1 - 2 * th) * lA
              + np.log(A + th - 1))
        return lc + lphi
    if name == "frank":
        th = theta
        u, v = special.ndtr(z1), special.ndtr(z2)
        num = np.log(abs(th) * abs(-np.expm1(-th))) - th * (u + v)
        den = 2 * np.log(np.abs(-np.expm1(-th) - np.expm1(-th * u) * np.expm1(-th * v)))
        return num - den + lphi
    raise ValueError(f"unsupported family {family}")


def _moments(family, theta, n=N_HALF):
    """Mass and first/second moments of the normal scores in each quadrant."""
    zh, wh = _half_rule(n)
    out = {}
    # half-rule nodes are negative, so a +1 sign selects the lower half
    for key, s1, s2 in (("ll", 1, 1), ("uu", -1, -1), ("lu", 1, -1), ("ul", -1, 1)):
        Z1 = s1 * zh[:, None] * np.ones((1, n))
        Z2 = s2 * zh[None, :] * np.ones((n, 1))
        W = wh[:, None] * wh[None, :] * np.exp(_log_density_z(family, theta, Z1, Z2))
        out[key] = np.array([W.sum(), (W * Z1).sum(), (W * Z2).sum(), (W * Z1 ** 2).sum(),
                             (W * Z2 ** 2).sum(), (W * Z1 * Z2).sum()])
    return out


def _corr(m):
    mass, e1, e2, e11, e22, e12 = m / m[0]
    return (e12 - e1 * e2) / np.sqrt((e11 - e1 ** 2) * (e22 - e2 ** 2))


def normal_scores_corr(family, theta, n=N_HALF):
    """Correlation of the normal scores over the whole plane."""
    family = family_from_name(family)
    if family.has_param:
        check_theta(family, theta)
    return float(_corr(sum(_moments(family, theta, n).values())))


def semi_corr(family, theta, n=N_HALF):
    """``(lower, upper)`` semi-correlations of the normal scores."""
    family = family_from_name(family)
    if family.has_param:
        check_theta(family, theta)
    m = _moments(family, theta, n)
    return float(_corr(m["ll"])), float(_corr(m["uu"]))


def calibrate_theta(family, rho_n):
    """Parameter at which the normal-scores correlation equals ``rho_n`` (> 0)."""
    family = family_from_name(family)
    if family.name == "bvn":
        return float(rho_n)
    if family.name == "t":
        lo, hi = 0.0, 0.999
    elif family.name in ("gumbel", "sgumbel"):
        lo, hi = 1.0 + 1e-9, 20.0
    elif family.name == "frank":
        lo, hi = 1e-4, 20.0
    else:
        raise ValueError(f"cannot calibrate {family.label}")
    return float(optimize.brentq(lambda t: normal_scores_corr(family, t) - rho_n, lo, hi,
                                 xtol=1e-10))


def theoretical_semi_corr(family, rho_n=0.35, calibration="rho_n"):
    """``(lower, upper)`` semi-correlations of ``family`` at a common dependence level.

    With ``calibration="rho_n"`` the parameter makes the normal-scores
    correlation equal ``rho_n``. With ``"tau"`` it matches the Kendall tau of
    a BVN copula with correlation ``rho_n`` instead.
    """
    family = family_from_name(family)
    if not family.has_param:
        return 0.0, 0.0
    if calibration == "rho_n":
        theta = calibrate_theta(family, rho_n)
    elif calibration == "tau":
        theta = tau_to_theta(family, 2.0 / np.pi * np.arcsin(rho_n))
    else:
        raise ValueError("calibration must be 'rho_n' or 'tau'")
    return semi_corr(family, theta)


def _sub_polychoric(yj, yk):
    """Polychoric correlation of a sub-sample with cutpoints from its own margins."""
    cj, yj = np.unique(yj, return_inverse=True)
    ck, yk = np.unique(yk, return_inverse=True)
    if len(cj) < 2 or len(ck) < 2:
        return None
    n = len(yj)
    table = np.zeros((len(cj), len(ck)))
    np.add.at(table, (yj, yk), 1.0)
    aj = special.ndtri(np.concatenate([[0.0], np.cumsum(table.sum(1))[:-1] / n, [1.0]]))
    ak = special.ndtri(np.concatenate([[0.0], np.cumsum(table.sum(0))[:-1] / n, [1.0]]))
    return polychoric_from_table(table, aj, ak)


def observed_semi_corr(data, cut=None):
    """Average polychoric, lower and upper semi-correlations over all item pairs.

    Experimental estimator: for each pair the polychoric correlation is
    recomputed on respondents with both items at or below (lower) or at or
    above (upper) their median category, with cutpoints re-estimated from
    that sub-sample. Pairs whose sub-sample has a single category in some
    item are skipped.

    Returns ``(rho_n, rho_lower, rho_upper)``.
    """
    from .polychoric import polychoric_matrix

    cut = cut if cut is not None else estimate_cutpoints(data)
    R = polychoric_matrix(data, cut)
    med = np.array([int(np.searchsorted(cut.item(j)[1:], 0.5)) for j in range(data.d)])
    Y = data.values
    lows, ups = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for j in range(data.d):
            for k in range(j + 1, data.d):
                lo = (Y[:, j] <= med[j]) & (Y[:, k] <= med[k])
                hi = (Y[:, j] >= med[j]) & (Y[:, k] >= med[k])
                r = _sub_polychoric(Y[lo, j], Y[lo, k]) if lo.sum() > 2 else None
                if r is not None:
                    lows.append(r)
                r = _sub_polychoric(Y[hi, j], Y[hi, k]) if hi.sum() > 2 else None
                if r is not None:
                    ups.append(r)
    iu = np.triu_indices(data.d, 1)
    return (float(np.mean(R[iu])), float(np.mean(lows)) if lows else float("nan"),
            float(np.mean(ups)) if ups else float("nan"))
