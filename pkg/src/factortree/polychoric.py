"""Polychoric correlations of ordinal item pairs."""

import warnings

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from .special import bvn_cdf

RHO_CLAMP = 0.999


def _rect_probs(alpha_j, alpha_k, rho):
    z1 = alpha_j[:, None] * np.ones((1, len(alpha_k)))
    z2 = np.ones((len(alpha_j), 1)) * alpha_k[None, :]
    G = np.zeros(z1.shape)
    inner = (slice(1, -1), slice(1, -1))
    G[inner] = bvn_cdf(z1[inner], z2[inner], rho)
    G[-1, :] = np.concatenate([[0.0], ndtr(alpha_k[1:-1]), [1.0]])
    G[:, -1] = np.concatenate([[0.0], ndtr(alpha_j[1:-1]), [1.0]])
    G[0, :] = 0.0
    G[:, 0] = 0.0
    return np.diff(np.diff(G, axis=0), axis=1)


def polychoric_from_table(table, alpha_j, alpha_k, tol=1e-8):
    """Maximum-likelihood polychoric correlation of a contingency table.

    ``alpha_j`` and ``alpha_k`` are normal-scale cutpoints including the
    infinite end points. Estimates hitting ``+-0.999`` are clamped with a
    warning.
    """
    table = np.asarray(table, dtype=float)
    alpha_j = np.asarray(alpha_j, dtype=float)
    alpha_k = np.asarray(alpha_k, dtype=float)

    def nll(rho):
        P = np.maximum(_rect_probs(alpha_j, alpha_k, rho), 1e-300)
        return -float(np.sum(table * np.log(P)))

    res = optimize.minimize_scalar(nll, bounds=(-RHO_CLAMP, RHO_CLAMP), method="bounded",
                                   options={"xatol": tol, "maxiter": 500})
    rho = float(res.x)
    if abs(rho) >= RHO_CLAMP - 1e-6:
        warnings.warn("polychoric correlation at the boundary; clamped to +-0.999", stacklevel=2)
        rho = float(np.sign(rho) * RHO_CLAMP)
    return rho


def _pair_table(data, j, k):
    Kj, Kk = data.category_counts[j], data.category_counts[k]
    t = np.zeros((Kj, Kk))
    np.add.at(t, (data.values[:, j], data.values[:, k]), 1.0)
    return t


def polychoric(data, cut, pair):
    """Polychoric correlation of items ``pair = (j, k)`` (0-based)."""
    j, k = pair
    alpha = cut.alpha
    return polychoric_from_table(_pair_table(data, j, k),
                                 alpha[j, : cut.category_counts[j] + 1],
                                 alpha[k, : cut.category_counts[k] + 1])


def polychoric_matrix(data, cut):
    """Symmetric unit-diagonal matrix of pairwise polychoric correlations.

    Pairwise estimates are not forced to be positive semi-definite.
    """
    d = data.d
    R = np.eye(d)
    for j in range(d):
        for k in range(j + 1, d):
            R[j, k] = R[k, j] = polychoric(data, cut, (j, k))
    return R
