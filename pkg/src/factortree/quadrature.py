"""Gauss-Legendre rules on the unit interval."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

DEFAULT_NQ = 15


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in (0, 1), strictly increasing, with positive weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return len(self.nodes)

    def integrate(self, f):
        """Approximate ``int_0^1 f(x) dx`` for a vectorised ``f``."""
        return float(np.dot(self.weights, f(self.nodes)))


def _legendre_roots(n, tol=1e-15, maxiter=100):
    # Newton iteration on P_n from the Chebyshev-like initial guesses.
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(maxiter):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        step = p1 / dp
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    # final derivative at the converged roots
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


@lru_cache(maxsize=None)
def _rule(nq):
    x, w = _legendre_roots(nq)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact mirror symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    weights = weights / weights.sum()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)


def gauss_legendre_unit(nq=DEFAULT_NQ):
    """Return the ``nq``-point Gauss-Legendre rule mapped from (-1, 1) to (0, 1).

    The rule integrates polynomials of degree up to ``2 * nq - 1`` exactly.
    Rules are cached and their arrays are read-only, so repeated calls with
    the same ``nq`` hand back identical nodes and weights.
    """
    if int(nq) != nq or nq < 2:
        raise DomainError("quadrature size must be an integer >= 2")
    return _rule(int(nq))
