"""Variable-metric minimisation with finite-difference derivatives.

The minimiser follows Nash's variable metric scheme: an inverse-Hessian
BFGS update, a backtracking acceptable-point line search, and a reset to
steepest descent whenever the search direction stops being downhill or the
curvature condition fails.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InitializationError


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    n_fev: int
    converged: bool
    message: str
    history: list = field(default_factory=list)


def central_gradient(f, x, h=1e-6):
    """Central-difference gradient of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def numerical_hessian(f, x, h=1e-4):
    """Symmetric central-difference Hessian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    f0 = f(x)
    H = np.empty((n, n))
    eye = np.eye(n) * h
    fp = np.array([f(x + eye[i]) for i in range(n)])
    fm = np.array([f(x - eye[i]) for i in range(n)])
    for i in range(n):
        H[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / (h * h)
        for j in range(i + 1, n):
            fpp = f(x + eye[i] + eye[j])
            fpm = f(x + eye[i] - eye[j])
            fmp = f(x - eye[i] + eye[j])
            fmm = f(x - eye[i] - eye[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return H


def variable_metric(fun, x0, grad=None, gtol=1e-6, maxiter=500, max_step=5.0,
                    acctol=1e-4, stepredn=0.2, grad_step=1e-6):
    """Minimise ``fun`` from ``x0``.

    Parameters
    ----------
    fun : callable
        Objective; may return ``inf``/``nan`` outside its domain, which the
        line search treats as a failed trial point.
    grad : callable, optional
        Gradient; central differences with step ``grad_step`` by default.
    gtol : float
        Convergence when ``max |grad| <= gtol``.
    max_step : float
        Cap on the largest coordinate change of a single step.

    Returns
    -------
    OptimizeResult
        ``history`` holds the objective after every accepted step, so it is
        non-increasing by construction.
    """
    n_fev = [0]

    def f(x):
        n_fev[0] += 1
        return float(fun(x))

    if grad is None:
        def grad(x):
            return central_gradient(f, x, grad_step)

    x = np.array(x0, dtype=float)
    fx = f(x)
    if not np.isfinite(fx):
        raise InitializationError("objective is not finite at the starting point",
                                  x0=x.tolist())
    n = len(x)
    if n == 0:
        return OptimizeResult(x, fx, np.zeros(0), 0, n_fev[0], True, "no free parameters", [fx])
    g = grad(x)
    B = np.eye(n)
    fresh = True
    history = [fx]
    message = "iteration limit reached"
    converged = False
    it = 0
    while it < maxiter:
        if np.max(np.abs(g)) <= gtol:
            converged = True
            message = "gradient tolerance reached"
            break
        it += 1
        t = -B @ g
        gp = float(t @ g)
        if gp >= 0.0:
            B = np.eye(n)
            fresh = True
            t = -g
            gp = float(t @ g)
        step = 1.0
        tmax = np.max(np.abs(t))
        if tmax * step > max_step:
            step = max_step / tmax
        accepted = False
        while True:
            xn = x + step * t
            if np.array_equal(xn, x):
                break
            fn = f(xn)
            if np.isfinite(fn) and fn <= fx + acctol * step * gp:
                accepted = True
                break
            step *= stepredn
        if not accepted:
            if fresh:
                message = "no acceptable step along steepest descent"
                break
            B = np.eye(n)
            fresh = True
            continue
        gn = grad(xn)
        s = xn - x
        y = gn - g
        sy = float(s @ y)
        if sy > 0.0:
            rho = 1.0 / sy
            By = B @ y
            B = (B - rho * (np.outer(s, By) + np.outer(By, s))
                 + (rho * rho * float(y @ By) + rho) * np.outer(s, s))
            fresh = False
        else:
            B = np.eye(n)
            fresh = True
        x, fx, g = xn, fn, gn
        history.append(fx)
    else:
        if np.max(np.abs(g)) <= gtol:
            converged = True
            message = "gradient tolerance reached"
    return OptimizeResult(x, fx, g, it, n_fev[0], converged, message, history)
