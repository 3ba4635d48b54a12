"""Tree-structure and copula-family selection."""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .copula import BVN, FRANK, GUMBEL, SGUMBEL, T2, T5
from .data import estimate_cutpoints
from .errors import FactorTreeError
from .estimate import FitOptions, convert_start, fit_ifm
from .model import EdgeSet, ModelSpec
from .polychoric import polychoric, polychoric_from_table, polychoric_matrix  # noqa: F401
from .quadrature import gauss_legendre_unit

FACTOR_CANDIDATES = (BVN, GUMBEL, SGUMBEL, T2, T5)
TREE_CANDIDATES = (BVN, GUMBEL, SGUMBEL, T2, T5, FRANK)
PARTIAL_CLAMP = 0.999


def partial_corr(rho, theta_j, theta_k, theta2_j=None, theta2_k=None):
    """Partial correlation of two latent normals given one or two factors.

    Works elementwise on arrays. Results outside ``(-1, 1)`` are clamped to
    ``+-0.999`` with a warning.
    """
    rho = np.asarray(rho, dtype=float)
    r = (rho - theta_j * theta_k) / np.sqrt((1.0 - theta_j ** 2) * (1.0 - theta_k ** 2))
    if theta2_j is not None:
        r = (r - theta2_j * theta2_k) / np.sqrt((1.0 - theta2_j ** 2) * (1.0 - theta2_k ** 2))
    if np.any(np.abs(r) >= 1.0):
        warnings.warn("partial correlation outside (-1, 1); clamped to +-0.999", stacklevel=2)
        r = np.clip(r, -PARTIAL_CLAMP, PARTIAL_CLAMP)
    return float(r) if r.ndim == 0 else r


def mst(weights, provenance="mst"):
    """Prim's minimum spanning tree of a dense symmetric weight matrix.

    Ties are broken by the lexicographic order of ``(min index, max index)``
    so the result is deterministic.
    """
    W = np.asarray(weights, dtype=float)
    d = W.shape[0]
    if W.shape != (d, d) or not np.all(np.isfinite(W)):
        raise ValueError("weights must be a finite square matrix")
    in_tree = np.zeros(d, dtype=bool)
    in_tree[0] = True
    edges = []
    for _ in range(d - 1):
        best = None
        for j in np.flatnonzero(in_tree):
            for k in np.flatnonzero(~in_tree):
                key = (W[j, k], min(j, k), max(j, k))
                if best is None or key < best:
                    best = key
        _, a, b = best
        edges.append((int(a), int(b)))
        in_tree[a] = in_tree[b] = True
    return EdgeSet(tuple(edges), provenance)


def mst_weights(R):
    """``log(1 - r**2)`` with a zero diagonal."""
    R = np.clip(np.asarray(R, dtype=float), -PARTIAL_CLAMP, PARTIAL_CLAMP)
    W = np.log1p(-R ** 2)
    np.fill_diagonal(W, 0.0)
    return W


def loadings_normal_ogive(data, cut=None, p=1, rule=None, options=None, R=None):
    """Normal-ogive (all-BVN factor) loadings ``(theta1, theta2)``.

    For ``p = 2`` one second-factor loading is held at zero for
    identification; ``theta2`` is ``None`` when ``p = 1``.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    cut = cut if cut is not None else estimate_cutpoints(data)
    spec = ModelSpec.build(data.d, p, f1=BVN)
    fit = fit_ifm(data, spec, rule, options, cut=cut, R=R)
    return fit.params.theta1, fit.params.theta2, fit


def partial_matrix(R, theta1, theta2=None):
    d = R.shape[0]
    P = np.eye(d)
    t1 = np.asarray(theta1)
    t2 = None if theta2 is None else np.asarray(theta2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for j in range(d):
            for k in range(j + 1, d):
                if t2 is None:
                    P[j, k] = partial_corr(R[j, k], t1[j], t1[k])
                else:
                    P[j, k] = partial_corr(R[j, k], t1[j], t1[k], t2[j], t2[k])
                P[k, j] = P[j, k]
    return P


def select_tree(data, cut=None, variant="polychoric", rule=None, R=None, options=None):
    """Residual tree by minimum spanning tree on ``log(1 - r**2)``.

    ``variant`` is ``"polychoric"`` (raw polychoric correlations),
    ``"partial-1f"`` or ``"partial-2f"`` (partial correlations given one or
    two normal-ogive factors).
    """
    cut = cut if cut is not None else estimate_cutpoints(data)
    R = R if R is not None else polychoric_matrix(data, cut)
    if variant == "polychoric":
        return mst(mst_weights(R), "polychoric")
    if variant not in ("partial-1f", "partial-2f"):
        raise ValueError(f"unknown tree variant {variant!r}")
    p = 1 if variant == "partial-1f" else 2
    t1, t2, _ = loadings_normal_ogive(data, cut, p, rule, options, R=R)
    return mst(mst_weights(partial_matrix(R, t1, t2)), variant)


@dataclass
class SelectionStep:
    stage: str
    candidates: dict = field(default_factory=dict)   # label -> loglik (None if failed)
    winner: str = ""


@dataclass
class SelectionResult:
    spec: ModelSpec
    fit: object
    steps: list
    trees: dict = field(default_factory=dict)       # variant -> EdgeSet
    tree_fits: dict = field(default_factory=dict)   # variant -> final FitResult


def _fit_candidates(data, cut, rule, options, specs, starts, threads):
    def run(item):
        label, spec = item
        try:
            return label, fit_ifm(data, spec, rule, options, cut=cut, start=starts.get(label))
        except (FactorTreeError, ValueError, ArithmeticError) as exc:
            warnings.warn(f"candidate {label} failed: {exc}", stacklevel=3)
            return label, None

    items = list(specs.items())
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(run, items))
    return dict(map(run, items))


def _choose(step, fits, incumbent_label, incumbent_fit):
    for label, f in fits.items():
        step.candidates[label] = None if f is None else f.loglik
    best_label, best = incumbent_label, incumbent_fit
    for label, f in fits.items():
        if f is not None and (best is None or f.loglik > best.loglik + 1e-9):
            best_label, best = label, f
    step.winner = best_label
    return best_label, best


def _family_step(data, cut, rule, options, threads, stage, base_fit, make_spec, candidates):
    step = SelectionStep(stage)
    incumbent = make_spec(None)
    specs, starts = {}, {}
    for fam in candidates:
        if fam.label == incumbent:
            continue
        spec = make_spec(fam)
        specs[fam.label] = spec
        starts[fam.label] = convert_start(base_fit.spec, base_fit.params, spec)
    fits = _fit_candidates(data, cut, rule, options, specs, starts, threads)
    step.candidates[incumbent] = base_fit.loglik
    _, best = _choose(step, fits, incumbent, base_fit)
    return step, best


def _label(fams):
    labels = sorted({f.label for f in fams if f.has_param})
    return "/".join(labels) or "independence"


def select_families(data, p, cut=None, rule=None, options=None, factor_candidates=None,
                    tree_candidates=None, tree=None, threads=1):
    """Sequential family and structure selection.

    Starting from BVN factor links, the factor-1 family is chosen among
    ``factor_candidates`` by log-likelihood, then the factor-2 family, then
    the tree: both the polychoric and the partial MST are fitted with BVN
    edges, the tree family is chosen for each, and the tree with the higher
    final log-likelihood is kept. One family is used for all links of a tree.
    The incumbent is kept whenever no candidate improves on it.

    ``tree`` may be an explicit ``EdgeSet`` (skips structure selection) or
    ``False`` to select a factor model without residual tree. For ``p = 0``
    only the tree is selected.
    """
    rule = rule or gauss_legendre_unit()
    options = options or FitOptions()
    cut = cut if cut is not None else estimate_cutpoints(data)
    factor_candidates = tuple(factor_candidates or FACTOR_CANDIDATES)
    tree_candidates = tuple(tree_candidates or TREE_CANDIDATES)
    R = polychoric_matrix(data, cut)
    d = data.d
    steps = []

    fit = None
    if p >= 1:
        spec0 = ModelSpec.build(d, p, f1=BVN)
        fit = fit_ifm(data, spec0, rule, options, cut=cut, R=R)
        f1, f2 = BVN, BVN

        def make1(fam):
            if fam is None:
                return _label(fit.spec.families_f1)
            return ModelSpec.build(d, p, f1=fam, f2=f2 if p == 2 else None)

        step, fit = _family_step(data, cut, rule, options, threads, "factor1", fit, make1,
                                 factor_candidates)
        steps.append(step)
        f1 = fit.spec.families_f1[0]
        if p == 2:
            def make2(fam):
                if fam is None:
                    return _label(fit.spec.families_f2)
                return ModelSpec.build(d, 2, f1=f1, f2=fam)

            step, fit = _family_step(data, cut, rule, options, threads, "factor2", fit, make2,
                                     factor_candidates)
            steps.append(step)
    factor_fit = fit
    if tree is False:
        return SelectionResult(fit.spec, fit, steps)

    if tree is not None:
        variants = {"explicit": EdgeSet(tuple(tree), "explicit").validate(d)}
    elif p == 0:
        variants = {"polychoric": select_tree(data, cut, "polychoric", rule, R)}
    else:
        variants = {"partial": select_tree(data, cut, f"partial-{p}f", rule, R, options),
                    "polychoric": select_tree(data, cut, "polychoric", rule, R)}

    tree_fits = {}
    for variant, edges in variants.items():
        base_spec = (ModelSpec(d, 0, tree=edges.edges, families_tree=BVN) if p == 0
                     else factor_fit.spec.with_tree(edges, BVN))
        start = (None if p == 0 else convert_start(factor_fit.spec, factor_fit.params, base_spec))
        tfit = fit_ifm(data, base_spec, rule, options, cut=cut, start=start, R=R)

        def maket(fam, base_spec=base_spec):
            if fam is None:
                return "bvn"
            return base_spec.with_families(tree_family=fam)

        step, tfit = _family_step(data, cut, rule, options, threads, f"tree-{variant}", tfit,
                                  maket, tree_candidates)
        steps.append(step)
        tree_fits[variant] = tfit

    winner = max(tree_fits, key=lambda v: tree_fits[v].loglik)
    best = tree_fits[winner]
    return SelectionResult(best.spec, best, steps, variants, tree_fits)


__all__ = ["partial_corr", "mst", "mst_weights", "select_tree", "select_families",
           "loadings_normal_ogive", "polychoric", "polychoric_matrix", "polychoric_from_table",
           "SelectionResult", "SelectionStep", "FACTOR_CANDIDATES", "TREE_CANDIDATES"]
