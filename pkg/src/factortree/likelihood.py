"""Joint pmf and log-likelihood of factor, vine and factor tree copula models.

Every structure is evaluated by the same routine. For each latent node ``q``
the conditional item cdfs ``F[q, j, k] = Pr(Y_j <= k - 1 | x_q)`` are built
once; the per-edge rectangle probabilities are tabulated over all category
pairs; each response pattern then only gathers table entries::

    pmf(y) = sum_q w_q  prod_j f_j(y_j | x_q)
                        prod_{jk in E} f_jk(y_j, y_k | x_q) / (f_j f_k)

For ``p = 0`` there is a single node with weight one and ``F`` equals the
cutpoints, which gives the closed-form 1-truncated vine pmf.
"""

import numpy as np
from scipy.special import logsumexp

from .copula import cdf_unchecked, cond_cdf_unchecked
from .errors import DataError, DomainError
from .quadrature import gauss_legendre_unit

PMF_FLOOR = 1e-300
_LOG_FLOOR = np.log(PMF_FLOOR)
_CHUNK = 512


def _group_by_family(families):
    groups = {}
    for i, f in enumerate(families):
        groups.setdefault(f, []).append(i)
    return {f: np.array(idx) for f, idx in groups.items()}


def latent_nodes(spec, rule):
    """Latent node coordinates and weights: ``(x1, x2, w)`` (``None`` when absent)."""
    if spec.p == 0:
        return None, None, np.ones(1)
    x, w = rule.nodes, rule.weights
    if spec.p == 1:
        return x, None, w
    nq = len(x)
    return np.repeat(x, nq), np.tile(x, nq), np.outer(w, w).ravel()


def _factor_cdfs(a, families, theta, x):
    """``C_{j|X}(a[j, k] | x_q)`` for all nodes, items and cutpoints -> (Q, d, K+1)."""
    out = np.empty((len(x),) + a.shape)
    for fam, idx in _group_by_family(families).items():
        out[:, idx, :] = cond_cdf_unchecked(
            fam, theta[idx][None, :, None], a[None, idx, :], x[:, None, None])
    return out


def _second_factor_cdfs(f1, families, theta, x1_nodes, x2_nodes):
    """``C_{j|X2}(F_{j|X1}(.|x1) | x2)`` on the tensor grid -> (nq*nq, d, K+1)."""
    nq1, nq2 = len(x1_nodes), len(x2_nodes)
    d, kp1 = f1.shape[1:]
    out = np.empty((nq1, nq2, d, kp1))
    for fam, idx in _group_by_family(families).items():
        out[:, :, idx, :] = cond_cdf_unchecked(
            fam, theta[idx][None, None, :, None],
            f1[:, None, idx, :], x2_nodes[None, :, None, None])
    return out.reshape(nq1 * nq2, d, kp1)


def conditional_cdfs(cut, spec, params, rule):
    """Conditional cdf table ``F`` of shape (Q, d, Kmax + 1) and node weights."""
    a = cut.a
    if spec.p == 0:
        return a[None, :, :].copy(), np.ones(1)
    x, w = rule.nodes, rule.weights
    f1 = _factor_cdfs(a, spec.families_f1, params.theta1, x)
    if spec.p == 1:
        return f1, w
    f2 = _second_factor_cdfs(f1, spec.families_f2, params.theta2, x, x)
    return f2, np.outer(w, w).ravel()


def _edge_rectangles(F, spec, params):
    """Rectangle probabilities ``f_jk(a, b | x_q)`` -> (Q, E', K, K) for parametric edges.

    Independence edges contribute a factor of exactly one and are skipped.
    """
    keep = [e for e, f in enumerate(spec.families_tree) if f.has_param]
    if not keep:
        return np.array(keep, dtype=int), None
    keep = np.array(keep)
    edges = np.array(spec.tree)[keep]
    fams = [spec.families_tree[e] for e in keep]
    delta = params.delta[keep]
    Q, _, kp1 = F.shape
    G = np.empty((Q, len(keep), kp1, kp1))
    Fj = F[:, edges[:, 0], :]
    Fk = F[:, edges[:, 1], :]
    for fam, idx in _group_by_family(fams).items():
        G[:, idx, 1:-1, 1:-1] = cdf_unchecked(
            fam, delta[idx][None, :, None, None],
            Fj[:, idx, 1:-1, None], Fk[:, idx, None, 1:-1])
    G[:, :, 0, :] = 0.0
    G[:, :, :, 0] = 0.0
    G[:, :, -1, :] = Fk
    G[:, :, :, -1] = Fj
    R = np.diff(np.diff(G, axis=3), axis=2)
    return keep, R


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(x, PMF_FLOOR))


class _Tables:
    """Per-parameter-value tables reused across all response patterns."""

    def __init__(self, cut, spec, params, rule):
        F, w = conditional_cdfs(cut, spec, params, rule)
        self.logw = np.log(w)
        self.logf = _log(np.diff(F, axis=2))
        self.d = spec.d
        self.edge_idx = np.zeros(0, dtype=int)
        self.logR = None
        if spec.tree is not None:
            keep, R = _edge_rectangles(F, spec, params)
            if R is not None:
                self.edge_idx = keep
                self.logR = _log(R)
                edges = np.array(spec.tree)[keep]
                self.ej = edges[:, 0]
                self.ek = edges[:, 1]

    def logpmf(self, Y):
        out = np.empty(len(Y))
        items = np.arange(self.d)
        for start in range(0, len(Y), _CHUNK):
            y = Y[start:start + _CHUNK]
            tot = self.logf[:, items[None, :], y].sum(axis=2)
            if self.logR is not None:
                yj = y[:, self.ej]
                yk = y[:, self.ek]
                e = np.arange(len(self.ej))[None, :]
                edge = (self.logR[:, e, yj, yk]
                        - self.logf[:, self.ej[None, :], yj]
                        - self.logf[:, self.ek[None, :], yk])
                tot = tot + edge.sum(axis=2)
            out[start:start + _CHUNK] = logsumexp(tot + self.logw[:, None], axis=0)
        return np.maximum(out, _LOG_FLOOR)


def _check_inputs(Y, cut, spec, params):
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape[1] != spec.d or cut.d != spec.d:
        raise DataError("dimension mismatch between responses, cutpoints and model")
    if np.any(Y < 0) or np.any(Y >= np.array(cut.category_counts)):
        raise DataError("response category outside the range of the cutpoints")
    params.validate(spec)
    return Y.astype(np.int64)


def logpmf_rows(Y, cut, spec, params, rule=None):
    """Log pmf of every row of ``Y`` (floored at ``log(1e-300)``)."""
    rule = rule or gauss_legendre_unit()
    Y = _check_inputs(Y, cut, spec, params)
    return _Tables(cut, spec, params, rule).logpmf(Y)


def pmf(y, cut, spec, params, rule=None):
    """Joint probability of a single response pattern for any structure."""
    return float(np.exp(logpmf_rows(np.asarray(y)[None, :], cut, spec, params, rule)[0]))


def _require(spec, p, tree):
    if spec.p != p or spec.has_tree != tree:
        kind = {(1, False): "1-factor", (2, False): "2-factor", (0, True): "vine",
                (1, True): "1-factor tree", (2, True): "2-factor tree"}[(p, tree)]
        raise DomainError(f"model spec does not describe a {kind} model")


def pmf_1factor(y, cut, spec, params, rule=None):
    _require(spec, 1, False)
    return pmf(y, cut, spec, params, rule)


def pmf_2factor(y, cut, spec, params, rule=None):
    _require(spec, 2, False)
    return pmf(y, cut, spec, params, rule)


def pmf_vine(y, cut, spec, params):
    """Closed-form 1-truncated vine pmf; no quadrature involved."""
    _require(spec, 0, True)
    return pmf(y, cut, spec, params, None)


def pmf_1factor_tree(y, cut, spec, params, rule=None):
    _require(spec, 1, True)
    return pmf(y, cut, spec, params, rule)


def pmf_2factor_tree(y, cut, spec, params, rule=None):
    _require(spec, 2, True)
    return pmf(y, cut, spec, params, rule)


def all_patterns(category_counts):
    """Every response pattern of the given item cardinalities, in lexicographic order."""
    grids = np.meshgrid(*[np.arange(k) for k in category_counts], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def loglik(data, cut, spec, params, rule=None, aggregate=True):
    """Joint log-likelihood ``sum_i log pmf(y_i)``.

    With ``aggregate=True`` each distinct response pattern is evaluated once
    and weighted by its multiplicity.
    """
    rule = rule or gauss_legendre_unit()
    if aggregate:
        rows, counts = data.unique_rows()
        Y = _check_inputs(rows, cut, spec, params)
        return float(np.dot(counts, _Tables(cut, spec, params, rule).logpmf(Y)))
    Y = _check_inputs(data.values, cut, spec, params)
    return float(np.sum(_Tables(cut, spec, params, rule).logpmf(Y)))


def _rect_one(fam, delta, Fj, Fk):
    """Rectangle table of a single edge: (Q, K, K) from (Q, K+1) cdf columns."""
    Q, kp1 = Fj.shape
    G = np.empty((Q, kp1, kp1))
    G[:, 1:-1, 1:-1] = cdf_unchecked(fam, delta, Fj[:, 1:-1, None], Fk[:, None, 1:-1])
    G[:, 0, :] = 0.0
    G[:, :, 0] = 0.0
    G[:, -1, :] = Fk
    G[:, :, -1] = Fj
    return np.diff(np.diff(G, axis=2), axis=1)


class LikelihoodCache:
    """Log-likelihood as a function of the parameters for a fixed data set.

    Holds the unique rows with their multiplicities. :meth:`state` returns a
    decomposition of the log-integrand into item and edge terms on the
    (node, row) grid, so that changing one parameter only recomputes the
    terms it enters. This makes finite-difference gradients cost a few
    likelihood evaluations instead of two per parameter.
    """

    def __init__(self, data, cut, spec, rule=None, max_cells=2e7):
        self.spec = spec
        self.cut = cut
        self.rule = rule or gauss_legendre_unit()
        self.rows, self.counts = data.unique_rows()
        if np.any(self.rows >= np.array(cut.category_counts)):
            raise DataError("response category outside the range of the cutpoints")
        n_edges = sum(f.has_param for f in (spec.families_tree or ()))
        q = 1 if spec.p == 0 else self.rule.size ** spec.p
        self.supports_state = (spec.d + n_edges) * q * len(self.rows) <= max_cells

    def __call__(self, params):
        tables = _Tables(self.cut, self.spec, params, self.rule)
        return float(np.dot(self.counts, tables.logpmf(self.rows)))

    def state(self, params):
        return _State(self, params)


class _State:
    def __init__(self, cache, params):
        spec, cut, rule = cache.spec, cache.cut, cache.rule
        self.cache, self.spec, self.params = cache, spec, params
        self.a = cut.a
        self.rows = cache.rows
        self.items = np.arange(spec.d)
        if spec.p >= 1:
            self.x = rule.nodes
            self.F1 = _factor_cdfs(cut.a, spec.families_f1, params.theta1, self.x)
        F, w = conditional_cdfs(cut, spec, params, rule)
        self.logw = np.log(w)
        self.F = F
        self.item_c = np.stack([self._item_term(j, F[:, j, :]) for j in range(spec.d)])
        self.edges = {}
        if spec.tree is not None:
            for e, ((j, k), fam) in enumerate(zip(spec.tree, spec.families_tree)):
                if fam.has_param:
                    self.edges[e] = self._edge_term(e, F[:, j, :], F[:, k, :],
                                                    self.item_c[j], self.item_c[k], params.delta[e])
        self.incident = {j: [e for e in self.edges if j in spec.tree[e]] for j in range(spec.d)}
        self.tot = self.item_c.sum(axis=0)
        for c in self.edges.values():
            self.tot = self.tot + c
        self.value = self._loglik(self.tot)

    def _item_term(self, j, Fj):
        return _log(np.diff(Fj, axis=1))[:, self.rows[:, j]]

    def _edge_term(self, e, Fj, Fk, cj, ck, delta):
        j, k = self.spec.tree[e]
        R = _rect_one(self.spec.families_tree[e], delta, Fj, Fk)
        return _log(R)[:, self.rows[:, j], self.rows[:, k]] - cj - ck

    def _loglik(self, tot):
        lp = np.maximum(logsumexp(tot + self.logw[:, None], axis=0), _LOG_FLOOR)
        return float(np.dot(self.cache.counts, lp))

    def _item_column(self, group, j, value):
        spec = self.spec
        if group == "theta1":
            f1j = cond_cdf_unchecked(spec.families_f1[j], value, self.a[j][None, :], self.x[:, None])
        else:
            f1j = self.F1[:, j, :]
        if spec.p == 1:
            return f1j
        th2 = value if group == "theta2" else self.params.theta2[j]
        nq = len(self.x)
        f2 = cond_cdf_unchecked(spec.families_f2[j], th2, f1j[:, None, :],
                                self.x[None, :, None])
        return f2.reshape(nq * nq, -1)

    def replaced(self, group, idx, value):
        """Log-likelihood with one parameter set to ``value``, the rest unchanged."""
        tot = self.tot
        if group == "delta":
            j, k = self.spec.tree[idx]
            new = self._edge_term(idx, self.F[:, j, :], self.F[:, k, :],
                                  self.item_c[j], self.item_c[k], value)
            return self._loglik(tot - self.edges[idx] + new)
        j = idx
        Fj = self._item_column(group, j, value)
        cj = self._item_term(j, Fj)
        tot = tot - self.item_c[j] + cj
        for e in self.incident[j]:
            a, b = self.spec.tree[e]
            if a == j:
                new = self._edge_term(e, Fj, self.F[:, b, :], cj, self.item_c[b],
                                      self.params.delta[e])
            else:
                new = self._edge_term(e, self.F[:, a, :], Fj, self.item_c[a], cj,
                                      self.params.delta[e])
            tot = tot - self.edges[e] + new
        return self._loglik(tot)
