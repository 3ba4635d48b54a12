"""Model structure and parameter containers."""

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .copula import BVN, INDEPENDENCE, CopulaFamily, check_theta, family_from_name
from .errors import DomainError


def check_spanning_tree(edges, d):
    """Raise :class:`DomainError` unless ``edges`` form a spanning tree on ``d`` nodes."""
    edges = [tuple(int(v) for v in e) for e in edges]
    if len(edges) != d - 1:
        raise DomainError(f"a spanning tree on {d} nodes needs {d - 1} edges, got {len(edges)}")
    parent = list(range(d))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for j, k in edges:
        if not (0 <= j < d and 0 <= k < d) or j == k:
            raise DomainError(f"invalid edge ({j}, {k})")
        rj, rk = find(j), find(k)
        if rj == rk:
            raise DomainError("edge set contains a cycle")
        parent[rj] = rk
    return tuple(edges)


def bfs_order(edges, d, root=None):
    """Breadth-first traversal of a tree.

    Returns ``(order, parent, parent_edge)`` where ``parent[root] == -1``.
    The default root is the lowest-index node touched by an edge.
    """
    adj = [[] for _ in range(d)]
    for e, (j, k) in enumerate(edges):
        adj[j].append((k, e))
        adj[k].append((j, e))
    if root is None:
        root = min(min(e) for e in edges) if edges else 0
    parent = [-1] * d
    parent_edge = [-1] * d
    seen = [False] * d
    seen[root] = True
    order = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w, e in sorted(adj[v]):
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                parent_edge[w] = e
                queue.append(w)
    return order, parent, parent_edge


def tree_path(edges, d, j, k):
    """Edge indices on the unique path between nodes ``j`` and ``k``."""
    _, parent, parent_edge = bfs_order(edges, d, root=j)
    path = []
    v = k
    while v != j:
        path.append(parent_edge[v])
        v = parent[v]
    return path[::-1]


@dataclass(frozen=True)
class EdgeSet:
    """Edges of a spanning tree on the items (0-based item indices)."""

    edges: tuple
    provenance: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(int(v) for v in e) for e in self.edges))

    def __iter__(self):
        return iter(self.edges)

    def __len__(self):
        return len(self.edges)

    def normalized(self):
        """Edges as a set of ``(min, max)`` pairs, for comparisons."""
        return frozenset((min(e), max(e)) for e in self.edges)

    def validate(self, d):
        check_spanning_tree(self.edges, d)
        return self


def _families(fams, d, what):
    if fams is None:
        return None
    if isinstance(fams, (str, CopulaFamily)):
        fams = [fams] * d
    fams = tuple(family_from_name(f) for f in fams)
    if len(fams) != d:
        raise DomainError(f"{what}: expected {d} families, got {len(fams)}")
    return fams


@dataclass(frozen=True)
class ModelSpec:
    """Structure of a factor (tree) copula model.

    Parameters
    ----------
    d : int
        Number of items.
    p : {0, 1, 2}
        Number of latent factors; ``p = 0`` is a plain 1-truncated vine.
    families_f1, families_f2 : tuple of CopulaFamily
        Per-item linking copulas to the first and second factor.
    tree : tuple of (int, int), optional
        Residual Markov tree edges, 0-based.
    families_tree : tuple of CopulaFamily
        One family per tree edge.
    fixed_f2 : int, optional
        Index of the second-factor link held at independence for
        identification of an all-BVN 2-factor model.
    """

    d: int
    p: int
    families_f1: tuple = None
    families_f2: tuple = None
    tree: tuple = None
    families_tree: tuple = None
    fixed_f2: int = None

    def __post_init__(self):
        d, p = int(self.d), int(self.p)
        if p not in (0, 1, 2):
            raise DomainError("number of factors must be 0, 1 or 2")
        f1 = _families(self.families_f1, d, "factor 1") if p >= 1 else None
        f2 = _families(self.families_f2, d, "factor 2") if p == 2 else None
        if p >= 1 and f1 is None:
            raise DomainError("factor-1 families missing")
        if p == 2 and f2 is None:
            raise DomainError("factor-2 families missing")
        if p < 2 and self.families_f2 is not None:
            raise DomainError("factor-2 families given for a model with p < 2")
        tree = None
        ft = None
        if self.tree is not None:
            tree = check_spanning_tree(self.tree, d)
            ft = self.families_tree
            if ft is None:
                ft = BVN
            ft = _families(ft, len(tree), "tree")
        elif p == 0:
            raise DomainError("a model without factors needs a tree")
        fixed = self.fixed_f2
        if fixed is not None:
            if p != 2:
                raise DomainError("fixed_f2 only applies to 2-factor models")
            fixed = int(fixed)
            f2 = tuple(INDEPENDENCE if j == fixed else f for j, f in enumerate(f2))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "families_f1", f1)
        object.__setattr__(self, "families_f2", f2)
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "families_tree", ft)
        object.__setattr__(self, "fixed_f2", fixed)

    @classmethod
    def build(cls, d, p, f1=BVN, f2=None, tree=None, tree_family=BVN, fixed_f2=None):
        """Convenience constructor with one family per tree of the model."""
        if p == 2 and f2 is None:
            f2 = f1
        if isinstance(tree, EdgeSet):
            tree = tree.edges
        return cls(d, p,
                   families_f1=f1 if p >= 1 else None,
                   families_f2=f2 if p == 2 else None,
                   tree=tree,
                   families_tree=tree_family if tree is not None else None,
                   fixed_f2=fixed_f2)

    @property
    def has_tree(self):
        return self.tree is not None

    @property
    def edges(self):
        return self.tree or ()

    def slots(self):
        """``(group, index, family)`` for every link, in parameter order."""
        out = []
        if self.p >= 1:
            out += [("theta1", j, f) for j, f in enumerate(self.families_f1)]
        if self.p == 2:
            out += [("theta2", j, f) for j, f in enumerate(self.families_f2)]
        if self.tree is not None:
            out += [("delta", e, f) for e, f in enumerate(self.families_tree)]
        return out

    def free_slots(self):
        return [s for s in self.slots() if s[2].has_param]

    @property
    def n_params(self):
        """Number of copula parameters (cutpoints and independence links excluded)."""
        return len(self.free_slots())

    def is_gaussian(self):
        fams = list(self.families_f1 or ()) + list(self.families_f2 or ()) + list(self.families_tree or ())
        return all(f.name in ("bvn", "independence") for f in fams)

    def needs_identification(self):
        """True for a 2-factor model whose factor links are all BVN and none fixed."""
        return (self.p == 2 and self.fixed_f2 is None
                and all(f == BVN for f in self.families_f1)
                and all(f == BVN for f in self.families_f2))

    def with_families(self, f1=None, f2=None, tree_family=None):
        kw = {}
        if f1 is not None:
            kw["families_f1"] = (f1,) * self.d if isinstance(f1, CopulaFamily) else f1
        if f2 is not None:
            kw["families_f2"] = (f2,) * self.d if isinstance(f2, CopulaFamily) else f2
            kw["fixed_f2"] = None
        if tree_family is not None:
            kw["families_tree"] = ((tree_family,) * len(self.tree)
                                   if isinstance(tree_family, CopulaFamily) else tree_family)
        return replace(self, **kw)

    def with_tree(self, tree, tree_family=BVN):
        if isinstance(tree, EdgeSet):
            tree = tree.edges
        if tree is None:
            return replace(self, tree=None, families_tree=None)
        return replace(self, tree=tuple(tree), families_tree=(tree_family,) * len(tree))

    def describe(self):
        parts = [f"p={self.p}"]
        for name, fams in (("f1", self.families_f1), ("f2", self.families_f2),
                           ("tree", self.families_tree)):
            if fams:
                labels = sorted({f.label for f in fams})
                parts.append(f"{name}={'/'.join(labels)}")
        return " ".join(parts)


@dataclass(frozen=True)
class ParamVector:
    """Copula parameters; entries of independence links are ignored (stored as 0)."""

    theta1: np.ndarray = None
    theta2: np.ndarray = None
    delta: np.ndarray = None

    def __post_init__(self):
        for name in ("theta1", "theta2", "delta"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float).reshape(-1)
                v.flags.writeable = False
                object.__setattr__(self, name, v)

    def get(self, group):
        return getattr(self, group)

    def validate(self, spec):
        for group, i, fam in spec.slots():
            vec = self.get(group)
            if vec is None:
                raise DomainError(f"parameter group {group} missing")
            if fam.has_param:
                check_theta(fam, vec[i])
        return self

    def free_values(self, spec):
        return np.array([self.get(g)[i] for g, i, _ in spec.free_slots()])

    @classmethod
    def from_free(cls, spec, values):
        groups = {"theta1": np.zeros(spec.d) if spec.p >= 1 else None,
                  "theta2": np.zeros(spec.d) if spec.p == 2 else None,
                  "delta": np.zeros(len(spec.tree)) if spec.tree is not None else None}
        for (g, i, _), v in zip(spec.free_slots(), values):
            groups[g][i] = v
        return cls(**groups)

    def to_dict(self):
        return {k: (None if getattr(self, k) is None else getattr(self, k).tolist())
                for k in ("theta1", "theta2", "delta")}
