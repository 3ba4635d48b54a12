"""Ordinal response data, CSV input/output and step-one cutpoint estimation."""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DataError


@dataclass(frozen=True)
class ResponseMatrix:
    """An ``n x d`` matrix of ordinal responses coded ``0..K_j - 1``.

    Parameters
    ----------
    values : array_like of int
        Responses, one row per respondent.
    category_counts : sequence of int, optional
        ``K_j`` for each item. Defaults to ``max(values[:, j]) + 1``.
    item_names : sequence of str, optional
        Item labels; defaults to ``Y1, ..., Yd``.
    label_maps : tuple of dict, optional
        For data read from CSV, the original label of every code per item.
    """

    values: np.ndarray
    category_counts: tuple = None
    item_names: tuple = None
    label_maps: tuple = field(default=None, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise DataError("response data must be a 2-D array")
        if not np.issubdtype(vals.dtype, np.integer):
            if not np.all(np.isfinite(vals)) or np.any(vals != np.round(vals)):
                raise DataError("responses must be integers (missing values are not supported)")
        vals = vals.astype(np.int64)
        n, d = vals.shape
        if n < 2:
            raise DataError("need at least two respondents")
        if d < 3:
            raise DataError("need at least three items")
        if np.any(vals < 0):
            raise DataError("categories must be coded from 0")
        counts = self.category_counts
        if counts is None:
            counts = tuple(int(k) for k in vals.max(axis=0) + 1)
        counts = tuple(int(k) for k in counts)
        if len(counts) != d:
            raise DataError("category_counts length does not match the number of items")
        if any(k < 2 for k in counts):
            raise DataError("every item needs at least two categories")
        if np.any(vals >= np.array(counts)):
            raise DataError("response outside 0..K_j-1")
        names = self.item_names
        if names is None:
            names = tuple(f"Y{j + 1}" for j in range(d))
        names = tuple(str(s) for s in names)
        if len(names) != d:
            raise DataError("item_names length does not match the number of items")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "category_counts", counts)
        object.__setattr__(self, "item_names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    def unique_rows(self):
        """Distinct response patterns and their multiplicities."""
        rows, counts = np.unique(self.values, axis=0, return_counts=True)
        return rows, counts

    def category_table(self):
        """``d x max(K)`` array of category frequencies."""
        kmax = max(self.category_counts)
        out = np.zeros((self.d, kmax), dtype=np.int64)
        for j in range(self.d):
            out[j] = np.bincount(self.values[:, j], minlength=kmax)[:kmax]
        return out

    def merge_empty(self):
        """Drop unobserved categories by shifting higher codes down.

        Returns a new matrix whose items have only observed categories.
        """
        vals = self.values.copy()
        counts = []
        for j, k in enumerate(self.category_counts):
            observed = np.flatnonzero(np.bincount(vals[:, j], minlength=k))
            remap = np.full(k, -1)
            remap[observed] = np.arange(len(observed))
            vals[:, j] = remap[vals[:, j]]
            counts.append(max(len(observed), 1))
        return ResponseMatrix(vals, tuple(counts), self.item_names)

    def subset(self, rows):
        return ResponseMatrix(self.values[rows], self.category_counts, self.item_names)


@dataclass(frozen=True)
class CutpointSet:
    """Uniform-scale cutpoints ``0 = a_{j,0} < ... < a_{j,K_j} = 1`` per item.

    ``a`` is a ``d x (Kmax + 1)`` array; entries beyond ``K_j`` are padded
    with 1 so that the array stays rectangular.
    """

    a: np.ndarray
    category_counts: tuple

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        counts = tuple(int(k) for k in self.category_counts)
        if a.ndim != 2 or a.shape[0] != len(counts):
            raise DataError("cutpoint array must be d x (Kmax + 1)")
        for j, k in enumerate(counts):
            row = a[j, : k + 1]
            if row[0] != 0.0 or row[-1] != 1.0:
                raise DataError(f"cutpoints of item {j} must start at 0 and end at 1")
            if np.any(np.diff(row) <= 0.0):
                raise DataError(f"cutpoints of item {j} are not strictly increasing")
            a[j, k + 1:] = 1.0
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "category_counts", counts)

    @classmethod
    def from_lists(cls, cuts):
        """Build from ragged per-item sequences ``(0, a_1, ..., 1)``."""
        counts = tuple(len(c) - 1 for c in cuts)
        kmax = max(counts)
        a = np.ones((len(cuts), kmax + 1))
        for j, c in enumerate(cuts):
            a[j, : len(c)] = c
        return cls(a, counts)

    @classmethod
    def equal(cls, d, k):
        """``d`` items with ``k`` equally weighted categories."""
        return cls(np.tile(np.linspace(0.0, 1.0, k + 1), (d, 1)), (k,) * d)

    @property
    def d(self):
        return self.a.shape[0]

    @property
    def alpha(self):
        """Normal-scale cutpoints ``Phi^{-1}(a)``, with -inf/+inf at the ends."""
        return ndtri(self.a)

    def item(self, j):
        return self.a[j, : self.category_counts[j] + 1]

    def probs(self):
        """Marginal category probabilities ``a_{j,y+1} - a_{j,y}`` (padded with 0)."""
        return np.diff(self.a, axis=1)

    def to_lists(self):
        return [self.item(j).tolist() for j in range(self.d)]


def estimate_cutpoints(data, on_empty="reject"):
    """Cutpoints from cumulative sample proportions.

    Parameters
    ----------
    data : ResponseMatrix
    on_empty : {"reject", "merge"}
        What to do when a category of some item is never observed. With
        ``"merge"`` the empty category is collapsed into its neighbour and a
        warning is issued; the returned cutpoints then describe
        ``data.merge_empty()``, which is what should be fitted.

    Returns
    -------
    CutpointSet

    Raises
    ------
    DataError
        If ``on_empty="reject"`` and some category is unobserved.
    """
    if on_empty not in ("reject", "merge"):
        raise ValueError("on_empty must be 'reject' or 'merge'")
    table = data.category_table()
    empty = [(j, y) for j, k in enumerate(data.category_counts)
             for y in range(k) if table[j, y] == 0]
    if empty:
        if on_empty == "reject":
            j, y = empty[0]
            raise DataError(
                f"category {y} of item {data.item_names[j]} is never observed "
                f"({len(empty)} empty categories in total)")
        warnings.warn(f"merging {len(empty)} unobserved categories into neighbours",
                      stacklevel=2)
        data = data.merge_empty()
        if any(k < 2 for k in data.category_counts):
            raise DataError("an item has a single observed category")
        table = data.category_table()
    cuts = []
    for j, k in enumerate(data.category_counts):
        cum = np.cumsum(table[j, :k]) / data.n
        cum[-1] = 1.0
        cuts.append(np.concatenate([[0.0], cum]))
    return CutpointSet.from_lists(cuts)


def read_csv(path):
    """Read a response matrix from CSV.

    The first row holds item names; every other row one respondent with
    integer cells. Labels of each item are sorted numerically and recoded to
    ``0..K_j - 1``.

    Returns
    -------
    data : ResponseMatrix
    remap : dict
        ``{item_name: {original_label: code}}``, deterministic.

    Raises
    ------
    DataError
        On ragged rows, empty cells, non-integer cells or too few rows/items.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                rows.append([int(c.strip()) for c in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer cell") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    raw = np.array(rows, dtype=np.int64)
    values = np.empty_like(raw)
    remap = {}
    maps = []
    for j, name in enumerate(header):
        labels = np.unique(raw[:, j])
        codes = {int(lab): i for i, lab in enumerate(labels)}
        values[:, j] = np.searchsorted(labels, raw[:, j])
        remap[name] = codes
        maps.append({i: int(lab) for i, lab in enumerate(labels)})
    data = ResponseMatrix(values, tuple(len(m) for m in maps), tuple(header), tuple(maps))
    return data, remap


def write_csv(data, path):
    """Write ``data`` in the dialect accepted by :func:`read_csv`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.item_names)
        writer.writerows(data.values.tolist())
