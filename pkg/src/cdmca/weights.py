"""Sparse symmetric matching weights between items of the domains.

The full weight matrix over all N items is symmetric. Each unordered pair is
stored exactly once in canonical orientation: the endpoint with the larger
global row index first, entries sorted by (row, col). Diagonal entries
(an item matched with itself) are allowed and appear once in the full matrix;
they arise from uniform within-domain coupling coefficients.
"""

import csv
import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .data import BlockDataMatrix
from .errors import DuplicateEdgeError, OutOfRangeError
from .layout import DomainLayout

WEIGHT_HEADER = ("domain_a", "index_a", "domain_b", "index_b", "weight")
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class WeightGraph:
    layout: DomainLayout
    row: np.ndarray
    col: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        row = np.asarray(self.row, dtype=np.int64).ravel()
        col = np.asarray(self.col, dtype=np.int64).ravel()
        weight = np.asarray(self.weight, dtype=np.float64).ravel()
        if not (row.size == col.size == weight.size):
            raise ValueError("row, col and weight must have equal lengths")
        n = self.layout.total_items
        if row.size:
            if row.min() < 0 or row.max() >= n or col.min() < 0 or col.max() >= n:
                raise OutOfRangeError(
                    f"edge endpoint out of range [0, {n}) for this layout"
                )
            # canonical orientation, then canonical order
            flip = row < col
            row, col = np.where(flip, col, row), np.where(flip, row, col)
            order = np.lexsort((col, row))
            row, col, weight = row[order], col[order], weight[order]
            key = row * np.int64(n) + col
            dup = np.flatnonzero(np.diff(key) == 0)
            if dup.size:
                d_a, i_a = self.layout.locate(int(row[dup[0]]))
                d_b, i_b = self.layout.locate(int(col[dup[0]]))
                raise DuplicateEdgeError(
                    f"pair (domain {d_a}, item {i_a}) - (domain {d_b}, item {i_b}) "
                    "appears more than once"
                )
            if not np.isfinite(weight).all():
                raise ValueError("weights must be finite")
            if np.any(weight == 0.0):
                raise ValueError("zero-weight entries must be omitted, not stored")
            if np.any(weight < 0.0):
                warnings.warn(
                    "weight graph contains negative weights; the error function "
                    "may lose its sum-of-squares meaning",
                    stacklevel=2,
                )
        for name, arr in (("row", row), ("col", col), ("weight", weight)):
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, layout):
        z = np.zeros(0)
        return cls(layout=layout, row=z, col=z, weight=z)

    @classmethod
    def from_global(cls, layout, row, col, weight):
        return cls(layout=layout, row=row, col=col, weight=weight)

    @classmethod
    def from_pairs(cls, layout, dom_a, idx_a, dom_b, idx_b, weight):
        row = layout.global_row(np.asarray(dom_a), np.asarray(idx_a))
        col = layout.global_row(np.asarray(dom_b), np.asarray(idx_b))
        return cls(layout=layout, row=row, col=col, weight=weight)

    # -- views and derived quantities --------------------------------------

    @property
    def n_entries(self):
        return int(self.row.size)

    @property
    def diagonal_mask(self):
        return self.row == self.col

    @cached_property
    def total_weight(self):
        """Sum of the full symmetric matrix: off-diagonal entries count twice."""
        off = self.row != self.col
        return float(2.0 * self.weight[off].sum() + self.weight[~off].sum())

    def pair_arrays(self):
        """Stored entries as (dom_a, idx_a, dom_b, idx_b) in canonical order."""
        dom_a, idx_a = self.layout.locate(self.row)
        dom_b, idx_b = self.layout.locate(self.col)
        return dom_a, idx_a, dom_b, idx_b

    def degrees(self):
        """Row sums of the full symmetric matrix."""
        m = np.zeros(self.layout.total_items)
        np.add.at(m, self.row, self.weight)
        off = self.row != self.col
        np.add.at(m, self.col[off], self.weight[off])
        return m

    def scaled(self, factor):
        return replace(self, weight=self.weight * float(factor))

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.row.shape:
            raise ValueError("mask must have one entry per stored edge")
        return replace(
            self, row=self.row[mask], col=self.col[mask], weight=self.weight[mask]
        )

    def to_dense(self, force=False):
        n = self.layout.total_items
        if n * n > 50_000_000 and not force:
            raise ValueError(f"dense weight matrix would be {n}x{n}; pass force=True")
        w = np.zeros((n, n))
        w[self.row, self.col] = self.weight
        off = self.row != self.col
        w[self.col[off], self.row[off]] = self.weight[off]
        return w


def validate_weights(graph):
    """Re-run the construction checks on an existing graph.

    Returns the graph unchanged when everything holds. Useful after
    deserialization or manual surgery on the arrays.
    """
    rebuilt = WeightGraph(
        layout=graph.layout, row=graph.row, col=graph.col, weight=graph.weight
    )
    if not (
        np.array_equal(rebuilt.row, graph.row)
        and np.array_equal(rebuilt.col, graph.col)
    ):
        raise ValueError("stored edges are not in canonical orientation/order")
    return graph


@dataclass(frozen=True)
class DegreeMatrix:
    """Diagonal of row sums of the full weight matrix, with the layout kept."""

    layout: DomainLayout
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.layout.total_items:
            raise ValueError(
                f"expected {self.layout.total_items} degrees, got {v.size}"
            )
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def block(self, d):
        return self.values[self.layout.row_slice(d)]

    @property
    def total(self):
        return float(self.values.sum())


def degree_matrix(graph):
    return DegreeMatrix(layout=graph.layout, values=graph.degrees())


def mcca_weights(c, n, layout):
    """Uniform coupling weights: item i of domain d matches item i of domain e
    with weight c[d, e], for every i.

    c must be symmetric. Diagonal coefficients c[d, d] produce self-matches,
    which enter the full matrix (and the degrees) once.
    """
    c = np.asarray(c, dtype=np.float64)
    d_count = layout.num_domains
    if c.shape != (d_count, d_count):
        raise ValueError(f"coefficient matrix must be {d_count}x{d_count}, got {c.shape}")
    if not np.array_equal(c, c.T):
        raise ValueError("coefficient matrix must be symmetric")
    if any(nd != n for nd in layout.n):
        raise ValueError(f"uniform coupling needs equal item counts, got n={layout.n}")
    rows, cols, weights = [], [], []
    items = np.arange(n)
    for d in range(d_count):
        for e in range(d + 1):
            if c[d, e] == 0.0:
                continue
            rows.append(layout.row_offsets[d] + items)
            cols.append(layout.row_offsets[e] + items)
            weights.append(np.full(n, c[d, e]))
    if not rows:
        return WeightGraph.empty(layout)
    return WeightGraph.from_global(
        layout,
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(weights),
    )


@dataclass(frozen=True)
class EdgeCoding:
    """One dense row per stored edge: the sum of the two endpoints' augmented
    vectors, paired with the edge weight.
    """

    layout: DomainLayout
    rows: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if rows.ndim != 2 or rows.shape != (weights.size, self.layout.total_features):
            raise ValueError("coding rows must be (n_edges, total_features)")
        rows = np.ascontiguousarray(rows)
        rows.flags.writeable = False
        weights = np.ascontiguousarray(weights)
        weights.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "weights", weights)

    @property
    def n_edges(self):
        return int(self.weights.size)


def edge_coding(block_data, graph):
    """Build the per-edge coded matrix for a graph without self-matches.

    The defining identity, with M the degree matrix and W the full weights:
    coded^T diag(w) coded == X^T M X + X^T W X. It requires every stored
    entry to link two distinct items, so diagonal entries are rejected.
    """
    if block_data.layout != graph.layout:
        raise ValueError("block data and weights use different layouts")
    if np.any(graph.diagonal_mask):
        raise ValueError("edge coding is undefined for self-match (diagonal) entries")
    layout = graph.layout
    e_count = graph.n_entries
    rows = np.zeros((e_count, layout.total_features))
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    for d in range(layout.num_domains):
        view = rows[:, layout.col_slice(d)]
        sel = dom_a == d
        if np.any(sel):
            view[sel] += block_data.blocks[d][idx_a[sel]]
        sel = dom_b == d
        if np.any(sel):
            view[sel] += block_data.blocks[d][idx_b[sel]]
    return EdgeCoding(layout=layout, rows=rows, weights=graph.weight.copy())


def load_weights(path, layout):
    """Read a weight CSV (header domain_a,index_a,domain_b,index_b,weight).

    Orientation in the file is free; entries are canonicalized on load.
    Duplicate unordered pairs are rejected.
    """
    dom_a, idx_a, dom_b, idx_b, weight = [], [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != WEIGHT_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(WEIGHT_HEADER)}, got {header}"
            )
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != 5:
                raise ValueError(
                    f"{path}: line {lineno}: expected 5 fields, found {len(record)}"
                )
            try:
                dom_a.append(int(record[0]))
                idx_a.append(int(record[1]))
                dom_b.append(int(record[2]))
                idx_b.append(int(record[3]))
                weight.append(float(record[4]))
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: cannot parse {record!r}"
                ) from None
    if not weight:
        return WeightGraph.empty(layout)
    return WeightGraph.from_pairs(layout, dom_a, idx_a, dom_b, idx_b, weight)


def save_weights(path, graph):
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    with open(path, "w") as fh:
        fh.write(",".join(WEIGHT_HEADER) + "\n")
        for a, i, b, j, w in zip(dom_a, idx_a, dom_b, idx_b, graph.weight):
            fh.write(f"{a},{i},{b},{j},{FLOAT_FMT % w}\n")
