"""Per-domain data tables, column standardization, and the block data matrix."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumnError
from .layout import DomainLayout

FLOAT_FMT = "%.17g"


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DomainTable:
    """An (n_d, p_d) table of vectors for one domain.

    mean/scale, when present, record the column shift and divisor that map
    the original file-space values to the stored ones.
    """

    domain: int
    values: np.ndarray
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"domain table must be 2-d, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError(f"domain {self.domain} table contains non-finite values")
        object.__setattr__(self, "values", _readonly(v))
        for name in ("mean", "scale"):
            a = getattr(self, name)
            if a is not None:
                a = _readonly(a)
                if a.shape != (v.shape[1],):
                    raise ValueError(f"{name} must have one entry per column")
                object.__setattr__(self, name, a)

    @property
    def n_items(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]


def load_domain_table(path, domain, layout=None):
    """Read a headerless numeric CSV into a DomainTable.

    When a layout is given, the shape is checked against it; otherwise the
    shape is taken from the file.
    """
    rows = []
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            parsed = []
            for colno, cell in enumerate(record, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}, column {colno}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: line {lineno}, column {colno}: non-finite value {cell!r}"
                    )
                parsed.append(value)
            if rows and len(parsed) != len(rows[0]):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(rows[0])} columns, "
                    f"found {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: empty data file")
    values = np.array(rows, dtype=np.float64)
    if layout is not None:
        layout.check_domain(domain)
        expected = (layout.n[domain], layout.p[domain])
        if values.shape != expected:
            raise ValueError(
                f"{path}: domain {domain} expects shape {expected}, found {values.shape}"
            )
    return DomainTable(domain=domain, values=values)


def save_domain_table(path, values):
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w") as fh:
        for row in values:
            fh.write(",".join(FLOAT_FMT % v for v in row))
            fh.write("\n")


def standardize_columns(table):
    """Shift and rescale every column to mean 0 and population variance 1.

    The applied mean and scale are recorded on the result so that new data
    can be mapped into the same coordinates later.
    """
    v = table.values
    mean = v.mean(axis=0)
    var = v.var(axis=0)
    bad = np.flatnonzero(var == 0.0)
    if bad.size:
        raise ConstantColumnError(
            f"domain {table.domain}: column {int(bad[0])} is constant"
        )
    scale = np.sqrt(var)
    return DomainTable(
        domain=table.domain,
        values=(v - mean) / scale,
        mean=mean,
        scale=scale,
    )


def apply_standardization(values, mean, scale):
    """Map new rows into the coordinates of a previously standardized table."""
    values = np.asarray(values, dtype=np.float64)
    return (values - np.asarray(mean)) / np.asarray(scale)


def augment(x, domain, layout):
    """Zero-pad a single domain vector into the stacked feature space."""
    x = np.asarray(x, dtype=np.float64)
    layout.check_domain(domain)
    if x.shape != (layout.p[domain],):
        raise ValueError(
            f"domain {domain} vector must have length {layout.p[domain]}, got {x.shape}"
        )
    out = np.zeros(layout.total_features)
    out[layout.col_slice(domain)] = x
    return out


@dataclass(frozen=True)
class BlockDataMatrix:
    """The stacked block-diagonal data matrix, kept as per-domain blocks.

    Row blocks are the domain tables; the dense form places block d at
    rows row_slice(d) and columns col_slice(d), zero elsewhere.
    """

    layout: DomainLayout
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(_readonly(b) for b in self.blocks)
        if len(blocks) != self.layout.num_domains:
            raise ValueError(
                f"expected {self.layout.num_domains} blocks, got {len(blocks)}"
            )
        for d, b in enumerate(blocks):
            expected = (self.layout.n[d], self.layout.p[d])
            if b.shape != expected:
                raise ValueError(
                    f"domain {d} block has shape {b.shape}, layout expects {expected}"
                )
            if not np.isfinite(b).all():
                raise ValueError(f"domain {d} block contains non-finite values")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_tables(cls, tables):
        tables = list(tables)
        if sorted(t.domain for t in tables) != list(range(len(tables))):
            raise ValueError(
                f"tables must cover domains 0..{len(tables) - 1} exactly once, "
                f"got {[t.domain for t in tables]}"
            )
        tables.sort(key=lambda t: t.domain)
        layout = DomainLayout(
            p=tuple(t.n_features for t in tables),
            n=tuple(t.n_items for t in tables),
        )
        return cls(layout=layout, blocks=tuple(t.values for t in tables))

    def augmented_row(self, d, i):
        """Row of the dense block matrix for item i of domain d."""
        self.layout.check_domain(d)
        return augment(self.blocks[d][i], d, self.layout)

    def to_dense(self, force=False):
        layout = self.layout
        size = layout.total_items * layout.total_features
        if size > 50_000_000 and not force:
            raise ValueError(
                f"dense block matrix would hold {size} entries; pass force=True"
            )
        out = np.zeros((layout.total_items, layout.total_features))
        for d, b in enumerate(self.blocks):
            out[layout.row_slice(d), layout.col_slice(d)] = b
        return out
