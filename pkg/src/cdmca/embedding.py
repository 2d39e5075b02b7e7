"""Common-space coordinates of all items, rescaling, and nearest-neighbor
retrieval.

An Embedding stacks the per-domain coordinate blocks Y^d = X^d A^d into one
(N, K) array. rescale_mode records what (if any) per-column rescaling was
applied since the raw fit; rescale_factors holds the cumulative per-column
divisors so the raw coordinates remain recoverable.
"""

from dataclasses import dataclass

import numpy as np

from .data import apply_standardization
from .errors import ZeroVarianceError
from .layout import DomainLayout
from .solver import split_projections

RESCALE_MODES = ("none", "unit-variance", "weighted")


@dataclass(frozen=True)
class Embedding:
    layout: DomainLayout
    values: np.ndarray
    rescale_mode: str = "none"
    rescale_factors: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != self.layout.total_items:
            raise ValueError(
                f"embedding must be ({self.layout.total_items}, K), got {v.shape}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.rescale_mode not in RESCALE_MODES:
            raise ValueError(f"unknown rescale mode {self.rescale_mode!r}")
        f = self.rescale_factors
        if f is not None:
            f = np.ascontiguousarray(f, dtype=np.float64)
            if f.shape != (v.shape[1],):
                raise ValueError("rescale_factors must have one entry per column")
            f.flags.writeable = False
            object.__setattr__(self, "rescale_factors", f)

    @property
    def k(self):
        return self.values.shape[1]

    def block(self, d):
        return self.values[self.layout.row_slice(d)]

    def row(self, d, i):
        return self.values[self.layout.global_row(d, i)]


def embed(block_data, a):
    """Project already-prepared block data with a stacked (P, K) projection."""
    layout = block_data.layout
    parts = [
        block_data.blocks[d] @ a_d
        for d, a_d in enumerate(split_projections(a, layout))
    ]
    return Embedding(layout=layout, values=np.vstack(parts))


def project_tables(model, tables):
    """Map tables through a fitted model: apply the stored per-column
    standardization, then the per-domain projections.

    Feature counts must match the model; item counts are free, so new
    items can be projected alongside (or instead of) the training ones.
    """
    tables = sorted(tables, key=lambda t: t.domain)
    if [t.domain for t in tables] != list(range(model.layout.num_domains)):
        raise ValueError(
            f"need exactly one table per model domain, got {[t.domain for t in tables]}"
        )
    parts = []
    for t in tables:
        if t.n_features != model.layout.p[t.domain]:
            raise ValueError(
                f"domain {t.domain} has {t.n_features} features, "
                f"model expects {model.layout.p[t.domain]}"
            )
        std = apply_standardization(t.values, model.mean[t.domain], model.scale[t.domain])
        parts.append(std @ model.projections[t.domain])
    layout = DomainLayout(p=model.layout.p, n=tuple(t.n_items for t in tables))
    return Embedding(layout=layout, values=np.vstack(parts))


def project_vector(model, x, domain):
    """Common-space coordinates of a single new domain vector."""
    model.layout.check_domain(domain)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.layout.p[domain],):
        raise ValueError(
            f"domain {domain} vector must have length {model.layout.p[domain]}"
        )
    std = apply_standardization(x, model.mean[domain], model.scale[domain])
    return std @ model.projections[domain]


def _compose_factors(emb, factors):
    if emb.rescale_factors is None:
        return factors
    return emb.rescale_factors * factors


def rescale_unit_variance(emb):
    """Divide every column by its population standard deviation."""
    var = emb.values.var(axis=0)
    bad = np.flatnonzero(var == 0.0)
    if bad.size:
        raise ZeroVarianceError(f"embedding column {int(bad[0])} has zero variance")
    factors = np.sqrt(var)
    return Embedding(
        layout=emb.layout,
        values=emb.values / factors,
        rescale_mode="unit-variance",
        rescale_factors=_compose_factors(emb, factors),
    )


@dataclass(frozen=True)
class QueryResult:
    """Ranked retrieval output: parallel arrays over the returned items."""

    k_dims: int
    domains: np.ndarray
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return int(self.distances.size)

    def __iter__(self):
        return iter(zip(self.domains.tolist(), self.indices.tolist(), self.distances.tolist()))


def query_knn(emb, y_query, k_dims=None, top=None, domains=None):
    """Rank all items by Euclidean distance to the query point, using only
    the first k_dims coordinates. Ties are broken by (domain, index).
    """
    if k_dims is None:
        k_dims = emb.k
    if not 1 <= k_dims <= emb.k:
        raise ValueError(f"k_dims must lie in [1, {emb.k}], got {k_dims}")
    y_query = np.asarray(y_query, dtype=np.float64).ravel()
    if y_query.size < k_dims:
        raise ValueError(
            f"query vector has {y_query.size} coordinates, needs at least {k_dims}"
        )
    layout = emb.layout
    all_rows = np.arange(layout.total_items)
    dom, idx = layout.locate(all_rows)
    if domains is not None:
        keep = np.isin(dom, list(domains))
        if not np.any(keep):
            raise ValueError(f"no candidate items in domains {sorted(domains)}")
        all_rows, dom, idx = all_rows[keep], dom[keep], idx[keep]
    diff = emb.values[all_rows, :k_dims] - y_query[:k_dims]
    dist = np.sqrt((diff * diff).sum(axis=1))
    order = np.lexsort((idx, dom, dist))
    if top is not None:
        if top < 1:
            raise ValueError(f"top must be positive, got {top}")
        order = order[:top]
    return QueryResult(
        k_dims=int(k_dims),
        domains=dom[order],
        indices=idx[order],
        distances=dist[order],
    )
