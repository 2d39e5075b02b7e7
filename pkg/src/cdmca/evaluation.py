"""Matching-error evaluation of an embedding against a weight graph.

The matching error is half the weighted sum of squared distances between all
ordered pairs of matched items. With canonical single storage per unordered
pair, that is exactly the sum over stored off-diagonal entries; self-matches
contribute nothing. Per-component errors split the same sum by coordinate.
"""

from dataclasses import dataclass

import numpy as np

from .embedding import Embedding
from .errors import ZeroVarianceError, ZeroWeightError


def _check_same_items(emb, graph):
    if emb.layout.n != graph.layout.n:
        raise ValueError(
            f"embedding covers items {emb.layout.n}, weights cover {graph.layout.n}"
        )


def normalize_weights(graph):
    """Rescale so the full symmetric matrix sums to one."""
    total = graph.total_weight
    if total == 0.0:
        raise ZeroWeightError("total weight is zero; cannot normalize")
    return graph.scaled(1.0 / total)


def matching_error(emb, graph):
    """Half the weighted sum of squared distances over all ordered pairs."""
    _check_same_items(emb, graph)
    off = ~graph.diagonal_mask
    diff = emb.values[graph.row[off]] - emb.values[graph.col[off]]
    return float((graph.weight[off] * (diff * diff).sum(axis=1)).sum())


@dataclass(frozen=True)
class ErrorReport:
    """Per-component matching errors, their total, the weight sum of the
    graph they were computed against, and the rescale mode of the embedding.
    """

    per_pc: np.ndarray
    total: float
    weight_sum: float
    rescale_mode: str

    def __post_init__(self):
        v = np.ascontiguousarray(self.per_pc, dtype=np.float64)
        v.flags.writeable = False
        object.__setattr__(self, "per_pc", v)


def per_pc_error(emb, graph):
    """Split the matching error by coordinate; the components sum to it."""
    _check_same_items(emb, graph)
    off = ~graph.diagonal_mask
    diff = emb.values[graph.row[off]] - emb.values[graph.col[off]]
    per_pc = (graph.weight[off, None] * diff * diff).sum(axis=0)
    return ErrorReport(
        per_pc=per_pc,
        total=float(per_pc.sum()),
        weight_sum=graph.total_weight,
        rescale_mode=emb.rescale_mode,
    )


def weighted_rescale(emb, graph):
    """Divide every column by the square root of its degree-weighted mean
    square, so each column has degree-weighted second moment one.
    """
    _check_same_items(emb, graph)
    m = graph.degrees()
    total = m.sum()
    if total == 0.0:
        raise ZeroWeightError("total weight is zero; weighted rescale undefined")
    moment = (m[:, None] * emb.values * emb.values).sum(axis=0) / total
    bad = np.flatnonzero(moment == 0.0)
    if bad.size:
        raise ZeroVarianceError(
            f"embedding column {int(bad[0])} has zero degree-weighted moment"
        )
    factors = np.sqrt(moment)
    composed = factors if emb.rescale_factors is None else emb.rescale_factors * factors
    return Embedding(
        layout=emb.layout,
        values=emb.values / factors,
        rescale_mode="weighted",
        rescale_factors=composed,
    )
