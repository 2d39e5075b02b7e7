"""Bookkeeping for multi-domain block structures.

A layout records the feature count p_d and item count n_d of every domain.
Features of domain d occupy a contiguous column block and items a contiguous
row block; offsets are prefix sums over domains. Domain ids and item indices
are 0-based everywhere in this package.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OutOfRangeError


@dataclass(frozen=True)
class DomainLayout:
    p: tuple
    n: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if not self.p:
            raise ValueError("layout needs at least one domain")
        if len(self.p) != len(self.n):
            raise ValueError(
                f"feature counts ({len(self.p)}) and item counts ({len(self.n)}) "
                "must cover the same domains"
            )
        if any(v < 1 for v in self.p):
            raise ValueError(f"every domain needs at least one feature, got p={self.p}")
        if any(v < 1 for v in self.n):
            raise ValueError(f"every domain needs at least one item, got n={self.n}")

    @property
    def num_domains(self):
        return len(self.p)

    @property
    def total_features(self):
        return self.col_offsets[-1]

    @property
    def total_items(self):
        return self.row_offsets[-1]

    @cached_property
    def col_offsets(self):
        out = [0]
        for v in self.p:
            out.append(out[-1] + v)
        return tuple(out)

    @cached_property
    def row_offsets(self):
        out = [0]
        for v in self.n:
            out.append(out[-1] + v)
        return tuple(out)

    def check_domain(self, d):
        if not 0 <= d < self.num_domains:
            raise OutOfRangeError(f"domain {d} out of range for {self.num_domains} domains")

    def col_slice(self, d):
        """Column block of domain d in the stacked feature space."""
        self.check_domain(d)
        return slice(self.col_offsets[d], self.col_offsets[d + 1])

    def row_slice(self, d):
        """Row block of domain d in the stacked item space."""
        self.check_domain(d)
        return slice(self.row_offsets[d], self.row_offsets[d + 1])

    def global_row(self, d, i):
        """Global row index of item i of domain d. Accepts scalars or arrays."""
        d = np.asarray(d)
        i = np.asarray(i)
        if np.any(d < 0) or np.any(d >= self.num_domains):
            bad = int(d.min()) if np.any(d < 0) else int(d.max())
            raise OutOfRangeError(f"domain {bad} out of range for {self.num_domains} domains")
        n = np.asarray(self.n)
        if np.any(i < 0) or np.any(i >= n[d]):
            raise OutOfRangeError(
                f"item index out of range: got indices {np.atleast_1d(i).tolist()} "
                f"for domains {np.atleast_1d(d).tolist()} with n={self.n}"
            )
        out = np.asarray(self.row_offsets)[d] + i
        return out if out.ndim else int(out)

    def locate(self, global_rows):
        """Inverse of global_row: map global row indices to (domain, index)."""
        g = np.asarray(global_rows)
        if np.any(g < 0) or np.any(g >= self.total_items):
            raise OutOfRangeError(
                f"global row out of range [0, {self.total_items}): {g}"
            )
        offsets = np.asarray(self.row_offsets)
        dom = np.searchsorted(offsets, g, side="right") - 1
        idx = g - offsets[dom]
        if g.ndim:
            return dom, idx
        return int(dom), int(idx)
