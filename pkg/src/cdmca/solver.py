"""Pencil assembly and the constrained trace-maximization eigensolver.

Given block data X and weights W with degree matrix M, the fit maximizes
tr(A^T H A) subject to A^T G A = I_K, where

    G = X^T M X + gamma_m * L_M,      H = X^T W X + gamma_w * L_W,

with block-diagonal regularizers L_M, L_W. The solution takes the top-K
eigenvectors of the whitened matrix (G^{-1/2})^T H G^{-1/2} and maps them
back by A = G^{-1/2} U_K, so the constraint holds by construction.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import BlockDataMatrix
from .errors import SingularGError
from .layout import DomainLayout
from .weights import DegreeMatrix, WeightGraph, degree_matrix

REGULARIZER_KINDS = ("identity", "alpha-scaled", "custom")

# adjacent eigenvalues closer than this are reported as tied
TIE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one fit.

    regularizer selects the block-diagonal L_M and L_W: "identity" uses
    I_P, "alpha-scaled" uses alpha_d * I_{p_d} with alpha_d the average
    diagonal of the d-th block of X^T M X, and "custom" takes per-domain
    blocks from l_m_blocks / l_w_blocks.
    """

    k: int
    gamma_m: float = 0.0
    gamma_w: float = 0.0
    regularizer: str = "identity"
    l_m_blocks: tuple | None = None
    l_w_blocks: tuple | None = None
    zero_threshold: float = 1e-10
    allow_negative_gamma: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.regularizer not in REGULARIZER_KINDS:
            raise ValueError(
                f"unknown regularizer {self.regularizer!r}; choose from {REGULARIZER_KINDS}"
            )
        if not self.allow_negative_gamma and (self.gamma_m < 0 or self.gamma_w < 0):
            raise ValueError(
                "negative regularization strengths need allow_negative_gamma=True"
            )
        if self.regularizer == "custom":
            if self.l_m_blocks is None or self.l_w_blocks is None:
                raise ValueError("custom regularizer needs l_m_blocks and l_w_blocks")
        elif self.l_m_blocks is not None or self.l_w_blocks is not None:
            raise ValueError("regularizer blocks are only used with regularizer='custom'")
        if self.zero_threshold <= 0:
            raise ValueError("zero_threshold must be positive")


@dataclass(frozen=True)
class Pencil:
    """The two symmetric P x P matrices of one fit, with the regularizers
    and strengths that entered them and the per-domain scales actually used.
    """

    layout: DomainLayout
    g: np.ndarray
    h: np.ndarray
    l_m: np.ndarray
    l_w: np.ndarray
    gamma_m: float
    gamma_w: float
    alpha: tuple | None

    def __post_init__(self):
        p_total = self.layout.total_features
        for name in ("g", "h", "l_m", "l_w"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if a.shape != (p_total, p_total):
                raise ValueError(f"{name} must be {p_total}x{p_total}, got {a.shape}")
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def xtmx_blocks(block_data, degrees):
    """Per-domain blocks of X^T M X; off-domain blocks are exactly zero."""
    layout = block_data.layout
    out = []
    for d in range(layout.num_domains):
        x = block_data.blocks[d]
        m = degrees[layout.row_slice(d)]
        out.append(x.T @ (m[:, None] * x))
    return out


def xtwx(block_data, graph):
    """Dense X^T W X accumulated blockwise from the stored edges."""
    layout = block_data.layout
    p_total = layout.total_features
    out = np.zeros((p_total, p_total))
    if graph.n_entries == 0:
        return out
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    diag = graph.diagonal_mask
    pair_key = dom_a * layout.num_domains + dom_b
    for key in np.unique(pair_key):
        d, e = divmod(int(key), layout.num_domains)
        sel = pair_key == key
        off = sel & ~diag
        if np.any(off):
            contrib = (
                block_data.blocks[d][idx_a[off]] * graph.weight[off, None]
            ).T @ block_data.blocks[e][idx_b[off]]
            out[layout.col_slice(d), layout.col_slice(e)] += contrib
            out[layout.col_slice(e), layout.col_slice(d)] += contrib.T
        self_sel = sel & diag
        if np.any(self_sel):
            contrib = (
                block_data.blocks[d][idx_a[self_sel]] * graph.weight[self_sel, None]
            ).T @ block_data.blocks[d][idx_b[self_sel]]
            out[layout.col_slice(d), layout.col_slice(d)] += contrib
    return out


def default_regularizer_scale(block_data, degrees):
    """Per-domain scale alpha_d: trace of the d-th block of X^T M X over p_d."""
    if isinstance(degrees, DegreeMatrix):
        degrees = degrees.values
    layout = block_data.layout
    blocks = xtmx_blocks(block_data, np.asarray(degrees, dtype=np.float64))
    return np.array([np.trace(b) / layout.p[d] for d, b in enumerate(blocks)])


def _regularizer_matrices(layout, xmx, config):
    p_total = layout.total_features
    if config.regularizer == "identity":
        eye = np.eye(p_total)
        return eye, eye.copy(), tuple(1.0 for _ in layout.p)
    if config.regularizer == "alpha-scaled":
        alpha = tuple(
            float(np.trace(b)) / layout.p[d] for d, b in enumerate(xmx)
        )
        diag = np.concatenate(
            [np.full(layout.p[d], alpha[d]) for d in range(layout.num_domains)]
        )
        return np.diag(diag), np.diag(diag), alpha
    # custom: per-domain blocks supplied by the caller
    l_m = np.zeros((p_total, p_total))
    l_w = np.zeros((p_total, p_total))
    for target, blocks, name in ((l_m, config.l_m_blocks, "l_m"), (l_w, config.l_w_blocks, "l_w")):
        if len(blocks) != layout.num_domains:
            raise ValueError(f"{name}_blocks must supply one block per domain")
        for d, b in enumerate(blocks):
            b = np.asarray(b, dtype=np.float64)
            if b.shape != (layout.p[d], layout.p[d]):
                raise ValueError(
                    f"{name}_blocks[{d}] must be {layout.p[d]}x{layout.p[d]}, got {b.shape}"
                )
            target[layout.col_slice(d), layout.col_slice(d)] = b
    return l_m, l_w, None


def pencil_from_forms(layout, xmx, xwx_full, config):
    """Assemble the pencil from precomputed X^T M X blocks and X^T W X."""
    p_total = layout.total_features
    g = np.zeros((p_total, p_total))
    for d, b in enumerate(xmx):
        g[layout.col_slice(d), layout.col_slice(d)] = b
    l_m, l_w, alpha = _regularizer_matrices(layout, xmx, config)
    if config.gamma_w != 0.0 and np.any(
        config.gamma_w * np.diag(l_w) > config.gamma_m * np.diag(l_m)
    ):
        warnings.warn(
            "gamma_w * L_W exceeds gamma_m * L_M on the diagonal; the error "
            "decomposition can turn negative",
            stacklevel=2,
        )
    g = g + config.gamma_m * l_m
    h = xwx_full + config.gamma_w * l_w
    if not (np.isfinite(g).all() and np.isfinite(h).all()):
        raise ValueError("pencil assembly produced non-finite entries")
    return Pencil(
        layout=layout,
        g=g,
        h=h,
        l_m=l_m,
        l_w=l_w,
        gamma_m=float(config.gamma_m),
        gamma_w=float(config.gamma_w),
        alpha=alpha,
    )


def assemble_pencil(block_data, graph, config):
    """Build G and H for one fit from data, weights, and hyperparameters."""
    if block_data.layout != graph.layout:
        raise ValueError("block data and weights use different layouts")
    degrees = graph.degrees()
    xmx = xtmx_blocks(block_data, degrees)
    xwx_full = xtwx(block_data, graph)
    return pencil_from_forms(block_data.layout, xmx, xwx_full, config)


@dataclass(frozen=True)
class SpectralSolution:
    """Eigenvalues of the whitened pencil (all P, descending) and the
    projection A holding the top-K columns, constraint-normalized.
    """

    layout: DomainLayout
    eigenvalues: np.ndarray
    a: np.ndarray
    n_positive: int
    has_ties: bool

    def __post_init__(self):
        for name in ("eigenvalues", "a"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.a.shape[1]

    def domain_blocks(self):
        return split_projections(self.a, self.layout)


def split_projections(a, layout):
    """Cut a stacked (P, K) projection into per-domain (p_d, K) blocks."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != layout.total_features:
        raise ValueError(
            f"projection must have {layout.total_features} rows, got shape {a.shape}"
        )
    return tuple(a[layout.col_slice(d)] for d in range(layout.num_domains))


def _inverse_sqrt_factor(g):
    """Return a function applying G^{-1/2} (with (G^{1/2})^T G^{1/2} = G)
    and the whitened-matrix builder. Cholesky first; spectral fallback when
    the matrix is positive definite but the factorization fails numerically.
    """
    try:
        r = scipy.linalg.cholesky(g, lower=False)
    except np.linalg.LinAlgError:
        r = None
    if r is not None:
        def whiten(h):
            s = scipy.linalg.solve_triangular(r, h, trans="T", lower=False)
            return scipy.linalg.solve_triangular(r, s.T, trans="T", lower=False).T

        def back(u):
            return scipy.linalg.solve_triangular(r, u, lower=False)

        return whiten, back
    lam, v = np.linalg.eigh(g)
    scale = max(abs(lam[0]), abs(lam[-1]), np.finfo(np.float64).tiny)
    if lam[0] <= 10.0 * np.finfo(np.float64).eps * scale:
        raise SingularGError(lam[0])
    inv_half = v / np.sqrt(lam)

    def whiten(h):
        return inv_half.T @ h @ inv_half

    def back(u):
        return inv_half @ u

    return whiten, back


def solve(pencil, k=None, zero_threshold=1e-10):
    """Top-K solution of the pencil: eigen-decompose the whitened matrix,
    map back, and fix column signs so the largest-magnitude entry of each
    column of A is positive.
    """
    p_total = pencil.layout.total_features
    if k is None:
        k = p_total
    if not 1 <= k <= p_total:
        raise ValueError(f"k must lie in [1, {p_total}], got {k}")
    whiten, back = _inverse_sqrt_factor(pencil.g)
    c = whiten(pencil.h)
    c = (c + c.T) / 2.0
    lam, u = np.linalg.eigh(c)
    lam = lam[::-1]
    u = u[:, ::-1]
    a = back(u[:, :k])
    # sign convention: the entry of largest magnitude in each column is positive
    flip = a[np.abs(a).argmax(axis=0), np.arange(k)] < 0
    a = np.where(flip, -a, a)
    return SpectralSolution(
        layout=pencil.layout,
        eigenvalues=lam,
        a=a,
        n_positive=int(np.count_nonzero(lam > zero_threshold)),
        has_ties=bool(np.any(np.abs(np.diff(lam)) <= TIE_THRESHOLD)),
    )


def check_constraint(solution, pencil):
    """Largest absolute deviation of A^T G A from the identity."""
    gram = solution.a.T @ pencil.g @ solution.a
    return float(np.abs(gram - np.eye(solution.k)).max())


def objective_identity_check(solution, pencil, block_data, graph):
    """Evaluate both sides of the objective identity.

    Left: the matching error of Y = X A plus tr(A^T (gamma_m L_M -
    gamma_w L_W) A). Right: K - tr(A^T H A). The two agree whenever the
    pencil was assembled from this data and weights and the constraint
    A^T G A = I_K holds.
    """
    from .embedding import embed
    from .evaluation import matching_error

    a = solution.a
    phi = matching_error(embed(block_data, a), graph)
    reg = pencil.gamma_m * pencil.l_m - pencil.gamma_w * pencil.l_w
    lhs = phi + float(np.trace(a.T @ reg @ a))
    rhs = solution.k - float(np.trace(a.T @ pencil.h @ a))
    return lhs, rhs
