"""Fitted-model container, the fit pipeline, and the versioned text format.

A model holds everything needed to map new raw domain vectors into the
common space: the layout, the per-column standardization of the training
tables, the fit hyperparameters, all eigenvalues, and the per-domain
projection blocks. Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from dataclasses import dataclass

import numpy as np

from .data import BlockDataMatrix, standardize_columns
from .layout import DomainLayout
from .solver import SolverConfig, assemble_pencil, solve, split_projections

MODEL_HEADER = "cdmca-model v1"
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class Model:
    layout: DomainLayout
    k: int
    gamma_m: float
    gamma_w: float
    regularizer: str
    alpha: tuple
    eigenvalues: np.ndarray
    mean: tuple
    scale: tuple
    projections: tuple

    def __post_init__(self):
        lam = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        if lam.shape != (self.layout.total_features,):
            raise ValueError("model must record one eigenvalue per stacked feature")
        lam.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        for name in ("mean", "scale"):
            arrs = tuple(
                np.ascontiguousarray(a, dtype=np.float64) for a in getattr(self, name)
            )
            if len(arrs) != self.layout.num_domains or any(
                a.shape != (self.layout.p[d],) for d, a in enumerate(arrs)
            ):
                raise ValueError(f"{name} must hold one vector of length p_d per domain")
            object.__setattr__(self, name, arrs)
        projs = tuple(
            np.ascontiguousarray(a, dtype=np.float64) for a in self.projections
        )
        if len(projs) != self.layout.num_domains or any(
            a.shape != (self.layout.p[d], self.k) for d, a in enumerate(projs)
        ):
            raise ValueError("projections must hold one (p_d, k) block per domain")
        object.__setattr__(self, "projections", projs)
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))

    @property
    def full_projection(self):
        return np.vstack(self.projections)


def fit(tables, graph, config, standardize=True):
    """Standardize the tables, assemble the pencil, solve, and package a model.

    The recorded mean/scale map the given tables into the fitted coordinates;
    with standardize=False they are identity (zero shift, unit divisor).
    """
    tables = sorted(tables, key=lambda t: t.domain)
    if standardize:
        tables = [standardize_columns(t) for t in tables]
    block = BlockDataMatrix.from_tables(tables)
    if block.layout.p != graph.layout.p or block.layout.n != graph.layout.n:
        raise ValueError(
            f"tables imply layout p={block.layout.p}, n={block.layout.n}; "
            f"weights use p={graph.layout.p}, n={graph.layout.n}"
        )
    pencil = assemble_pencil(block, graph, config)
    solution = solve(pencil, config.k, zero_threshold=config.zero_threshold)
    p = block.layout.p
    mean = tuple(
        t.mean if t.mean is not None else np.zeros(p[d])
        for d, t in enumerate(tables)
    )
    scale = tuple(
        t.scale if t.scale is not None else np.ones(p[d])
        for d, t in enumerate(tables)
    )
    alpha = pencil.alpha if pencil.alpha is not None else ()
    model = Model(
        layout=block.layout,
        k=solution.k,
        gamma_m=float(config.gamma_m),
        gamma_w=float(config.gamma_w),
        regularizer=config.regularizer,
        alpha=alpha,
        eigenvalues=solution.eigenvalues,
        mean=mean,
        scale=scale,
        projections=split_projections(solution.a, block.layout),
    )
    return model, solution


def _fmt_vector(values):
    return " ".join(FLOAT_FMT % v for v in np.asarray(values, dtype=np.float64))


def save_model(path, model):
    with open(path, "w") as fh:
        fh.write(MODEL_HEADER + "\n")
        fh.write("p " + " ".join(str(v) for v in model.layout.p) + "\n")
        fh.write("n " + " ".join(str(v) for v in model.layout.n) + "\n")
        fh.write(f"k {model.k}\n")
        fh.write(f"gamma_m {FLOAT_FMT % model.gamma_m}\n")
        fh.write(f"gamma_w {FLOAT_FMT % model.gamma_w}\n")
        fh.write(f"regularizer {model.regularizer}\n")
        fh.write("alpha" + ("" if not model.alpha else " " + _fmt_vector(model.alpha)) + "\n")
        fh.write("eigenvalues " + _fmt_vector(model.eigenvalues) + "\n")
        for d in range(model.layout.num_domains):
            fh.write(f"mean {d} " + _fmt_vector(model.mean[d]) + "\n")
            fh.write(f"scale {d} " + _fmt_vector(model.scale[d]) + "\n")
        for d in range(model.layout.num_domains):
            fh.write(f"projection {d}\n")
            for row in model.projections[d]:
                fh.write(_fmt_vector(row) + "\n")


def load_model(path):
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != MODEL_HEADER:
        raise ValueError(
            f"{path}: not a model file (expected first line {MODEL_HEADER!r})"
        )

    fields = {}
    mean = {}
    scale = {}
    projections = {}
    pos = 1
    try:
        while pos < len(lines):
            line = lines[pos]
            pos += 1
            if not line.strip():
                continue
            tag, _, rest = line.partition(" ")
            if tag in ("p", "n"):
                fields[tag] = tuple(int(v) for v in rest.split())
            elif tag == "k":
                fields["k"] = int(rest)
            elif tag in ("gamma_m", "gamma_w"):
                fields[tag] = float(rest)
            elif tag == "regularizer":
                fields[tag] = rest.strip()
            elif tag == "alpha":
                fields[tag] = tuple(float(v) for v in rest.split())
            elif tag == "eigenvalues":
                fields[tag] = np.array([float(v) for v in rest.split()])
            elif tag in ("mean", "scale"):
                d_str, _, vals = rest.partition(" ")
                target = mean if tag == "mean" else scale
                target[int(d_str)] = np.array([float(v) for v in vals.split()])
            elif tag == "projection":
                d = int(rest)
                p_d = fields["p"][d]
                rows = [
                    [float(v) for v in lines[pos + r].split()] for r in range(p_d)
                ]
                pos += p_d
                projections[d] = np.array(rows)
            else:
                raise ValueError(f"unknown record {tag!r}")
    except (ValueError, KeyError, IndexError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from None

    try:
        layout = DomainLayout(p=fields["p"], n=fields["n"])
        d_count = layout.num_domains
        return Model(
            layout=layout,
            k=fields["k"],
            gamma_m=fields["gamma_m"],
            gamma_w=fields["gamma_w"],
            regularizer=fields["regularizer"],
            alpha=fields["alpha"],
            eigenvalues=fields["eigenvalues"],
            mean=tuple(mean[d] for d in range(d_count)),
            scale=tuple(scale[d] for d in range(d_count)),
            projections=tuple(projections[d] for d in range(d_count)),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: model file is missing record {exc}") from None
