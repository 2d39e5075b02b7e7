"""Synthetic multi-domain data around a shared 2-d grid of latent points.

Latent points are the g x g integer grid (1,1), (1,2), ..., (g,g) listed
row-major. Item i of domain d sits on grid point i mod g**2, so each domain
cycles through the grid with r_d full passes. Domain vectors are a random
linear image of the latent point plus isotropic noise, standardized per
column afterwards. Ground-truth matches link every cross-domain pair that
shares a grid point; observed matches keep each true edge independently
with a small probability.
"""

from dataclasses import dataclass

import numpy as np

from .data import DomainTable, standardize_columns
from .layout import DomainLayout
from .weights import WeightGraph

PROVENANCE_HEADER = "cdmca-synth v1"
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class SynthConfig:
    grid_side: int = 5
    dims: tuple = (10, 30, 100)
    replicates: tuple = (5, 10, 20)
    noise: float = 0.5
    link_prob: float = 0.02
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        object.__setattr__(self, "replicates", tuple(int(v) for v in self.replicates))
        if self.grid_side < 1:
            raise ValueError(f"grid_side must be positive, got {self.grid_side}")
        if not self.dims or len(self.dims) != len(self.replicates):
            raise ValueError("dims and replicates must list the same domains")
        if any(v < 1 for v in self.dims) or any(v < 1 for v in self.replicates):
            raise ValueError("dims and replicates must be positive")
        if self.noise < 0:
            raise ValueError(f"noise must be non-negative, got {self.noise}")
        if not 0 <= self.link_prob <= 1:
            raise ValueError(f"link_prob must lie in [0, 1], got {self.link_prob}")

    @property
    def num_domains(self):
        return len(self.dims)

    @property
    def items(self):
        g2 = self.grid_side**2
        return tuple(g2 * r for r in self.replicates)

    def layout(self):
        return DomainLayout(p=self.dims, n=self.items)


def latent_points(grid_side):
    """The g*g grid points in row-major order, 1-based coordinates."""
    q = np.arange(grid_side**2)
    return np.column_stack((q // grid_side + 1.0, q % grid_side + 1.0))


def grid_index(config, i):
    """Grid point assignment of item i (any domain cycles identically)."""
    return np.asarray(i) % config.grid_side**2


@dataclass(frozen=True)
class SynthDataset:
    config: SynthConfig
    layout: DomainLayout
    grid: np.ndarray
    maps: tuple
    tables: tuple
    true_graph: WeightGraph
    observed_graph: WeightGraph

    def latent_point(self, d, i):
        self.layout.check_domain(d)
        return self.grid[int(i) % self.config.grid_side**2]


def true_weights(config):
    """Unit weights on every cross-domain pair sharing a grid point."""
    layout = config.layout()
    g2 = config.grid_side**2
    rows, cols = [], []
    for d in range(config.num_domains):
        for e in range(d):
            r_d, r_e = config.replicates[d], config.replicates[e]
            # items q + g2*a (domain d) and q + g2*b (domain e) share point q
            a = np.repeat(np.arange(r_d), r_e)
            b = np.tile(np.arange(r_e), r_d)
            q = np.repeat(np.arange(g2), r_d * r_e)
            i = np.tile(g2 * a, g2) + q
            j = np.tile(g2 * b, g2) + q
            rows.append(layout.row_offsets[d] + i)
            cols.append(layout.row_offsets[e] + j)
    if not rows:
        return WeightGraph.empty(layout)
    row = np.concatenate(rows)
    return WeightGraph.from_global(layout, row, np.concatenate(cols), np.ones(row.size))


def sample_weights(true_graph, link_prob, rng):
    """Keep each true edge independently with probability link_prob."""
    keep = rng.random(true_graph.n_entries) < link_prob
    return true_graph.subset(keep)


def generate(config):
    """Draw one dataset. All randomness comes from one generator seeded with
    config.seed, consumed in a fixed order: per domain the map then the
    noise, then the edge subsampling.
    """
    rng = np.random.default_rng(config.seed)
    layout = config.layout()
    grid = latent_points(config.grid_side)
    maps = []
    tables = []
    for d in range(config.num_domains):
        n_d, p_d = layout.n[d], layout.p[d]
        b = rng.standard_normal((p_d, 2))
        latent = grid[grid_index(config, np.arange(n_d))]
        raw = latent @ b.T + rng.normal(0.0, config.noise, size=(n_d, p_d))
        maps.append(b)
        tables.append(standardize_columns(DomainTable(domain=d, values=raw)))
    truth = true_weights(config)
    observed = sample_weights(truth, config.link_prob, rng)
    return SynthDataset(
        config=config,
        layout=layout,
        grid=grid,
        maps=tuple(maps),
        tables=tuple(tables),
        true_graph=truth,
        observed_graph=observed,
    )


def save_provenance(path, config):
    with open(path, "w") as fh:
        fh.write(PROVENANCE_HEADER + "\n")
        fh.write(f"grid_side {config.grid_side}\n")
        fh.write("dims " + " ".join(str(v) for v in config.dims) + "\n")
        fh.write("replicates " + " ".join(str(v) for v in config.replicates) + "\n")
        fh.write(f"noise {FLOAT_FMT % config.noise}\n")
        fh.write(f"link_prob {FLOAT_FMT % config.link_prob}\n")
        fh.write(f"seed {config.seed}\n")


def load_provenance(path):
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != PROVENANCE_HEADER:
        raise ValueError(
            f"{path}: not a provenance file (expected first line {PROVENANCE_HEADER!r})"
        )
    fields = {}
    for line in lines[1:]:
        tag, _, rest = line.partition(" ")
        fields[tag] = rest
    try:
        return SynthConfig(
            grid_side=int(fields["grid_side"]),
            dims=tuple(int(v) for v in fields["dims"].split()),
            replicates=tuple(int(v) for v in fields["replicates"].split()),
            noise=float(fields["noise"]),
            link_prob=float(fields["link_prob"]),
            seed=int(fields["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed provenance file ({exc})") from None
