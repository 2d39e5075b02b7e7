"""Shared builders for randomized test instances."""

import numpy as np

from cdmca import (
    BlockDataMatrix,
    DomainLayout,
    DomainTable,
    SolverConfig,
    WeightGraph,
)


def random_layout(rng, max_domains=3, max_features=8, max_items=30):
    d_count = int(rng.integers(1, max_domains + 1))
    p = tuple(int(v) for v in rng.integers(1, max_features + 1, d_count))
    n = tuple(int(v) for v in rng.integers(2, max_items + 1, d_count))
    return DomainLayout(p=p, n=n)


def random_tables(rng, layout):
    return [
        DomainTable(domain=d, values=rng.standard_normal((layout.n[d], layout.p[d])))
        for d in range(layout.num_domains)
    ]


def random_block(rng, layout):
    return BlockDataMatrix.from_tables(random_tables(rng, layout))


def random_graph(rng, layout, max_extra_edges=40):
    """A positive-weight graph touching every domain, no self-matches."""
    n_total = layout.total_items
    rows, cols = [], []
    # guarantee every domain has at least one incident edge
    for d in range(layout.num_domains):
        if layout.num_domains > 1:
            e = (d + 1) % layout.num_domains
            rows.append(layout.global_row(d, 0))
            cols.append(layout.global_row(e, 0))
        else:
            rows.append(layout.global_row(0, 0))
            cols.append(layout.global_row(0, 1))
    extra = int(rng.integers(0, max_extra_edges + 1))
    a = rng.integers(0, n_total, extra)
    b = rng.integers(0, n_total, extra)
    keep = a != b
    rows += list(a[keep])
    cols += list(b[keep])
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    hi, lo = np.maximum(rows, cols), np.minimum(rows, cols)
    _, first = np.unique(hi * np.int64(n_total) + lo, return_index=True)
    hi, lo = hi[first], lo[first]
    weights = rng.uniform(0.5, 2.0, hi.size)
    return WeightGraph.from_global(layout, hi, lo, weights)


def random_instance(seed):
    """A solvable random problem: data, weights, and a config with a
    positive-definite constraint side.
    """
    rng = np.random.default_rng(seed)
    layout = random_layout(rng)
    block = random_block(rng, layout)
    graph = random_graph(rng, layout)
    config = SolverConfig(
        k=int(rng.integers(1, layout.total_features + 1)),
        gamma_m=float(rng.choice([0.01, 0.1, 1.0])),
        gamma_w=float(rng.choice([0.0, 0.005])),
        regularizer=str(rng.choice(["identity", "alpha-scaled"])),
    )
    return block, graph, config
