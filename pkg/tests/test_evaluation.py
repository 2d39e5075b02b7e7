import numpy as np
import pytest

import helpers
from cdmca import (
    BlockDataMatrix,
    DomainLayout,
    DomainTable,
    Embedding,
    SolverConfig,
    SynthConfig,
    WeightGraph,
    ZeroVarianceError,
    ZeroWeightError,
    assemble_pencil,
    embed,
    matching_error,
    normalize_weights,
    per_pc_error,
    solve,
    true_weights,
    weighted_rescale,
)


def test_normalize_single_edge():
    # one edge of weight 3 counts twice in the full matrix: 3/6 = 0.5
    layout = DomainLayout(p=(1,), n=(3,))
    graph = WeightGraph.from_global(layout, [2], [0], [3.0])
    scaled = normalize_weights(graph)
    assert scaled.weight.tolist() == [0.5]
    assert scaled.total_weight == 1.0


def test_normalize_unit_edges():
    graph = true_weights(SynthConfig()).subset(np.arange(8750) < 175)
    scaled = normalize_weights(graph)
    assert np.allclose(scaled.weight, 1.0 / 350.0, atol=1e-18)


def test_normalize_is_idempotent():
    rng = np.random.default_rng(0)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    once = normalize_weights(graph)
    assert np.allclose(normalize_weights(once).weight, once.weight, atol=1e-15)


def test_normalize_rejects_zero_total():
    layout = DomainLayout(p=(1,), n=(3,))
    with pytest.warns(UserWarning, match="negative"):
        graph = WeightGraph.from_global(layout, [1, 2], [0, 0], [1.0, -1.0])
    with pytest.raises(ZeroWeightError):
        normalize_weights(graph)


def test_matching_error_zero_when_matched_items_coincide():
    layout = DomainLayout(p=(1, 1), n=(2, 2))
    emb = Embedding(layout=layout, values=np.array([[1.0], [2.0], [1.0], [2.0]]))
    graph = WeightGraph.from_pairs(layout, [1, 1], [0, 1], [0, 0], [0, 1], [1.0, 1.0])
    assert matching_error(emb, graph) == 0.0


def test_matching_error_single_pair():
    layout = DomainLayout(p=(1, 1), n=(1, 1))
    emb = Embedding(layout=layout, values=np.array([[0.0], [2.0]]))
    graph = WeightGraph.from_pairs(layout, [1], [0], [0], [0], [0.5])
    assert matching_error(emb, graph) == pytest.approx(2.0)


def test_matching_error_quadratic_in_scale():
    rng = np.random.default_rng(1)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    emb = Embedding(layout=layout, values=rng.standard_normal((layout.total_items, 3)))
    base = matching_error(emb, graph)
    scaled = Embedding(layout=layout, values=3.0 * emb.values)
    assert matching_error(scaled, graph) == pytest.approx(9.0 * base)
    assert matching_error(emb, graph.scaled(2.0)) == pytest.approx(2.0 * base)


def test_matching_error_trace_oracle():
    # error equals tr(Y^T (M - W) Y) on the dense matrices
    for seed in range(30):
        rng = np.random.default_rng(seed)
        layout = helpers.random_layout(rng)
        graph = helpers.random_graph(rng, layout)
        y = rng.standard_normal((layout.total_items, 2))
        emb = Embedding(layout=layout, values=y)
        w = graph.to_dense()
        m = np.diag(w.sum(axis=1))
        oracle = float(np.trace(y.T @ (m - w) @ y))
        assert matching_error(emb, graph) == pytest.approx(oracle, abs=1e-9)


def test_matching_error_ignores_self_matches():
    layout = DomainLayout(p=(1,), n=(3,))
    rng = np.random.default_rng(2)
    emb = Embedding(layout=layout, values=rng.standard_normal((3, 2)))
    plain = WeightGraph.from_global(layout, [2], [0], [1.0])
    looped = WeightGraph.from_global(layout, [2, 1], [0, 1], [1.0, 5.0])
    assert matching_error(emb, looped) == pytest.approx(matching_error(emb, plain))


def test_matching_error_checks_item_counts():
    layout = DomainLayout(p=(1,), n=(3,))
    emb = Embedding(layout=layout, values=np.zeros((3, 1)))
    other = WeightGraph.empty(DomainLayout(p=(1,), n=(4,)))
    with pytest.raises(ValueError, match="items"):
        matching_error(emb, other)


def test_per_pc_components_sum_to_total():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        layout = helpers.random_layout(rng)
        graph = helpers.random_graph(rng, layout)
        emb = Embedding(
            layout=layout, values=rng.standard_normal((layout.total_items, 4))
        )
        report = per_pc_error(emb, graph)
        assert report.per_pc.shape == (4,)
        assert report.total == pytest.approx(matching_error(emb, graph), abs=1e-9)
        assert report.per_pc.sum() == pytest.approx(report.total)
        assert report.weight_sum == graph.total_weight
        assert report.rescale_mode == "none"


def test_per_pc_single_component():
    rng = np.random.default_rng(3)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    emb = Embedding(layout=layout, values=rng.standard_normal((layout.total_items, 1)))
    report = per_pc_error(emb, graph)
    assert report.per_pc[0] == pytest.approx(matching_error(emb, graph))


def test_per_pc_constant_column_contributes_nothing():
    rng = np.random.default_rng(4)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    values = rng.standard_normal((layout.total_items, 2))
    values[:, 1] = 7.0
    report = per_pc_error(Embedding(layout=layout, values=values), graph)
    assert report.per_pc[1] == 0.0


# -- degree-weighted rescaling -------------------------------------------------


def test_weighted_rescale_sets_unit_moments():
    rng = np.random.default_rng(5)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    emb = Embedding(
        layout=layout, values=rng.standard_normal((layout.total_items, 3)) * 4.0
    )
    scaled = weighted_rescale(emb, graph)
    m = graph.degrees()
    moments = (m[:, None] * scaled.values**2).sum(axis=0) / m.sum()
    assert np.allclose(moments, 1.0, atol=1e-12)
    assert scaled.rescale_mode == "weighted"
    assert np.allclose(scaled.values * scaled.rescale_factors, emb.values, atol=1e-12)


def test_weighted_rescale_uniform_degrees_use_plain_mean_square():
    layout = DomainLayout(p=(1, 1), n=(2, 2))
    values = np.array([[1.0], [2.0], [3.0], [4.0]])
    emb = Embedding(layout=layout, values=values)
    # a 4-cycle gives every item degree 2
    graph = WeightGraph.from_pairs(
        layout, [1, 1, 1, 1], [0, 1, 0, 1], [0, 0, 0, 0], [0, 1, 1, 0],
        [1.0, 1.0, 1.0, 1.0],
    )
    scaled = weighted_rescale(emb, graph)
    expected = values / np.sqrt((values**2).mean())
    assert np.allclose(scaled.values, expected, atol=1e-12)


def test_weighted_rescale_rejects_zero_moment():
    layout = DomainLayout(p=(1,), n=(3,))
    graph = WeightGraph.from_global(layout, [2], [0], [1.0])
    # only the zero-degree item is nonzero, so the weighted moment vanishes
    emb = Embedding(layout=layout, values=np.array([[0.0], [9.0], [0.0]]))
    with pytest.raises(ZeroVarianceError, match="moment"):
        weighted_rescale(emb, graph)


def test_weighted_rescale_of_fit_is_identity_on_normalized_weights():
    # at gamma = 0 the constraint makes every degree-weighted moment one
    rng = np.random.default_rng(6)
    layout = DomainLayout(p=(2, 2), n=(8, 8))
    block = helpers.random_block(rng, layout)
    n = layout.total_items
    hi, lo = np.triu_indices(n, k=1)
    graph = normalize_weights(
        WeightGraph.from_global(layout, lo, hi, rng.uniform(0.5, 2.0, hi.size))
    )
    solution = solve(assemble_pencil(block, graph, SolverConfig(k=4)), 4)
    emb = embed(block, solution.a)
    scaled = weighted_rescale(emb, graph)
    assert np.allclose(scaled.rescale_factors, 1.0, atol=1e-9)
    # per-component error then decreases exactly as the eigenvalue grows
    report = per_pc_error(scaled, graph)
    assert np.allclose(report.per_pc, 1.0 - solution.eigenvalues[:4], atol=1e-9)
    assert np.all(np.diff(report.per_pc) >= -1e-12)
