import numpy as np
import pytest

import helpers
from cdmca import (
    BlockDataMatrix,
    DomainLayout,
    DomainTable,
    DuplicateEdgeError,
    OutOfRangeError,
    SynthConfig,
    WeightGraph,
    degree_matrix,
    edge_coding,
    load_weights,
    mcca_weights,
    save_weights,
    true_weights,
    validate_weights,
)


def two_domain_layout():
    return DomainLayout(p=(2, 2), n=(3, 4))


def test_canonical_orientation_and_order():
    layout = two_domain_layout()
    # given in reversed orientation and shuffled order
    graph = WeightGraph.from_pairs(
        layout, [0, 0], [2, 0], [1, 1], [3, 0], [1.0, 2.0]
    )
    assert np.all(graph.row > graph.col)
    assert graph.row.tolist() == sorted(graph.row.tolist())
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    assert dom_a.tolist() == [1, 1]
    assert dom_b.tolist() == [0, 0]


def test_duplicate_pair_rejected_even_when_reversed():
    layout = two_domain_layout()
    with pytest.raises(DuplicateEdgeError):
        WeightGraph.from_pairs(
            layout, [1, 0], [2, 1], [0, 1], [1, 2], [1.0, 1.0]
        )


def test_out_of_range_index_rejected():
    layout = two_domain_layout()
    with pytest.raises(OutOfRangeError):
        WeightGraph.from_pairs(layout, [1], [4], [0], [0], [1.0])
    with pytest.raises(OutOfRangeError):
        WeightGraph.from_global(layout, [7], [0], [1.0])


def test_zero_and_non_finite_weights_rejected():
    layout = two_domain_layout()
    with pytest.raises(ValueError, match="omitted"):
        WeightGraph.from_pairs(layout, [1], [0], [0], [0], [0.0])
    with pytest.raises(ValueError, match="finite"):
        WeightGraph.from_pairs(layout, [1], [0], [0], [0], [np.nan])


def test_negative_weight_warns():
    layout = two_domain_layout()
    with pytest.warns(UserWarning, match="negative"):
        WeightGraph.from_pairs(layout, [1], [0], [0], [0], [-1.0])


def test_degrees_empty_graph():
    layout = two_domain_layout()
    assert not WeightGraph.empty(layout).degrees().any()


def test_degrees_single_edge():
    layout = DomainLayout(p=(1,), n=(3,))
    graph = WeightGraph.from_global(layout, [2], [0], [2.0])
    assert graph.degrees().tolist() == [2.0, 0.0, 2.0]
    dm = degree_matrix(graph)
    assert dm.block(0).tolist() == [2.0, 0.0, 2.0]
    assert dm.total == 4.0


def test_degrees_match_dense_oracle():
    for seed in range(60):
        rng = np.random.default_rng(seed)
        layout = helpers.random_layout(rng)
        graph = helpers.random_graph(rng, layout)
        oracle = graph.to_dense().sum(axis=1)
        assert np.abs(graph.degrees() - oracle).max() < 1e-12


def test_degrees_invariant_under_input_order():
    layout = two_domain_layout()
    entries = [(1, 0, 0, 0, 1.5), (1, 1, 0, 2, 2.5), (0, 1, 0, 0, 0.5)]
    builds = []
    for order in (entries, entries[::-1]):
        graph = WeightGraph.from_pairs(
            layout,
            [e[0] for e in order], [e[1] for e in order],
            [e[2] for e in order], [e[3] for e in order],
            [e[4] for e in order],
        )
        builds.append(graph)
    assert np.array_equal(builds[0].degrees(), builds[1].degrees())
    assert np.array_equal(builds[0].row, builds[1].row)


def test_total_weight_counts_both_triangles():
    layout = DomainLayout(p=(1,), n=(3,))
    graph = WeightGraph.from_global(layout, [2], [0], [3.0])
    assert graph.total_weight == 6.0
    # self-matches enter once
    withdiag = WeightGraph.from_global(layout, [2, 1], [0, 1], [3.0, 4.0])
    assert withdiag.total_weight == 10.0


def test_subset_and_scaled():
    layout = two_domain_layout()
    graph = WeightGraph.from_pairs(
        layout, [1, 1, 1], [0, 1, 2], [0, 0, 0], [0, 1, 2], [1.0, 2.0, 3.0]
    )
    assert graph.scaled(0.5).weight.tolist() == [0.5, 1.0, 1.5]
    sub = graph.subset(np.array([True, False, True]))
    assert sub.n_entries == 2
    assert sub.weight.tolist() == [1.0, 3.0]


def test_validate_accepts_benchmark_scale_graph():
    graph = true_weights(SynthConfig())
    trimmed = graph.subset(np.arange(graph.n_entries) < 175)
    assert trimmed.n_entries == 175
    assert validate_weights(trimmed) is trimmed


# -- uniform coupling ---------------------------------------------------------


def test_mcca_two_domains():
    layout = DomainLayout(p=(1, 1), n=(2, 2))
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    graph = mcca_weights(c, 2, layout)
    assert graph.n_entries == 2
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    assert dom_a.tolist() == [1, 1] and dom_b.tolist() == [0, 0]
    assert idx_a.tolist() == idx_b.tolist() == [0, 1]


def test_mcca_zero_coefficients_empty():
    layout = DomainLayout(p=(1, 1), n=(2, 2))
    assert mcca_weights(np.zeros((2, 2)), 2, layout).n_entries == 0


def test_mcca_degrees_equal_coefficient_row_sums():
    layout = DomainLayout(p=(1, 2, 1), n=(4, 4, 4))
    c = 1.0 - np.eye(3)
    graph = mcca_weights(c, 4, layout)
    assert np.all(graph.degrees() == 2.0)
    # with self-coupling the diagonal contributes once
    c_full = np.ones((3, 3))
    graph = mcca_weights(c_full, 4, layout)
    assert np.all(graph.degrees() == 3.0)


def test_mcca_rejects_asymmetric_and_unequal_n():
    layout = DomainLayout(p=(1, 1), n=(2, 2))
    with pytest.raises(ValueError, match="symmetric"):
        mcca_weights(np.array([[0.0, 1.0], [2.0, 0.0]]), 2, layout)
    uneven = DomainLayout(p=(1, 1), n=(2, 3))
    with pytest.raises(ValueError, match="equal item counts"):
        mcca_weights(np.array([[0.0, 1.0], [1.0, 0.0]]), 2, uneven)


# -- edge coding --------------------------------------------------------------


def test_edge_coding_empty():
    layout = two_domain_layout()
    rng = np.random.default_rng(0)
    block = helpers.random_block(rng, layout)
    coding = edge_coding(block, WeightGraph.empty(layout))
    assert coding.rows.shape == (0, layout.total_features)


def test_edge_coding_single_row_is_sum_of_augments():
    layout = two_domain_layout()
    rng = np.random.default_rng(1)
    block = helpers.random_block(rng, layout)
    graph = WeightGraph.from_pairs(layout, [1], [2], [0], [1], [1.5])
    coding = edge_coding(block, graph)
    expected = block.augmented_row(1, 2) + block.augmented_row(0, 1)
    assert np.array_equal(coding.rows[0], expected)
    assert coding.weights.tolist() == [1.5]


def test_edge_coding_rejects_self_matches():
    layout = two_domain_layout()
    rng = np.random.default_rng(2)
    block = helpers.random_block(rng, layout)
    graph = WeightGraph.from_pairs(layout, [1, 1], [0, 1], [1, 0], [0, 1], [1.0, 1.0])
    with pytest.raises(ValueError, match="self-match"):
        edge_coding(block, graph)


def test_edge_coding_identity():
    # coded^T diag(w) coded == X^T M X + X^T W X on random instances
    for seed in range(40):
        rng = np.random.default_rng(seed)
        layout = helpers.random_layout(rng)
        block = helpers.random_block(rng, layout)
        graph = helpers.random_graph(rng, layout)
        coding = edge_coding(block, graph)
        lhs = coding.rows.T @ (coding.weights[:, None] * coding.rows)
        x = block.to_dense()
        w = graph.to_dense()
        m = np.diag(w.sum(axis=1))
        rhs = x.T @ m @ x + x.T @ w @ x
        denom = max(1.0, np.linalg.norm(rhs))
        assert np.linalg.norm(lhs - rhs) / denom < 1e-10


# -- file round trip ----------------------------------------------------------


def test_weight_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    layout = helpers.random_layout(rng)
    graph = helpers.random_graph(rng, layout)
    path = tmp_path / "w.csv"
    save_weights(path, graph)
    back = load_weights(path, layout)
    assert np.array_equal(back.row, graph.row)
    assert np.array_equal(back.col, graph.col)
    assert np.array_equal(back.weight, graph.weight)


def test_weight_csv_header_checked(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("a,b,c\n")
    with pytest.raises(ValueError, match="header"):
        load_weights(path, two_domain_layout())


def test_weight_csv_canonicalizes_orientation(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text(
        "domain_a,index_a,domain_b,index_b,weight\n0,1,1,2,0.25\n"
    )
    graph = load_weights(path, two_domain_layout())
    dom_a, idx_a, dom_b, idx_b = graph.pair_arrays()
    assert (dom_a[0], idx_a[0], dom_b[0], idx_b[0]) == (1, 2, 0, 1)
    assert graph.weight[0] == 0.25


def test_weight_csv_rejects_conflicting_duplicates(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text(
        "domain_a,index_a,domain_b,index_b,weight\n"
        "0,1,1,2,0.25\n"
        "1,2,0,1,0.5\n"
    )
    with pytest.raises(DuplicateEdgeError):
        load_weights(path, two_domain_layout())
