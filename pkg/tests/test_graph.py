import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lossless_expanders.errors import GraphFormatError, ValidationError
from lossless_expanders.graph import (
    BipartiteGraph,
    VertexSet,
    WeightedGraph,
    complete_bipartite,
    edge_weight_between,
    neighborhood,
    perfect_matching,
    validate_biregular,
    with_rows,
)
from lossless_expanders.graphio import format_graph, parse_graph, read_graph, write_graph

from conftest import edge_scan_neighborhood, random_left_regular


def test_neighborhood_of_empty_set():
    assert neighborhood(complete_bipartite(3, 2), []).indices == ()


def test_neighborhood_matching_is_identity():
    assert neighborhood(perfect_matching(4), {0, 2}).indices == (0, 2)


def test_neighborhood_matches_edge_scan():
    g = random_left_regular(10, 12, 3, seed=7)
    s = [1, 4, 9]
    assert list(neighborhood(g, s).indices) == edge_scan_neighborhood(g, s)


def test_neighborhood_out_of_range():
    with pytest.raises(ValidationError):
        neighborhood(perfect_matching(3), [3])


def test_vertex_set_rejects_unsorted():
    with pytest.raises(ValidationError):
        VertexSet("left", (2, 1))
    assert VertexSet.of([3, 1, 3]).indices == (1, 3)


def test_edge_weight_single_edge_counts_both_directions():
    g = WeightedGraph(2, {(0, 1): 1})
    assert edge_weight_between(g, [0, 1], [0, 1]) == 2


def test_edge_weight_disjoint():
    g = WeightedGraph(4, {(0, 1): 3})
    assert edge_weight_between(g, [2], [3]) == 0
    assert edge_weight_between(g, [2, 3], [0, 1]) == 0


def test_edge_weight_weighted_k3():
    # 6 ordered pairs, weight 4 each
    assert edge_weight_between(WeightedGraph.complete(3, 4), [0, 1, 2], [0, 1, 2]) == 24


def test_weighted_graph_invariants():
    with pytest.raises(ValidationError):
        WeightedGraph(3, {(1, 1): 2})
    with pytest.raises(ValidationError):
        WeightedGraph(3, {(0, 1): 1, (1, 0): 2})
    g = WeightedGraph(3, {(2, 0): 5})
    assert g.weight(0, 2) == g.weight(2, 0) == 5
    assert g.weight(1, 1) == 0


def test_validate_complete_bipartite():
    rep = validate_biregular(complete_bipartite(4, 3), 3, 4)
    assert rep.ok


def test_validate_matching():
    assert validate_biregular(perfect_matching(5), 1, 1)


def test_validate_reports_deficient_vertex():
    g = complete_bipartite(4, 3)
    g2 = with_rows(g, {2: (0, 2)})  # delete edge (2, 1)
    rep = validate_biregular(g2, 3, 4)
    assert not rep
    assert rep.violation == {"side": "left", "vertex": 2, "degree": 2}
    rep_right = validate_biregular(g2, 2, 4)
    assert rep_right.violation["side"] == "left" and rep_right.violation["vertex"] == 0


def test_simple_graph_rejects_parallel_edge():
    with pytest.raises(ValidationError):
        BipartiteGraph(1, 2, ((0, 0),))
    g = BipartiteGraph(1, 2, ((0, 0),), multigraph=True)
    assert g.edge_count == 2
    assert g.biadjacency[0, 0] == 2


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.integers(1, 4),
    st.integers(0, 10**6),
    st.lists(st.integers(0, 11), max_size=6),
)
def test_handshake_and_neighborhood_bound(n_left, n_right, d, seed, s):
    d = min(d, n_right)
    g = random_left_regular(n_left, n_right, d, seed)
    assert g.left_degrees.sum() == g.right_degrees.sum() == g.edge_count
    s = [u for u in s if u < n_left]
    assert len(neighborhood(g, s)) <= min(n_right, d * len(set(s)))


# serialization


def test_round_trip_file(tmp_path, fixtures):
    src = (fixtures / "complete_4_3.txt").read_text()
    g = parse_graph(src)
    out = tmp_path / "g.txt"
    write_graph(g, out)
    assert read_graph(out) == g
    assert out.read_text() == src


def test_header_complete_bipartite(fixtures):
    g = read_graph(fixtures / "complete_4_3.txt")
    assert g == complete_bipartite(4, 3)


def test_round_trip_weighted(tmp_path):
    g = WeightedGraph(4, {(0, 1): 2, (1, 3): 5})
    write_graph(g, tmp_path / "w.txt")
    assert read_graph(tmp_path / "w.txt") == g


@pytest.mark.parametrize(
    "text",
    [
        "bipartite 2 2\n0 0\n",
        "bipartite 2 2 1\n0 2\n",
        "bipartite 2 2 2\n0 0\n",
        "bipartite 2 2 2\n0 0\n0 0\n",
        "graph 2 2 0\n",
        "weighted 3 1\n1 0 4\n",
        "bipartite 2 2 1\n0 x\n",
        "",
    ],
    ids=["short-header", "endpoint", "count", "duplicate", "kind", "order", "nonint", "empty"],
)
def test_malformed_input(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


def test_multigraph_read_allows_duplicates():
    g = parse_graph("bipartite 1 1 2\n0 0\n0 0\n", multigraph=True)
    assert g.edge_count == 2


def test_comments_and_canonical_order():
    g = parse_graph("# hdr\nbipartite 2 3 3\n1 0 # trailing\n0 2\n0 1\n")
    assert format_graph(g) == "bipartite 2 3 3\n0 1\n0 2\n1 0\n"


def test_content_hash_stable():
    a = random_left_regular(8, 8, 2, seed=1)
    b = BipartiteGraph(8, 8, tuple(tuple(reversed(r)) for r in a.adjacency))
    assert a.content_hash() == b.content_hash()
    assert np.array_equal(a.adjacency_array, b.adjacency_array)
