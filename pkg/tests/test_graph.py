import itertools

import pytest

from probelab.graph import (
    OUT,
    PortedGraph,
    GraphFormatError,
    HalfEdgeLabeling,
    InfeasibleParameters,
    Problem,
    bfs_distances,
    complete_graph,
    cycle_graph,
    edge_coloring_labeling,
    from_edges,
    gen_edge_colored_tree,
    gen_random_regular,
    girth,
    graph_from_json,
    graph_to_json,
    is_connected,
    is_forest,
    labeling_from_json,
    labeling_to_json,
    power_graph,
    star_graph,
    verify_solution,
    with_random_ids,
)


def orient(g, tails):
    """tails maps an edge {a, b} (node indices) to its tail."""
    tail_of = {}
    for v, p, u, _ in g.edges():
        tail_of[(v, p)] = tails[frozenset((v, u))]
    return HalfEdgeLabeling.from_orientation(g, tail_of)


def test_ports_are_reciprocal():
    g = complete_graph(5)
    for v in range(g.n):
        for p in range(1, g.degree(v) + 1):
            u, q = g.neighbor(v, p)
            assert g.neighbor(u, q) == (v, p)


def test_validate_rejects_bad_ports():
    with pytest.raises(ValueError):
        PortedGraph(ids=(1, 2), adj=(((1, 1),), ((0, 2),)), delta=1).validate()


def test_json_roundtrip_keeps_fingerprint():
    g = gen_edge_colored_tree(30, 3, seed=4)
    h = graph_from_json(graph_to_json(g))
    assert h == g
    assert h.fingerprint == g.fingerprint


def test_truncated_graph_reports_line():
    text = graph_to_json(cycle_graph(5))
    with pytest.raises(GraphFormatError, match="line 1"):
        graph_from_json(text[: len(text) // 2])


def test_labeling_roundtrip():
    g = cycle_graph(6)
    sol = HalfEdgeLabeling.from_node_colors(g, [1, 2] * 3)
    assert labeling_from_json(labeling_to_json(sol)).labels == sol.labels


def test_k4_orientation_is_sinkless():
    g = complete_graph(4)
    # a cyclic order 0->1->2->3->0 plus the two diagonals
    tails = {frozenset((0, 1)): 0, frozenset((1, 2)): 1, frozenset((2, 3)): 2, frozenset((3, 0)): 3,
             frozenset((0, 2)): 0, frozenset((1, 3)): 1}
    assert verify_solution(g, orient(g, tails), Problem.sinkless())


def test_star_to_center_has_sink_at_center():
    g = star_graph(3)
    tails = {frozenset((0, leaf)): leaf for leaf in range(1, 4)}
    v = verify_solution(g, orient(g, tails), Problem.sinkless())
    assert not v
    assert v.node == 0 and v.reason == "sink"


def test_inconsistent_edge_is_rejected():
    g = cycle_graph(3)
    labels = {he: OUT for he in g.half_edges()}
    v = verify_solution(g, HalfEdgeLabeling(labels), Problem.sinkless(2))
    assert not v and "inconsistent" in v.reason


def test_foreign_alphabet_raises():
    g = cycle_graph(3)
    with pytest.raises(ValueError):
        verify_solution(g, HalfEdgeLabeling({he: "X" for he in g.half_edges()}), Problem.sinkless())


def test_coloring_verdicts():
    g = cycle_graph(4)
    assert verify_solution(g, HalfEdgeLabeling.from_node_colors(g, [1, 2, 1, 2]), Problem.coloring(2))
    assert not verify_solution(g, HalfEdgeLabeling.from_node_colors(g, [1, 1, 2, 2]), Problem.coloring(2))
    assert not verify_solution(g, HalfEdgeLabeling.from_node_colors(g, [1, 3, 1, 3]), Problem.coloring(2))


@pytest.mark.parametrize("seed", range(5))
def test_edge_colored_tree(seed):
    t = gen_edge_colored_tree(40, 4, seed)
    assert t.n == 40 and is_forest(t) and is_connected(t)
    assert max(t.degree(v) for v in range(t.n)) <= 4
    assert verify_solution(t, edge_coloring_labeling(t), Problem.edge_coloring())


@pytest.mark.parametrize("n,delta,g_target", [(64, 3, 5), (100, 4, 4), (60, 6, 3)])
def test_random_regular(n, delta, g_target):
    g = gen_random_regular(n, delta, g_target, seed=1)
    assert all(g.degree(v) == delta for v in range(g.n))
    assert girth(g) >= g_target
    assert g == gen_random_regular(n, delta, g_target, seed=1)


def test_random_regular_infeasible_girth():
    with pytest.raises(InfeasibleParameters):
        gen_random_regular(12, 3, 9, seed=0, attempts=2)


def test_random_ids_are_unique_and_in_range():
    g = with_random_ids(cycle_graph(50), 10**6, seed=3)
    assert len(set(g.ids)) == 50 and all(1 <= x <= 10**6 for x in g.ids)


def all_pairs(g):
    inf = float("inf")
    d = [[inf] * g.n for _ in range(g.n)]
    for v in range(g.n):
        d[v][v] = 0
    for v, _, u, _ in g.edges():
        d[v][u] = d[u][v] = min(d[v][u], 1)
    for k, i, j in itertools.product(range(g.n), repeat=3):
        if d[i][k] + d[k][j] < d[i][j]:
            d[i][j] = d[i][k] + d[k][j]
    return d


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("k", [1, 2, 3])
def test_power_graph_matches_floyd_warshall(seed, k):
    g = gen_random_regular(32, 3, 3, seed)
    d = all_pairs(g)
    pk = power_graph(g, k)
    for v in range(g.n):
        want = {u for u in range(g.n) if 0 < d[v][u] <= k}
        assert set(pk.neighbors(v)) == want


def test_bfs_limit():
    g = cycle_graph(10)
    assert bfs_distances(g, 0, limit=2) == {0: 0, 1: 1, 9: 1, 2: 2, 8: 2}


def test_degree_above_delta_fails_validation():
    with pytest.raises(ValueError, match="degree"):
        from_edges(3, [(0, 1), (0, 2)], delta=1).validate()
