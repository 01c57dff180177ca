import pytest

from probelab.graph import cycle_graph, gen_edge_colored_tree, gen_random_regular, power_graph, with_random_ids
from probelab.local import (
    GraphView,
    LazyColoring,
    LazyMis,
    LocalAlgorithm,
    coloring_local_algorithm,
    lift_via_coloring,
    linial_schedule,
    log_star,
    logstar_coloring,
    mis_from_coloring,
    mis_local_algorithm,
    ProbeView,
    parnas_ron,
    power_degree_bound,
    simulate_local,
)
from probelab.probe import ModelConfig, ProbeAlgorithm, run_query


def ball_size_alg(r):
    return LocalAlgorithm(radius=r, decide=lambda ball, n, d: len(ball.degree), name=f"ball{r}")


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_parnas_ron_matches_flooding(r):
    g = gen_random_regular(30, 3, 3, seed=r)
    cfg = ModelConfig()
    want = simulate_local(ball_size_alg(r), g, cfg)
    alg = parnas_ron(ball_size_alg(r))
    for v in range(g.n):
        out, tr = run_query(alg, g, v, cfg)
        assert out == want[v]
        assert tr.probe_count <= 3 * sum(2**i for i in range(r))


def test_zero_radius_needs_no_probes():
    g = cycle_graph(9)
    _, tr = run_query(parnas_ron(ball_size_alg(0)), g, 4, ModelConfig())
    assert tr.probe_count == 0


def assert_distance_k_proper(g, colors, k):
    pk = power_graph(g, k)
    for v, _, u, _ in pk.edges():
        assert colors[g.ids[v]] != colors[g.ids[u]]


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("seed", range(3))
def test_logstar_coloring_is_proper_on_power_graph(k, seed):
    g = gen_random_regular(64, 3, 3, seed)
    res = logstar_coloring(g, k)
    assert_distance_k_proper(g, res.colors, k)
    D = power_degree_bound(3, k)
    assert res.num_colors <= D * D + 1
    assert all(0 <= c < res.num_colors for c in res.colors.values())


def test_coloring_with_large_ids():
    g = with_random_ids(gen_random_regular(50, 3, 3, 1), 10**9, seed=2)
    res = logstar_coloring(g, 1, id_range=10**9)
    assert_distance_k_proper(g, res.colors, 1)
    assert res.linial_rounds <= log_star(10**9) + 2


def test_linial_schedule_shrinks():
    sched = linial_schedule(10**12, 9)
    assert len(sched) >= 1
    assert linial_schedule(5, 9) == ()


def test_duplicate_ids_rejected():
    g = cycle_graph(4).with_ids([1, 1, 2, 3])
    with pytest.raises(ValueError):
        logstar_coloring(g, 1)


@pytest.mark.parametrize("k", [1, 2])
def test_lazy_coloring_matches_global(k):
    g = gen_random_regular(80, 3, 3, seed=7)
    res = logstar_coloring(g, k)
    lazy = LazyColoring(GraphView(g), k, g.n)
    assert {x: lazy.color(x) for x in g.ids} == res.colors


def test_coloring_probe_simulation_matches_global():
    g = gen_random_regular(60, 3, 3, seed=3)
    res = logstar_coloring(g, 2)
    alg = ProbeAlgorithm(lambda o, q: LazyColoring(ProbeView(o), 2, o.n).color(q))
    for v in range(0, g.n, 7):
        assert run_query(alg, g, v, ModelConfig())[0] == res.colors[g.ids[v]]


def test_local_coloring_algorithm_agrees():
    g = gen_edge_colored_tree(40, 3, seed=1)
    res = logstar_coloring(g, 1)
    alg = coloring_local_algorithm(1, g.n, g.delta)
    assert simulate_local(alg, g) == [res.colors[x] for x in g.ids]


@pytest.mark.parametrize("k", [1, 2])
def test_mis_is_maximal_and_independent(k):
    g = gen_random_regular(64, 3, 3, seed=k)
    res = logstar_coloring(g, k)
    mis = mis_from_coloring(g, res.colors, k=k, power=res.power)
    for x in g.ids:
        near = [y for y in res.power[x] if y in mis]
        if x in mis:
            assert not near
        else:
            assert near
    lazy = LazyMis(LazyColoring(GraphView(g), k, g.n))
    assert {x for x in g.ids if x in lazy} == mis


def test_mis_local_algorithm_agrees():
    g = gen_random_regular(30, 3, 3, seed=4)
    res = logstar_coloring(g, 1)
    mis = mis_from_coloring(g, res.colors, k=1, power=res.power)
    out = simulate_local(mis_local_algorithm(1, g.n, g.delta), g)
    assert {g.ids[v] for v, m in enumerate(out) if m} == mis


def test_lift_via_coloring_hides_big_ids():
    g = with_random_ids(gen_random_regular(40, 3, 3, 0), 10**8, seed=1)
    seen = []

    def small(oracle, q):
        seen.append(oracle.n)
        return oracle.query_id <= power_degree_bound(3, 2) ** 2 + 1

    alg = lift_via_coloring(small, n0=1, r=1, id_range=10**8)
    for v in range(0, g.n, 5):
        assert run_query(alg, g, v, ModelConfig())[0] is True
    assert set(seen) == {1}
