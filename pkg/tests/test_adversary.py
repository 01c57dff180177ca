import math

import pytest

from probelab.adversary import (
    BASELINES,
    LazyHost,
    baseline,
    birthday_bound,
    check_certificate,
    chromatic_number_exact,
    constant_coloring,
    deep_probe,
    duplicate_id_rate,
    fool_coloring_algorithm,
    gen_high_girth_chromatic,
    guessing_bound,
    guessing_game,
    host_degree,
    parity_guess,
)
from probelab.graph import InfeasibleParameters, complete_graph, cycle_graph, girth, is_forest


def test_chromatic_number():
    assert chromatic_number_exact(cycle_graph(7)) == 3
    assert chromatic_number_exact(cycle_graph(8)) == 2
    assert chromatic_number_exact(complete_graph(5)) == 5


def test_odd_cycle_core():
    assert gen_high_girth_chromatic(2, 1000, seed=0).n == 1001
    g = gen_high_girth_chromatic(2, 62, seed=0)
    assert g.n == 63 and girth(g) == 63
    assert chromatic_number_exact(g) == 3


def test_three_chromatic_core_is_not_three_colorable():
    g = gen_high_girth_chromatic(3, 40, seed=0)
    assert girth(g) >= 5
    assert chromatic_number_exact(g) == 4


def test_large_c_is_infeasible():
    with pytest.raises(InfeasibleParameters):
        gen_high_girth_chromatic(4, 100, 0)


def test_host_degree_reaches_id_space():
    core = cycle_graph(1001)
    d = host_degree(core, 1001, 1001, 2)
    reach = math.ceil(1001 / 4)
    assert (d - 1) ** reach >= 1001**2 and d >= 3
    with pytest.raises(InfeasibleParameters):
        host_degree(cycle_graph(9), 9, 9, 20)


def test_lazy_host_ports_are_reciprocal():
    host = LazyHost(cycle_graph(11), 4, 11, 3, seed=1)
    addrs = [(0, ()), (0, (2,)), (3, (3, 1))]
    for a in addrs:
        for p in range(1, 5):
            b, q = host.neighbor(a, p)
            assert host.neighbor(b, q) == (a, p)


def test_lazy_host_is_order_independent():
    a = LazyHost(cycle_graph(11), 4, 11, 3, seed=5)
    b = LazyHost(cycle_graph(11), 4, 11, 3, seed=5)
    b.id_of((7, (3,)))
    assert a.id_of((2, ())) == b.id_of((2, ()))
    assert a.neighbor((2, ()), 3) == b.neighbor((2, ()), 3)


@pytest.mark.parametrize("name", BASELINES)
def test_baselines_are_fooled_with_replayable_certificate(name):
    core = gen_high_girth_chromatic(2, 101, 0)
    alg = baseline(name, girth(core))
    rep = fool_coloring_algorithm(alg, 2, 101, 0, delta_h=3, core=core)
    assert not rep.escaped
    cert = rep.certificate
    assert cert is not None and cert.v != cert.w
    assert is_forest(cert.tree) and cert.tree.n == 101
    assert check_certificate(alg, cert) is None
    # the two nodes are adjacent in the certificate tree and agree
    assert cert.tree_w in cert.tree.neighbors(cert.tree_v)
    assert cert.transcripts[0].outcome == cert.transcripts[1].outcome == cert.color


def test_deep_probe_reaches_far_vertex():
    core = cycle_graph(9).with_ids(range(1, 10))
    rep = fool_coloring_algorithm(deep_probe(3), 2, 9, 0, delta_h=3, m=2, core=core)
    assert rep.escaped and rep.escape.event == "far-vertex"


def test_tampered_certificate_is_rejected():
    core = gen_high_girth_chromatic(2, 51, 0)
    rep = fool_coloring_algorithm(constant_coloring(), 2, 51, 0, delta_h=3, m=2, core=core)
    assert check_certificate(parity_guess(), rep.certificate) is not None


def test_birthday_bound_and_rate():
    assert birthday_bound(2, 4) == pytest.approx(0.25)
    rate = duplicate_id_rate(50, 10_000, 20_000, seed=1)
    assert 0.5 * birthday_bound(50, 10_000) <= rate <= 2 * birthday_bound(50, 10_000)


@pytest.mark.parametrize("strategy", ["prefix", "random", "port-guided"])
def test_guessing_game_within_bound(strategy):
    rate = guessing_game(1000, 10, 5, strategy, 5000, seed=2)
    assert rate <= 3 * guessing_bound(1000, 10, 5)


def test_guessing_bound_formula():
    assert guessing_bound(1000, 5, 10) == pytest.approx(0.05)
