import re

import pytest

from probelab.graph import cycle_graph, gen_random_regular, path_graph
from probelab.probe import (
    FarProbeViolation,
    ModelConfig,
    PortOutOfRange,
    ProbeAlgorithm,
    RandomTape,
    bfs_algorithm,
    constant_algorithm,
    extract_witness,
    replay,
    run_query,
    same_steps,
)

PROBE_LINE = re.compile(r"^probe -?\d+ \d+ -> -?\d+ \d+ \S+$")


def test_model_config_defaults_and_checks():
    assert ModelConfig().far_probes is True
    assert ModelConfig(model="VOLUME").far_probes is False
    with pytest.raises(ValueError):
        ModelConfig(model="VOLUME", far_probes=True)
    with pytest.raises(ValueError):
        ModelConfig(model="nope")


def test_id_ranges():
    assert ModelConfig().id_range(100) == 100
    assert ModelConfig(id_space="polynomial", id_exponent=3).id_range(10) == 1000
    assert ModelConfig(id_space="exponential").id_range(10) == 1024


def test_advertised_n_overrides_graph_size():
    g = cycle_graph(8)
    assert ModelConfig(advertised_n=1000).n_for(g) == 1000


def test_constant_algorithm_uses_no_probes():
    out, tr = run_query(constant_algorithm("a"), cycle_graph(5), 2, ModelConfig())
    assert out == "a" and tr.probe_count == 0
    assert tr.dump() == "output a probes 0\n"


def test_transcript_dump_format():
    g = gen_random_regular(20, 3, 3, seed=2)
    out, tr = run_query(bfs_algorithm(2), g, 0, ModelConfig())
    lines = tr.dump().splitlines()
    assert all(PROBE_LINE.match(x) for x in lines[:-1])
    assert lines[-1] == f"output {out} probes {tr.probe_count}"


def test_bfs_counts_ball():
    g = path_graph(7)
    out, _ = run_query(bfs_algorithm(2), g, 3, ModelConfig())
    assert out == 5


def test_budget_exhaustion_fails_query():
    g = cycle_graph(30)
    out, tr = run_query(bfs_algorithm(10), g, 0, ModelConfig(probe_budget=5))
    assert out is None and tr.failed and tr.probe_count == 5
    assert tr.dump().splitlines()[-1].startswith("output fail:")


def test_volume_forbids_far_probes():
    g = cycle_graph(10)

    def jump(oracle, q):
        return oracle.probe(g.ids[5], 1).id

    with pytest.raises(FarProbeViolation):
        run_query(ProbeAlgorithm(jump), g, 0, ModelConfig(model="VOLUME"))
    out, _ = run_query(ProbeAlgorithm(jump), g, 0, ModelConfig(model="LCA"))
    assert out == g.ids[g.neighbor(5, 1)[0]]


def test_port_out_of_range():
    g = path_graph(3)
    with pytest.raises(PortOutOfRange):
        run_query(ProbeAlgorithm(lambda o, q: o.probe(q, 2)), g, 0, ModelConfig())


def test_alphabet_is_enforced():
    from probelab.probe import ProbeError

    with pytest.raises(ProbeError):
        run_query(ProbeAlgorithm(lambda o, q: "z", alphabet=["a"]), cycle_graph(3), 0, ModelConfig())


def test_shared_tape_is_identical_across_queries():
    g = cycle_graph(12)
    alg = ProbeAlgorithm(lambda o, q: o.tape(q).bits(32))
    cfg = ModelConfig(seed=9)
    outs = {run_query(alg, g, v, cfg)[0] for v in range(g.n)}
    assert len(outs) == 1


def test_private_tapes_differ_per_node():
    t1, t2 = RandomTape(3, 1), RandomTape(3, 2)
    assert t1.bits(64) != t2.bits(64)
    assert RandomTape(3, 1).word(5) == t1.word(5)


def test_witness_replays_transcripts():
    g = gen_random_regular(40, 3, 3, seed=5)
    cfg = ModelConfig()
    alg = bfs_algorithm(2)
    trs = [run_query(alg, g, v, cfg)[1] for v in (0, 7)]
    w = extract_witness(trs, g)
    assert w.graph.n < g.n
    for tr in trs:
        _, again = replay(alg, w.graph, tr, cfg)
        assert same_steps(tr, again)
