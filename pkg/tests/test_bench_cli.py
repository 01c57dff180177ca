import csv
import io
import json

import pytest

from probelab.bench import (
    ExperimentManifest,
    bench_probe_scaling,
    growth_report,
    rows_to_csv,
    verify_file,
)
from probelab.cli import main
from probelab.graph import (
    GraphFormatError,
    HalfEdgeLabeling,
    Problem,
    complete_graph,
    graph_to_json,
    labeling_to_json,
    star_graph,
)


def write_orientation(tmp_path, g, tails):
    tail_of = {}
    for v, p, u, _ in g.edges():
        tail_of[(v, p)] = tails(v, u)
    gp, lp = tmp_path / "g.json", tmp_path / "l.json"
    gp.write_text(graph_to_json(g))
    lp.write_text(labeling_to_json(HalfEdgeLabeling.from_orientation(g, tail_of)))
    return str(gp), str(lp)


def cyclic_k4(v, u):
    # orient along 0->1->2->3->0, diagonals from the smaller node
    if {v, u} in ({0, 2}, {1, 3}):
        return min(v, u)
    return v if (v + 1) % 4 == u else u


def test_constant_ladder_has_zero_probes():
    rows = bench_probe_scaling(ExperimentManifest(solver="constant", sizes=[2**8, 2**9], seeds=[0, 1]))
    assert [r.max_probes for r in rows] == [0, 0, 0, 0]
    assert all(d.ratio == 1.0 for d in growth_report(rows))


def test_rows_sorted_and_reproducible():
    man = ExperimentManifest(solver="coloring", sizes=[128, 64], seeds=[3, 1], queries=20)
    rows = bench_probe_scaling(man)
    assert [(r.n, r.seed) for r in rows] == [(64, 1), (64, 3), (128, 1), (128, 3)]
    again = bench_probe_scaling(ExperimentManifest.from_json(man.to_json()))
    assert rows_to_csv(rows) == rows_to_csv(again)


def test_parallel_fanout_matches_serial():
    man = ExperimentManifest(solver="lll", sizes=[64, 128], seeds=[0, 1], queries=10)
    assert bench_probe_scaling(man, workers=2) == bench_probe_scaling(man)


def test_errors_are_recorded_per_row():
    # odd n with odd degree cannot be regular
    rows = bench_probe_scaling(ExperimentManifest(solver="coloring", sizes=[63, 64], seeds=[0]))
    assert rows[0].error and not rows[1].error


def test_csv_columns():
    rows = bench_probe_scaling(ExperimentManifest(solver="sinkless", sizes=[64], seeds=[0], queries=5))
    rec = next(csv.DictReader(io.StringIO(rows_to_csv(rows))))
    assert {"n", "seed", "mode", "max_probes", "mean_probes", "failures"} <= set(rec)
    assert rec["mode"] == "query"


def test_verify_file_k4_and_star(tmp_path):
    gp, lp = write_orientation(tmp_path, complete_graph(4), cyclic_k4)
    assert verify_file(gp, lp, "sinkless")
    gp, lp = write_orientation(tmp_path, star_graph(3), lambda v, u: max(v, u))
    verdict = verify_file(gp, lp, Problem.sinkless())
    assert not verdict and verdict.node == 0


def test_verify_file_truncated(tmp_path):
    gp, lp = write_orientation(tmp_path, complete_graph(4), cyclic_k4)
    text = open(gp).read()
    open(gp, "w").write(text[:40])
    with pytest.raises(GraphFormatError, match="line 1 column"):
        verify_file(gp, lp, "sinkless")


def test_cli_verify_exit_codes(tmp_path, capsys):
    gp, lp = write_orientation(tmp_path, complete_graph(4), cyclic_k4)
    assert main(["verify", gp, lp]) == 0
    gp, lp = write_orientation(tmp_path, star_graph(3), lambda v, u: max(v, u))
    assert main(["verify", gp, lp]) == 1
    assert "sink" in capsys.readouterr().out
    open(gp, "w").write("{")
    assert main(["verify", gp, lp]) == 2


def test_cli_usage_and_infeasible(tmp_path):
    assert main(["no-such-command"]) == 2
    assert main(["lll", "query", str(tmp_path / "x")]) == 2
    assert main(["idgraph", "build", "--nv", "60", "--delta", "3"]) == 3


def test_cli_generators_and_solvers(tmp_path):
    g = tmp_path / "g.json"
    assert main(["gen-regular", "--n", "32", "--delta", "3", "--seed", "1", "--out", str(g)]) == 0
    for mode in ("global", "query"):
        out = tmp_path / f"{mode}.json"
        assert main(["sinkless", "--graph", str(g), "--mode", mode, "--out", str(out)]) == 0
    assert (tmp_path / "global.json").read_text() == (tmp_path / "query.json").read_text()
    assert main(["verify", str(g), str(tmp_path / "global.json")]) == 0
    assert main(["color", "--graph", str(g), "--k", "2", "--out", str(tmp_path / "c.json")]) == 0
    assert main(["mis", "--graph", str(g), "--k", "1", "--out", str(tmp_path / "m.json")]) == 0
    t = tmp_path / "t.json"
    assert main(["gen-tree", "--n", "20", "--out", str(t)]) == 0


def test_cli_lll_roundtrip(tmp_path, capsys):
    from probelab.graph import gen_random_regular
    from probelab.lll import instance_to_json
    from probelab.sinkless import so_as_lll

    f = tmp_path / "i.json"
    f.write_text(instance_to_json(so_as_lll(gen_random_regular(32, 6, 3, 0))))
    assert main(["lll", "check", str(f), "--criterion", "poly:1"]) == 0
    assert main(["lll", "check", str(f), "--criterion", "poly:3"]) == 1
    assert main(["lll", "solve", str(f), "--criterion", "poly:3"]) == 3
    assert main(["lll", "solve", str(f), "--out", str(tmp_path / "s.json")]) == 0
    assert json.loads((tmp_path / "s.json").read_text())["violated"] == 0
    tr = tmp_path / "tr.txt"
    assert main(["lll", "query", str(f), "--event", "3", "--transcript", str(tr)]) == 0
    assert tr.read_text().splitlines()[-1].startswith("output ")


def test_cli_idgraph_actions(tmp_path, capsys):
    from probelab.idgraph import IdGraph, id_graph_to_text

    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    h = tmp_path / "h.txt"
    h.write_text(id_graph_to_text(IdGraph.from_layers(4, [k4, k4])))
    assert main(["idgraph", "verify", str(h)]) == 1
    assert main(["idgraph", "zeroround", str(h), "--method", "exhaustive"]) == 0
    assert "impossible" in capsys.readouterr().out
    t = tmp_path / "t.json"
    main(["gen-tree", "--n", "4", "--delta", "2", "--out", str(t)])
    assert main(["idgraph", "count", str(h), "--tree", str(t)]) == 0
    assert int(capsys.readouterr().out) > 0


def test_cli_bench_writes_manifest(tmp_path):
    out = tmp_path / "bench"
    assert main(["bench", "--solver", "constant", "--log-sizes", "6..7", "--seeds", "0,1", "--out", str(out)]) == 0
    man = ExperimentManifest.from_json((out / "manifest.json").read_text())
    assert man.sizes == [64, 128] and man.seeds == [0, 1]
    assert (out / "bench.csv").read_text().count("\n") == 5


def test_cli_game_and_fool(tmp_path, capsys):
    assert main(["game", "duplicate", "--q", "50", "--m", "10000", "--trials", "5000"]) == 0
    head, row = capsys.readouterr().out.strip().splitlines()
    assert head == "params,rate,bound,ratio" and row.startswith("q=50")
    out = tmp_path / "fool"
    assert main(["fool", "--n", "51", "--alg", "parity-guess", "--delta-h", "3", "--out", str(out)]) == 0
    assert (out / "certificate-tree.json").exists() and (out / "transcript-v.txt").exists()
