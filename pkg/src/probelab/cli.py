"""``probelab`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 infeasible parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .graph import (
    GraphFormatError,
    HalfEdgeLabeling,
    InfeasibleParameters,
    PortedGraph,
    Problem,
    gen_edge_colored_tree,
    gen_random_regular,
    graph_from_json,
    graph_to_json,
    labeling_to_json,
    power_graph,
    verify_solution,
)
from .probe import ModelConfig

OK, FAILED, USAGE, INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _model(args: argparse.Namespace) -> ModelConfig:
    try:
        return ModelConfig(
            model=args.model,
            seed=args.seed,
            advertised_n=args.advertised_n,
            probe_budget=args.probe_budget,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args: argparse.Namespace, text: str, name: str | None = None) -> None:
    """Write to ``--out`` (a file, or a directory when ``name`` is given) or stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    if name is not None:
        out.mkdir(parents=True, exist_ok=True)
        out = out / name
    out.write_text(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _graph(path: str) -> PortedGraph:
    try:
        return graph_from_json(_read(path))
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def _json_id(x: Any) -> Any:
    return tuple(_json_id(e) for e in x) if isinstance(x, list) else x


# ---------------------------------------------------------------------------
# generators


def cmd_gen_tree(args: argparse.Namespace) -> int:
    _emit(args, graph_to_json(gen_edge_colored_tree(args.n, args.delta, args.seed)))
    return OK


def cmd_gen_regular(args: argparse.Namespace) -> int:
    _emit(args, graph_to_json(gen_random_regular(args.n, args.delta, args.girth, args.seed)))
    return OK


# ---------------------------------------------------------------------------
# id graphs


def cmd_idgraph(args: argparse.Namespace) -> int:
    from . import idgraph as ig

    def load() -> ig.IdGraph:
        return ig.id_graph_from_text(_read(args.file))

    if args.action == "build":
        h = ig.build_id_graph(args.nv, args.delta, args.R, args.seed, retries=args.retries)
        _emit(args, ig.id_graph_to_text(h))
        return OK
    if args.action == "verify":
        rep = ig.verify_id_graph(load())
        print("\n".join(rep.lines()))
        return OK if rep.passes() else FAILED
    if args.action == "label":
        labels = ig.proper_h_labeling(_graph(args.tree), load(), args.seed)
        _emit(args, json.dumps(labels) + "\n")
        return OK
    if args.action == "count":
        print(ig.count_h_labelings(_graph(args.tree), load()))
        return OK
    res = ig.zero_round_so_exists(load(), method=args.method)
    state = {True: "exists", False: "impossible", None: "unknown"}[res.exists]
    print(f"{state} ({res.method})")
    if res.witness is not None:
        print(json.dumps({str(k): v for k, v in sorted(res.witness.items())}))
    return OK


# ---------------------------------------------------------------------------
# LLL


def cmd_lll(args: argparse.Namespace) -> int:
    from . import lll

    inst = lll.instance_from_json(_read(args.file))
    try:
        kind, c = lll.parse_criterion(args.criterion)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = lll.check_criterion(inst, args.criterion)
    if args.action == "check":
        print(verdict)
        return OK if verdict else FAILED
    if not verdict:
        print(verdict, file=sys.stderr)
        return INFEASIBLE
    cfg = lll.LllConfig(c=c) if kind == "poly" else lll.LllConfig()
    if args.action == "solve":
        sol = lll.lll_solve(inst, cfg, args.seed)
        bad = inst.violated(sol.assignment)
        rows = [[lll._id_json(x), v] for x, v in sorted(sol.assignment.items(), key=lambda kv: repr(kv[0]))]
        _emit(args, json.dumps({"assignment": rows, "violated": len(bad)}) + "\n")
        return FAILED if bad else OK
    event = _json_id(json.loads(args.event))
    if event not in inst.event:
        raise UsageError(f"no event {args.event}")
    vals, tr = lll.lll_query(inst, None, event, cfg, args.seed, _model(args))
    if vals is None:
        print(f"query failed: {tr.failed}", file=sys.stderr)
        return FAILED
    _emit(args, json.dumps([[lll._id_json(x), v] for x, v in sorted(vals.items(), key=lambda kv: repr(kv[0]))]) + "\n")
    if args.transcript:
        Path(args.transcript).write_text(tr.dump())
    return OK


# ---------------------------------------------------------------------------
# solvers producing labelings


def _labeled_output(args: argparse.Namespace, g: PortedGraph, sol: HalfEdgeLabeling, problem: Problem) -> int:
    verdict = verify_solution(g, sol, problem)
    _emit(args, labeling_to_json(sol))
    if not verdict:
        print(verdict, file=sys.stderr)
        return FAILED
    return OK


def cmd_sinkless(args: argparse.Namespace) -> int:
    from .sinkless import SinklessConfig, sinkless_query, solve_sinkless

    g = _graph(args.graph) if args.graph else gen_random_regular(args.n, args.delta, 3, args.seed)
    cfg = SinklessConfig(k=args.k)
    model = _model(args)
    if args.mode == "global":
        sol = solve_sinkless(g, cfg, args.seed, model=model).labeling
    else:
        labels = {}
        for he in g.half_edges():
            out, tr = sinkless_query(g, he, cfg, args.seed, model)
            if out is None:
                print(f"query {he} failed: {tr.failed}", file=sys.stderr)
                return FAILED
            labels[he] = out
        sol = HalfEdgeLabeling(labels)
    return _labeled_output(args, g, sol, Problem.sinkless())


def cmd_color(args: argparse.Namespace) -> int:
    from .local import logstar_coloring

    g = _graph(args.graph) if args.graph else gen_random_regular(args.n, args.delta, 3, args.seed)
    res = logstar_coloring(g, args.k)
    colors = [res.colors[x] + 1 for x in g.ids]  # labels are 1-based
    sol = HalfEdgeLabeling.from_node_colors(g, colors)
    target = power_graph(g, args.k) if args.k > 1 else g
    verdict = verify_solution(target, HalfEdgeLabeling.from_node_colors(target, colors), Problem.coloring(res.num_colors))
    _emit(args, labeling_to_json(sol))
    if not verdict:
        print(verdict, file=sys.stderr)
        return FAILED
    return OK


def cmd_mis(args: argparse.Namespace) -> int:
    from .local import logstar_coloring, mis_from_coloring

    g = _graph(args.graph) if args.graph else gen_random_regular(args.n, args.delta, 3, args.seed)
    res = logstar_coloring(g, args.k)
    mis = mis_from_coloring(g, res.colors, k=args.k, power=res.power)
    members = [int(x in mis) for x in g.ids]
    _emit(args, labeling_to_json(HalfEdgeLabeling.from_node_colors(g, members)))
    pn = res.power
    for x in g.ids:
        near = [y for y in pn[x] if y in mis]
        if x in mis and near:
            print(f"invalid at id {x}: member {near[0]} within distance {args.k}", file=sys.stderr)
            return FAILED
        if x not in mis and not near:
            print(f"invalid at id {x}: not dominated", file=sys.stderr)
            return FAILED
    return OK


# ---------------------------------------------------------------------------
# lower-bound harnesses


def cmd_fool(args: argparse.Namespace) -> int:
    from .adversary import BASELINES, baseline, check_certificate, fool_coloring_algorithm, gen_high_girth_chromatic
    from .graph import girth

    if args.alg not in BASELINES:
        raise UsageError(f"--alg must be one of {BASELINES}")
    core = gen_high_girth_chromatic(args.c, args.n, args.seed)
    alg = baseline(args.alg, girth(core))
    rep = fool_coloring_algorithm(alg, args.c, args.n, args.seed, delta_h=args.delta_h, m=args.m, core=core)
    print(f"girth {rep.girth:g} host degree {rep.delta_h} max probes {rep.max_probes}")
    if rep.escaped:
        print(f"escape: {rep.escape}")
        return OK
    cert = rep.certificate
    if cert is None:
        print("no monochromatic core edge found")
        return FAILED
    problem = check_certificate(alg, cert)
    print(f"certificate: ids {cert.v} and {cert.w} both output {cert.color!r}; replay {'ok' if problem is None else problem}")
    if args.out:
        _emit(args, graph_to_json(cert.tree), "certificate-tree.json")
        for tag, tr in zip("vw", cert.transcripts):
            _emit(args, tr.dump(), f"transcript-{tag}.txt")
    return OK if problem is None else FAILED


def cmd_game(args: argparse.Namespace) -> int:
    from .adversary import birthday_bound, duplicate_id_rate, guessing_bound, guessing_game

    if args.kind == "duplicate":
        rate = duplicate_id_rate(args.q, args.m, args.trials, args.seed)
        bound = birthday_bound(args.q, args.m)
        params = f"q={args.q};m={args.m}"
    else:
        rate = guessing_game(args.N, args.marked, args.I, args.strategy, args.trials, args.seed)
        bound = guessing_bound(args.N, args.marked, args.I)
        params = f"N={args.N};marked={args.marked};I={args.I};strategy={args.strategy}"
    ratio = rate / bound if bound else float("inf")
    _emit(args, f"params,rate,bound,ratio\n{params},{rate:.6g},{bound:.6g},{ratio:.4f}\n")
    return OK


# ---------------------------------------------------------------------------
# bench and verify


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import ExperimentManifest, bench_probe_scaling, growth_report, report_to_csv, rows_to_csv

    if args.manifest:
        man = ExperimentManifest.from_json(_read(args.manifest))
    else:
        model: dict[str, Any] = {"model": args.model}
        if args.advertised_n is not None:
            model["advertised_n"] = args.advertised_n
        man = ExperimentManifest(
            command=" ".join(sys.argv[1:]) or "bench",
            solver=args.solver,
            sizes=[2**e for e in _int_list(args.log_sizes)],
            seeds=_int_list(args.seeds),
            delta=args.delta,
            queries=args.queries,
            model=model,
            probe_budget=args.probe_budget,
            k=args.k,
        )
    if args.out:
        man.outputs = {"rows": "bench.csv", "growth": "growth.csv", "manifest": "manifest.json"}
    rows = bench_probe_scaling(man, workers=args.workers)
    report = growth_report(rows)
    if args.out:
        _emit(args, rows_to_csv(rows), "bench.csv")
        _emit(args, report_to_csv(report), "growth.csv")
        _emit(args, man.to_json(), "manifest.json")
    else:
        sys.stdout.write(rows_to_csv(rows) + "\n" + report_to_csv(report))
    return OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .bench import verify_file

    try:
        verdict = verify_file(args.graph, args.labeling, args.problem)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    print(verdict)
    return OK if verdict else FAILED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--model", choices=("LCA", "VOLUME"), default="LCA")
    common.add_argument("--out", help="output file (or directory for multi-file commands)")
    common.add_argument("--advertised-n", type=int, default=None)
    common.add_argument("--probe-budget", type=int, default=None)

    p = argparse.ArgumentParser(prog="probelab", description="Probe-model laboratory for local algorithms.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, **kw: Any) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], **kw)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("gen-tree", cmd_gen_tree, help="random edge-colored tree")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=int, default=3)

    sp = add("gen-regular", cmd_gen_regular, help="random regular graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=int, default=3)
    sp.add_argument("--girth", type=int, default=3)

    sp = add("idgraph", cmd_idgraph, help="ID graph tools")
    sp.add_argument("action", choices=("build", "verify", "label", "count", "zeroround"))
    sp.add_argument("file", nargs="?", help="ID graph file (all actions but build)")
    sp.add_argument("--nv", type=int, default=60)
    sp.add_argument("--delta", type=int, default=3)
    sp.add_argument("--R", type=int, default=1)
    sp.add_argument("--retries", type=int, default=16)
    sp.add_argument("--tree", help="tree graph file for label and count")
    sp.add_argument("--method", choices=("auto", "exhaustive", "structural"), default="auto")

    sp = add("lll", cmd_lll, help="Lovasz local lemma instances")
    sp.add_argument("action", choices=("check", "solve", "query"))
    sp.add_argument("file")
    sp.add_argument("--criterion", default="poly:1")
    sp.add_argument("--event", help="event id as JSON (query)")
    sp.add_argument("--transcript", help="write the query transcript here")

    sp = add("sinkless", cmd_sinkless, help="sinkless orientation")
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--delta", type=int, default=3)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--mode", choices=("global", "query"), default="global")
    sp.add_argument("--graph")

    for name, fn in (("color", cmd_color), ("mis", cmd_mis)):
        sp = add(name, fn, help=f"distance-k {'coloring' if name == 'color' else 'MIS'}")
        sp.add_argument("--k", type=int, default=1)
        sp.add_argument("--graph")
        sp.add_argument("--n", type=int, default=256)
        sp.add_argument("--delta", type=int, default=3)

    sp = add("fool", cmd_fool, help="fooling harness against a 2-coloring baseline")
    sp.add_argument("--c", type=int, default=2)
    sp.add_argument("--n", type=int, default=1001)
    sp.add_argument("--alg", default="constant")
    sp.add_argument("--delta-h", type=int, default=None)
    sp.add_argument("--m", type=int, default=10)

    sp = add("game", cmd_game, help="duplicate-ID and guessing-game rates")
    sp.add_argument("kind", choices=("duplicate", "guess"))
    sp.add_argument("--q", type=int, default=50)
    sp.add_argument("--m", type=int, default=10_000)
    sp.add_argument("--N", type=int, default=10_000)
    sp.add_argument("--marked", type=int, default=10)
    sp.add_argument("--I", type=int, default=10)
    sp.add_argument("--strategy", choices=("prefix", "random", "port-guided"), default="random")
    sp.add_argument("--trials", type=int, default=10_000)

    sp = add("bench", cmd_bench, help="probe-scaling ladder")
    sp.add_argument("--manifest")
    sp.add_argument("--solver", choices=("lll", "sinkless", "coloring", "constant"), default="lll")
    sp.add_argument("--log-sizes", default="8..10", help="exponents, e.g. 8..12 or 8,10")
    sp.add_argument("--seeds", default="0")
    sp.add_argument("--delta", type=int, default=None)
    sp.add_argument("--queries", type=int, default=None)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("verify", cmd_verify, help="check a labeling file against a graph file")
    sp.add_argument("graph")
    sp.add_argument("labeling")
    sp.add_argument("--problem", default="sinkless")
    return p


_NEEDS_FILE = {"verify", "label", "count", "zeroround"}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "idgraph" and args.action in _NEEDS_FILE and not args.file:
            raise UsageError(f"idgraph {args.action} needs a file")
        if args.command == "idgraph" and args.action in {"label", "count"} and not args.tree:
            raise UsageError(f"idgraph {args.action} needs --tree")
        if args.command == "lll" and args.action == "query" and not args.event:
            raise UsageError("lll query needs --event")
        return args.fn(args)
    except UsageError as exc:
        print(f"probelab: {exc}", file=sys.stderr)
        return USAGE
    except GraphFormatError as exc:
        print(f"probelab: parse error: {exc}", file=sys.stderr)
        return USAGE
    except InfeasibleParameters as exc:
        print(f"probelab: infeasible parameters: {exc}", file=sys.stderr)
        return INFEASIBLE
    except ValueError as exc:
        print(f"probelab: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
