"""Experiment manifests, probe-scaling ladders and file verification."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .graph import (
    GraphFormatError,
    PortedGraph,
    Problem,
    Verdict,
    gen_random_regular,
    graph_from_json,
    labeling_from_json,
    verify_solution,
)
from .local import LazyColoring, ProbeView
from .probe import ModelConfig, ProbeAlgorithm, constant_algorithm, run_query

SOLVERS = ("lll", "sinkless", "coloring", "constant")
DEFAULT_DELTA = {"lll": 6, "sinkless": 3, "coloring": 3, "constant": 3}


@dataclass
class ExperimentManifest:
    """Everything needed to reproduce one run; written next to its results."""

    command: str = "bench"
    solver: str = "lll"
    sizes: list[int] = field(default_factory=lambda: [2**8, 2**9])
    seeds: list[int] = field(default_factory=lambda: [0])
    delta: int | None = None
    queries: int | None = None  # sample size per graph; None runs every query
    model: dict[str, Any] = field(default_factory=dict)
    probe_budget: int | None = None
    k: int = 1  # coloring distance
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.delta is None:
            self.delta = DEFAULT_DELTA[self.solver]

    def model_config(self, seed: int) -> ModelConfig:
        kw = dict(self.model)
        kw["seed"] = seed
        kw.setdefault("probe_budget", self.probe_budget)
        return ModelConfig(**kw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentManifest:
        return cls(**json.loads(text))


@dataclass(frozen=True)
class BenchRow:
    n: int
    seed: int
    mode: str
    max_probes: int
    mean_probes: float
    failures: int
    queries: int
    error: str = ""


CSV_FIELDS = ("n", "seed", "mode", "max_probes", "mean_probes", "failures", "queries", "error")


def coloring_probe_algorithm(k: int) -> ProbeAlgorithm:
    def run(oracle, q):
        x = q[0] if isinstance(q, tuple) else q
        return LazyColoring(ProbeView(oracle), k, oracle.cfg.id_range(oracle.n)).color(x)

    return ProbeAlgorithm(run, name=f"coloring-k{k}")


def _sample(items: list, size: int | None, seed: int) -> list:
    if size is None or size >= len(items):
        return items
    return random.Random(seed).sample(items, size)


def _run_point(man: ExperimentManifest, n: int, seed: int) -> BenchRow:
    from .lll import lll_query
    from .sinkless import SinklessConfig, sinkless_query, so_as_lll

    mode = "query"
    try:
        g = gen_random_regular(n, man.delta, 3, seed)
        cfg = man.model_config(seed)
        counts: list[int] = []
        failures = 0
        if man.solver == "lll":
            inst = so_as_lll(g)
            dg = inst.dependency_graph()
            for ev in _sample([e.id for e in inst.events], man.queries, seed):
                out, tr = lll_query(inst, dg, ev, seed=seed, model=cfg)
                counts.append(tr.probe_count)
                failures += out is None
        elif man.solver == "sinkless":
            scfg = SinklessConfig()
            for he in _sample(list(g.half_edges()), man.queries, seed):
                out, tr = sinkless_query(g, he, scfg, seed, cfg)
                counts.append(tr.probe_count)
                failures += out is None
        else:
            alg = constant_algorithm(0) if man.solver == "constant" else coloring_probe_algorithm(man.k)
            for v in _sample(list(range(g.n)), man.queries, seed):
                out, tr = run_query(alg, g, v, cfg)
                counts.append(tr.probe_count)
                failures += out is None
        return BenchRow(n, seed, mode, max(counts, default=0), sum(counts) / max(len(counts), 1), failures, len(counts))
    except Exception as exc:  # recorded per row; the ladder keeps going
        return BenchRow(n, seed, mode, 0, 0.0, 0, 0, f"{type(exc).__name__}: {exc}")


def _run_point_args(args: tuple) -> BenchRow:
    return _run_point(*args)


def bench_probe_scaling(man: ExperimentManifest, *, workers: int = 1) -> list[BenchRow]:
    """One row per (n, seed), sorted by (n, seed) whatever the fan-out."""
    jobs = [(man, n, s) for n in man.sizes for s in man.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_point_args, jobs))
    else:
        rows = [_run_point(*j) for j in jobs]
    return sorted(rows, key=lambda r: (r.n, r.seed))


@dataclass(frozen=True)
class Doubling:
    n: int
    n_next: int
    max_probes: int
    max_probes_next: int
    ratio: float
    log_ratio: float


def growth_report(rows: Sequence[BenchRow]) -> list[Doubling]:
    """Ratio of the worst max_probes at consecutive ladder points.

    ``log_ratio`` is log(n_next)/log(n), the ratio a logarithmic bound allows.
    """
    worst: dict[int, int] = {}
    for r in rows:
        if not r.error:
            worst[r.n] = max(worst.get(r.n, 0), r.max_probes)
    ns = sorted(worst)
    out = []
    for a, b in zip(ns, ns[1:]):
        ratio = worst[b] / worst[a] if worst[a] else (1.0 if worst[b] == 0 else math.inf)
        out.append(Doubling(a, b, worst[a], worst[b], ratio, math.log(b) / math.log(a)))
    return out


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.n, r.seed, r.mode, r.max_probes, f"{r.mean_probes:.3f}", r.failures, r.queries, r.error])
    return buf.getvalue()


def report_to_csv(report: Sequence[Doubling]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("n", "n_next", "max_probes", "max_probes_next", "ratio", "log_ratio"))
    for d in report:
        w.writerow([d.n, d.n_next, d.max_probes, d.max_probes_next, f"{d.ratio:.4f}", f"{d.log_ratio:.4f}"])
    return buf.getvalue()


def verify_file(graph_path: str | Path, labeling_path: str | Path, problem: Problem | str) -> Verdict:
    """Load both files and check the labeling; parse errors name the file."""
    if isinstance(problem, str):
        problem = Problem.parse(problem)
    parsed: list[Any] = []
    for path, load in ((graph_path, graph_from_json), (labeling_path, labeling_from_json)):
        try:
            parsed.append(load(Path(path).read_text()))
        except GraphFormatError as exc:
            raise GraphFormatError(f"{path}: {exc}") from None
    g: PortedGraph = parsed[0]
    return verify_solution(g, parsed[1], problem)
