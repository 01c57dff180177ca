"""Acceptance criteria, one test each, run at full size with wall-clock limits.

Every test prints a single ``criterion N: PASS|FAIL`` line with its numbers.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import pytest

from probelab.adversary import (
    BASELINES,
    baseline,
    birthday_bound,
    check_certificate,
    duplicate_id_rate,
    fool_coloring_algorithm,
    gen_high_girth_chromatic,
    guessing_bound,
    guessing_game,
)
from probelab.bench import ExperimentManifest, bench_probe_scaling, growth_report
from probelab.graph import (
    InfeasibleParameters,
    Problem,
    gen_edge_colored_tree,
    gen_random_regular,
    girth,
    power_graph,
    verify_solution,
)
from probelab.idgraph import (
    IdGraph,
    build_id_graph,
    count_h_labelings,
    count_h_labelings_brute,
    verify_id_graph,
    zero_round_so_exists,
)
from probelab.lll import (
    PartialAssignment,
    event_probability,
    lll_query,
    lll_solve,
    moser_tardos,
    pre_shatter,
    random_instance,
    solve_component,
)
from probelab.sinkless import SinklessConfig, sinkless_query, so_as_lll, solve_sinkless


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")

    return emit


class Clock:
    def __init__(self, limit):
        self.limit = limit
        self.start = time.perf_counter()
        self.stopped = None

    def stop(self):
        self.stopped = self.elapsed
        return self

    @property
    def elapsed(self):
        if self.stopped is not None:
            return self.stopped
        return time.perf_counter() - self.start

    @property
    def ok(self):
        return self.elapsed <= self.limit

    def __str__(self):
        return f"{self.elapsed:.1f}s/{self.limit}s"


# ---------------------------------------------------------------------------
# 1. validity


def test_c1_validity(report):
    clock = Clock(2)
    bad = 0
    for s in range(500):
        inst = random_instance(40, 16, 4, s)
        assert inst.p * inst.d * 4 <= 1
        bad += bool(inst.violated(moser_tardos(inst, s).assignment))
        bad += bool(inst.violated(solve_component(inst, {}, [e.id for e in inst.events], s)))
    lll_clock = clock.stop()

    clock = Clock(60)
    worst = 100
    for n, delta in itertools.product((2**8, 2**10, 2**12), (3, 4)):
        good = 0
        for s in range(100):
            g = gen_random_regular(n, delta, 3, s)
            good += bool(verify_solution(g, solve_sinkless(g, seed=s).labeling, Problem.sinkless()))
        worst = min(worst, good)
    ok = bad == 0 and lll_clock.ok and worst >= 99 and clock.ok
    report(1, ok, f"lll invalid outputs {bad}/1000 ({lll_clock}); sinkless worst valid {worst}/100 ({clock})")
    assert ok


# ---------------------------------------------------------------------------
# 2. shattering


def test_c2_shattering(report):
    clock = Clock(120)
    ratios = {}
    for n in (2**8, 2**10, 2**12):
        inst = so_as_lll(gen_random_regular(n, 6, 3, n))
        pre_shatter(inst)  # criterion check once
        worst = max(pre_shatter(inst, seed=s, check=False).max_component for s in range(1000))
        ratios[n] = worst / math.log2(n)
    vals = list(ratios.values())
    ok = all(b <= 1.2 * a for a, b in zip(vals, vals[1:])) and clock.ok
    shown = ", ".join(f"n={n}: {r:.3f}" for n, r in ratios.items())
    report(2, ok, f"max component / log2 n: {shown} ({clock})")
    assert ok


# ---------------------------------------------------------------------------
# 3. probe scaling

LADDERS = {
    "lll": ExperimentManifest(solver="lll", sizes=[2**10, 2**11, 2**12, 2**13], seeds=[0, 1], queries=400),
    "sinkless": ExperimentManifest(solver="sinkless", sizes=[2**10, 2**11, 2**12], seeds=[0, 1], queries=8),
}


def test_c3_probe_scaling(report):
    clock = Clock(120)
    summary, ok = [], True
    for name, man in LADDERS.items():
        rows = bench_probe_scaling(man)
        assert not any(r.error for r in rows)
        ratios = [d.ratio for d in growth_report(rows)]
        ok &= all(r <= 1.6 for r in ratios)
        worst = {r.n: max(x.max_probes for x in rows if x.n == r.n) for r in rows}
        summary.append(f"{name} max probes {worst} ratios {[round(r, 2) for r in ratios]}")
    ok &= clock.ok
    report(3, ok, "; ".join(summary) + f" ({clock})")
    assert ok


# ---------------------------------------------------------------------------
# 4. exactness oracles


def enumerate_probability(inst, eid, fixed):
    e = inst.event[eid]
    free = [x for x in e.vbl if x not in fixed]
    total = Fraction(0)
    for vals in itertools.product(*(range(inst.var[x].domain) for x in free)):
        a = {**fixed, **dict(zip(free, vals))}
        if tuple(a[x] for x in e.vbl) in e.bad:
            total += math.prod((inst.var[x].prob(v) for x, v in zip(free, vals)), start=Fraction(1))
    return total


def lll_corpus():
    for s in range(40):
        for domain, scope in ((2, 4), (3, 3)):
            yield random_instance(16, 6, scope, s, domain=domain, bad=1 + s % 5, max_occurrence=3, biased=s % 2 == 1)


def id_graph_corpus():
    rng = random.Random(0)
    for nV in range(1, 9):
        for delta in (1, 2, 3):
            for _ in range(3):
                pairs = list(itertools.combinations(range(nV), 2))
                yield IdGraph.from_layers(nV, [[e for e in pairs if rng.random() < 0.45] for _ in range(delta)])


def tree_corpus():
    for n in range(1, 7):
        for delta in (2, 3):
            for s in range(3):
                yield gen_edge_colored_tree(n, delta, s)


def apsp(g):
    d = {v: {v: 0} for v in range(g.n)}
    for v in range(g.n):
        frontier = [v]
        while frontier:
            nxt = []
            for x in frontier:
                for u in g.neighbors(x):
                    if u not in d[v]:
                        d[v][u] = d[v][x] + 1
                        nxt.append(u)
            frontier = nxt
    return d


def test_c4_exactness(report):
    clock = Clock(10)
    checked = mism = 0
    for inst in lll_corpus():
        assert len(inst.variables) <= 16
        for e in inst.events:
            dom = [range(inst.var[x].domain) for x in e.vbl]
            for k in range(len(e.vbl) + 1):
                for vals in itertools.islice(itertools.product(*dom[:k]), 4):
                    fixed = dict(zip(e.vbl, vals))
                    checked += 1
                    mism += event_probability(inst, e.id, PartialAssignment(fixed)) != enumerate_probability(inst, e.id, fixed)
    prob_clock = clock.stop()

    clock = Clock(10)
    trees = list(tree_corpus())
    pairs = cmism = 0
    for h in id_graph_corpus():
        for t in trees:
            if max((max(c) for c in t.edge_colors if c), default=0) > h.delta:
                continue
            pairs += 1
            cmism += count_h_labelings(t, h) != count_h_labelings_brute(t, h)
    count_clock = clock.stop()

    pmism = graphs = 0
    for n, delta, s in itertools.product((8, 16, 33, 64), (2, 3, 4), range(2)):
        if n * delta % 2:
            continue
        g = gen_random_regular(n, delta, 3, s)
        d = apsp(g)
        graphs += 1
        for k in (1, 2, 3):
            pk = power_graph(g, k)
            pmism += any(set(pk.neighbors(v)) != {u for u, x in d[v].items() if 0 < x <= k} for v in range(g.n))
    ok = mism == 0 and cmism == 0 and pmism == 0 and prob_clock.ok and count_clock.ok
    report(
        4,
        ok,
        f"event_probability {checked} checks, {mism} mismatches ({prob_clock}); "
        f"count_h_labelings {pairs} pairs, {cmism} mismatches ({count_clock}); power_graph {graphs * 3} cases, {pmism} mismatches",
    )
    assert ok


# ---------------------------------------------------------------------------
# 5. ID graph construction


def test_c5_id_graph(report):
    clock = Clock(60)
    passed, reasons = 0, set()
    for s in range(10):
        try:
            h = build_id_graph(60, 3, 1, s)
        except InfeasibleParameters as exc:
            reasons.add(str(exc))
            continue
        passed += verify_id_graph(h).passes((1, 3, 4, 5))
    ok = passed >= 8 and clock.ok
    report(5, ok, f"{passed}/10 seeds pass P1,P3,P4,P5 ({clock}); " + "; ".join(sorted(reasons)))
    assert ok


# ---------------------------------------------------------------------------
# 6. zero-round impossibility


def perfect_matching(nV, rng):
    perm = list(range(nV))
    rng.shuffle(perm)
    return [(perm[i], perm[i + 1]) for i in range(0, nV, 2)]


def zero_round_corpus():
    rng = random.Random(6)
    for nV in range(2, 17):
        if nV % 2 == 0:
            for _ in range(3):
                yield IdGraph.from_layers(nV, [perfect_matching(nV, rng)])
        for delta in (2, 3):
            for _ in range(4):
                pairs = list(itertools.combinations(range(nV), 2))
                yield IdGraph.from_layers(nV, [[e for e in pairs if rng.random() < 0.3] for _ in range(delta)])


def independence_violators():
    """Layers whose independence number reaches nV / delta, with a 0-round orientation."""
    yield IdGraph.from_layers(4, [[(0, 1)], [(2, 3)]])
    yield IdGraph.from_layers(6, [[(0, 1), (2, 3), (4, 5)], [(1, 2), (3, 4), (0, 5)], [(0, 3), (1, 4), (2, 5)]])
    yield IdGraph.from_layers(8, [[(i, (i + 1) % 8) for i in range(0, 8, 2)], [(i, (i + 1) % 8) for i in range(1, 8, 2)]])
    # the 3-cube, one layer per dimension
    yield IdGraph.from_layers(8, [[(v, v ^ b) for v in range(8) if v < v ^ b] for b in (1, 2, 4)])


def test_c6_zero_round(report):
    clock = Clock(30)
    passing = [h for h in zero_round_corpus() if verify_id_graph(h).passes()]
    impossible = sum(zero_round_so_exists(h, "exhaustive").exists is False for h in passing)
    hand = list(independence_violators())
    assert all(not verify_id_graph(h).checks[5].ok for h in hand)
    exists = sum(zero_round_so_exists(h, "exhaustive").exists is True for h in hand)
    deltas = sorted({h.delta for h in passing})
    ok = passing and impossible == len(passing) and exists == len(hand) and clock.ok
    report(
        6,
        ok,
        f"verifier-passing corpus graphs {len(passing)} (delta {deltas}), impossible {impossible}; "
        f"hand-built violators {len(hand)}, exists {exists} ({clock})",
    )
    assert ok


# ---------------------------------------------------------------------------
# 7. fooling harness


def test_c7_fooling(report):
    clock = Clock(60)
    seeds = range(4)
    runs = escapes = certified = 0
    for name in BASELINES:
        for s in seeds:
            core = gen_high_girth_chromatic(2, 1000, s)
            alg = baseline(name, girth(core))
            rep = fool_coloring_algorithm(alg, 2, 1000, s, core=core)
            runs += 1
            if rep.escaped:
                escapes += 1
            elif rep.certificate is not None and check_certificate(alg, rep.certificate) is None:
                certified += 1
    ok = certified == runs - escapes and escapes <= 0.1 * runs and clock.ok
    report(7, ok, f"{runs} runs ({len(BASELINES)} baselines x {len(seeds)} seeds): certified {certified}, escapes {escapes} ({clock})")
    assert ok


# ---------------------------------------------------------------------------
# 8. probability bounds


def test_c8_probability_bounds(report):
    clock = Clock(60)
    parts, ok = [], True
    for q, m in ((50, 10**4), (100, 10**5)):
        rate = duplicate_id_rate(q, m, 10**5, seed=q)
        bound = birthday_bound(q, m)
        ok &= bound / 2 <= rate <= 2 * bound
        parts.append(f"dup({q},{m}) {rate:.4f} vs {bound:.4f}")
    for N, marked, size in ((10**4, 10, 10), (10**3, 20, 5), (10**5, 50, 20)):
        bound = guessing_bound(N, marked, size)
        rate = max(guessing_game(N, marked, size, st, 10**4, seed=N + size) for st in ("prefix", "random", "port-guided"))
        ok &= rate <= 3 * bound
        parts.append(f"guess({N},{marked},{size}) max rate {rate:.4f} vs 3x{bound:.4f}")
    ok &= clock.ok
    report(8, ok, "; ".join(parts) + f" ({clock})")
    assert ok


# ---------------------------------------------------------------------------
# 9. query vs global consistency


def test_c9_consistency(report):
    clock = Clock(60)
    lll_diff = so_diff = lll_q = so_q = 0
    for s in range(10):
        inst = so_as_lll(gen_random_regular(2**8, 6, 3, s))
        glob = lll_solve(inst, seed=s).assignment
        dg = inst.dependency_graph()
        for e in inst.events:
            vals, _ = lll_query(inst, dg, e.id, seed=s)
            lll_q += 1
            lll_diff += vals != {x: glob[x] for x in e.vbl}
        g = gen_random_regular(2**7, 3, 3, s)
        cfg = SinklessConfig()
        sol = solve_sinkless(g, cfg, s).labeling
        for he in g.half_edges():
            so_q += 1
            so_diff += sinkless_query(g, he, cfg, s)[0] != sol[he]
    ok = lll_diff == 0 and so_diff == 0 and clock.ok
    report(9, ok, f"lll n=256 {lll_q} queries, {lll_diff} differ; sinkless n=128 {so_q} queries, {so_diff} differ ({clock})")
    assert ok
