"""Fooling deterministic coloring algorithms on a lazily grown high-girth host."""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .graph import InfeasibleParameters, PortedGraph, bfs_distances, cycle_graph, from_edges, gen_random_regular, girth
from .probe import (
    Answer,
    ModelConfig,
    ProbeAlgorithm,
    ProbeBudgetExceeded,
    ProbeStep,
    ProbeTranscript,
    QueryFailed,
    FarProbeViolation,
    PortOutOfRange,
    RandomTape,
    hash64,
    run_query,
)

CHROMATIC_LIMIT = 64
DEFAULT_ID_EXPONENT = 10
MAX_HOST_DEGREE = 4096


# ---------------------------------------------------------------------------
# core graphs


def chromatic_number_exact(g: PortedGraph, upper: int | None = None) -> int:
    """Smallest k admitting a proper k-coloring, by DSATUR-ordered backtracking."""
    if g.n > CHROMATIC_LIMIT:
        raise ValueError(f"exact chromatic number limited to n <= {CHROMATIC_LIMIT}")
    adj = [g.neighbors(v) for v in range(g.n)]
    k = 1 if g.edge_count == 0 else 2
    while not _colorable(adj, k):
        k += 1
        if upper is not None and k > upper:
            break
    return k


def _colorable(adj: Sequence[Sequence[int]], k: int) -> bool:
    n = len(adj)
    col = [0] * n

    def pick() -> int:
        best, key = -1, (-1, -1)
        for v in range(n):
            if not col[v]:
                cand = (len({col[u] for u in adj[v] if col[u]}), len(adj[v]))
                if cand > key:
                    best, key = v, cand
        return best

    def rec(done: int, top: int) -> bool:
        if done == n:
            return True
        v = pick()
        used = {col[u] for u in adj[v]}
        # symmetry breaking: at most one brand-new color per step
        for c in range(1, min(k, top + 1) + 1):
            if c not in used:
                col[v] = c
                if rec(done + 1, max(top, c)):
                    return True
                col[v] = 0
        return False

    return rec(0, 0)


def gen_high_girth_chromatic(c: int, n: int, seed: int, *, attempts: int = 64) -> PortedGraph:
    """Core graph with chromatic number above ``c``.

    c = 2 gives the odd cycle on n (rounded up to odd) nodes. c = 3 samples
    5-regular graphs of girth >= 5 on at most 60 nodes until one is not
    3-colorable. Larger c is out of reach for the exact test.
    """
    if c < 2:
        raise ValueError("need c >= 2")
    if c == 2:
        n = max(3, n + (n % 2 == 0))
        g = cycle_graph(n)
        return g.with_ids(range(1, n + 1))
    if c > 3:
        raise InfeasibleParameters(f"no exactly verifiable core with chromatic number > {c} at desk scale")
    n = min(max(n, 12), 60)
    n += n % 2
    for i in range(attempts):
        try:
            g = gen_random_regular(n, 5, 5, seed + i)
        except InfeasibleParameters:
            continue
        if not _colorable([g.neighbors(v) for v in range(g.n)], 3):
            return g.with_ids(range(1, n + 1))
    raise InfeasibleParameters(f"no 5-regular girth-5 graph on {n} nodes with chromatic number > 3 in {attempts} tries")


def host_degree(core: PortedGraph, girth_value: float, n: int, m: int) -> int:
    """Smallest host degree with (d - 1)^ceil(g/4) >= n^m, and above the core's degree."""
    reach = math.ceil(girth_value / 4) if math.isfinite(girth_value) else core.n
    target = n**m
    base = max(2, round(target ** (1 / reach)) - 1)
    while base**reach >= target and base > 1:
        base -= 1
    while base**reach < target:
        base += 1
    d = max(core.delta + 1, 3, base + 1)
    if d > MAX_HOST_DEGREE:
        raise InfeasibleParameters(f"host degree {d} exceeds {MAX_HOST_DEGREE}; lower the id exponent m={m}")
    return d


# ---------------------------------------------------------------------------
# the lazy host

Address = tuple[int, tuple[int, ...]]  # (core node, port path into the attached tree)


class Escape(Exception):
    """The algorithm saw a repeated ID or reached a far core node."""

    def __init__(self, event: str, query: int, detail: str) -> None:
        super().__init__(f"{event} while answering core node {query}: {detail}")
        self.event = event
        self.query = query
        self.detail = detail


class LazyHost:
    """Infinite ``delta_h``-regular graph: the core plus trees hanging off every free slot.

    A node is addressed by its core anchor and the sequence of logical child
    slots leading to it. Its ID and port permutation are hash functions of
    ``(seed, address)``, so materialization order never matters.
    """

    def __init__(self, core: PortedGraph, delta_h: int, n: int, m: int, seed: int) -> None:
        if delta_h <= core.delta:
            raise ValueError("host degree must exceed the core degree")
        self.core = core
        self.delta_h = delta_h
        self.n = n
        self.m = m
        self.id_space = n**m
        self.seed = seed
        self.materialized: dict[Address, tuple[int, tuple[int, ...]]] = {}
        self._words = max(1, (self.id_space.bit_length() + 64) // 64 + 1)

    def _node(self, a: Address) -> tuple[int, tuple[int, ...]]:
        got = self.materialized.get(a)
        if got is None:
            x = 0
            for i in range(self._words):
                x = (x << 64) | hash64(self.seed, ("id", a), i)
            rng = random.Random(hash64(self.seed, ("ports", a)))
            perm = list(range(self.delta_h))
            rng.shuffle(perm)
            got = (x % self.id_space + 1, tuple(perm))
            self.materialized[a] = got
        return got

    def id_of(self, a: Address) -> int:
        return self._node(a)[0]

    def _slot_target(self, a: Address, slot: int) -> tuple[Address, int]:
        """Neighbor behind logical slot ``slot`` and the slot it arrives on."""
        r, path = a
        if not path:
            deg = self.core.degree(r)
            if slot < deg:
                u, q = self.core.adj[r][slot]
                return (u, ()), q - 1
            return (r, (slot,)), 0
        if slot == 0:
            parent = (r, path[:-1])
            return parent, path[-1]
        return (r, path + (slot,)), 0

    def neighbor(self, a: Address, port: int) -> tuple[Address, int]:
        """Follow port ``port`` (1-based) and return ``(address, reciprocal port)``."""
        if not 1 <= port <= self.delta_h:
            raise PortOutOfRange(f"port {port} at host degree {self.delta_h}")
        perm = self._node(a)[1]
        b, slot_b = self._slot_target(a, perm[port - 1])
        return b, self._node(b)[1].index(slot_b) + 1

    def port_between(self, a: Address, b: Address) -> int:
        return next(p for p in range(1, self.delta_h + 1) if self.neighbor(a, p)[0] == b)


class HostOracle:
    """Oracle-compatible view of a :class:`LazyHost` for one query at a core node."""

    def __init__(self, host: LazyHost, query: int, budget: int | None, seen_ids: dict[int, Address], far: Callable[[int], bool]) -> None:
        self.host = host
        self.cfg = ModelConfig(model="VOLUME", randomness="none", probe_budget=budget, advertised_n=host.n)
        self.query_addr: Address = (query, ())
        self.query_id = host.id_of(self.query_addr)
        self.transcript = ProbeTranscript(query=self.query_id, graph="lazy-host")
        self._core_query = query
        self._by_id: dict[int, Address] = {self.query_id: self.query_addr}
        self._global = seen_ids
        self._far = far
        self._reveal(self.query_addr)

    @property
    def n(self) -> int:
        return self.host.n

    @property
    def delta(self) -> int:
        return self.host.delta_h

    @property
    def probe_count(self) -> int:
        return len(self.transcript.steps)

    def _reveal(self, a: Address) -> int:
        i = self.host.id_of(a)
        other = self._global.setdefault(i, a)
        if other != a:
            raise Escape("duplicate-id", self._core_query, f"id {i} at {other} and {a}")
        self._by_id[i] = a
        if not a[1] and self._far(a[0]):
            raise Escape("far-vertex", self._core_query, f"core node {a[0]} at distance >= g/4")
        return i

    def _addr(self, node_id: int) -> Address:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise FarProbeViolation(f"id {node_id} was never revealed to the algorithm") from None

    def degree(self, node_id: int) -> int:
        self._addr(node_id)
        return self.host.delta_h

    def labels(self, node_id: int) -> tuple[Hashable, ...]:
        self._addr(node_id)
        return (None,) * self.host.delta_h

    def tape(self, node_id: int) -> RandomTape:
        raise ValueError("model configured without randomness")

    def probe(self, node_id: int, port: int) -> Answer:
        budget = self.cfg.probe_budget
        if budget is not None and len(self.transcript.steps) >= budget:
            raise ProbeBudgetExceeded(f"budget {budget} exhausted")
        a = self._addr(node_id)
        b, q = self.host.neighbor(a, port)
        uid = self._reveal(b)
        ans = Answer(uid, self.host.delta_h, None, q, "-")
        self.transcript.steps.append(ProbeStep(node_id, port, ans))
        return ans

    def addresses(self) -> dict[int, Address]:
        return dict(self._by_id)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class FoolingCertificate:
    v: int
    w: int
    color: Hashable
    tree: PortedGraph
    transcripts: tuple[ProbeTranscript, ProbeTranscript]

    @property
    def tree_v(self) -> int:
        return self.tree.node_of_id[self.transcripts[0].query]

    @property
    def tree_w(self) -> int:
        return self.tree.node_of_id[self.transcripts[1].query]


@dataclass
class FoolingReport:
    certificate: FoolingCertificate | None
    escape: Escape | None
    colors: dict[int, Any]
    failed_queries: dict[int, str] = field(default_factory=dict)
    max_probes: int = 0
    girth: float = 0.0
    delta_h: int = 0

    @property
    def escaped(self) -> bool:
        return self.escape is not None


def _complete_tree(
    host: LazyHost, seen: dict[Address, int], probed: set[tuple[Address, int]], n: int
) -> PortedGraph:
    """Seen nodes keep their host ports; every other port gets a fresh node, padded by a path to n nodes."""
    order = sorted(seen, key=lambda a: seen[a])
    index = {a: i for i, a in enumerate(order)}
    ids = [seen[a] for a in order]
    rows: list[list[tuple[int, int] | None]] = [[None] * host.delta_h for _ in order]
    for a in order:
        for p in range(1, host.delta_h + 1):
            if (a, p) not in probed:
                continue
            b, q = host.neighbor(a, p)
            rows[index[a]][p - 1] = (index[b], q)
            rows[index[b]][q - 1] = (index[a], p)
    used = set(ids)
    fresh = 1

    def new_id() -> int:
        nonlocal fresh
        while fresh in used:
            fresh += 1
        used.add(fresh)
        return fresh

    leaves = []
    for i in range(len(order)):
        for p in range(host.delta_h):
            if rows[i][p] is None:
                j = len(rows)
                rows.append([(i, p + 1)])
                ids.append(new_id())
                rows[i][p] = (j, 1)
                leaves.append(j)
    if len(rows) > n:
        raise ValueError(f"probed region needs {len(rows)} > n = {n} tree nodes")
    tail = leaves[-1] if leaves else 0
    while len(rows) < n:
        j = len(rows)
        rows[tail].append((j, 1))
        rows.append([(tail, len(rows[tail]))])
        ids.append(new_id())
        tail = j
    t = PortedGraph(tuple(ids), tuple(tuple(r) for r in rows), host.delta_h)  # type: ignore[arg-type]
    t.validate()
    return t


def _known_half_edges(host: LazyHost, transcripts: Sequence[ProbeTranscript], addrs: dict[int, Address]) -> set[tuple[Address, int]]:
    out = set()
    for tr in transcripts:
        for s in tr.steps:
            a = addrs[s.probed_id]
            out.add((a, s.port))
            out.add((addrs[s.answer.id], s.answer.port))
    return out


def _acyclic(edges: set[tuple[Address, Address]]) -> bool:
    parent: dict[Address, Address] = {}

    def find(x: Address) -> Address:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def fool_coloring_algorithm(
    alg: Callable,
    c: int,
    n: int,
    seed: int,
    *,
    delta_h: int | None = None,
    m: int = DEFAULT_ID_EXPONENT,
    budget: int | None = None,
    core: PortedGraph | None = None,
) -> FoolingReport:
    """Run ``alg`` at every core node of a lazy host and extract a monochromatic-edge certificate.

    The algorithm is told it runs on an n-node tree whose IDs come from [n^m].
    """
    core = core or gen_high_girth_chromatic(c, n, seed)
    n = core.n if c == 2 else max(n, core.n)
    g = girth(core)
    dh = delta_h or host_degree(core, g, n, m)
    host = LazyHost(core, dh, n, m, seed)
    quarter = g / 4
    global_ids: dict[int, Address] = {}
    colors: dict[int, Any] = {}
    failed: dict[int, str] = {}
    transcripts: dict[int, ProbeTranscript] = {}
    addrs: dict[int, dict[int, Address]] = {}
    report = FoolingReport(None, None, colors, failed, 0, g, dh)
    for v in range(core.n):
        dist = bfs_distances(core, v)
        oracle = HostOracle(host, v, budget, global_ids, lambda u, d=dist: d.get(u, math.inf) >= quarter)
        try:
            out = alg(oracle, oracle.query_id)
        except Escape as esc:
            report.escape = esc
            return report
        except QueryFailed as exc:
            failed[v] = str(exc)
            continue
        finally:
            report.max_probes = max(report.max_probes, oracle.probe_count)
        oracle.transcript.outcome = out
        colors[v] = out
        transcripts[v] = oracle.transcript
        addrs[v] = oracle.addresses()
    for v, _, w, _ in core.edges():
        if v in colors and w in colors and colors[v] == colors[w]:
            report.certificate = _certificate(alg, host, v, w, colors[v], transcripts, addrs, n)
            break
    return report


def _certificate(
    alg: Callable, host: LazyHost, v: int, w: int, color: Hashable,
    transcripts: dict[int, ProbeTranscript], addrs: dict[int, dict[int, Address]], n: int,
) -> FoolingCertificate:
    merged = {**addrs[v], **addrs[w]}
    seen = {a: i for i, a in merged.items()}
    if len(seen) != len(merged):
        raise AssertionError("ids are not unique across the two queries")
    trs = (transcripts[v], transcripts[w])
    probed = _known_half_edges(host, trs, merged)
    av, aw = (v, ()), (w, ())
    pv = host.port_between(av, aw)
    probed.add((av, pv))
    probed.add(host.neighbor(av, pv))
    edges = {tuple(sorted((a, host.neighbor(a, p)[0]))) for a, p in probed}
    if not _acyclic(edges):  # type: ignore[arg-type]
        raise AssertionError("probed region of the certificate edge contains a cycle")
    tree = _complete_tree(host, seen, probed, n)
    cfg = ModelConfig(model="VOLUME", randomness="none")
    replays = []
    for q, tr in zip((v, w), trs):
        out, rt = run_query(alg, tree, tree.node_of_id[tr.query], cfg)
        if rt.steps != tr.steps or out != tr.outcome:
            raise AssertionError(f"replay at core node {q} diverged from the host run")
        replays.append(rt)
    return FoolingCertificate(v, w, color, tree, (replays[0], replays[1]))


def check_certificate(alg: Callable, cert: FoolingCertificate) -> str | None:
    """Independent check: tree shape, unique IDs, adjacency of v and w, and equal replayed colors."""
    t = cert.tree
    try:
        t.validate()
    except ValueError as exc:
        return str(exc)
    if t.edge_count != t.n - 1 or len(bfs_distances(t, 0)) != t.n:
        return "certificate graph is not a tree"
    a, b = cert.tree_v, cert.tree_w
    if b not in t.neighbors(a):
        return "v and w are not adjacent in the tree"
    cfg = ModelConfig(model="VOLUME", randomness="none")
    out_a, _ = run_query(alg, t, a, cfg)
    out_b, _ = run_query(alg, t, b, cfg)
    if out_a != out_b:
        return f"replayed colors differ: {out_a} vs {out_b}"
    return None


# ---------------------------------------------------------------------------
# baseline 2-coloring algorithms


def constant_coloring() -> ProbeAlgorithm:
    return ProbeAlgorithm(lambda oracle, q: 1, alphabet=[1, 2], name="constant")


def parity_guess() -> ProbeAlgorithm:
    """Colors by the parity of the node's own ID."""
    return ProbeAlgorithm(lambda oracle, q: 1 + q % 2, alphabet=[1, 2], name="parity-guess")


def greedy_bfs_coloring(budget: int) -> ProbeAlgorithm:
    """BFS until ``budget`` probes, then 2-color by distance parity from the smallest ID seen."""

    def run(oracle, q: int) -> int:
        dist = {q: 0}
        queue = deque([q])
        probes = 0
        while queue and probes < budget:
            x = queue.popleft()
            for p in range(1, oracle.degree(x) + 1):
                if probes >= budget:
                    break
                a = oracle.probe(x, p)
                probes += 1
                if a.id not in dist:
                    dist[a.id] = dist[x] + 1
                    queue.append(a.id)
        anchor = min(dist)
        return 1 + dist[anchor] % 2

    return ProbeAlgorithm(run, alphabet=[1, 2], name=f"greedy-bfs-{budget}")


def deep_probe(depth: int) -> ProbeAlgorithm:
    """Explores the full radius-``depth`` ball; used to provoke far-vertex escapes."""

    def run(oracle, q: int) -> int:
        frontier = [q]
        seen = {q}
        for _ in range(depth):
            nxt = []
            for x in frontier:
                for p in range(1, oracle.degree(x) + 1):
                    a = oracle.probe(x, p)
                    if a.id not in seen:
                        seen.add(a.id)
                        nxt.append(a.id)
            frontier = nxt
        return 1 + q % 2

    return ProbeAlgorithm(run, alphabet=[1, 2], name=f"deep-{depth}")


def baseline(name: str, girth_value: float) -> ProbeAlgorithm:
    if name == "constant":
        return constant_coloring()
    if name == "parity-guess":
        return parity_guess()
    if name == "greedy-bfs":
        return greedy_bfs_coloring(max(1, int(girth_value // 8)))
    raise ValueError(f"unknown baseline {name!r}; choose constant, greedy-bfs or parity-guess")


BASELINES = ("constant", "greedy-bfs", "parity-guess")


# ---------------------------------------------------------------------------
# probability experiments


def birthday_bound(q: int, m: int) -> float:
    return q * (q - 1) / (2 * m)


def duplicate_id_rate(q: int, m: int, trials: int, seed: int = 0, *, chunk: int = 20_000) -> float:
    """Fraction of trials in which q uniform draws from [m] contain a repeat."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    if q < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, trials, chunk):
        k = min(chunk, trials - start)
        draws = np.sort(rng.integers(0, m, size=(k, q)), axis=1)
        hits += int(np.any(draws[:, 1:] == draws[:, :-1], axis=1).sum())
    return hits / trials


STRATEGIES = ("prefix", "random", "port-guided")


def _strategy_set(strategy: str, N: int, I_size: int, rng: np.random.Generator, parent_ports: np.ndarray) -> np.ndarray:
    if strategy == "prefix":
        return np.arange(I_size)
    if strategy == "random":
        return rng.choice(N, I_size, replace=False)
    if strategy == "port-guided":
        # follows the revealed parent ports, which carry no information about marks
        start = int(parent_ports.sum()) % N
        return (start + np.arange(I_size) * max(1, N // I_size)) % N
    raise ValueError(f"unknown strategy {strategy!r}")


def guessing_game(N: int, n_marked: int, I_size: int, strategy: str, trials: int, seed: int = 0) -> float:
    """Win rate of a strategy naming ``I_size`` of ``N`` slots when ``n_marked`` are secretly marked."""
    if not 0 <= I_size <= n_marked <= N:
        raise ValueError("need I_size <= n_marked <= N")
    rng = np.random.default_rng(seed)
    wins = 0
    for _ in range(trials):
        marked = np.zeros(N, dtype=bool)
        marked[rng.choice(N, n_marked, replace=False)] = True
        parent_ports = rng.integers(1, 4, size=8)
        guess = _strategy_set(strategy, N, I_size, rng, parent_ports)
        wins += bool(marked[guess].any())
    return wins / trials


def guessing_bound(N: int, n_marked: int, I_size: int) -> float:
    return I_size * n_marked / N
