"""Ported bounded-degree graphs, generators, and solution checkers."""
from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain
from typing import Any, Hashable, Iterable, Iterator, Sequence

import numpy as np

OUT = "OUT"
IN = "IN"

FORMAT_VERSION = 1


class GraphFormatError(ValueError):
    """Raised when a graph or labeling file cannot be parsed."""


class InfeasibleParameters(ValueError):
    """Raised when a generator cannot satisfy its parameters."""


@dataclass(frozen=True)
class PortedGraph:
    """Finite graph with a port numbering at every node.

    ``adj[v][p - 1] == (u, q)`` means port ``p`` of node ``v`` leads to node
    ``u`` and arrives there on port ``q``. Nodes are indexed ``0..n-1``;
    ``ids`` holds the identifiers the probe model exposes.
    """

    ids: tuple[int, ...]
    adj: tuple[tuple[tuple[int, int], ...], ...]
    delta: int
    edge_colors: tuple[tuple[int, ...], ...] | None = None
    input_labels: tuple[tuple[Hashable, ...], ...] | None = None

    @property
    def n(self) -> int:
        return len(self.adj)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbor(self, v: int, port: int) -> tuple[int, int]:
        return self.adj[v][port - 1]

    def neighbors(self, v: int) -> list[int]:
        return [u for u, _ in self.adj[v]]

    @cached_property
    def node_of_id(self) -> dict[int, int]:
        return {i: v for v, i in enumerate(self.ids)}

    @cached_property
    def id_rows(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Adjacency by identifier: id -> ((neighbor id, reciprocal port), ...) in port order."""
        ids = self.ids
        return {ids[v]: tuple((ids[u], q) for u, q in row) for v, row in enumerate(self.adj)}

    @cached_property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def edges(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield every edge once as ``(v, p, u, q)`` with ``(v, p) < (u, q)``."""
        for v, row in enumerate(self.adj):
            for p, (u, q) in enumerate(row, start=1):
                if (v, p) < (u, q):
                    yield v, p, u, q

    def half_edges(self) -> Iterator[tuple[int, int]]:
        for v, row in enumerate(self.adj):
            for p in range(1, len(row) + 1):
                yield v, p

    def color(self, v: int, port: int) -> int:
        if self.edge_colors is None:
            raise ValueError("graph carries no edge coloring")
        return self.edge_colors[v][port - 1]

    def label(self, v: int, port: int) -> Hashable:
        if self.input_labels is None:
            return None
        return self.input_labels[v][port - 1]

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.blake2b(graph_to_json(self).encode(), digest_size=16).hexdigest()

    def with_ids(self, ids: Sequence[int]) -> PortedGraph:
        if len(ids) != self.n:
            raise ValueError("id list length does not match node count")
        return PortedGraph(tuple(ids), self.adj, self.delta, self.edge_colors, self.input_labels)

    def validate(self, *, unique_ids: bool = True) -> None:
        """Check port reciprocity, the degree bound, coloring and ID uniqueness."""
        if len(self.ids) != self.n:
            raise ValueError("ids and adjacency disagree on node count")
        for v, row in enumerate(self.adj):
            if len(row) > self.delta:
                raise ValueError(f"node {v} has degree {len(row)} > delta {self.delta}")
            for p, (u, q) in enumerate(row, start=1):
                if not (0 <= u < self.n) or not (1 <= q <= len(self.adj[u])):
                    raise ValueError(f"half-edge ({v},{p}) points outside the graph")
                if self.adj[u][q - 1] != (v, p):
                    raise ValueError(f"ports not reciprocal at ({v},{p})")
        if unique_ids and len(set(self.ids)) != self.n:
            raise ValueError("identifiers are not unique")
        if self.edge_colors is not None:
            for v, row in enumerate(self.adj):
                cols = self.edge_colors[v]
                if len(cols) != len(row):
                    raise ValueError(f"edge colors missing at node {v}")
                if len(set(cols)) != len(cols):
                    raise ValueError(f"edge coloring not proper at node {v}")
                for p, (u, q) in enumerate(row, start=1):
                    if self.edge_colors[u][q - 1] != cols[p - 1]:
                        raise ValueError(f"edge color differs across edge ({v},{p})")
                    if not 1 <= cols[p - 1] <= self.delta:
                        raise ValueError(f"edge color out of range at ({v},{p})")


def from_edges(
    n: int,
    edges: Iterable[tuple[int, int]],
    *,
    ids: Sequence[int] | None = None,
    delta: int | None = None,
    colors: Sequence[int] | None = None,
) -> PortedGraph:
    """Build a graph assigning ports in edge order. ``colors`` aligns with ``edges``."""
    rows: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    crow: list[list[int]] = [[] for _ in range(n)]
    edges = list(edges)
    for k, (a, b) in enumerate(edges):
        if a == b:
            raise ValueError(f"self-loop at {a}")
        pa, pb = len(rows[a]) + 1, len(rows[b]) + 1
        rows[a].append((b, pb))
        rows[b].append((a, pa))
        if colors is not None:
            crow[a].append(colors[k])
            crow[b].append(colors[k])
    maxdeg = max((len(r) for r in rows), default=0)
    return PortedGraph(
        ids=tuple(ids) if ids is not None else tuple(range(1, n + 1)),
        adj=tuple(tuple(r) for r in rows),
        delta=delta if delta is not None else max(maxdeg, 1),
        edge_colors=tuple(tuple(c) for c in crow) if colors is not None else None,
    )


def path_graph(n: int, delta: int = 2) -> PortedGraph:
    return from_edges(n, [(i, i + 1) for i in range(n - 1)], delta=delta)


def cycle_graph(n: int, delta: int = 2) -> PortedGraph:
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)], delta=delta)


def complete_graph(n: int) -> PortedGraph:
    return from_edges(n, [(a, b) for a in range(n) for b in range(a + 1, n)], delta=max(n - 1, 1))


def star_graph(leaves: int) -> PortedGraph:
    return from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)], delta=max(leaves, 1))


def edge_list(g: PortedGraph) -> list[tuple[int, int]]:
    return [(v, u) for v, _, u, _ in g.edges()]


# ---------------------------------------------------------------------------
# generators


def gen_edge_colored_tree(n: int, delta: int, seed: int) -> PortedGraph:
    """Random tree with max degree ``delta`` and a proper edge coloring in [delta]."""
    if n < 1 or delta < 2:
        raise ValueError("need n >= 1 and delta >= 2")
    rng = random.Random(seed)
    deg = [0] * n
    open_nodes = [0]
    edges = []
    for i in range(1, n):
        j = open_nodes[rng.randrange(len(open_nodes))]
        edges.append((j, i))
        deg[j] += 1
        deg[i] += 1
        if deg[j] == delta:
            open_nodes.remove(j)
        open_nodes.append(i)
    g = from_edges(n, edges, delta=delta)
    return with_greedy_edge_coloring(g)


def with_greedy_edge_coloring(g: PortedGraph) -> PortedGraph:
    """Greedy smallest-free-color edge coloring in BFS order (proper with delta colors on trees)."""
    cols: list[list[int]] = [[0] * g.degree(v) for v in range(g.n)]
    seen = [False] * g.n
    for root in range(g.n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for p, (u, q) in enumerate(g.adj[v], start=1):
                if cols[v][p - 1] == 0:
                    used = set(cols[v]) | set(cols[u])
                    c = next(c for c in range(1, g.delta + 2 * g.delta) if c not in used)
                    if c > g.delta:
                        raise InfeasibleParameters("greedy edge coloring needs more than delta colors")
                    cols[v][p - 1] = c
                    cols[u][q - 1] = c
                if not seen[u]:
                    seen[u] = True
                    queue.append(u)
    return PortedGraph(g.ids, g.adj, g.delta, tuple(tuple(c) for c in cols), g.input_labels)


def _pairing(n: int, d: int, rng: random.Random) -> set[tuple[int, int]] | None:
    # configuration model; clashing stubs are re-paired among themselves
    edges: set[tuple[int, int]] = set()
    stubs = [v for v in range(n) for _ in range(d)]
    while stubs:
        rng.shuffle(stubs)
        leftover: list[int] = []
        it = iter(stubs)
        for a, b in zip(it, it):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover += [a, b]
        if len(leftover) == len(stubs):
            return None
        stubs = leftover
    return edges


def _short_cycle_through(adj: list[set[int]], s: int, limit: int) -> list[int] | None:
    """Shortest cycle through ``s`` of length < ``limit`` as a node list, or None."""
    dist = {s: 0}
    parent = {s: -1}
    branch = {s: s}
    queue = deque([s])
    best = None
    while queue:
        v = queue.popleft()
        if 2 * dist[v] + 1 >= limit:
            break
        for u in sorted(adj[v]):
            if u == parent[v]:
                continue
            if u not in dist:
                dist[u] = dist[v] + 1
                parent[u] = v
                branch[u] = u if v == s else branch[v]
                queue.append(u)
            elif branch[u] != branch[v]:
                length = dist[u] + dist[v] + 1
                if length < limit and (best is None or length < best[0]):
                    best = (length, v, u)
    if best is None:
        return None
    _, a, b = best

    def up(x: int) -> list[int]:
        out = []
        while x != -1:
            out.append(x)
            x = parent[x]
        return out

    pa, pb = up(a), up(b)
    return list(reversed(pa)) + pb[:-1]


def _distance_at_least(adj: list[set[int]], a: int, b: int, bound: int) -> bool:
    """True iff dist(a, b) >= bound (BFS truncated at depth bound - 1)."""
    if a == b:
        return False
    dist = {a: 0}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if dist[v] >= bound - 1:
            continue
        for u in adj[v]:
            if u not in dist:
                if u == b:
                    return False
                dist[u] = dist[v] + 1
                queue.append(u)
    return True


def girth_boost(adj: list[set[int]], girth_target: int) -> int:
    """Delete the smallest edge of each cycle shorter than ``girth_target``; return deletions."""
    deleted = 0
    for s in range(len(adj)):
        while True:
            cyc = _short_cycle_through(adj, s, girth_target)
            if cyc is None:
                break
            pairs = [tuple(sorted((cyc[i], cyc[(i + 1) % len(cyc)]))) for i in range(len(cyc))]
            a, b = min(pairs)
            adj[a].discard(b)
            adj[b].discard(a)
            deleted += 1
    return deleted


def _repair(adj: list[set[int]], d: int, girth_target: int, rng: random.Random) -> None:
    # re-add girth-safe edges between degree-deficient nodes
    deficient = [v for v in range(len(adj)) if len(adj[v]) < d]
    rng.shuffle(deficient)
    for i, a in enumerate(deficient):
        for b in deficient[i + 1:]:
            if len(adj[a]) >= d:
                break
            if len(adj[b]) >= d or b in adj[a]:
                continue
            if _distance_at_least(adj, a, b, girth_target - 1):
                adj[a].add(b)
                adj[b].add(a)


def gen_random_regular(n: int, delta: int, girth_target: int, seed: int, *, attempts: int = 16) -> PortedGraph:
    """Pairing-model ``delta``-regular graph, girth boosted to ``girth_target``.

    Short cycles are broken by deleting their lexicographically smallest edge;
    degree-deficient nodes are then reconnected where that keeps the girth.
    Raises :class:`InfeasibleParameters` when more than n/4 edges stay deleted
    in every attempt.
    """
    if (n * delta) % 2:
        raise ValueError("n * delta must be even")
    if girth_target < 3:
        raise ValueError("girth_target must be >= 3")
    if not 0 < delta < n:
        raise ValueError("need 0 < delta < n")
    rng = random.Random(seed)
    worst = 0
    for _ in range(attempts):
        edges = _pairing(n, delta, rng)
        if edges is None:
            continue
        adj = [set() for _ in range(n)]
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        if girth_target > 3:
            girth_boost(adj, girth_target)
            _repair(adj, delta, girth_target, rng)
        missing = n * delta // 2 - sum(len(a) for a in adj) // 2
        worst = missing
        if missing <= n / 4:
            ordered = sorted((a, b) for a in range(n) for b in adj[a] if a < b)
            ports = list(range(len(ordered)))
            rng.shuffle(ports)
            return from_edges(n, [ordered[i] for i in ports], delta=delta)
    raise InfeasibleParameters(
        f"girth boosting left {worst} edges deleted (> n/4 = {n / 4:g}) for n={n}, delta={delta}, girth={girth_target}"
    )


def with_random_ids(g: PortedGraph, id_range: int, seed: int) -> PortedGraph:
    """Unique identifiers drawn uniformly from [1, id_range]."""
    if id_range < g.n:
        raise ValueError("id range smaller than node count")
    rng = random.Random(seed)
    if id_range <= 1 << 62:
        return g.with_ids(rng.sample(range(1, id_range + 1), g.n))
    seen: dict[int, None] = {}
    while len(seen) < g.n:
        seen.setdefault(rng.randrange(id_range) + 1)
    return g.with_ids(list(seen))


# ---------------------------------------------------------------------------
# distances and power graphs


def bfs_distances(g: PortedGraph, s: int, limit: int | None = None) -> dict[int, int]:
    dist = {s: 0}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        if limit is not None and dist[v] >= limit:
            continue
        for u, _ in g.adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _dedupe_rows(a: np.ndarray, pad: int) -> np.ndarray:
    a = np.where(a == np.arange(len(a))[:, None], pad, a)
    a.sort(axis=1)
    a[:, 1:][a[:, 1:] == a[:, :-1]] = pad
    a.sort(axis=1)
    width = int((a != pad).sum(axis=1).max(initial=0))
    return a[:, : max(width, 1)]


def ball_table(nb: np.ndarray, k: int) -> np.ndarray:
    """Nodes within ``k`` hops of each row, sorted, excluding the row itself.

    ``nb`` holds neighbor indices padded with ``len(nb)``; the result uses the same padding.
    """
    n = len(nb)
    if n == 0:
        return np.zeros((0, 1), dtype=np.int64)
    reach = _dedupe_rows(nb.copy(), n)
    for _ in range(k - 1):
        ext = np.vstack([reach, np.full((1, reach.shape[1]), n, dtype=reach.dtype)])
        reach = _dedupe_rows(np.hstack([reach, ext[nb].reshape(n, -1)]), n)
    return reach


def padded(rows: Sequence[Sequence[int]], pad: int) -> np.ndarray:
    """Ragged integer rows as a rectangular array filled out with ``pad``."""
    lengths = np.fromiter(map(len, rows), dtype=np.int64, count=len(rows))
    width = int(lengths.max(initial=0))
    out = np.full((len(rows), max(width, 1)), pad, dtype=np.int64)
    out[np.arange(out.shape[1]) < lengths[:, None]] = np.fromiter(chain.from_iterable(rows), dtype=np.int64)
    return out


def power_graph(g: PortedGraph, k: int) -> PortedGraph:
    """Same nodes; an edge whenever the distance in ``g`` is in [1, k].

    Ports are assigned in increasing neighbor-ID order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    nbrs = []
    for v in range(g.n):
        dist = bfs_distances(g, v, k)
        nbrs.append(sorted((u for u in dist if u != v), key=lambda u: g.ids[u]))
    index = [{u: p for p, u in enumerate(row, start=1)} for row in nbrs]
    adj = tuple(tuple((u, index[u][v]) for u in row) for v, row in enumerate(nbrs))
    maxdeg = max((len(r) for r in adj), default=0)
    return PortedGraph(g.ids, adj, max(maxdeg, 1))


def girth(g: PortedGraph) -> float:
    """Length of the shortest cycle (``inf`` for forests)."""
    adj = [set(g.neighbors(v)) for v in range(g.n)]
    best = float("inf")
    for s in range(g.n):
        limit = int(best) if best != float("inf") else g.n + 1
        cyc = _short_cycle_through(adj, s, limit)
        if cyc is not None:
            best = min(best, len(cyc))
    return best


def is_forest(g: PortedGraph) -> bool:
    seen = [False] * g.n
    comps = 0
    for s in range(g.n):
        if seen[s]:
            continue
        comps += 1
        seen[s] = True
        stack = [s]
        while stack:
            v = stack.pop()
            for u, _ in g.adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
    return g.edge_count == g.n - comps


def is_connected(g: PortedGraph) -> bool:
    return g.n == 0 or len(bfs_distances(g, 0)) == g.n


# ---------------------------------------------------------------------------
# labelings and checkers


@dataclass(frozen=True)
class HalfEdgeLabeling:
    """Output symbol per half-edge ``(node, port)``."""

    labels: dict[tuple[int, int], Hashable] = field(default_factory=dict)

    def __getitem__(self, key: tuple[int, int]) -> Hashable:
        return self.labels[key]

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_node_colors(cls, g: PortedGraph, colors: Sequence[int]) -> HalfEdgeLabeling:
        return cls({(v, p): colors[v] for v, p in g.half_edges()})

    @classmethod
    def from_orientation(cls, g: PortedGraph, tail_of: dict[tuple[int, int], int]) -> HalfEdgeLabeling:
        """``tail_of`` maps each edge ``(v, p)`` (as yielded by ``edges()``) to its tail node."""
        labels = {}
        for v, p, u, q in g.edges():
            t = tail_of[(v, p)]
            labels[(v, p)] = OUT if t == v else IN
            labels[(u, q)] = OUT if t == u else IN
        return cls(labels)

    def node_color(self, v: int) -> Hashable:
        for (x, _), s in self.labels.items():
            if x == v:
                return s
        return None


@dataclass(frozen=True)
class Problem:
    kind: str  # "sinkless" | "coloring" | "edge-coloring"
    param: int = 0

    @classmethod
    def sinkless(cls, min_deg: int = 3) -> Problem:
        return cls("sinkless", min_deg)

    @classmethod
    def coloring(cls, c: int) -> Problem:
        return cls("coloring", c)

    @classmethod
    def edge_coloring(cls) -> Problem:
        return cls("edge-coloring")

    @classmethod
    def parse(cls, text: str) -> Problem:
        name, _, arg = text.partition(":")
        if name == "sinkless":
            return cls.sinkless(int(arg or 3))
        if name == "coloring":
            return cls.coloring(int(arg))
        if name == "edge-coloring":
            return cls.edge_coloring()
        raise ValueError(f"unknown problem {text!r}")


@dataclass(frozen=True)
class Verdict:
    valid: bool
    reason: str = ""
    node: int | None = None
    port: int | None = None

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        where = f" at node {self.node}" if self.node is not None else ""
        where += f" port {self.port}" if self.port is not None else ""
        return f"invalid{where}: {self.reason}"


def _check_alphabet(sol: HalfEdgeLabeling, problem: Problem) -> None:
    if problem.kind == "sinkless":
        bad = [s for s in sol.labels.values() if s not in (OUT, IN)]
    elif problem.kind in ("coloring", "edge-coloring"):
        bad = [s for s in sol.labels.values() if not isinstance(s, int) or isinstance(s, bool)]
    else:
        raise ValueError(f"unknown problem kind {problem.kind!r}")
    if bad:
        raise ValueError(f"labels {bad[:3]!r} not in the {problem.kind} alphabet")


def verify_solution(g: PortedGraph, sol: HalfEdgeLabeling, problem: Problem) -> Verdict:
    """Check ``sol`` against ``problem``; return the first violation found.

    Raises ``ValueError`` when the labeling uses a foreign alphabet.
    """
    _check_alphabet(sol, problem)
    labels = sol.labels
    for v, p in g.half_edges():
        if (v, p) not in labels:
            return Verdict(False, "missing half-edge label", v, p)
    if problem.kind == "sinkless":
        for v, p, u, q in g.edges():
            if (labels[(v, p)] == OUT) == (labels[(u, q)] == OUT):
                return Verdict(False, "edge orientation inconsistent", v, p)
        for v in range(g.n):
            d = g.degree(v)
            if d >= problem.param and all(labels[(v, p)] != OUT for p in range(1, d + 1)):
                return Verdict(False, "sink", v)
    elif problem.kind == "coloring":
        c = problem.param
        for v in range(g.n):
            cols = {labels[(v, p)] for p in range(1, g.degree(v) + 1)}
            if len(cols) > 1:
                return Verdict(False, "node half-edges disagree on color", v)
            if cols and not 1 <= next(iter(cols)) <= c:
                return Verdict(False, f"color outside [{c}]", v)
        for v, p, u, q in g.edges():
            if labels[(v, p)] == labels[(u, q)]:
                return Verdict(False, "monochromatic edge", v, p)
    else:
        for v, p, u, q in g.edges():
            if labels[(v, p)] != labels[(u, q)]:
                return Verdict(False, "edge color differs across edge", v, p)
            if not 1 <= labels[(v, p)] <= g.delta:
                return Verdict(False, "edge color outside [delta]", v, p)
        for v in range(g.n):
            cols = [labels[(v, p)] for p in range(1, g.degree(v) + 1)]
            if len(set(cols)) != len(cols):
                return Verdict(False, "two edges share a color", v)
    return Verdict(True)


def edge_coloring_labeling(g: PortedGraph) -> HalfEdgeLabeling:
    return HalfEdgeLabeling({(v, p): g.color(v, p) for v, p in g.half_edges()})


# ---------------------------------------------------------------------------
# file formats


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def graph_to_json(g: PortedGraph) -> str:
    obj: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "n": g.n,
        "delta": g.delta,
        "ids": list(g.ids),
        "adjacency": [[[p, u, q] for p, (u, q) in enumerate(row, start=1)] for row in g.adj],
    }
    if g.edge_colors is not None:
        obj["edge_colors"] = [list(c) for c in g.edge_colors]
    if g.input_labels is not None:
        obj["input_labels"] = [list(c) for c in g.input_labels]
    return _dumps(obj)


def graph_from_json(text: str) -> PortedGraph:
    obj = _loads(text)
    try:
        if obj["version"] != FORMAT_VERSION:
            raise GraphFormatError(f"unsupported version {obj['version']}")
        adj = []
        for v, row in enumerate(obj["adjacency"]):
            ports = [tuple(x) for x in row]
            if [p for p, _, _ in ports] != list(range(1, len(ports) + 1)):
                raise GraphFormatError(f"node {v}: ports must be 1..deg in order")
            adj.append(tuple((u, q) for _, u, q in ports))
        g = PortedGraph(
            ids=tuple(obj["ids"]),
            adj=tuple(adj),
            delta=obj["delta"],
            edge_colors=tuple(tuple(c) for c in obj["edge_colors"]) if "edge_colors" in obj else None,
            input_labels=tuple(tuple(c) for c in obj["input_labels"]) if "input_labels" in obj else None,
        )
        if g.n != obj["n"]:
            raise GraphFormatError("field n disagrees with adjacency length")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"malformed graph record: {exc!r}") from None
    try:
        g.validate(unique_ids=False)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None
    return g


def labeling_to_json(sol: HalfEdgeLabeling) -> str:
    rows = [[v, p, s] for (v, p), s in sorted(sol.labels.items())]
    return _dumps({"version": FORMAT_VERSION, "kind": "half-edge-labeling", "labels": rows})


def labeling_from_json(text: str) -> HalfEdgeLabeling:
    obj = _loads(text)
    try:
        if obj.get("kind") != "half-edge-labeling":
            raise GraphFormatError("not a half-edge labeling record")
        return HalfEdgeLabeling({(int(v), int(p)): s for v, p, s in obj["labels"]})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"malformed labeling record: {exc!r}") from None
