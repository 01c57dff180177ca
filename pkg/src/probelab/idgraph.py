"""Layered identifier graphs: construction, verification, labelings and 0-round checks."""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .graph import GraphFormatError, InfeasibleParameters, PortedGraph

EXACT_MIS_LIMIT = 64
EXHAUSTIVE_ZERO_ROUND_LIMIT = 16
ELIMINATION_LIMIT = 12
DEFAULT_RETRIES = 16


class TableTooLarge(ValueError):
    """Raised when a lookup table over views would be too large to enumerate."""


class LabelingInfeasible(InfeasibleParameters):
    """Raised when no injective proper labeling of a tree exists."""


@dataclass(frozen=True)
class IdGraph:
    """``delta`` graphs on the common vertex set ``0..nV-1``.

    ``layers[c - 1]`` holds the edges of layer ``c`` as sorted pairs.
    """

    nV: int
    delta: int
    R: int
    layers: tuple[frozenset[tuple[int, int]], ...]

    def __post_init__(self) -> None:
        if len(self.layers) != self.delta:
            raise ValueError(f"expected {self.delta} layers, got {len(self.layers)}")
        for c, layer in enumerate(self.layers, start=1):
            for a, b in layer:
                if not (0 <= a < b < self.nV):
                    raise ValueError(f"layer {c}: edge ({a},{b}) is not a sorted pair inside [0,{self.nV})")

    @classmethod
    def from_layers(cls, nV: int, layers: Sequence[Iterable[tuple[int, int]]], R: int = 1) -> IdGraph:
        norm = tuple(frozenset((min(a, b), max(a, b)) for a, b in layer) for layer in layers)
        return cls(nV, len(norm), R, norm)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """``adjacency[c - 1][v]``: sorted neighbors of ``v`` in layer ``c``."""
        out = []
        for layer in self.layers:
            nb: list[list[int]] = [[] for _ in range(self.nV)]
            for a, b in layer:
                nb[a].append(b)
                nb[b].append(a)
            out.append(tuple(tuple(sorted(x)) for x in nb))
        return tuple(out)

    def neighbors(self, c: int, v: int) -> tuple[int, ...]:
        return self.adjacency[c - 1][v]

    def adjacent(self, c: int, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.layers[c - 1]

    def degree(self, c: int, v: int) -> int:
        return len(self.adjacency[c - 1][v])

    def union_edges(self) -> list[tuple[int, int, int]]:
        """Multiset union as ``(a, b, layer)`` triples."""
        return [(a, b, c) for c, layer in enumerate(self.layers, start=1) for a, b in sorted(layer)]

    @property
    def edge_count(self) -> int:
        return sum(len(x) for x in self.layers)


# ---------------------------------------------------------------------------
# file format


def id_graph_to_text(h: IdGraph) -> str:
    lines = [f"idgraph {h.nV} {h.delta} {h.R}"]
    for c, layer in enumerate(h.layers, start=1):
        lines.append(f"layer {c} {len(layer)}")
        lines.extend(f"{a} {b}" for a, b in sorted(layer))
    return "\n".join(lines) + "\n"


def id_graph_from_text(text: str) -> IdGraph:
    rows = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip() and not ln.startswith("#")]
    last = len(text.splitlines())

    def ints(lineno: int, parts: Sequence[str]) -> list[int]:
        try:
            return [int(x) for x in parts]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected integers, got {' '.join(parts)!r}") from None

    if not rows or rows[0][1][:1] != ["idgraph"] or len(rows[0][1]) != 4:
        raise GraphFormatError("line 1: expected header 'idgraph nV delta R'")
    nV, delta, R = ints(rows[0][0], rows[0][1][1:])
    layers: list[list[tuple[int, int]]] = []
    pos = 1
    for c in range(1, delta + 1):
        if pos >= len(rows):
            raise GraphFormatError(f"line {last + 1}: missing 'layer {c}' block")
        lineno, head = rows[pos]
        if head[:2] != ["layer", str(c)] or len(head) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'layer {c} <edge count>'")
        (m,) = ints(lineno, head[2:])
        edges = []
        for lineno, parts in rows[pos + 1 : pos + 1 + m]:
            if len(parts) != 2:
                raise GraphFormatError(f"line {lineno}: expected two vertex numbers")
            a, b = ints(lineno, parts)
            if a == b or not (0 <= a < nV and 0 <= b < nV):
                raise GraphFormatError(f"line {lineno}: edge ({a},{b}) is not inside [0,{nV}) or is a loop")
            edges.append((a, b))
        if len(edges) != m:
            raise GraphFormatError(f"line {last + 1}: layer {c} declares {m} edges, found {len(edges)}")
        layers.append(edges)
        pos += 1 + m
    if pos != len(rows):
        raise GraphFormatError(f"line {rows[pos][0]}: trailing content")
    try:
        return IdGraph.from_layers(nV, layers, R)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


# ---------------------------------------------------------------------------
# maximum independent set on bitsets


def _masks(nV: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    nb = [0] * nV
    for a, b in edges:
        nb[a] |= 1 << b
        nb[b] |= 1 << a
    return nb


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _clique_cover_bound(cand: int, nb: Sequence[int]) -> int:
    """Greedy partition of ``cand`` into cliques; an independent set meets each clique at most once."""
    count = 0
    while cand:
        v = (cand & -cand).bit_length() - 1
        cand &= ~(1 << v)
        common = cand & nb[v]
        while common:
            u = (common & -common).bit_length() - 1
            cand &= ~(1 << u)
            common &= nb[u]
        count += 1
    return count


def max_independent_set(nV: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    """Exact maximum independent set by branch and bound (intended for nV <= 64)."""
    nb = _masks(nV, edges)
    best = 0
    best_size = 0

    def rec(cand: int, chosen: int, size: int) -> None:
        nonlocal best, best_size
        # vertices of degree <= 1 inside cand can always be taken
        while True:
            forced = next((v for v in _bits(cand) if (nb[v] & cand).bit_count() <= 1), None)
            if forced is None:
                break
            chosen |= 1 << forced
            size += 1
            cand &= ~(nb[forced] | (1 << forced))
        if not cand:
            if size > best_size:
                best, best_size = chosen, size
            return
        if size + cand.bit_count() <= best_size:
            return
        if size + _clique_cover_bound(cand, nb) <= best_size:
            return
        v = max(_bits(cand), key=lambda x: (nb[x] & cand).bit_count())
        rec(cand & ~(nb[v] | (1 << v)), chosen | (1 << v), size + 1)
        rec(cand & ~(1 << v), chosen, size)

    rec((1 << nV) - 1, 0, 0)
    return list(_bits(best))


def is_independent(h: IdGraph, c: int, vertices: Iterable[int]) -> bool:
    vs = list(vertices)
    return not any(h.adjacent(c, a, b) for a, b in itertools.combinations(vs, 2))


# ---------------------------------------------------------------------------
# girth of the union multigraph


def union_girth(h: IdGraph, stop_below: int | None = None) -> tuple[float, list[int]]:
    """Girth of the multiset union of all layers, with a shortest cycle as witness.

    Parallel edges from different layers form cycles of length 2. With
    ``stop_below`` the search returns as soon as a cycle shorter than it is found.
    """
    seen: dict[tuple[int, int], int] = {}
    for a, b, _ in h.union_edges():
        if (a, b) in seen:
            return 2.0, [a, b]
        seen[(a, b)] = 1
    adj: list[list[int]] = [[] for _ in range(h.nV)]
    for a, b in seen:
        adj[a].append(b)
        adj[b].append(a)
    best = float("inf")
    witness: list[int] = []
    for a, b in sorted(seen):
        # shortest a-b path avoiding the edge itself
        limit = best - 1
        parent = {a: a}
        dist = {a: 0}
        queue = deque([a])
        found = False
        while queue and not found:
            x = queue.popleft()
            if dist[x] + 1 >= limit:
                break
            for y in adj[x]:
                if (x == a and y == b) or y in parent:
                    continue
                parent[y] = x
                dist[y] = dist[x] + 1
                if y == b:
                    found = True
                    break
                queue.append(y)
        if found:
            best = dist[b] + 1
            path = [b]
            while path[-1] != a:
                path.append(parent[path[-1]])
            witness = path[::-1]
            if stop_below is not None and best < stop_below:
                break
    return best, witness


# ---------------------------------------------------------------------------
# property report


@dataclass(frozen=True)
class PropertyCheck:
    status: str  # "pass", "fail", "waived" or "not exactly verified"
    detail: str
    witness: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class IdGraphReport:
    checks: Mapping[int, PropertyCheck]
    girth: float
    max_independent: tuple[int, ...] = field(default=())

    def passes(self, props: Iterable[int] = (1, 3, 4, 5)) -> bool:
        return all(self.checks[p].ok for p in props)

    def lines(self) -> list[str]:
        return [f"P{p} {c.status}: {c.detail}" for p, c in sorted(self.checks.items())]


def degree_cap(delta: int) -> int:
    return delta**10


def verify_id_graph(h: IdGraph, *, exact_limit: int = EXACT_MIS_LIMIT) -> IdGraphReport:
    checks: dict[int, PropertyCheck] = {}
    stray = [(c, e) for c, layer in enumerate(h.layers, start=1) for e in layer if max(e) >= h.nV]
    checks[1] = (
        PropertyCheck("fail", f"layer {stray[0][0]} edge {stray[0][1]} leaves the vertex set", stray[0])
        if stray
        else PropertyCheck("pass", f"all {h.delta} layers share {h.nV} vertices")
    )
    target = h.delta ** (10 * h.R)
    checks[2] = (
        PropertyCheck("pass", f"nV = {target}")
        if h.nV == target
        else PropertyCheck("waived", f"desk scale: nV = {h.nV}, nominal size {h.delta}^{10 * h.R}")
    )
    cap = degree_cap(h.delta)
    bad = next(
        ((v, c, h.degree(c, v)) for c in range(1, h.delta + 1) for v in range(h.nV) if not 1 <= h.degree(c, v) <= cap),
        None,
    )
    checks[3] = (
        PropertyCheck("fail", f"vertex {bad[0]} has degree {bad[2]} in layer {bad[1]}", bad)
        if bad
        else PropertyCheck("pass", f"every layer degree in [1, {cap}]")
    )
    need = 10 * h.R
    g, cyc = union_girth(h, stop_below=need)
    checks[4] = (
        PropertyCheck("pass", f"girth {g} >= {need}")
        if g >= need
        else PropertyCheck("fail", f"cycle of length {int(g)} < {need}", tuple(cyc))
    )
    sizes = []
    if h.nV > exact_limit:
        checks[5] = PropertyCheck("not exactly verified", f"nV = {h.nV} exceeds the exact limit {exact_limit}")
    else:
        fail = None
        for c, layer in enumerate(h.layers, start=1):
            mis = max_independent_set(h.nV, layer)
            sizes.append(len(mis))
            if fail is None and len(mis) * h.delta >= h.nV:
                fail = (c, tuple(mis))
        checks[5] = (
            PropertyCheck("fail", f"layer {fail[0]} has an independent set of size {len(fail[1])} >= nV/delta", fail)
            if fail
            else PropertyCheck("pass", f"max independent sets {sizes} all < {h.nV}/{h.delta}")
        )
    return IdGraphReport(checks, g, tuple(sizes))


# ---------------------------------------------------------------------------
# construction


def moore_bound(min_degree: int, girth_target: int) -> int:
    """Fewest vertices of a graph with the given minimum degree and girth."""
    d = min_degree
    if d <= 1 or girth_target <= 2:
        return d + 1
    r, odd = divmod(girth_target - 1, 2)
    if odd:  # even girth 2r + 2
        return 2 * sum((d - 1) ** i for i in range(r + 1))
    return 1 + d * sum((d - 1) ** i for i in range(r))


def precheck(nV: int, delta: int, R: int) -> str | None:
    """Return a reason when (nV, delta, R) cannot host an identifier graph, else None.

    Every vertex has an edge in each layer and parallel edges are 2-cycles,
    so the union is a simple graph of minimum degree delta and girth >= 10R.
    """
    if delta < 1 or R < 1 or nV < 1:
        return "need nV, delta, R >= 1"
    need = moore_bound(delta, 10 * R)
    if nV < need:
        return f"Moore bound: minimum degree {delta} and girth {10 * R} need at least {need} vertices, got {nV}"
    return None


def _short_cycle_vertices(nV: int, edges: Sequence[tuple[int, int]], limit: int) -> set[int]:
    """Vertices on a cycle of length < ``limit`` in the multigraph ``edges``."""
    inc: list[list[tuple[int, int]]] = [[] for _ in range(nV)]
    for i, (a, b) in enumerate(edges):
        inc[a].append((b, i))
        inc[b].append((a, i))
    marked: set[int] = set()
    for i, (a, b) in enumerate(edges):
        if a in marked and b in marked:
            continue
        # BFS from b to a without edge i; cycle length is dist + 1
        dist = {b: 0}
        parent: dict[int, int] = {}
        queue = deque([b])
        while queue:
            x = queue.popleft()
            if dist[x] + 2 > limit - 1:
                break
            for y, j in inc[x]:
                if j == i or y in dist:
                    continue
                dist[y] = dist[x] + 1
                parent[y] = x
                queue.append(y)
            if a in dist:
                break
        if a in dist and dist[a] + 1 < limit:
            x = a
            marked.add(a)
            while x != b:
                x = parent[x]
                marked.add(x)
    return marked


def _far_from(adj: Sequence[set[int]], v: int, bound: int) -> set[int]:
    """Vertices at distance < ``bound`` from ``v``."""
    dist = {v: 0}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        if dist[x] + 1 >= bound:
            continue
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return set(dist)


def _attempt(nV: int, delta: int, R: int, seed: int) -> IdGraph | None:
    rng = random.Random(seed)
    p = min(1.0, delta * delta / nV)
    layers = [[e for e in itertools.combinations(range(nV), 2) if rng.random() < p] for _ in range(delta)]
    girth_target = 10 * R
    cap = degree_cap(delta)
    union = [e for layer in layers for e in layer]
    remove = _short_cycle_vertices(nV, union, girth_target)
    udeg = [0] * nV
    ldeg = [[0] * nV for _ in range(delta)]
    for c, layer in enumerate(layers):
        for a, b in layer:
            udeg[a] += 1
            udeg[b] += 1
            ldeg[c][a] += 1
            ldeg[c][b] += 1
    remove |= {v for v in range(nV) if udeg[v] >= cap or any(ldeg[c][v] == 0 for c in range(delta))}
    keep = [v for v in range(nV) if v not in remove]
    if 2 * len(keep) < nV:
        return None
    index = {v: i for i, v in enumerate(keep)}
    pruned = [{(index[a], index[b]) for a, b in layer if a in index and b in index} for layer in layers]
    return patch_isolated(len(keep), pruned, R, rng)


def patch_isolated(m: int, layers: Sequence[Iterable[tuple[int, int]]], R: int, rng: random.Random) -> IdGraph | None:
    """Give every layer-isolated vertex an edge that keeps union girth >= 10R and degrees <= delta^10.

    Returns None when some vertex has no admissible partner.
    """
    delta = len(layers)
    girth_target = 10 * R
    cap = degree_cap(delta)
    new_layers = [set(layer) for layer in layers]
    adj: list[set[int]] = [set() for _ in range(m)]
    deg = [0] * m
    lyr = [[0] * m for _ in range(delta)]
    for c, layer in enumerate(new_layers):
        for a, b in layer:
            adj[a].add(b)
            adj[b].add(a)
            deg[a] += 1
            deg[b] += 1
            lyr[c][a] += 1
            lyr[c][b] += 1
    # patch layer-isolated vertices with girth-safe edges
    for v in range(m):
        for c in range(delta):
            if lyr[c][v]:
                continue
            near = _far_from(adj, v, girth_target - 1)
            options = [u for u in range(m) if u not in near and deg[u] < cap]
            if not options or deg[v] >= cap:
                return None
            u = options[rng.randrange(len(options))]
            new_layers[c].add((min(u, v), max(u, v)))
            adj[u].add(v)
            adj[v].add(u)
            for x in (u, v):
                deg[x] += 1
                lyr[c][x] += 1
    return IdGraph(m, delta, R, tuple(frozenset(x) for x in new_layers))


def build_id_graph(
    nV: int, delta: int, R: int, seed: int, *, retries: int = DEFAULT_RETRIES, check_bounds: bool = True
) -> IdGraph:
    """Sample, prune and patch layered random graphs until the verifier accepts.

    Attempt ``i`` uses seed ``seed + i``. ``check_bounds=False`` skips the
    numeric precheck so the construction itself can be observed failing.
    """
    if check_bounds:
        reason = precheck(nV, delta, R)
        if reason:
            raise InfeasibleParameters(reason)
    last = "no attempt made"
    for i in range(retries):
        h = _attempt(nV, delta, R, seed + i)
        if h is None:
            last = f"attempt {i}: pruning removed more than half of the vertices or no girth-safe edge existed"
            continue
        rep = verify_id_graph(h)
        if rep.passes((1, 3, 4)) and rep.checks[5].status in ("pass", "not exactly verified"):
            return h
        last = f"attempt {i}: " + "; ".join(l for l in rep.lines() if " fail" in l)
    raise InfeasibleParameters(f"no identifier graph after {retries} attempts ({last})")


# ---------------------------------------------------------------------------
# labelings of edge-colored trees


def _rooted(t: PortedGraph) -> tuple[list[int], list[int], list[int]]:
    """BFS order from node 0 with parent and parent-edge color per node."""
    if t.edge_colors is None:
        raise ValueError("tree needs an edge coloring")
    parent = [-1] * t.n
    pcolor = [0] * t.n
    order = [0]
    seen = {0}
    for v in order:
        for p, (u, _) in enumerate(t.adj[v], start=1):
            if u not in seen:
                seen.add(u)
                parent[u] = v
                pcolor[u] = t.color(v, p)
                order.append(u)
    if len(order) != t.n:
        raise ValueError("tree is not connected")
    if t.edge_count != t.n - 1:
        raise ValueError("graph is not a tree")
    return order, parent, pcolor


def check_h_labeling(t: PortedGraph, h: IdGraph, labels: Sequence[int], *, injective: bool = True) -> str | None:
    """Return a description of the first violation, or None if ``labels`` is a proper labeling."""
    for v, p, u, _ in t.edges():
        c = t.color(v, p)
        if not h.adjacent(c, labels[v], labels[u]):
            return f"edge {v}-{u} of color {c}: labels {labels[v]},{labels[u]} not adjacent in layer {c}"
    if injective and len(set(labels)) != len(labels):
        return "labels are not injective"
    return None


def proper_h_labeling(t: PortedGraph, h: IdGraph, seed: int, *, budget: int = 1_000_000) -> list[int]:
    """Seeded injective proper labeling of an edge-colored tree, found by backtracking."""
    if t.edge_colors and max(max(c) for c in t.edge_colors if c) > h.delta:
        raise ValueError("tree uses more edge colors than the identifier graph has layers")
    order, parent, pcolor = _rooted(t)
    rng = random.Random(seed)
    labels = [-1] * t.n
    used: set[int] = set()
    roots = list(range(h.nV))
    rng.shuffle(roots)
    options: list[list[int]] = [roots] + [[] for _ in range(t.n - 1)]
    pos = [0] * t.n
    i = 0
    steps = 0
    while 0 <= i < t.n:
        steps += 1
        if steps > budget:
            raise LabelingInfeasible(f"search budget {budget} exhausted")
        v = order[i]
        if labels[v] >= 0:
            used.discard(labels[v])
            labels[v] = -1
        opts = options[i]
        while pos[i] < len(opts) and opts[pos[i]] in used:
            pos[i] += 1
        if pos[i] == len(opts):
            pos[i] = 0
            i -= 1
            continue
        labels[v] = opts[pos[i]]
        used.add(labels[v])
        pos[i] += 1
        i += 1
        if i < t.n:
            w = order[i]
            nxt = list(h.neighbors(pcolor[w], labels[parent[w]]))
            rng.shuffle(nxt)
            options[i] = nxt
            pos[i] = 0
    if i < 0:
        raise LabelingInfeasible("no injective proper labeling exists")
    return labels


def count_h_labelings(t: PortedGraph, h: IdGraph) -> int:
    """Exact number of proper labelings (adjacency only, repeats allowed) by a tree DP."""
    if t.n == 0:
        return 1
    order, parent, pcolor = _rooted(t)
    vec: list[list[int] | None] = [None] * t.n
    for v in reversed(order):
        acc = vec[v] or [1] * h.nV
        vec[v] = None
        if parent[v] < 0:
            return sum(acc)
        nb = h.adjacency[pcolor[v] - 1]
        moved = [sum(acc[y] for y in nb[x]) for x in range(h.nV)]
        p = parent[v]
        cur = vec[p] or [1] * h.nV
        vec[p] = [a * b for a, b in zip(cur, moved)]
    raise AssertionError("unreachable")


def count_h_labelings_brute(t: PortedGraph, h: IdGraph) -> int:
    """Enumeration oracle for :func:`count_h_labelings`: tests all nV^n label tuples."""
    if h.nV**t.n > 10**7:
        raise TableTooLarge(f"{h.nV}^{t.n} label tuples")
    grid = np.indices((h.nV,) * t.n).reshape(t.n, -1)
    ok = np.ones(grid.shape[1], dtype=bool)
    adj = np.zeros((h.delta, h.nV, h.nV), dtype=bool)
    for c, layer in enumerate(h.layers):
        for a, b in layer:
            adj[c, a, b] = adj[c, b, a] = True
    for v, p, u, _ in t.edges():
        ok &= adj[t.color(v, p) - 1, grid[v], grid[u]]
    return int(ok.sum())


# ---------------------------------------------------------------------------
# 0-round sinkless orientation relative to an identifier graph


@dataclass(frozen=True)
class ZeroRoundResult:
    """``exists`` is None when neither the structural nor the exhaustive test applies."""

    exists: bool | None
    method: str
    witness: dict[int, int] | None = None
    certificate: str = ""


def zero_round_violation(h: IdGraph, choice: Mapping[int, int]) -> tuple[int, int, int] | None:
    """First layer-``c`` edge whose endpoints both send their color-``c`` half-edge out."""
    for c, layer in enumerate(h.layers, start=1):
        for a, b in sorted(layer):
            if choice.get(a) == c and choice.get(b) == c:
                return a, b, c
    return None


def _zero_round_exhaustive(h: IdGraph) -> ZeroRoundResult:
    choice: dict[int, int] = {}

    def place(v: int) -> bool:
        if v == h.nV:
            return True
        for c in range(1, h.delta + 1):
            if all(choice.get(u) != c for u in h.neighbors(c, v)):
                choice[v] = c
                if place(v + 1):
                    return True
                del choice[v]
        return False

    if place(0):
        return ZeroRoundResult(True, "exhaustive", dict(choice), "every color class is independent in its layer")
    return ZeroRoundResult(False, "exhaustive", None, f"all {h.delta}^{h.nV} out-color maps create a doubly-out edge")


def _zero_round_structural(h: IdGraph) -> ZeroRoundResult | None:
    if h.nV > EXACT_MIS_LIMIT:
        return None
    sizes = [len(max_independent_set(h.nV, layer)) for layer in h.layers]
    if all(s * h.delta < h.nV for s in sizes):
        return ZeroRoundResult(
            False,
            "structural",
            None,
            f"some out-color class has >= {h.nV}/{h.delta} vertices, above every layer's independence number {sizes}",
        )
    return None


def zero_round_so_exists(h: IdGraph, method: str = "auto") -> ZeroRoundResult:
    """Decide whether some map V(H) -> [delta] is a correct 0-round sinkless orientation.

    ``method`` is "exhaustive", "structural" or "auto" (structural first).
    """
    if method not in ("auto", "exhaustive", "structural"):
        raise ValueError(f"unknown method {method!r}")
    if method != "exhaustive":
        res = _zero_round_structural(h)
        if res is not None or method == "structural":
            return res or ZeroRoundResult(None, "structural", None, "independence bound does not hold")
    if h.nV > EXHAUSTIVE_ZERO_ROUND_LIMIT:
        if method == "exhaustive":
            raise TableTooLarge(f"exhaustive search needs nV <= {EXHAUSTIVE_ZERO_ROUND_LIMIT}")
        return ZeroRoundResult(None, "none", None, "too large for exhaustive search and the independence bound fails")
    return _zero_round_exhaustive(h)


# ---------------------------------------------------------------------------
# half-round elimination for delta = 3, t <= 1
#
# A radius-1 node table maps (a, (b_1, ..., b_delta)) to the set of colors whose
# half-edges node a orients out, where b_c is the label across the color-c edge.
# A radius-1/2 edge table maps (c, a, b) to True when the color-c edge between
# labels a and b is oriented a -> b. A 0-round table maps a label to its out colors.

NodeView = tuple[int, tuple[int, ...]]
View = tuple[int, int, int]


@dataclass(frozen=True)
class BothOut:
    """Two radius-1 views, glued along a color-``color`` edge, that both orient it out."""

    color: int
    view_u: NodeView
    view_v: NodeView


@dataclass(frozen=True)
class Sink:
    """A label and neighbor labels under which every edge points inward."""

    label: int
    neighbors: tuple[int, ...]


@dataclass(frozen=True)
class EliminationResult:
    t: Fraction
    table: dict
    counterexample: BothOut | Sink | None = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None


def _node_views(h: IdGraph, a: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(*(h.neighbors(c, a) for c in range(1, h.delta + 1)))


def _elimination_guard(h: IdGraph) -> None:
    if h.delta != 3:
        raise ValueError("half-round elimination is implemented for delta = 3")
    if h.nV > ELIMINATION_LIMIT:
        raise TableTooLarge(f"nV = {h.nV} exceeds the elimination limit {ELIMINATION_LIMIT}")


def node_table(h: IdGraph, alg) -> dict[NodeView, frozenset[int]]:
    """Tabulate a radius-1 algorithm given as a callable on node views."""
    _elimination_guard(h)
    return {(a, nb): frozenset(alg((a, nb))) for a in range(h.nV) for nb in _node_views(h, a)}


def _lookup(alg, key):
    return alg[key] if isinstance(alg, Mapping) else alg(key)


def _from_node_views(alg, h: IdGraph) -> EliminationResult:
    fired: dict[View, NodeView] = {}
    for a in range(h.nV):
        for nb in _node_views(h, a):
            for c in _lookup(alg, (a, nb)):
                fired.setdefault((c, a, nb[c - 1]), (a, nb))
    table: dict[View, bool] = {}
    for c, layer in enumerate(h.layers, start=1):
        for a, b in sorted(layer):
            fa, fb = (c, a, b) in fired, (c, b, a) in fired
            if fa and fb:
                return EliminationResult(Fraction(1, 2), table, BothOut(c, fired[(c, a, b)], fired[(c, b, a)]))
            # neither fires: fixed tie-break from the smaller label
            forward = fa or (not fb and a < b)
            table[(c, a, b)] = forward
            table[(c, b, a)] = not forward
    return EliminationResult(Fraction(1, 2), table)


def _from_edge_views(alg, h: IdGraph) -> EliminationResult:
    for c, layer in enumerate(h.layers, start=1):
        for a, b in sorted(layer):
            if _lookup(alg, (c, a, b)) and _lookup(alg, (c, b, a)):
                return EliminationResult(Fraction(0), {}, BothOut(c, (a, ()), (b, ())))
    table: dict[int, frozenset[int]] = {}
    for a in range(h.nV):
        layers = [h.neighbors(c, a) for c in range(1, h.delta + 1)]
        if not all(layers):
            continue  # label never occurs in a delta-regular tree
        out = frozenset(c for c, nb in enumerate(layers, start=1) if all(_lookup(alg, (c, a, b)) for b in nb))
        if not out:
            inward = tuple(next(b for b in nb if not _lookup(alg, (c, a, b))) for c, nb in enumerate(layers, start=1))
            return EliminationResult(Fraction(0), table, Sink(a, inward))
        table[a] = out
    return EliminationResult(Fraction(0), table)


def eliminate_half_round(alg, h: IdGraph, t) -> EliminationResult:
    """Turn a radius-``t`` table into a radius-``t - 1/2`` one, for t in {1, 1/2}.

    ``alg`` is a mapping or callable over the views described above. A
    counterexample is returned when the input algorithm is not correct.
    """
    _elimination_guard(h)
    t = Fraction(t)
    if t == 1:
        return _from_node_views(alg, h)
    if t == Fraction(1, 2):
        return _from_edge_views(alg, h)
    raise TableTooLarge(f"only t = 1 and t = 1/2 are supported, got {t}")


def zero_round_choice(table: Mapping[int, frozenset[int]], h: IdGraph) -> dict[int, int]:
    """Pick one out color per label from a 0-round table; absent labels take a color with an empty layer."""
    choice = {a: min(cs) for a, cs in table.items()}
    for a in range(h.nV):
        if a not in choice:
            choice[a] = next(c for c in range(1, h.delta + 1) if not h.neighbors(c, a))
    return choice
