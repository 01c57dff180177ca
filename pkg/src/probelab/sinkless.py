"""Sinkless orientation: direct LLL encoding and the cluster/contraction pipeline.

Orientation bits are keyed by ``(lo, hi)`` identifier pairs; bit 1 means the
edge points from ``lo`` to ``hi``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping

from .graph import IN, OUT, HalfEdgeLabeling, PortedGraph
from .lll import (
    ComponentTooLarge,
    Event,
    LazyShatter,
    LllConfig,
    LllInstance,
    LllSolution,
    Variable,
    lll_solve,
    sample_value,
)
from .local import GraphView, LazyColoring, LazyMis, ProbeView, logstar_coloring, mis_from_coloring
from .probe import ModelConfig, Oracle, ProbeAlgorithm, ProbeTranscript, QueryFailed, run_query

EdgeKey = tuple[int, int]
Nbrs = Callable[[int], tuple[tuple[int, int], ...]]


def edge_key(a: int, b: int) -> EdgeKey:
    return (a, b) if a < b else (b, a)


def inward_bit(key: EdgeKey, node: int) -> int:
    """Bit value that points ``key`` into ``node``."""
    return 1 if key[1] == node else 0


def orientation_labeling(g: PortedGraph, bits: Mapping[EdgeKey, int]) -> HalfEdgeLabeling:
    ids = g.ids
    labels = {}
    for v, row in enumerate(g.adj):
        a = ids[v]
        for p, (u, _) in enumerate(row, start=1):
            b = ids[u]
            # the edge points into v when its bit selects v's end of the key
            inward = bits[(a, b)] == 0 if a < b else bits[(b, a)] == 1
            labels[(v, p)] = IN if inward else OUT
    return HalfEdgeLabeling(labels)


def so_as_lll(g: PortedGraph, min_deg: int = 3) -> LllInstance:
    """One fair bit per edge; one event per node of degree >= ``min_deg``: all edges inward."""
    ids = g.ids
    keys = sorted({edge_key(ids[v], ids[u]) for v, _, u, _ in g.edges()})
    if len(keys) != g.edge_count:
        raise ValueError("multigraph input: parallel edges share an identifier pair")
    events = []
    for v in range(g.n):
        if g.degree(v) >= min_deg:
            vbl = tuple(sorted(edge_key(ids[v], ids[u]) for u, _ in g.adj[v]))
            bad = tuple(inward_bit(k, ids[v]) for k in vbl)
            events.append(Event(ids[v], vbl, frozenset([bad])))
    return LllInstance([Variable(k, 2) for k in keys], events, degree_bound=max(g.delta, 0) if events else None)


# ---------------------------------------------------------------------------
# clusters


@dataclass(frozen=True)
class Cluster:
    center: int
    members: tuple[int, ...]
    cyclic: bool
    leaving: tuple[EdgeKey, ...]  # sorted inter-cluster edges
    low: int | None  # smallest member of degree below min_deg
    neighbors: tuple[int, ...]  # centers across leaving edges, with multiplicity removed

    @property
    def kind(self) -> str:
        return "cyclic" if self.cyclic else "tree"

    @property
    def eligible(self) -> bool:
        """Carries an LLL event: tree-shaped with every member of full degree."""
        return not self.cyclic and self.low is None

    def bad(self) -> tuple[int, ...]:
        mem = set(self.members)
        return tuple(inward_bit(k, k[0] if k[0] in mem else k[1]) for k in self.leaving)


def build_cluster(center: int, members: Iterable[int], nbrs: Nbrs, center_of: Callable[[int], int], min_deg: int) -> Cluster:
    mem = sorted(members)
    inside = set(mem)
    intra = 0
    leaving = []
    across = set()
    low = None
    for x in mem:
        row = nbrs(x)
        if len(row) < min_deg and low is None:
            low = x
        for y, _ in row:
            if y in inside:
                intra += 1
            else:
                leaving.append(edge_key(x, y))
                across.add(center_of(y))
    return Cluster(center, tuple(mem), intra // 2 >= len(mem), tuple(sorted(leaving)), low, tuple(sorted(across)))


def _bfs_parents(sources: Iterable[int], inside: set[int], nbrs: Nbrs, skip: EdgeKey | None = None) -> dict[int, int | None]:
    parent: dict[int, int | None] = {}
    q = deque()
    for s in sources:
        if s not in parent:
            parent[s] = None
            q.append(s)
    while q:
        x = q.popleft()
        for y, _ in nbrs(x):
            if y in inside and y not in parent and edge_key(x, y) != skip:
                parent[y] = x
                q.append(y)
    return parent


def orient_cyclic(cl: Cluster, nbrs: Nbrs) -> dict[EdgeKey, int]:
    """Cycle through the smallest cycle node, BFS edges toward the cycle, others low->high."""
    inside = set(cl.members)
    start = first = None
    for x in cl.members:
        for y, _ in nbrs(x):
            if y in inside and x in _bfs_parents([y], inside, nbrs, skip=edge_key(x, y)):
                start, first = x, y
                break
        if start is not None:
            break
    if start is None:
        raise ValueError(f"cluster {cl.center} has no cycle")
    back = _bfs_parents([first], inside, nbrs, skip=edge_key(start, first))
    cycle = [start]
    x = start
    while x != first:
        x = back[x]
        cycle.append(x)
    cycle.reverse()  # first ... start
    bits: dict[EdgeKey, int] = {}
    ring = [start] + cycle[:-1]  # start -> first -> ... -> start
    for a, b in zip(ring, ring[1:] + ring[:1]):
        k = edge_key(a, b)
        bits[k] = 1 - inward_bit(k, a)
    parent = _bfs_parents(sorted(ring), inside, nbrs)
    for x, p in parent.items():
        if p is not None:
            k = edge_key(x, p)
            bits.setdefault(k, 1 - inward_bit(k, x))
    for x in cl.members:
        for y, _ in nbrs(x):
            if y in inside:
                bits.setdefault(edge_key(x, y), 1)
    return bits


def orient_tree(cl: Cluster, nbrs: Nbrs, root: int) -> dict[EdgeKey, int]:
    """Every intra-cluster edge toward ``root``."""
    parent = _bfs_parents([root], set(cl.members), nbrs)
    bits = {}
    for x, p in parent.items():
        if p is not None:
            k = edge_key(x, p)
            bits[k] = 1 - inward_bit(k, x)
    return bits


def tree_root(cl: Cluster, value: Callable[[EdgeKey], int]) -> int:
    if cl.low is not None:
        return cl.low
    mem = set(cl.members)
    outs = []
    for k in cl.leaving:
        m = k[0] if k[0] in mem else k[1]
        if value(k) != inward_bit(k, m):
            outs.append(m)
    return min(outs) if outs else cl.members[0]


def ball_lower_bound(min_deg: int, r: int) -> int:
    return 1 + sum(min_deg * (min_deg - 1) ** (i - 1) for i in range(1, r + 1))


def leaving_threshold(min_deg: int, k: int) -> int:
    """Fewest leaving edges of an eligible tree cluster: the radius-k/2 ball is inside it."""
    return ball_lower_bound(min_deg, k // 2) * (min_deg - 2) + 2


def degree_bound(delta: int, k: int) -> int:
    """Most leaving edges of a tree cluster of radius <= k, hence of contracted dependency degree."""
    b = 1 + sum(delta * (delta - 1) ** (i - 1) for i in range(1, k + 1))
    return delta * b - 2 * (b - 1)


@dataclass
class ClusterDecomposition:
    k: int
    centers: frozenset[int]
    assignment: dict[int, int]
    clusters: dict[int, Cluster]
    contracted: list[tuple[int, int, EdgeKey]]  # one entry per inter-cluster edge


def _assign(g: PortedGraph, centers: Iterable[int]) -> dict[int, int]:
    """Nearest center, ties to the smaller center identifier."""
    node = g.node_of_id
    ids = g.ids
    owner = {c: c for c in centers}
    frontier = sorted(owner)
    while frontier:
        nxt: dict[int, int] = {}
        for x in frontier:
            for u, _ in g.adj[node[x]]:
                y = ids[u]
                if y not in owner:
                    c = owner[x]
                    if y not in nxt or c < nxt[y]:
                        nxt[y] = c
        owner.update(nxt)
        frontier = sorted(nxt)
    return owner


def cluster_decompose(g: PortedGraph, k: int, *, min_deg: int = 3, reduce: bool = True, id_range: int | None = None) -> ClusterDecomposition:
    if k < 1:
        raise ValueError("k must be at least 1")
    coloring = logstar_coloring(g, k, id_range=id_range, reduce=reduce)
    centers = mis_from_coloring(g, coloring.colors, k=k, power=coloring.power, check=False)
    owner = _assign(g, centers)
    view = GraphView(g)
    groups: dict[int, list[int]] = {}
    for x, c in owner.items():
        groups.setdefault(c, []).append(x)
    clusters = {c: build_cluster(c, ms, view.nbrs, owner.__getitem__, min_deg) for c, ms in groups.items()}
    contracted = []
    for c, cl in clusters.items():
        for key in cl.leaving:
            a, b = owner[key[0]], owner[key[1]]
            if c == min(a, b):
                contracted.append((a, b, key))
    threshold = leaving_threshold(min_deg, k)
    for cl in clusters.values():
        if cl.eligible and len(cl.leaving) < threshold:
            raise AssertionError(f"cluster {cl.center} has {len(cl.leaving)} leaving edges, below {threshold}")
    return ClusterDecomposition(k, frozenset(centers), owner, clusters, sorted(contracted))


def contracted_instance(dec: ClusterDecomposition, delta: int) -> LllInstance:
    events = [Event(c, cl.leaving, frozenset([cl.bad()])) for c, cl in sorted(dec.clusters.items()) if cl.eligible]
    keys = sorted({x for e in events for x in e.vbl})
    dhat = degree_bound(delta, dec.k)
    # the scope bound is declared per instance; probabilities sum over bad tuples, not the full space
    return LllInstance([Variable(x, 2) for x in keys], events, degree_bound=dhat, scope_limit=max(dhat, 24))


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class SinklessConfig:
    k: int = 2
    min_deg: int = 3
    lll: LllConfig = field(default_factory=LllConfig)
    reduce: bool = True


@dataclass
class SinklessResult:
    labeling: HalfEdgeLabeling
    bits: dict[EdgeKey, int]
    decomposition: ClusterDecomposition
    lll: LllSolution
    instance: LllInstance

    @property
    def failed(self) -> bool:
        """Whether some query would refuse an oversized dangerous component."""
        return bool(self.lll.oversized)


def _edge_value(seed: int, key: EdgeKey) -> int:
    return sample_value(seed, Variable(key, 2))


def solve_sinkless(g: PortedGraph, cfg: SinklessConfig | None = None, seed: int = 0, *, model: ModelConfig | None = None) -> SinklessResult:
    """Global pipeline: clusters, contracted LLL, then orientation inside clusters."""
    cfg = cfg or SinklessConfig()
    model = model or ModelConfig(seed=seed)
    n = model.n_for(g)
    dec = cluster_decompose(g, cfg.k, min_deg=cfg.min_deg, reduce=cfg.reduce, id_range=model.id_range(n))
    inst = contracted_instance(dec, g.delta)
    sol = lll_solve(inst, cfg.lll, seed, n=n)
    view = GraphView(g)
    bits: dict[EdgeKey, int] = {}
    for _, _, key in dec.contracted:
        bits[key] = sol.assignment[key] if key in inst.var else _edge_value(seed, key)
    for cl in dec.clusters.values():
        if cl.cyclic:
            bits.update(orient_cyclic(cl, view.nbrs))
        else:
            bits.update(orient_tree(cl, view.nbrs, tree_root(cl, bits.__getitem__)))
    return SinklessResult(orientation_labeling(g, bits), bits, dec, sol, inst)


class LazyClusters:
    """Clusters around a query, from probes only."""

    def __init__(self, view: Any, k: int, min_deg: int, id_range: int, reduce: bool = True) -> None:
        self.view = view
        self.k = k
        self.min_deg = min_deg
        self.mis = LazyMis(LazyColoring(view, k, id_range, reduce))
        self._center: dict[int, int] = {}
        self._cluster: dict[int, Cluster] = {}

    def center_of(self, x: int) -> int:
        c = self._center.get(x)
        if c is not None:
            return c
        layer, seen = [x], {x}
        for _ in range(self.k + 1):
            hits = [y for y in layer if y in self.mis]
            if hits:
                c = self._center[x] = min(hits)
                return c
            nxt = []
            for y in layer:
                for z, _ in self.view.nbrs(y):
                    if z not in seen:
                        seen.add(z)
                        nxt.append(z)
            layer = nxt
        raise AssertionError(f"no center within distance {self.k} of {x}; the independent set is not maximal")

    def cluster(self, c: int) -> Cluster:
        cl = self._cluster.get(c)
        if cl is None:
            members, q = {c}, deque([c])
            while q:
                x = q.popleft()
                for y, _ in self.view.nbrs(x):
                    if y not in members and self.center_of(y) == c:
                        members.add(y)
                        q.append(y)
            cl = self._cluster[c] = build_cluster(c, members, self.view.nbrs, self.center_of, self.min_deg)
        return cl


class ClusterSource:
    """Contracted LLL events (eligible tree clusters) for :class:`LazyShatter`."""

    uniform = True

    def __init__(self, clusters: LazyClusters, dhat: int, n: int) -> None:
        self.clusters = clusters
        self.dhat = dhat
        self.n = n

    def vbl(self, c: int) -> tuple[EdgeKey, ...]:
        return self.clusters.cluster(c).leaving

    def bad(self, c: int) -> frozenset:
        return frozenset([self.clusters.cluster(c).bad()])

    def variable(self, x: EdgeKey) -> Variable:
        return Variable(x, 2)

    def nbrs(self, c: int) -> tuple[int, ...]:
        return tuple(d for d in self.clusters.cluster(c).neighbors if self.clusters.cluster(d).eligible)


class SinklessQuery:
    """Answers half-edge orientation queries; one instance per query."""

    def __init__(self, view: Any, cfg: SinklessConfig, seed: int, id_range: int) -> None:
        self.view = view
        self.seed = seed
        self.clusters = LazyClusters(view, cfg.k, cfg.min_deg, id_range, cfg.reduce)
        src = ClusterSource(self.clusters, degree_bound(view.delta, cfg.k), view.n)
        self.lazy = LazyShatter(src, cfg.lll, seed, n=view.n)

    def _inter(self, key: EdgeKey, a: int, b: int) -> int:
        for c in (a, b):
            if self.clusters.cluster(c).eligible:
                return self.lazy.event_values(c)[key]
        return _edge_value(self.seed, key)

    def bit(self, x: int, y: int) -> int:
        cx, cy = self.clusters.center_of(x), self.clusters.center_of(y)
        key = edge_key(x, y)
        if cx != cy:
            return self._inter(key, cx, cy)
        cl = self.clusters.cluster(cx)
        if cl.cyclic:
            return orient_cyclic(cl, self.view.nbrs)[key]
        if cl.eligible:
            vals = self.lazy.event_values(cx)
            root = tree_root(cl, vals.__getitem__)
        else:
            root = cl.low
        return orient_tree(cl, self.view.nbrs, root)[key]


def sinkless_algorithm(cfg: SinklessConfig | None = None, seed: int = 0) -> ProbeAlgorithm:
    cfg = cfg or SinklessConfig()

    def run(oracle: Oracle, q: Any) -> str:
        x, port = q
        view = ProbeView(oracle)
        query = SinklessQuery(view, cfg, seed, oracle.cfg.id_range(oracle.n))
        y, _ = view.nbr(x, port)
        k = edge_key(x, y)
        try:
            b = query.bit(x, y)
        except ComponentTooLarge as exc:
            raise QueryFailed(str(exc)) from exc
        return IN if b == inward_bit(k, x) else OUT

    return ProbeAlgorithm(run, alphabet=(OUT, IN), name="sinkless")


def sinkless_query(
    g: PortedGraph, half_edge: tuple[int, int], cfg: SinklessConfig | None = None, seed: int = 0, model: ModelConfig | None = None
) -> tuple[str | None, ProbeTranscript]:
    """Orientation label of one half-edge ``(node index, port)``."""
    model = model or ModelConfig(seed=seed)
    return run_query(sinkless_algorithm(cfg, seed), g, half_edge, model)
