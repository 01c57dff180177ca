"""LOCAL algorithms, their probe simulations, and log*-round coloring / MIS."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Hashable, Protocol, Sequence

import numpy as np

from .graph import PortedGraph, ball_table, padded
from .probe import ModelConfig, Oracle, ProbeAlgorithm, RandomTape, private_randomness

# ---------------------------------------------------------------------------
# views: one neighborhood interface over a graph, an oracle, or a collected ball


class View(Protocol):
    n: int
    delta: int

    def deg(self, x: int) -> int: ...

    def nbrs(self, x: int) -> tuple[tuple[int, int], ...]: ...

    def tape(self, x: int) -> RandomTape: ...


class GraphView:
    """Direct, unmetered access to a graph by node ID."""

    def __init__(self, g: PortedGraph, cfg: ModelConfig | None = None) -> None:
        self.g = g
        self.cfg = cfg or ModelConfig()
        self.n = self.cfg.n_for(g)
        self.delta = g.delta
        self._rows = g.id_rows

    def deg(self, x: int) -> int:
        return len(self._rows[x])

    def nbrs(self, x: int) -> tuple[tuple[int, int], ...]:
        return self._rows[x]

    def tape(self, x: int) -> RandomTape:
        return private_randomness(x, self.cfg)


class ProbeView:
    """Neighborhood access through an oracle; each half-edge is probed at most once."""

    def __init__(self, oracle: Oracle) -> None:
        self.oracle = oracle
        self.n = oracle.n
        self.delta = oracle.delta
        self._deg: dict[int, int] = {oracle.query_id: oracle.degree(oracle.query_id)}
        self._half: dict[tuple[int, int], tuple[int, int]] = {}
        self._full: dict[int, tuple[tuple[int, int], ...]] = {}

    def deg(self, x: int) -> int:
        try:
            return self._deg[x]
        except KeyError:
            d = self._deg[x] = self.oracle.degree(x)
            return d

    def nbr(self, x: int, p: int) -> tuple[int, int]:
        key = (x, p)
        hit = self._half.get(key)
        if hit is None:
            a = self.oracle.probe(x, p)
            hit = (a.id, a.port)
            self._half[key] = hit
            self._half[hit] = key
            self._deg[a.id] = a.degree
        return hit

    def nbrs(self, x: int) -> tuple[tuple[int, int], ...]:
        row = self._full.get(x)
        if row is None:
            row = self._full[x] = tuple(self.nbr(x, p) for p in range(1, self.deg(x) + 1))
        return row

    def tape(self, x: int) -> RandomTape:
        return self.oracle.tape(x)


def power_nbrs(view: View, x: int, k: int, cache: dict | None = None) -> tuple[int, ...]:
    """IDs at distance 1..k from ``x``, sorted by ID."""
    if cache is not None and x in cache:
        return cache[x]
    dist = {x: 0}
    frontier = [x]
    for d in range(1, k + 1):
        nxt = []
        for y in frontier:
            for z, _ in view.nbrs(y):
                if z not in dist:
                    dist[z] = d
                    nxt.append(z)
        frontier = nxt
    out = tuple(sorted(z for z in dist if z != x))
    if cache is not None:
        cache[x] = out
    return out


def power_table(g: PortedGraph, k: int) -> dict[int, tuple[int, ...]]:
    """``power_nbrs`` for every node."""
    ids = g.ids
    if g.n and max(ids) < 2**62 and min(ids) >= 0 and max(g.delta, 1) ** k <= 4096:
        reach = ball_table(padded([[u for u, _ in row] for row in g.adj], g.n), k)
        lab = np.append(np.array(ids, dtype=np.int64), np.iinfo(np.int64).max)[reach]
        lab.sort(axis=1)
        counts = (reach != g.n).sum(axis=1).tolist()
        return {x: tuple(row[:c]) for x, row, c in zip(ids, lab.tolist(), counts)}
    return _power_table_sets(g, k)


def _power_table_sets(g: PortedGraph, k: int) -> dict[int, tuple[int, ...]]:
    rows = g.id_rows
    near = {x: {y for y, _ in row} for x, row in rows.items()}
    reach = {x: set(s) for x, s in near.items()}
    for _ in range(k - 1):
        nxt = {}
        for x, ns in near.items():
            acc = set(ns)
            for y in ns:
                acc |= reach[y]
            acc.discard(x)
            nxt[x] = acc
        reach = nxt
    return {x: tuple(sorted(s - {x})) for x, s in reach.items()}


def distances_from(view: View, x: int, k: int) -> dict[int, int]:
    dist = {x: 0}
    frontier = [x]
    for d in range(1, k + 1):
        nxt = []
        for y in frontier:
            for z, _ in view.nbrs(y):
                if z not in dist:
                    dist[z] = d
                    nxt.append(z)
        frontier = nxt
    return dist


# ---------------------------------------------------------------------------
# balls and LOCAL algorithms


@dataclass(frozen=True)
class Ball:
    """Radius-t view of a root: records of nodes within distance t and port
    maps of nodes within distance t - 1."""

    root: int
    radius: int
    degree: tuple[tuple[int, int], ...]
    labels: tuple[tuple[int, tuple[Hashable, ...]], ...]
    ports: tuple[tuple[int, tuple[tuple[int, int], ...]], ...]
    seed: int = 0
    randomness: str = "shared"

    @property
    def ids(self) -> list[int]:
        return [x for x, _ in self.degree]

    def port_map(self, x: int) -> tuple[tuple[int, int], ...]:
        return dict(self.ports)[x]

    def tape(self, x: int) -> RandomTape:
        return private_randomness(x, ModelConfig(randomness=self.randomness, seed=self.seed))

    def distances(self) -> dict[int, int]:
        pm = dict(self.ports)
        dist = {self.root: 0}
        frontier = [self.root]
        while frontier:
            nxt = []
            for y in frontier:
                for z, _ in pm.get(y, ()):
                    if z not in dist:
                        dist[z] = dist[y] + 1
                        nxt.append(z)
            frontier = nxt
        return dist


def _make_ball(root: int, radius: int, deg: dict, lab: dict, ports: dict, cfg: ModelConfig) -> Ball:
    return Ball(
        root=root,
        radius=radius,
        degree=tuple(sorted(deg.items())),
        labels=tuple(sorted(lab.items())),
        ports=tuple(sorted(ports.items())),
        seed=cfg.seed,
        randomness=cfg.randomness,
    )


class BallView:
    """View restricted to a ball; leaving it raises ``KeyError``."""

    def __init__(self, ball: Ball, n: int, delta: int) -> None:
        self.ball = ball
        self.n = n
        self.delta = delta
        self._deg = dict(ball.degree)
        self._ports = dict(ball.ports)

    def deg(self, x: int) -> int:
        return self._deg[x]

    def nbrs(self, x: int) -> tuple[tuple[int, int], ...]:
        return self._ports[x]

    def tape(self, x: int) -> RandomTape:
        return self.ball.tape(x)


@dataclass(frozen=True)
class LocalAlgorithm:
    """``decide(ball, n, delta)`` maps a radius-``radius`` ball to the root's output."""

    radius: int
    decide: Callable[[Ball, int, int], Any]
    name: str = "local"
    alphabet: frozenset | None = None


def ball_of(g: PortedGraph, v: int, t: int, cfg: ModelConfig) -> Ball:
    """Radius-t ball read directly from the graph."""
    ids = g.ids
    dist = {v: 0}
    frontier = [v]
    for d in range(1, t + 1):
        nxt = []
        for y in frontier:
            for z, _ in g.adj[y]:
                if z not in dist:
                    dist[z] = d
                    nxt.append(z)
        frontier = nxt
    deg = {ids[x]: g.degree(x) for x in dist}
    lab = {ids[x]: tuple(g.label(x, p) for p in range(1, g.degree(x) + 1)) for x in dist}
    ports = {ids[x]: tuple((ids[u], q) for u, q in g.adj[x]) for x, d in dist.items() if d < t}
    return _make_ball(ids[v], t, deg, lab, ports, cfg)


def simulate_local(alg: LocalAlgorithm, g: PortedGraph, cfg: ModelConfig | None = None) -> list[Any]:
    """Synchronous full-information flooding for ``alg.radius`` rounds; outputs per node."""
    cfg = cfg or ModelConfig()
    ids = g.ids
    basic = [{ids[v]: (g.degree(v), tuple(g.label(v, p) for p in range(1, g.degree(v) + 1)))} for v in range(g.n)]
    pmaps: list[dict[int, tuple]] = [dict() for _ in range(g.n)]
    own_ports = [tuple((ids[u], q) for u, q in g.adj[v]) for v in range(g.n)]
    for _ in range(alg.radius):
        nb = [dict(b) for b in basic]
        npm = [dict(pm) for pm in pmaps]
        for v in range(g.n):
            npm[v][ids[v]] = own_ports[v]
            for u, _ in g.adj[v]:
                nb[v].update(basic[u])
                npm[v].update(pmaps[u])
        basic, pmaps = nb, npm
    n = cfg.n_for(g)
    out = []
    for v in range(g.n):
        deg = {x: d for x, (d, _) in basic[v].items()}
        lab = {x: l for x, (_, l) in basic[v].items()}
        ball = _make_ball(ids[v], alg.radius, deg, lab, pmaps[v], cfg)
        out.append(alg.decide(ball, n, g.delta))
    return out


def collect_ball(oracle: Oracle, root: int, t: int) -> Ball:
    """BFS the radius-t ball through probes, never re-probing a known half-edge."""
    view = ProbeView(oracle)
    dist = {root: 0}
    frontier = [root]
    ports = {}
    for d in range(1, t + 1):
        nxt = []
        for y in frontier:
            row = view.nbrs(y)
            ports[y] = row
            for z, _ in row:
                if z not in dist:
                    dist[z] = d
                    nxt.append(z)
        frontier = nxt
    deg = {x: view.deg(x) for x in dist}
    lab = {x: oracle.labels(x) for x in dist}
    return _make_ball(root, t, deg, lab, ports, oracle.cfg)


def parnas_ron(alg: LocalAlgorithm) -> ProbeAlgorithm:
    """Probe simulation of a LOCAL algorithm: collect B(v, t), then decide."""

    def run(oracle: Oracle, q: Any) -> Any:
        root = q[0] if isinstance(q, tuple) else q
        ball = collect_ball(oracle, root, alg.radius)
        out = alg.decide(ball, oracle.n, oracle.delta)
        if isinstance(q, tuple) and isinstance(out, dict):
            return out[q[1]]
        return out

    return ProbeAlgorithm(run, alphabet=alg.alphabet, name=f"parnas-ron[{alg.name}]")


# ---------------------------------------------------------------------------
# log* coloring of power graphs


def power_degree_bound(delta: int, k: int) -> int:
    """Max degree of G^k for any G of max degree ``delta``."""
    return sum(delta * (delta - 1) ** (i - 1) for i in range(1, k + 1))


def _next_prime(x: int) -> int:
    """Smallest prime strictly greater than ``x``."""
    c = x + 1
    while True:
        if c > 1 and all(c % p for p in range(2, int(c ** 0.5) + 1)):
            return c
        c += 1


def _iroot_ceil(m: int, e: int) -> int:
    r = max(1, int(round(m ** (1.0 / e))))
    while r ** e < m:
        r += 1
    while r > 1 and (r - 1) ** e >= m:
        r -= 1
    return r


@lru_cache(maxsize=None)
def linial_schedule(id_range: int, degree: int) -> tuple[tuple[int, int], ...]:
    """Sequence of ``(t, q)`` rounds: polynomials of degree ``t`` over GF(q).

    Each round maps ``m`` colors to ``q*q`` colors with ``q`` prime,
    ``q > degree * t`` and ``q**(t+1) >= m``; stops when no round shrinks m.
    """
    m = id_range
    rounds = []
    while True:
        best = None
        for t in range(1, 65):
            if best is not None and degree * t >= best[1]:
                break  # q > degree * t only grows from here
            q = _next_prime(max(degree * t, _iroot_ceil(m, t + 1) - 1))
            if best is None or q < best[1]:
                best = (t, q)
        if best[1] * best[1] >= m:
            return tuple(rounds)
        rounds.append(best)
        m = best[1] * best[1]


def schedule_colors(id_range: int, degree: int) -> int:
    sched = linial_schedule(id_range, degree)
    return sched[-1][1] ** 2 if sched else id_range


def _poly_values(color: int, t: int, q: int) -> list[int]:
    coeffs = []
    c = color
    for _ in range(t + 1):
        coeffs.append(c % q)
        c //= q
    vals = []
    for a in range(q):
        acc = 0
        for co in reversed(coeffs):
            acc = (acc * a + co) % q
        vals.append(acc)
    return vals


def _linial_step(own: int, others: Sequence[int], t: int, q: int) -> int:
    fx = _poly_values(own, t, q)
    blocked = [False] * q
    for c in others:
        fy = _poly_values(c, t, q)
        for a in range(q):
            if fy[a] == fx[a]:
                blocked[a] = True
    for a in range(q):
        if not blocked[a]:
            return a * q + fx[a]
    raise AssertionError("Linial step found no free evaluation point (coloring not proper?)")


@dataclass(frozen=True)
class ColoringResult:
    colors: dict[int, int]  # node id -> color in [0, num_colors)
    num_colors: int
    linial_rounds: int
    reduction_rounds: int
    degree_bound: int
    power: dict[int, tuple[int, ...]] = field(default=None, repr=False, compare=False)

    @property
    def rounds(self) -> int:
        return self.linial_rounds + self.reduction_rounds


def _check_unique_ids(g: PortedGraph) -> None:
    if len(set(g.ids)) != g.n:
        raise ValueError("logstar coloring needs unique identifiers")


def logstar_coloring(
    g: PortedGraph,
    k: int,
    *,
    id_range: int | None = None,
    reduce: bool = True,
) -> ColoringResult:
    """Distance-k coloring by iterated polynomial color reduction on G^k.

    With ``reduce`` the palette is then cut to ``D*D + 1`` colors (D the
    degree bound of G^k) by recoloring one class per round.
    """
    _check_unique_ids(g)
    if id_range is None:
        id_range = max(g.ids)
    if max(g.ids) > id_range or min(g.ids) < 1:
        raise ValueError("identifiers outside [1, id_range]")
    D = power_degree_bound(g.delta, k)
    ids = list(g.ids)
    pn = power_table(g, k)
    sched = linial_schedule(id_range, D)
    colors = [x - 1 for x in ids]
    if sched:
        colors = _linial_rounds(ids, pn, colors, sched)
    colors = dict(zip(ids, colors))
    m = schedule_colors(id_range, D)
    red = 0
    if reduce:
        target = D * D + 1
        if m > target:
            red = m - target
            for x in sorted(ids, key=lambda z: colors[z]):
                if colors[x] >= target:
                    used = {colors[y] for y in pn[x]}
                    colors[x] = next(c for c in range(target) if c not in used)
            m = target
    return ColoringResult(colors, m, len(sched), red, D, pn)


def _linial_rounds(ids: list[int], pn: dict, colors: list[int], sched: Sequence[tuple[int, int]]) -> list[int]:
    """All Linial rounds for every node at once; equals :func:`_linial_step` per node."""
    n = len(ids)
    arr = np.array(ids, dtype=np.int64)
    order = np.argsort(arr)
    lab = padded([pn[x] for x in ids], -1)
    nb = np.where(lab < 0, n, order[np.searchsorted(arr[order], lab)])
    out = colors
    for t, q in sched:
        # the first round's colors may exceed 64 bits; fall back to Python ints
        if max(out, default=0) < 2**62:
            c = np.array(out, dtype=np.int64)[:, None]
            digits = (c // q ** np.arange(t + 1, dtype=np.int64)) % q
        else:
            digits = np.array([[(c // q ** j) % q for j in range(t + 1)] for c in out], dtype=np.int64).reshape(n, t + 1)
        a = np.arange(q, dtype=np.int64)
        vals = np.zeros((n, q), dtype=np.int64)
        for j in range(t, -1, -1):
            vals = (vals * a + digits[:, j : j + 1]) % q
        small = vals.astype(np.int16) if q < 2**15 else vals
        ext = np.vstack([small, np.full((1, q), -1, dtype=small.dtype)])
        blocked = (ext[nb] == small[:, None, :]).any(axis=1)
        free = ~blocked
        if n and not free.any(axis=1).all():
            raise AssertionError("Linial step found no free evaluation point (coloring not proper?)")
        pick = free.argmax(axis=1)
        out = (pick * q + vals[np.arange(n), pick]).tolist()
    return out


class LazyColoring:
    """Query-side evaluation of :func:`logstar_coloring`, memoized per query."""

    def __init__(self, view: View, k: int, id_range: int, reduce: bool = True) -> None:
        self.view = view
        self.k = k
        self.D = power_degree_bound(view.delta, k)
        self.sched = linial_schedule(id_range, self.D)
        self.m = schedule_colors(id_range, self.D)
        self.target = self.D * self.D + 1 if reduce and self.m > self.D * self.D + 1 else None
        self._pn: dict[int, tuple[int, ...]] = {}
        self._round: dict[tuple[int, int], int] = {}
        self._final: dict[int, int] = {}

    @property
    def num_colors(self) -> int:
        return self.target if self.target is not None else self.m

    def power_nbrs(self, x: int) -> tuple[int, ...]:
        return power_nbrs(self.view, x, self.k, self._pn)

    def linial(self, x: int, r: int | None = None) -> int:
        if r is None:
            r = len(self.sched)
        if r == 0:
            return x - 1
        key = (x, r)
        hit = self._round.get(key)
        if hit is None:
            t, q = self.sched[r - 1]
            hit = _linial_step(self.linial(x, r - 1), [self.linial(y, r - 1) for y in self.power_nbrs(x)], t, q)
            self._round[key] = hit
        return hit

    def color(self, x: int) -> int:
        hit = self._final.get(x)
        if hit is not None:
            return hit
        c = self.linial(x)
        if self.target is not None and c >= self.target:
            # recursion only follows strictly smaller classes
            stack = [x]
            while stack:
                y = stack[-1]
                if y in self._final:
                    stack.pop()
                    continue
                cy = self.linial(y)
                if self.target is None or cy < self.target:
                    self._final[y] = cy
                    stack.pop()
                    continue
                pending = [z for z in self.power_nbrs(y) if self.target <= self.linial(z) < cy and z not in self._final]
                if pending:
                    stack.extend(pending)
                    continue
                used = {self._final[z] if self.target <= self.linial(z) < cy else self.linial(z) for z in self.power_nbrs(y)}
                self._final[y] = next(c2 for c2 in range(self.target) if c2 not in used)
                stack.pop()
            return self._final[x]
        self._final[x] = c
        return c


def logstar_coloring_algorithm(k: int, id_range: int, reduce: bool = True) -> LocalAlgorithm:
    """The coloring as a LOCAL algorithm; the radius covers the reduction phase."""

    def decide(ball: Ball, n: int, delta: int) -> int:
        return LazyColoring(BallView(ball, n, delta), k, id_range, reduce).color(ball.root)

    def radius_for(delta: int) -> int:
        D = power_degree_bound(delta, k)
        m = schedule_colors(id_range, D)
        red = max(0, m - (D * D + 1)) if reduce else 0
        return k * (len(linial_schedule(id_range, D)) + red)

    alg = LocalAlgorithm(radius=0, decide=decide, name=f"logstar-coloring-k{k}")
    object.__setattr__(alg, "radius_for", radius_for)
    return alg


def coloring_local_algorithm(k: int, id_range: int, delta: int, reduce: bool = True) -> LocalAlgorithm:
    base = logstar_coloring_algorithm(k, id_range, reduce)
    return LocalAlgorithm(radius=base.radius_for(delta), decide=base.decide, name=base.name)


def log_star(x: float) -> int:
    n = 0
    while x > 1:
        x = math.log2(x)
        n += 1
    return n


# ---------------------------------------------------------------------------
# MIS from a coloring


def mis_from_coloring(
    g: PortedGraph, coloring: dict[int, int], *, k: int = 1, power: dict | None = None, check: bool = True
) -> set[int]:
    """Greedy class sweep: a node joins when no G^k-neighbor of a smaller class joined.

    ``coloring`` maps node IDs to colors and must be proper on G^k; pass
    ``check=False`` to skip that test for colorings known to be proper.
    Returns the set of member IDs.
    """
    if power is None:
        power = power_table(g, k)
    pn = power
    if check:
        for x in g.ids:
            for y in pn[x]:
                if coloring[x] == coloring[y]:
                    raise ValueError(f"coloring not proper: ids {x} and {y} share color {coloring[x]}")
    members: set[int] = set()
    for x in sorted(g.ids, key=lambda z: (coloring[z], z)):
        if not any(y in members for y in pn[x]):
            members.add(x)
    return members


class LazyMis:
    """Query-side MIS membership over a lazily evaluated coloring."""

    def __init__(self, coloring: LazyColoring) -> None:
        self.coloring = coloring
        self._memo: dict[int, bool] = {}

    def __contains__(self, x: int) -> bool:
        memo = self._memo
        if x in memo:
            return memo[x]
        col = self.coloring.color
        stack = [x]
        while stack:
            y = stack[-1]
            if y in memo:
                stack.pop()
                continue
            cy = col(y)
            lower = sorted((z for z in self.coloring.power_nbrs(y) if col(z) < cy), key=col)
            decided = True
            member = True
            for z in lower:
                if z in memo:
                    if memo[z]:
                        member = False
                        break
                else:
                    stack.append(z)
                    decided = False
                    break
            if decided:
                memo[y] = member
                stack.pop()
        return memo[x]


def mis_local_algorithm(k: int, id_range: int, delta: int, reduce: bool = True) -> LocalAlgorithm:
    D = power_degree_bound(delta, k)
    colors = schedule_colors(id_range, D)
    if reduce:
        colors = min(colors, D * D + 1)
    radius = coloring_local_algorithm(k, id_range, delta, reduce).radius + k * colors

    def decide(ball: Ball, n: int, dl: int) -> bool:
        lazy = LazyColoring(BallView(ball, n, dl), k, id_range, reduce)
        return ball.root in LazyMis(lazy)

    return LocalAlgorithm(radius=radius, decide=decide, name=f"mis-k{k}", alphabet=frozenset([True, False]))


# ---------------------------------------------------------------------------
# lifting an algorithm for big IDs


class _RelabeledOracle:
    """Oracle facade that shows coloring-derived IDs and a fake node count."""

    def __init__(self, oracle: Oracle, lazy: LazyColoring, n0: int) -> None:
        self._o = oracle
        self._lazy = lazy
        self.n = n0
        self.delta = oracle.delta
        self.cfg = oracle.cfg
        self._real: dict[int, int] = {}
        self.query_id = self.syn(oracle.query_id)

    def syn(self, real: int) -> int:
        s = self._lazy.color(real) + 1
        prev = self._real.setdefault(s, real)
        if prev != real:
            raise AssertionError(f"synthetic id {s} reused by ids {prev} and {real}")
        return s

    @property
    def probe_count(self) -> int:
        return self._o.probe_count

    def degree(self, sid: int) -> int:
        return self._o.degree(self._real[sid])

    def labels(self, sid: int) -> tuple:
        return self._o.labels(self._real[sid])

    def tape(self, sid: int) -> RandomTape:
        return self._o.tape(self._real[sid])

    def probe(self, sid: int, port: int):
        from .probe import Answer

        a = self._o.probe(self._real[sid], port)
        return Answer(self.syn(a.id), a.degree, a.label, a.port, a.digest)


def lift_via_coloring(alg_bigid: Callable[[Any, Any], Any], n0: int, r: int = 1, *, id_range: int | None = None) -> ProbeAlgorithm:
    """Run ``alg_bigid`` on colors of G^(n0+r) used as IDs, advertising ``n0`` nodes."""

    def run(oracle: Oracle, q: Any) -> Any:
        rng = id_range if id_range is not None else oracle.cfg.id_range(oracle.n)
        lazy = LazyColoring(ProbeView(oracle), n0 + r, rng)
        facade = _RelabeledOracle(oracle, lazy, n0)
        if isinstance(q, tuple):
            return alg_bigid(facade, (facade.query_id, q[1]))
        return alg_bigid(facade, facade.query_id)

    return ProbeAlgorithm(run, alphabet=getattr(alg_bigid, "alphabet", None), name=f"lifted[{getattr(alg_bigid, 'name', 'alg')}]")
