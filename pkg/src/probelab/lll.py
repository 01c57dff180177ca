"""Lovász Local Lemma instances, exact conditional probabilities, and solvers.

Events carry explicit sets of violating tuples over their variable scope, so
every conditional probability here is an exact rational.  Randomness is a
counter-based hash of ``(seed, tag, identifier)``; the global and per-query
code paths therefore draw identical colors and samples without sharing state.
"""
from __future__ import annotations

import builtins
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .graph import FORMAT_VERSION, GraphFormatError, PortedGraph, ball_table, from_edges, padded

SCOPE_BITS = 24
MASK = (1 << 64) - 1

TAG_COLOR = 1
TAG_SAMPLE = 2
TAG_ORDER = 3
TAG_MT = 4


class CriterionViolated(ValueError):
    pass


class ScopeTooLarge(ValueError):
    pass


class ComponentTooLarge(Exception):
    def __init__(self, size: int, cap: int) -> None:
        super().__init__(f"dangerous component exceeds {cap} events (reached {size})")
        self.size = size
        self.cap = cap


class Unsatisfiable(RuntimeError):
    """Raised when a component has no avoiding assignment; the LLL criterion was not met."""


class IterationCapExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# hashing


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def _np_splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def id_keys(xs: Sequence[Hashable]) -> np.ndarray:
    """:func:`id_key` over a sequence; pairs of small non-negative ints take a vectorized path."""
    if xs and all(type(x) is tuple and len(x) == 2 and type(x[0]) is int and type(x[1]) is int for x in xs):
        a = np.array(xs, dtype=np.int64)
        if a.min() >= 0:
            u = a.astype(np.uint64)
            with np.errstate(over="ignore"):
                h = np.full(len(xs), splitmix64(2 + 0x51ED), dtype=np.uint64)
                h = _np_splitmix64(h ^ u[:, 0])
                return _np_splitmix64(h ^ u[:, 1])
    return np.array([id_key(x) for x in xs], dtype=np.uint64)


def id_key(x: Hashable) -> int:
    """Stable 64-bit key for int, str, or (nested) tuple identifiers."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int):
        return x & MASK
    if isinstance(x, tuple):
        h = splitmix64(len(x) + 0x51ED)
        for e in x:
            h = splitmix64(h ^ id_key(e))
        return h
    if isinstance(x, str):
        h = 0xC0FFEE
        for b in x.encode():
            h = splitmix64(h ^ b)
        return h
    raise TypeError(f"unsupported identifier type {type(x).__name__}")


def _stream(seed: int, tag: int) -> int:
    return splitmix64(splitmix64(seed & MASK) ^ (tag * 0xD1B54A32D192ED03 & MASK))


def mix(seed: int, tag: int, key: int) -> int:
    return splitmix64(_stream(seed, tag) ^ key)


def mix_many(seed: int, tag: int, keys: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _np_splitmix64(np.uint64(_stream(seed, tag)) ^ keys)


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Variable:
    id: Hashable
    domain: int
    dist: tuple[Fraction, ...] | None = None  # None means uniform

    def prob(self, v: int) -> Fraction:
        return Fraction(1, self.domain) if self.dist is None else self.dist[v]


@dataclass(frozen=True)
class Event:
    id: Hashable
    vbl: tuple[Hashable, ...]
    bad: frozenset[tuple[int, ...]]


class LllInstance:
    """Variables, events, and the dependency structure derived from shared scopes."""

    def __init__(
        self,
        variables: Iterable[Variable],
        events: Iterable[Event],
        *,
        scope_limit: int = SCOPE_BITS,
        degree_bound: int | None = None,
    ) -> None:
        self.variables: tuple[Variable, ...] = tuple(variables)
        self.events: tuple[Event, ...] = tuple(events)
        self.scope_limit = scope_limit
        self.var = {x.id: x for x in self.variables}
        self.event = {e.id: e for e in self.events}
        if len(self.var) != len(self.variables):
            raise ValueError("duplicate variable id")
        if len(self.event) != len(self.events):
            raise ValueError("duplicate event id")
        for x in self.variables:
            if x.domain < 1:
                raise ValueError(f"variable {x.id!r} has empty domain")
            if x.dist is not None:
                if len(x.dist) != x.domain or sum(x.dist) != 1 or min(x.dist) < 0:
                    raise ValueError(f"variable {x.id!r}: distribution must be a probability vector of length {x.domain}")
        occ: dict[Hashable, list[Hashable]] = {x.id: [] for x in self.variables}
        for e in self.events:
            if len(set(e.vbl)) != len(e.vbl):
                raise ValueError(f"event {e.id!r} repeats a variable")
            for x in e.vbl:
                if x not in self.var:
                    raise ValueError(f"event {e.id!r} uses unknown variable {x!r}")
                occ[x].append(e.id)
            for t in e.bad:
                if len(t) != len(e.vbl) or any(not 0 <= v < self.var[x].domain for v, x in zip(t, e.vbl)):
                    raise ValueError(f"event {e.id!r}: bad tuple {t} outside the scope's domains")
        self.events_of_var: dict[Hashable, tuple[Hashable, ...]] = {x: tuple(es) for x, es in occ.items()}
        dep: dict[Hashable, set] = {e.id: set() for e in self.events}
        for es in self.events_of_var.values():
            for a in es:
                for b in es:
                    if a != b:
                        dep[a].add(b)
        self.dependency: dict[Hashable, tuple[Hashable, ...]] = {
            a: tuple(sorted(bs, key=self._order_key)) for a, bs in dep.items()
        }
        self.d = max((len(v) for v in self.dependency.values()), default=0)
        self.degree_bound = degree_bound if degree_bound is not None else self.d
        if self.degree_bound < self.d:
            raise ValueError(f"degree bound {self.degree_bound} below dependency degree {self.d}")
        self._probs: dict[Hashable, Fraction] | None = None

    @staticmethod
    def _order_key(x: Hashable) -> Any:
        return x

    @property
    def uniform(self) -> bool:
        return all(x.dist is None for x in self.variables)

    def scope_bits(self, eid: Hashable) -> float:
        return sum(math.log2(self.var[x].domain) for x in self.event[eid].vbl)

    def probability(self, eid: Hashable) -> Fraction:
        return event_probability(self, eid, PartialAssignment())

    @property
    def probabilities(self) -> dict[Hashable, Fraction]:
        if self._probs is None:
            if self.uniform:
                self._probs = {}
                for e in self.events:
                    doms = [self.var[x].domain for x in e.vbl]
                    if sum(map(math.log2, doms)) > self.scope_limit:
                        self.probability(e.id)  # raises ScopeTooLarge
                    self._probs[e.id] = Fraction(len(e.bad), math.prod(doms))
            else:
                self._probs = {e.id: self.probability(e.id) for e in self.events}
        return self._probs

    @property
    def p(self) -> Fraction:
        return max(self.probabilities.values(), default=Fraction(0))

    def is_violated(self, eid: Hashable, assignment: Mapping[Hashable, int]) -> bool:
        e = self.event[eid]
        return tuple(assignment[x] for x in e.vbl) in e.bad

    def violated(self, assignment: Mapping[Hashable, int]) -> list[Hashable]:
        return [e.id for e in self.events if self.is_violated(e.id, assignment)]

    def dependency_graph(self) -> PortedGraph:
        """Dependency graph; node i is ``events[i]`` with identifier i + 1."""
        idx = {e.id: i for i, e in enumerate(self.events)}
        edges = [(idx[a], idx[b]) for a, bs in self.dependency.items() for b in bs if idx[a] < idx[b]]
        return from_edges(len(self.events), edges, delta=max(self.d, 1))


@dataclass
class PartialAssignment:
    set: dict[Hashable, int] = field(default_factory=dict)
    frozen: builtins.set[Hashable] = field(default_factory=builtins.set)

    def __post_init__(self) -> None:
        both = self.frozen.intersection(self.set)
        if both:
            raise ValueError(f"variables both set and frozen: {sorted(map(repr, both))[:5]}")


def event_probability(inst: LllInstance, eid: Hashable, partial: PartialAssignment | Mapping[Hashable, int]) -> Fraction:
    """Exact probability that event ``eid`` occurs given the set variables."""
    fixed = partial.set if isinstance(partial, PartialAssignment) else partial
    e = inst.event[eid]
    bits = inst.scope_bits(eid)
    if bits > inst.scope_limit:
        raise ScopeTooLarge(f"event {eid!r} scope is {bits:.1f} binary-equivalent variables; limit {inst.scope_limit}")
    scope = [inst.var[x] for x in e.vbl]
    if all(x.dist is None for x in scope):
        # uniform scope: every consistent bad tuple has the same weight
        cnt = sum(1 for t in e.bad if _consistent(t, e.vbl, fixed))
        return Fraction(cnt, math.prod(x.domain for x in scope if x.id not in fixed))
    total = Fraction(0)
    for t in e.bad:
        w = Fraction(1)
        for v, x in zip(t, scope):
            if x.id in fixed:
                if fixed[x.id] != v:
                    w = Fraction(0)
                    break
            else:
                w *= x.prob(v)
        total += w
    return total


# ---------------------------------------------------------------------------
# criteria


@dataclass(frozen=True)
class CriterionVerdict:
    holds: bool
    kind: str
    p: Fraction
    d: int
    value: float
    binding_event: Hashable | None

    def __bool__(self) -> bool:
        return self.holds

    def __str__(self) -> str:
        state = "holds" if self.holds else "fails"
        return f"{self.kind}: {state} (p={self.p}, d={self.d}, lhs={self.value:.6g}, event={self.binding_event!r})"


def parse_criterion(kind: str) -> tuple[str, float]:
    if kind == "4pd":
        return "4pd", 0.0
    if kind == "exp":
        return "exp", 0.0
    if kind.startswith("poly"):
        _, _, c = kind.partition(":")
        return "poly", float(c) if c else 1.0
    raise ValueError(f"unknown criterion {kind!r}; expected 4pd, exp or poly:c")


def check_criterion(inst: LllInstance, kind: str) -> CriterionVerdict:
    """Evaluate ``4pd``, ``poly:c`` (p(e d)^c <= 1) or ``exp`` (p 2^d <= 1).

    Every criterion additionally requires p < 1: a certain event cannot be avoided.
    """
    name, c = parse_criterion(kind)
    if not inst.events:
        return CriterionVerdict(True, kind, Fraction(0), 0, 0.0, None)
    probs = inst.probabilities
    binding = max(inst.events, key=lambda e: (probs[e.id], len(inst.dependency[e.id]))).id
    p, d = probs[binding], inst.d
    if name == "4pd":
        value = float(4 * p * d)
        ok = 4 * p * d <= 1
    elif name == "exp":
        value = float(p * 2 ** d)
        ok = p * 2 ** d <= 1
    else:
        value = float(p) * (math.e * d) ** c
        ok = value <= 1
    return CriterionVerdict(bool(ok and p < 1), kind, p, d, value, binding)


# ---------------------------------------------------------------------------
# configuration and sampling


@dataclass(frozen=True)
class LllConfig:
    c: float = 1.0
    c_prime: int = 5
    lam: float | None = None  # defaults to c / 2
    beta: float = 8.0
    tau_prime: float | None = None  # defaults to tau
    backtrack_cap: int = 200_000
    mt_cap: int = 100_000

    def tau(self, dhat: int) -> float:
        lam = self.c / 2 if self.lam is None else self.lam
        return float(max(dhat, 2)) ** (-lam)

    def tau_bound(self, dhat: int) -> float:
        return self.tau(dhat) if self.tau_prime is None else self.tau_prime

    def num_colors(self, dhat: int) -> int:
        return max(dhat, 2) ** self.c_prime

    def cap(self, n: int) -> int:
        return max(1, int(self.beta * math.log2(max(n, 2))))

    @property
    def criterion(self) -> str:
        return f"poly:{self.c:g}"


def _thresholds(var: Variable) -> list[int] | None:
    if var.dist is None:
        return None
    acc, out = Fraction(0), []
    for q in var.dist:
        acc += q
        out.append((acc.numerator << 64) // acc.denominator)
    return out


def draw(h: int, var: Variable) -> int:
    """Value of ``var`` for the 64-bit word ``h``."""
    if var.dist is None:
        return h % var.domain
    for v, t in enumerate(_thresholds(var)):
        if h < t:
            return v
    return var.domain - 1


def sample_value(seed: int, var: Variable) -> int:
    return draw(mix(seed, TAG_SAMPLE, id_key(var.id)), var)


def event_color(seed: int, eid: Hashable, ncolors: int) -> int:
    return mix(seed, TAG_COLOR, id_key(eid)) % ncolors


def value_order(seed: int, var: Variable) -> list[int]:
    k = id_key(var.id)
    return sorted(range(var.domain), key=lambda v: mix(seed, TAG_ORDER, splitmix64(k ^ v)))


# ---------------------------------------------------------------------------
# event sources: what both solvers need to know about events


class InstanceSource:
    """Events of an :class:`LllInstance`; neighbor lists optionally come from probes."""

    def __init__(self, inst: LllInstance, view: Any = None) -> None:
        self.inst = inst
        self.view = view
        self.dhat = inst.degree_bound
        self.n = len(inst.events)
        self.uniform = inst.uniform
        if view is not None:
            self._gid = {e.id: i + 1 for i, e in enumerate(inst.events)}
            self._eid = {i + 1: e.id for i, e in enumerate(inst.events)}

    def vbl(self, e: Hashable) -> tuple[Hashable, ...]:
        return self.inst.event[e].vbl

    def bad(self, e: Hashable) -> frozenset[tuple[int, ...]]:
        return self.inst.event[e].bad

    def variable(self, x: Hashable) -> Variable:
        return self.inst.var[x]

    def nbrs(self, e: Hashable) -> tuple[Hashable, ...]:
        if self.view is None:
            return self.inst.dependency[e]
        return tuple(self._eid[g] for g, _ in self.view.nbrs(self._gid[e]))


def _consistent(t: tuple[int, ...], vbl: Sequence[Hashable], values: Mapping[Hashable, int]) -> bool:
    for v, x in zip(t, vbl):
        w = values.get(x)
        if w is not None and w != v:
            return False
    return True


def _positive(t: tuple[int, ...], vbl: Sequence[Hashable], values: Mapping[Hashable, int], src: Any) -> bool:
    for v, x in zip(t, vbl):
        w = values.get(x)
        if w is None:
            if src.variable(x).prob(v) == 0:
                return False
        elif w != v:
            return False
    return True


def source_probability(src: Any, e: Hashable, values: Mapping[Hashable, int]) -> Fraction:
    vbl = src.vbl(e)
    total = Fraction(0)
    for t in src.bad(e):
        w = Fraction(1)
        for v, x in zip(t, vbl):
            if x in values:
                if values[x] != v:
                    w = Fraction(0)
                    break
            else:
                w *= src.variable(x).prob(v)
        total += w
    return total


# ---------------------------------------------------------------------------
# component solving


def _comp_vars(src: Any, comp: Iterable[Hashable], fixed: Mapping[Hashable, int]) -> list[Hashable]:
    xs = {x for e in comp for x in src.vbl(e) if x not in fixed}
    return sorted(xs)


def _backtrack(src: Any, comp: Sequence[Hashable], fixed: Mapping[Hashable, int], seed: int, cap: int | None) -> dict | None:
    xs = _comp_vars(src, comp, fixed)
    pos = {x: i for i, x in enumerate(xs)}
    # each event is checked once its last free variable is assigned
    last: dict[int, list[Hashable]] = {}
    for e in comp:
        free = [pos[x] for x in src.vbl(e) if x in pos]
        if not free:
            if any(_consistent(t, src.vbl(e), fixed) for t in src.bad(e)):
                raise Unsatisfiable(f"event {e!r} occurs under the fixed variables")
            continue
        last.setdefault(max(free), []).append(e)
    orders = [value_order(seed, src.variable(x)) for x in xs]
    values = dict(fixed)
    choice = [0] * len(xs)
    i, steps = 0, 0
    while 0 <= i < len(xs):
        if choice[i] == len(orders[i]):
            choice[i] = 0
            values.pop(xs[i], None)
            i -= 1
            if i >= 0:
                choice[i] += 1
            continue
        steps += 1
        if cap is not None and steps > cap:
            return None
        values[xs[i]] = orders[i][choice[i]]
        if any(tuple(values[x] for x in src.vbl(e)) in src.bad(e) for e in last.get(i, ())):
            choice[i] += 1
            continue
        i += 1
    if i < 0:
        raise Unsatisfiable(f"no avoiding assignment for a component of {len(comp)} events")
    return {x: values[x] for x in xs}


def _component_mt(src: Any, comp: Sequence[Hashable], fixed: Mapping[Hashable, int], seed: int, cap: int) -> dict | None:
    xs = _comp_vars(src, comp, fixed)
    free = set(xs)
    counter = {x: 0 for x in xs}

    def fresh(x: Hashable) -> int:
        counter[x] += 1
        return draw(mix(seed, TAG_MT, splitmix64(id_key(x) ^ counter[x])), src.variable(x))

    values = dict(fixed)
    for x in xs:
        values[x] = fresh(x)
    order = sorted(comp)
    for _ in range(cap):
        bad = next((e for e in order if tuple(values[x] for x in src.vbl(e)) in src.bad(e)), None)
        if bad is None:
            return {x: values[x] for x in xs}
        for x in src.vbl(bad):
            if x in free:
                values[x] = fresh(x)
    return None


def solve_component(
    src: Any,
    partial: Mapping[Hashable, int] | PartialAssignment,
    component: Iterable[Hashable],
    seed: int = 0,
    cfg: LllConfig | None = None,
) -> dict[Hashable, int]:
    """Values for the unset variables of ``component`` that avoid all its events.

    Backtracking (ascending variable id, seed-permuted values) with a step cap,
    then component-restricted resampling with an iteration cap, then uncapped
    backtracking.  Only the component's own variables are read from ``partial``.
    """
    if isinstance(src, LllInstance):
        src = InstanceSource(src)
    cfg = cfg or LllConfig()
    values = partial.set if isinstance(partial, PartialAssignment) else partial
    comp = sorted(set(component))
    scope = {x for e in comp for x in src.vbl(e)}
    fixed = {x: values[x] for x in scope if x in values}
    out = _backtrack(src, comp, fixed, seed, cfg.backtrack_cap)
    if out is None:
        out = _component_mt(src, comp, fixed, seed, cfg.mt_cap)
    if out is None:
        out = _backtrack(src, comp, fixed, seed, None)
    return out


# ---------------------------------------------------------------------------
# Moser-Tardos


@dataclass(frozen=True)
class MtResult:
    assignment: dict[Hashable, int]
    resamples: int


def moser_tardos(inst: LllInstance, seed: int = 0, *, cap: int = 1_000_000) -> MtResult:
    """Sequential resampling; always resamples the smallest-id violated event."""
    import heapq

    counter = {x.id: 0 for x in inst.variables}

    def fresh(x: Variable) -> int:
        counter[x.id] += 1
        return draw(mix(seed, TAG_MT, splitmix64(id_key(x.id) ^ counter[x.id])), x)

    values = {x.id: fresh(x) for x in inst.variables}
    heap = [e.id for e in inst.events if inst.is_violated(e.id, values)]
    heapq.heapify(heap)
    queued = set(heap)
    resamples = 0
    while heap:
        eid = heapq.heappop(heap)
        queued.discard(eid)
        if not inst.is_violated(eid, values):
            continue
        if resamples >= cap:
            raise IterationCapExceeded(f"more than {cap} resamplings; the LLL criterion likely fails")
        resamples += 1
        for x in inst.event[eid].vbl:
            values[x] = fresh(inst.var[x])
        for f in (eid, *inst.dependency[eid]):
            if f not in queued and inst.is_violated(f, values):
                heapq.heappush(heap, f)
                queued.add(f)
    return MtResult(values, resamples)


# ---------------------------------------------------------------------------
# pre-shattering, global form


@dataclass
class ShatterResult:
    partial: PartialAssignment
    dangerous: frozenset  # events with nonzero conditional probability
    marked: frozenset  # events that tripped the threshold during the sweep
    failed: frozenset  # events whose color was not unique within two hops
    components: list[frozenset]
    tau: float

    @property
    def max_component(self) -> int:
        return max((len(c) for c in self.components), default=0)


class _Fast:
    """Index arrays of an instance, cached across seeds."""

    def __init__(self, inst: LllInstance) -> None:
        ev = inst.events
        m = len(ev)
        self.eids = [e.id for e in ev]
        self.eidx = {e.id: i for i, e in enumerate(ev)}
        self.vids = sorted(inst.var)
        self.vidx = {x: i for i, x in enumerate(self.vids)}
        self.vars = [inst.var[x] for x in self.vids]
        self.dom = [x.domain for x in self.vars]
        self.ekeys = id_keys(self.eids)
        self.vkeys = id_keys(self.vids)
        self.int_ids = all(isinstance(e, int) and not isinstance(e, bool) for e in self.eids)
        self.vbl = [[self.vidx[x] for x in e.vbl] for e in ev]
        self.bad = [list(e.bad) for e in ev]
        self.inc: list[list[tuple[int, int]]] = [[] for _ in self.vids]
        for i, vs in enumerate(self.vbl):
            for pos, x in enumerate(vs):
                self.inc[x].append((i, pos))
        self.adj = [[self.eidx[f] for f in inst.dependency[e]] for e in self.eids]
        d = max((len(a) for a in self.adj), default=0)
        if m * (d + 1) ** 2 <= 2**25:
            self.two_hop = ball_table(padded(self.adj, m), 2)
        else:
            two = []
            for i in range(m):
                s = set(self.adj[i])
                for j in self.adj[i]:
                    s.update(self.adj[j])
                s.discard(i)
                two.append(sorted(s))
            self.two_hop = padded(two, m)
        L = max((len(c) for c in self.inc), default=0)
        self.var_events = np.full((len(self.vids), max(L, 1)), m, dtype=np.int64)
        for x, c in enumerate(self.inc):
            self.var_events[x, : len(c)] = [i for i, _ in c]
        self.uniform = inst.uniform
        self.dom_np = np.array(self.dom, dtype=np.uint64)
        self.den0 = [math.prod(self.dom[x] for x in vs) for vs in self.vbl]


def _fast(inst: LllInstance) -> _Fast:
    f = getattr(inst, "_fast_cache", None)
    if f is None:
        f = _Fast(inst)
        inst._fast_cache = f
    return f


def _colors_and_order(f: _Fast, seed: int, ncolors: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = len(f.eids)
    colors = (mix_many(seed, TAG_COLOR, f.ekeys) % np.uint64(ncolors)).astype(np.int64)
    ext = np.append(colors, -1)
    failed = (ext[f.two_hop] == colors[:, None]).any(axis=1) if m else np.zeros(0, dtype=bool)
    if f.int_ids:
        order = np.lexsort((np.array(f.eids, dtype=np.int64), colors))
    else:
        order = np.array(sorted(range(m), key=lambda i: (int(colors[i]), f.eids[i])), dtype=np.int64)
    rank = np.empty(m + 1, dtype=np.int64)
    rank[order] = np.arange(m)
    rank[m] = m + 1
    return colors, failed, rank


def pre_shatter(inst: LllInstance, cfg: LllConfig | None = None, seed: int = 0, *, check: bool = True) -> ShatterResult:
    """Color, fail non-unique colors, sweep classes, freeze around dangerous events.

    Postcondition (asserted): every event's conditional probability is at most tau'.
    """
    cfg = cfg or LllConfig()
    if check:
        verdict = check_criterion(inst, cfg.criterion)
        if not verdict:
            raise CriterionViolated(str(verdict))
    f = _fast(inst)
    m, nv = len(f.eids), len(f.vids)
    dhat = inst.degree_bound
    tau = cfg.tau(dhat)
    tau_q = Fraction(tau)
    tnum, tden = tau_q.numerator, tau_q.denominator
    colors, failed, rank = _colors_and_order(f, seed, cfg.num_colors(dhat))
    owner = f.var_events[np.arange(nv), np.argmin(rank[f.var_events], axis=1)] if nv else np.zeros(0, dtype=np.int64)
    if f.uniform:
        samples = (mix_many(seed, TAG_SAMPLE, f.vkeys) % f.dom_np).tolist()
    else:
        samples = [sample_value(seed, v) for v in f.vars]
    frozen = [False] * nv
    for i in np.flatnonzero(failed).tolist():
        for x in f.vbl[i]:
            frozen[x] = True
    value = [-1] * nv
    alive = [list(b) for b in f.bad]
    den = list(f.den0)
    marked: set[int] = set()
    dom, inc, vbl = f.dom, f.inc, f.vbl
    active = ~np.append(failed, True)[owner] if nv else np.zeros(0, dtype=bool)  # eventless variables stay unset
    var_order = np.arange(nv)  # vids are sorted, so index order is id order
    sweep = var_order[active]
    sweep = sweep[np.lexsort((sweep, rank[owner[sweep]]))].tolist()
    uniform = f.uniform
    for x in sweep:
        if frozen[x]:
            continue
        val = samples[x]
        trip = []
        for e, pos in inc[x]:
            al = alive[e]
            if not al:
                continue
            if uniform:
                cnt = 0
                for t in al:
                    if t[pos] == val:
                        cnt += 1
                if cnt and cnt * dom[x] * tden > tnum * den[e]:
                    trip.append(e)
            else:
                vals = {f.vids[y]: value[y] for y in vbl[e] if value[y] >= 0}
                vals[f.vids[x]] = val
                if source_probability(_IndexSource(f), f.eids[e], vals) > tau_q:
                    trip.append(e)
        if trip:
            frozen[x] = True
            for e in trip:
                marked.add(e)
                for y in vbl[e]:
                    if value[y] < 0:
                        frozen[y] = True
            continue
        value[x] = val
        for e, pos in inc[x]:
            al = alive[e]
            if al:
                alive[e] = [t for t in al if t[pos] == val]
            den[e] //= dom[x]
    set_vals = {f.vids[x]: v for x, v in enumerate(value) if v >= 0}
    tau_p = cfg.tau_bound(dhat)
    if uniform:
        dangerous = [e for e in range(m) if alive[e]]
        worst = max((len(alive[e]) / den[e] for e in dangerous), default=0.0)
    else:
        src = _IndexSource(f)
        probs = {e: source_probability(src, f.eids[e], {f.vids[y]: value[y] for y in vbl[e] if value[y] >= 0}) for e in range(m)}
        dangerous = [e for e in range(m) if probs[e] > 0]
        worst = float(max(probs.values(), default=0))
    assert worst <= tau_p * (1 + 1e-12), f"conditional probability {worst} exceeds tau'={tau_p}"
    dset = set(dangerous)
    comps = []
    seen: set[int] = set()
    for s in dangerous:
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        q = deque([s])
        while q:
            a = q.popleft()
            for b in f.adj[a]:
                if b in dset and b not in seen:
                    seen.add(b)
                    comp.append(b)
                    q.append(b)
        comps.append(frozenset(f.eids[e] for e in comp))
    frozen_ids = {f.vids[x] for x in range(nv) if frozen[x] and value[x] < 0}
    return ShatterResult(
        partial=PartialAssignment(set_vals, frozen_ids),
        dangerous=frozenset(f.eids[e] for e in dangerous),
        marked=frozenset(f.eids[e] for e in marked),
        failed=frozenset(f.eids[e] for e in np.flatnonzero(failed).tolist()),
        components=comps,
        tau=tau,
    )


class _IndexSource:
    def __init__(self, f: _Fast) -> None:
        self.f = f

    def vbl(self, e: Hashable) -> tuple:
        return tuple(self.f.vids[x] for x in self.f.vbl[self.f.eidx[e]])

    def bad(self, e: Hashable) -> list:
        return self.f.bad[self.f.eidx[e]]

    def variable(self, x: Hashable) -> Variable:
        return self.f.vars[self.f.vidx[x]]


@dataclass
class LllSolution:
    assignment: dict[Hashable, int]
    shatter: ShatterResult
    oversized: list[frozenset]  # components a query would refuse


def lll_solve(inst: LllInstance, cfg: LllConfig | None = None, seed: int = 0, *, n: int | None = None) -> LllSolution:
    """Global run: pre-shatter, solve every dangerous component, sample the rest."""
    cfg = cfg or LllConfig()
    sh = pre_shatter(inst, cfg, seed)
    src = InstanceSource(inst)
    values = dict(sh.partial.set)
    cap = cfg.cap(n if n is not None else len(inst.events))
    oversized = []
    for comp in sh.components:
        if len(comp) > cap:
            oversized.append(comp)
        values.update(solve_component(src, sh.partial.set, comp, seed, cfg))
    for x in inst.variables:
        if x.id not in values:
            values[x.id] = sample_value(seed, x)
    return LllSolution(values, sh, oversized)


# ---------------------------------------------------------------------------
# pre-shattering, per-query replay


@dataclass
class _Acts:
    set: dict
    frozen: builtins.set


class _Need(Exception):
    def __init__(self, event: Hashable) -> None:
        self.event = event


class LazyShatter:
    """Replays the sweep around a few events, touching only what they depend on.

    Events of one color class are at distance at least 3 in the dependency
    graph, so their sweep steps commute; an event's steps therefore depend
    only on steps of nearby events with a smaller ``(color, id)`` key.  A
    variable owned by an earlier event is either unset or holds its sample,
    so an upper bound over both cases usually settles a threshold test
    without replaying the owner.
    """

    def __init__(self, src: Any, cfg: LllConfig, seed: int, *, n: int | None = None) -> None:
        self.src = src
        self.cfg = cfg
        self.seed = seed
        self.ncolors = cfg.num_colors(src.dhat)
        self.tau = cfg.tau(src.dhat)
        self._tau_q = Fraction(self.tau)
        self.cap = cfg.cap(n if n is not None else src.n)
        self.uniform = getattr(src, "uniform", False)
        self._color: dict = {}
        self._nbrs: dict = {}
        self._home: dict = {}
        self._evof: dict = {}
        self._owner: dict = {}
        self._failed: dict = {}
        self._acts: dict = {}
        self._sample: dict = {}
        self._danger: dict = {}
        self._solved: dict = {}

    # structure
    def nbrs(self, e: Hashable) -> tuple:
        r = self._nbrs.get(e)
        if r is None:
            r = self._nbrs[e] = self.src.nbrs(e)
            self._register(e)
            for g in r:
                self._register(g)
        return r

    def _register(self, e: Hashable) -> None:
        for x in self.src.vbl(e):
            self._home.setdefault(x, e)

    def events_of(self, x: Hashable) -> tuple:
        r = self._evof.get(x)
        if r is None:
            h = self._home[x]
            r = self._evof[x] = (h, *(g for g in self.nbrs(h) if x in self.src.vbl(g)))
        return r

    def color(self, e: Hashable) -> int:
        c = self._color.get(e)
        if c is None:
            c = self._color[e] = event_color(self.seed, e, self.ncolors)
        return c

    def key(self, e: Hashable) -> tuple:
        return (self.color(e), e)

    def failed(self, e: Hashable) -> bool:
        r = self._failed.get(e)
        if r is None:
            c = self.color(e)
            r = False
            for g in self.nbrs(e):
                if self.color(g) == c or any(h != e and self.color(h) == c for h in self.nbrs(g)):
                    r = True
                    break
            self._failed[e] = r
        return r

    def owner(self, x: Hashable) -> Hashable:
        o = self._owner.get(x)
        if o is None:
            o = self._owner[x] = min(self.events_of(x), key=self.key)
        return o

    def sample(self, x: Hashable) -> int:
        v = self._sample.get(x)
        if v is None:
            v = self._sample[x] = sample_value(self.seed, self.src.variable(x))
        return v

    # probabilities
    def _exceeds(self, e: Hashable, vals: Mapping[Hashable, int]) -> bool:
        src = self.src
        if self.uniform:
            vbl = src.vbl(e)
            cnt = sum(1 for t in src.bad(e) if _consistent(t, vbl, vals))
            if not cnt:
                return False
            den = math.prod(src.variable(y).domain for y in vbl if y not in vals)
            return cnt * self._tau_q.denominator > self._tau_q.numerator * den
        return source_probability(src, e, vals) > self._tau_q

    def _upper(self, e: Hashable, known: Mapping[Hashable, int | None], maybe: Iterable[Hashable]) -> float:
        """Largest probability of ``e`` over which of ``maybe`` hold their samples."""
        src = self.src
        maybe = {y: self.sample(y) for y in maybe}
        total = 0.0
        for t in src.bad(e):
            w = 1.0
            for v, y in zip(t, src.vbl(e)):
                if y in known:
                    k = known[y]
                    if k is None:
                        w *= float(src.variable(y).prob(v))
                    elif k != v:
                        w = 0.0
                        break
                elif y in maybe:
                    if maybe[y] != v:
                        w *= float(src.variable(y).prob(v))
                else:
                    w *= float(src.variable(y).prob(v))
            total += w
        return total

    def _may_trip(self, g: Hashable, e: Hashable) -> bool:
        """Whether the sweep step of ``g`` could push ``e`` over the threshold."""
        kg = self.key(g)
        maybe = [y for y in self.src.vbl(e) if self.key(self.owner(y)) <= kg]
        if not any(self.owner(y) == g for y in maybe):
            return False
        return self._upper(e, {}, maybe) > self.tau * (1 - 1e-9)

    # sweep
    def actions(self, w: Hashable) -> _Acts:
        acts = self._acts.get(w)
        if acts is not None:
            return acts
        stack = [w]
        while stack:
            top = stack[-1]
            if top in self._acts:
                stack.pop()
                continue
            try:
                self._acts[top] = self._run(top)
                stack.pop()
            except _Need as need:
                stack.append(need.event)
        return self._acts[w]

    def _need(self, g: Hashable) -> _Acts:
        a = self._acts.get(g)
        if a is None:
            raise _Need(g)
        return a

    def _frozen_before(self, x: Hashable, t: tuple) -> bool:
        evs = self.events_of(x)
        if any(self.failed(e) for e in evs):
            return True
        seen = set()
        for e in evs:
            for g in (e, *self.nbrs(e)):
                if g in seen or self.key(g) >= t:
                    continue
                seen.add(g)
                cands = [f for f in evs if f == g or f in self.nbrs(g)]
                # the bound is cheap; a failed event (2-hop check) acts on nothing
                if not any(self._may_trip(g, f) for f in cands) or self.failed(g):
                    continue
                if x in self._need(g).frozen:
                    return True
        return False

    def _trip(self, e: Hashable, w: Hashable, t: tuple, acts: _Acts, x: Hashable, val: int) -> dict | None:
        known: dict = {x: val}
        unknown = []
        for y in self.src.vbl(e):
            if y == x:
                continue
            if y in acts.set:
                known[y] = acts.set[y]
                continue
            o = self.owner(y)
            if o == w or self.key(o) >= t:
                known[y] = None
                continue
            a = self._acts.get(o)
            if a is None:
                unknown.append(y)
            else:
                known[y] = a.set.get(y)
        if unknown and self._upper(e, known, unknown) <= self.tau * (1 - 1e-9):
            return None
        for y in unknown:
            known[y] = self._need(self.owner(y)).set.get(y)
        vals = {y: v for y, v in known.items() if v is not None}
        return vals if self._exceeds(e, vals) else None

    def _run(self, w: Hashable) -> _Acts:
        acts = _Acts({}, builtins.set())
        if self.failed(w):
            return acts
        t = self.key(w)
        src = self.src
        for x in sorted(x for x in src.vbl(w) if self.owner(x) == w):
            if x in acts.frozen or self._frozen_before(x, t):
                continue
            val = self.sample(x)
            trip = []
            for e in self.events_of(x):
                vals = self._trip(e, w, t, acts, x, val)
                if vals is not None:
                    trip.append((e, vals))
            if trip:
                acts.frozen.add(x)
                for e, vals in trip:
                    for y in src.vbl(e):
                        if y != x and y not in vals:
                            acts.frozen.add(y)
                continue
            acts.set[x] = val
        return acts

    # outcome
    def final(self, x: Hashable) -> int | None:
        return self.actions(self.owner(x)).set.get(x)

    def dangerous(self, e: Hashable) -> bool:
        r = self._danger.get(e)
        if r is None:
            vbl = self.src.vbl(e)
            alive = [t for t in self.src.bad(e) if _positive(t, vbl, {}, self.src)]
            # replayed owners first; stop as soon as no bad tuple survives
            for i in sorted(range(len(vbl)), key=lambda i: self.owner(vbl[i]) not in self._acts):
                if not alive:
                    break
                v = self.final(vbl[i])
                if v is not None:
                    alive = [t for t in alive if t[i] == v]
            r = self._danger[e] = bool(alive)
        return r

    def component(self, e: Hashable) -> frozenset:
        comp = {e}
        q = deque([e])
        while q:
            a = q.popleft()
            for b in self.nbrs(a):
                if b not in comp and self.dangerous(b):
                    comp.add(b)
                    if len(comp) > self.cap:
                        raise ComponentTooLarge(len(comp), self.cap)
                    q.append(b)
        return frozenset(comp)

    def value(self, x: Hashable) -> int:
        v = self.final(x)
        if v is not None:
            return v
        hit = self._solved.get(x)
        if hit is not None:
            return hit
        home = next((e for e in self.events_of(x) if self.dangerous(e)), None)
        if home is None:
            return self.sample(x)
        comp = self.component(home)
        fixed = {}
        for e in comp:
            for y in self.src.vbl(e):
                v = self.final(y)
                if v is not None:
                    fixed[y] = v
        self._solved.update(solve_component(self.src, fixed, comp, self.seed, self.cfg))
        return self._solved[x]

    def event_values(self, e: Hashable) -> dict[Hashable, int]:
        self._register(e)
        return {x: self.value(x) for x in self.src.vbl(e)}


def lll_query(
    inst: LllInstance,
    g: PortedGraph | None,
    event_id: Hashable,
    cfg: LllConfig | None = None,
    seed: int = 0,
    model: Any = None,
) -> tuple[dict[Hashable, int] | None, Any]:
    """Values of ``vbl(event_id)`` computed by probing the dependency graph ``g``.

    Returns ``(None, transcript)`` when the query fails (oversized component).
    """
    from .local import ProbeView
    from .probe import ModelConfig, ProbeAlgorithm, QueryFailed, run_query

    cfg = cfg or LllConfig()
    g = g if g is not None else inst.dependency_graph()
    model = model or ModelConfig(seed=seed)
    idx = {e.id: i for i, e in enumerate(inst.events)}

    def run(oracle: Any, q: Any) -> tuple:
        lazy = LazyShatter(InstanceSource(inst, ProbeView(oracle)), cfg, seed, n=oracle.n)
        try:
            vals = lazy.event_values(event_id)
        except ComponentTooLarge as exc:
            raise QueryFailed(str(exc)) from exc
        return tuple(sorted(vals.items()))

    out, tr = run_query(ProbeAlgorithm(run, name="lll-query"), g, idx[event_id], model)
    return (dict(out) if out is not None else None), tr


# ---------------------------------------------------------------------------
# random instances


def random_instance(
    num_vars: int,
    num_events: int,
    scope: int,
    seed: int,
    *,
    domain: int = 2,
    bad: int = 1,
    max_occurrence: int = 2,
    biased: bool = False,
) -> LllInstance:
    """Events over random scopes where no variable joins more than ``max_occurrence`` events.

    The cap bounds the dependency degree by ``scope * (max_occurrence - 1)``.
    With ``biased`` each variable gets a random rational distribution.
    """
    import random

    rng = random.Random(seed)
    if num_events * scope > num_vars * max_occurrence:
        raise ValueError("not enough variable slots for the requested events")
    slots = [x for x in range(num_vars) for _ in range(max_occurrence)]
    variables = []
    for x in range(num_vars):
        dist = None
        if biased:
            w = [rng.randint(1, 4) for _ in range(domain)]
            dist = tuple(Fraction(a, sum(w)) for a in w)
        variables.append(Variable(x, domain, dist))
    events = []
    for e in range(num_events):
        rng.shuffle(slots)
        vbl: list[int] = []
        for i, x in enumerate(slots):
            if x not in vbl:
                vbl.append(x)
                slots[i] = -1
                if len(vbl) == scope:
                    break
        slots = [x for x in slots if x >= 0]
        vbl.sort()
        tuples: set[tuple[int, ...]] = set()
        while len(tuples) < min(bad, domain**scope):
            tuples.add(tuple(rng.randrange(domain) for _ in vbl))
        events.append(Event(e, tuple(vbl), frozenset(tuples)))
    return LllInstance(variables, events)


# ---------------------------------------------------------------------------
# file format


def _json_id(x: Any) -> Hashable:
    return tuple(_json_id(e) for e in x) if isinstance(x, list) else x


def _id_json(x: Hashable) -> Any:
    return [_id_json(e) for e in x] if isinstance(x, tuple) else x


def instance_to_json(inst: LllInstance) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "kind": "lll-instance",
        "degree_bound": inst.degree_bound,
        "variables": [
            [_id_json(x.id), x.domain] + ([[[q.numerator, q.denominator] for q in x.dist]] if x.dist is not None else [])
            for x in inst.variables
        ],
        "events": [[_id_json(e.id), [_id_json(x) for x in e.vbl], sorted(list(t) for t in e.bad)] for e in inst.events],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def instance_from_json(text: str) -> LllInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != "lll-instance":
        raise GraphFormatError("not an lll-instance document")
    if doc.get("version") != FORMAT_VERSION:
        raise GraphFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        variables = [
            Variable(_json_id(v[0]), int(v[1]), tuple(Fraction(a, b) for a, b in v[2]) if len(v) > 2 else None)
            for v in doc["variables"]
        ]
        events = [Event(_json_id(e[0]), tuple(_json_id(x) for x in e[1]), frozenset(tuple(t) for t in e[2])) for e in doc["events"]]
        return LllInstance(variables, events, degree_bound=doc.get("degree_bound"))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise GraphFormatError(f"malformed lll instance: {exc}") from exc
