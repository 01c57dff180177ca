"""The probe oracle: model restrictions, metering, randomness, witnesses."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

from .graph import PortedGraph

MODELS = ("LCA", "VOLUME", "LOCAL-sim")
ID_SPACES = ("exact-n", "polynomial", "exponential", "h-labeled")
RANDOMNESS = ("shared", "private", "none")


class ProbeError(Exception):
    """An algorithm broke a rule of the probe model."""


class FarProbeViolation(ProbeError):
    pass


class PortOutOfRange(ProbeError):
    pass


class UnknownId(ProbeError):
    pass


class QueryFailed(Exception):
    """A query could not produce an answer; counted, not propagated by :func:`run_query`."""

    reason = "failed"


class ProbeBudgetExceeded(QueryFailed):
    reason = "probe budget exceeded"


@dataclass(frozen=True)
class ModelConfig:
    model: str = "LCA"
    id_space: str = "exact-n"
    id_exponent: int = 1
    far_probes: bool | None = None
    randomness: str = "shared"
    seed: int = 0
    advertised_n: int | None = None
    probe_budget: int | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.id_space not in ID_SPACES:
            raise ValueError(f"id_space must be one of {ID_SPACES}")
        if self.randomness not in RANDOMNESS:
            raise ValueError(f"randomness must be one of {RANDOMNESS}")
        if self.far_probes is None:
            object.__setattr__(self, "far_probes", self.model == "LCA")
        if self.model == "VOLUME" and self.far_probes:
            raise ValueError("the VOLUME model forbids far probes")
        if self.model == "LCA" and not self.far_probes:
            raise ValueError("the LCA model allows far probes")

    def id_range(self, n: int) -> int:
        if self.id_space == "exact-n":
            return n
        if self.id_space == "polynomial":
            return n ** self.id_exponent
        if self.id_space == "exponential":
            return 2 ** n
        raise ValueError("h-labeled id range is the ID graph's vertex count")

    def n_for(self, g: PortedGraph) -> int:
        return self.advertised_n if self.advertised_n is not None else g.n


# ---------------------------------------------------------------------------
# randomness


def hash64(seed: int, key: Hashable, index: int = 0) -> int:
    h = hashlib.blake2b(f"{seed}|{key!r}|{index}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


class RandomTape:
    """Lazily indexed pseudorandom bit stream keyed by ``(seed, key)``."""

    __slots__ = ("seed", "key")

    def __init__(self, seed: int, key: Hashable) -> None:
        self.seed = seed
        self.key = key

    def word(self, index: int) -> int:
        return hash64(self.seed, self.key, index)

    def bits(self, count: int, start: int = 0) -> str:
        out = []
        w = start // 64
        need = start % 64 + count
        while need > 0:
            out.append(format(self.word(w), "064b"))
            w += 1
            need -= 64
        s = "".join(out)
        off = start % 64
        return s[off:off + count]

    def randbelow(self, k: int, index: int = 0) -> int:
        return self.word(index) % k

    def random(self, index: int = 0) -> float:
        return (self.word(index) >> 11) / float(1 << 53)

    def digest(self) -> str:
        return format(self.word(0), "016x")


SHARED_KEY = "shared"


def private_randomness(node_id: int, cfg: ModelConfig) -> RandomTape:
    """The random tape a node sees; shared mode ignores the node."""
    if cfg.randomness == "none":
        raise ValueError("model configured without randomness")
    if cfg.randomness == "shared":
        return RandomTape(cfg.seed, SHARED_KEY)
    return RandomTape(cfg.seed, node_id)


# ---------------------------------------------------------------------------
# transcripts and the oracle


@dataclass(frozen=True)
class Answer:
    id: int
    degree: int
    label: Hashable
    port: int  # reciprocal port at the answering node
    digest: str


@dataclass(frozen=True)
class ProbeStep:
    probed_id: int
    port: int
    answer: Answer


@dataclass
class ProbeTranscript:
    query: Any
    graph: str
    steps: list[ProbeStep] = field(default_factory=list)
    outcome: Any = None
    failed: str | None = None

    @property
    def probe_count(self) -> int:
        return len(self.steps)

    def probed_ids(self) -> list[int]:
        return [s.probed_id for s in self.steps]

    def dump(self) -> str:
        lines = []
        for s in self.steps:
            a = s.answer
            label = "-" if a.label is None else a.label
            lines.append(f"probe {s.probed_id} {s.port} -> {a.id} {a.degree} {label}")
        out = f"fail:{self.failed}" if self.failed else _symbol(self.outcome)
        lines.append(f"output {out} probes {self.probe_count}")
        return "\n".join(lines) + "\n"


def _symbol(x: Any) -> str:
    if isinstance(x, dict):
        return ",".join(f"{k}={v}" for k, v in sorted(x.items()))
    if isinstance(x, (tuple, list)):
        return ",".join(map(str, x))
    return str(x)


class Oracle:
    """Per-query probe access to a graph.

    The query node's own ID, degree, labels and randomness are free; every
    :meth:`probe` call is metered.
    """

    def __init__(self, g: PortedGraph, cfg: ModelConfig, query_node: int, query: Any = None) -> None:
        self._g = g
        self.cfg = cfg
        self.query_id = g.ids[query_node]
        self.transcript = ProbeTranscript(query=query, graph=g.fingerprint)
        self._seen = {self.query_id}
        self._node_of_id = g.node_of_id

    @property
    def n(self) -> int:
        return self.cfg.n_for(self._g)

    @property
    def delta(self) -> int:
        return self._g.delta

    @property
    def probe_count(self) -> int:
        return len(self.transcript.steps)

    def _node(self, node_id: int) -> int:
        try:
            return self._node_of_id[node_id]
        except KeyError:
            raise UnknownId(f"no node with id {node_id}") from None

    def degree(self, node_id: int) -> int:
        """Degree of a node already known to the algorithm (free local information)."""
        self._require_seen(node_id)
        return self._g.degree(self._node(node_id))

    def labels(self, node_id: int) -> tuple[Hashable, ...]:
        self._require_seen(node_id)
        v = self._node(node_id)
        return tuple(self._g.label(v, p) for p in range(1, self._g.degree(v) + 1))

    def tape(self, node_id: int) -> RandomTape:
        if self.cfg.randomness == "private":
            self._require_seen(node_id)
        return private_randomness(node_id, self.cfg)

    def _require_seen(self, node_id: int) -> None:
        if node_id not in self._seen and not self.cfg.far_probes:
            raise FarProbeViolation(f"id {node_id} was never revealed to the algorithm")

    def probe(self, node_id: int, port: int) -> Answer:
        budget = self.cfg.probe_budget
        if budget is not None and len(self.transcript.steps) >= budget:
            raise ProbeBudgetExceeded(f"budget {budget} exhausted")
        if node_id not in self._seen and not self.cfg.far_probes:
            raise FarProbeViolation(f"probe of unseen id {node_id}")
        v = self._node(node_id)
        g = self._g
        if not 1 <= port <= g.degree(v):
            raise PortOutOfRange(f"port {port} at id {node_id} of degree {g.degree(v)}")
        u, q = g.adj[v][port - 1]
        uid = g.ids[u]
        digest = private_randomness(uid, self.cfg).digest() if self.cfg.randomness == "private" else "-"
        ans = Answer(uid, g.degree(u), g.label(u, q), q, digest)
        self.transcript.steps.append(ProbeStep(node_id, port, ans))
        self._seen.add(uid)
        return ans


class ProbeAlgorithm:
    """A probe algorithm: ``fn(oracle, query) -> symbol`` plus its output alphabet.

    ``query`` is the queried node's ID, or ``(id, port)`` for a half-edge.
    """

    def __init__(self, fn: Callable[[Oracle, Any], Any], alphabet: Iterable[Hashable] | None = None, name: str = "") -> None:
        self.fn = fn
        self.alphabet = frozenset(alphabet) if alphabet is not None else None
        self.name = name or getattr(fn, "__name__", "alg")

    def __call__(self, oracle: Oracle, query: Any) -> Any:
        return self.fn(oracle, query)

    def __repr__(self) -> str:
        return f"ProbeAlgorithm({self.name})"


def run_query(alg: Callable[[Oracle, Any], Any], g: PortedGraph, query: int | tuple[int, int], cfg: ModelConfig) -> tuple[Any, ProbeTranscript]:
    """Answer one query. ``query`` is a node index or a ``(node, port)`` half-edge.

    Failures (:class:`QueryFailed`) are recorded in the transcript and the
    output is ``None``; model violations propagate.
    """
    if isinstance(query, tuple):
        node, port = query
        if not 1 <= port <= g.degree(node):
            raise PortOutOfRange(f"query half-edge ({node},{port}) does not exist")
        q: Any = (g.ids[node], port)
    else:
        node = query
        q = g.ids[node]
    if not 0 <= node < g.n:
        raise ValueError(f"query node {node} not in graph")
    oracle = Oracle(g, cfg, node, q)
    tr = oracle.transcript
    try:
        out = alg(oracle, q)
    except QueryFailed as exc:
        tr.failed = str(exc) or exc.reason
        tr.outcome = None
        return None, tr
    alphabet = getattr(alg, "alphabet", None)
    if alphabet is not None:
        vals = out.values() if isinstance(out, dict) else [out]
        for s in vals:
            if s not in alphabet:
                raise ProbeError(f"output {s!r} outside the declared alphabet")
    tr.outcome = out
    return out, tr


def constant_algorithm(symbol: Hashable) -> ProbeAlgorithm:
    return ProbeAlgorithm(lambda oracle, q: symbol, alphabet=[symbol], name=f"constant-{symbol}")


def bfs_algorithm(radius: int) -> ProbeAlgorithm:
    """Explores the radius ball edge by edge and outputs the number of nodes it found."""

    def run(oracle: Oracle, q: Any) -> int:
        root = q[0] if isinstance(q, tuple) else q
        dist = {root: 0}
        known: set[tuple[int, int]] = set()
        frontier = [root]
        while frontier:
            nxt = []
            for x in frontier:
                if dist[x] >= radius:
                    continue
                for p in range(1, oracle.degree(x) + 1):
                    if (x, p) in known:
                        continue
                    a = oracle.probe(x, p)
                    known.add((x, p))
                    known.add((a.id, a.port))
                    if a.id not in dist:
                        dist[a.id] = dist[x] + 1
                        nxt.append(a.id)
            frontier = nxt
        return len(dist)

    return ProbeAlgorithm(run, name=f"bfs-{radius}")


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class Witness:
    graph: PortedGraph
    core: frozenset[int]  # witness nodes forming S ∪ N(S)
    probed: frozenset[int]  # witness nodes forming S
    node_map: dict[int, int]  # original node -> witness node


def extract_witness(transcripts: Sequence[ProbeTranscript], g: PortedGraph) -> Witness:
    """Subgraph on S ∪ N(S), S the probed nodes and query nodes, with original IDs and ports.

    Fringe nodes keep their full degree: ports leading outside S ∪ N(S) are
    attached to fresh leaves so every answer replays identically.
    """
    for t in transcripts:
        if t.graph != g.fingerprint:
            raise ValueError("transcript was recorded on a different graph")
    node_of = g.node_of_id
    s_nodes: set[int] = set()
    for t in transcripts:
        qid = t.query[0] if isinstance(t.query, tuple) else t.query
        s_nodes.add(node_of[qid])
        s_nodes.update(node_of[i] for i in t.probed_ids())
    core = set(s_nodes)
    for v in s_nodes:
        core.update(g.neighbors(v))
    order = sorted(core)
    index = {v: i for i, v in enumerate(order)}
    ids = [g.ids[v] for v in order]
    rows: list[list[tuple[int, int]]] = [[] for _ in order]
    labels: list[list[Hashable]] = [[] for _ in order]
    colors: list[list[int]] = [[] for _ in order]
    next_id = max(g.ids) + 1
    for v in order:
        i = index[v]
        for p, (u, q) in enumerate(g.adj[v], start=1):
            if u in index:
                rows[i].append((index[u], q))
            else:
                leaf = len(rows)
                rows.append([(i, p)])
                ids.append(next_id)
                next_id += 1
                rows[i].append((leaf, 1))
                labels.append([g.label(u, q)])
                colors.append([g.edge_colors[u][q - 1]] if g.edge_colors else [])
            labels[i].append(g.label(v, p))
            if g.edge_colors:
                colors[i].append(g.edge_colors[v][p - 1])
    w = PortedGraph(
        ids=tuple(ids),
        adj=tuple(tuple(r) for r in rows),
        delta=g.delta,
        edge_colors=tuple(tuple(c) for c in colors) if g.edge_colors else None,
        input_labels=tuple(tuple(x) for x in labels) if g.input_labels else None,
    )
    return Witness(w, frozenset(index[v] for v in core), frozenset(index[v] for v in s_nodes), {v: index[v] for v in order})


def replay(alg: Callable[[Oracle, Any], Any], w: PortedGraph, transcript: ProbeTranscript, cfg: ModelConfig) -> tuple[Any, ProbeTranscript]:
    """Re-run ``alg`` on ``w`` for the query recorded in ``transcript``."""
    q = transcript.query
    qid = q[0] if isinstance(q, tuple) else q
    node = w.node_of_id[qid]
    return run_query(alg, w, (node, q[1]) if isinstance(q, tuple) else node, cfg)


def same_steps(a: ProbeTranscript, b: ProbeTranscript) -> bool:
    return a.steps == b.steps and a.outcome == b.outcome and a.failed == b.failed
