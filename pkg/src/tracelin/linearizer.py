"""Linearization search: breadth-first exploration of (vector timestamp, view) nodes.

The checker asks whether some total order of all recorded actions
(a) respects each thread's local order, (b) respects real time — an
action may not be ordered after one whose box ended before this one's
began — and (c) replays through the model with every step enabled.

Search proceeds depth layer by depth layer.  A node is identified by
its vector timestamp plus a digest of the model-state view, so
interleavings that consumed the same per-thread prefixes and reached
view-equal states are coalesced.  Each node keeps one representative
concrete state, and successors are always computed from it; this is
what makes a lossy view function reject-only rather than unsound.

Acceptance: some node exhausts every thread, i.e. a path exists whose
length equals the total action count.  On rejection, the deepest layer
reached is reported together with backward-reconstructed paths into it.
"""

from __future__ import annotations

import hashlib
import json
import resource
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, NamedTuple, Optional, Sequence, Tuple, Union

from .models import ModelSpec, SpecificationError
from .trace import (
    Trace,
    TraceValidationError,
    VectorTimestamp,
    _action_to_record,
    initial_vt,
    validate_trace,
    value_to_json,
    vt_advance,
    vt_in_bounds,
)
from .values import Value

_DIGEST_SIZE = 16


class CheckResourceError(Exception):
    """Memory budget exceeded; carries the stats gathered so far."""

    def __init__(self, message: str, stats: "CheckStats"):
        super().__init__(message)
        self.stats = stats


class ActionRef(NamedTuple):
    """Position of one recorded action: (thread, index within thread)."""

    thread: int
    index: int


@dataclass
class CheckOptions:
    max_counterexamples: int = 10
    parallelism: int = 1
    # Cap on resident-memory GROWTH during this check (the interpreter
    # retains freed arenas, so absolute RSS would be order-dependent).
    mem_cap_mb: Optional[int] = None
    collect_graph: bool = False
    # Override of the model's view function, e.g. for deliberate lossy
    # coalescing experiments.  Misuse can only cause spurious rejection.
    view: Optional[Callable[[object], bytes]] = None


@dataclass
class CheckStats:
    nodes_explored: int = 0
    peak_frontier: int = 0
    wall_ms: float = 0.0


@dataclass(frozen=True)
class GraphNode:
    id: int
    vt: VectorTimestamp
    depth: int
    state: Value  # rendered representative


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    thread: int
    index: int


@dataclass(frozen=True)
class StateGraph:
    nodes: Tuple[GraphNode, ...]
    edges: Tuple[GraphEdge, ...]
    roots: Tuple[int, ...]

    @property
    def max_depth(self) -> int:
        return max((n.depth for n in self.nodes), default=0)


CounterexamplePath = Tuple[Tuple[ActionRef, object], ...]


@dataclass(frozen=True)
class Accepted:
    witness: Tuple[ActionRef, ...]
    stats: CheckStats
    graph: Optional[StateGraph] = None

    @property
    def accepted(self) -> bool:
        return True


@dataclass(frozen=True)
class Rejected:
    max_depth: int
    counterexamples: Tuple[CounterexamplePath, ...]
    stats: CheckStats
    graph: Optional[StateGraph] = None

    @property
    def accepted(self) -> bool:
        return False


Verdict = Union[Accepted, Rejected]


def viable_actions(tr: Trace, vt: VectorTimestamp) -> Tuple[ActionRef, ...]:
    """Candidate next actions not strictly preceded by another candidate.

    Candidates are each non-exhausted thread's next action (skipping
    within a thread is never valid).  A candidate is viable unless some
    other candidate's box ended strictly before this one's began; equal
    timestamps count as concurrent.
    """
    if not vt_in_bounds(tr, vt):
        raise ValueError(f"vector timestamp {vt} out of bounds for trace")
    cands = []
    for t in range(tr.thread_count):
        i = vt[t]
        if i < len(tr.threads[t]):
            act = tr.threads[t][i]
            cands.append((t, i, act.start_ns, act.end_ns))
    out = []
    for t1, i1, s1, _ in cands:
        if not any(e2 < s1 for t2, _, _, e2 in cands if t2 != t1):
            out.append(ActionRef(t1, i1))
    return tuple(out)


class _Node:
    __slots__ = ("depth", "state", "pred")

    def __init__(self, depth: int, state: object, pred):
        self.depth = depth
        self.state = state
        # pred: (thread, index, src_key) minimal in canonical order, or
        # None for roots.  Canonical order makes reconstruction (and
        # therefore output) independent of expansion order.
        self.pred = pred


_PAGE_SIZE = resource.getpagesize()


def _rss_mb() -> float:
    """Current resident set size; falls back to lifetime peak off Linux."""
    try:
        with open("/proc/self/statm", "rb") as f:
            return int(f.read().split()[1]) * _PAGE_SIZE / (1024.0 * 1024.0)
    except OSError:
        return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def check(tr: Trace, spec: ModelSpec, opts: Optional[CheckOptions] = None) -> Verdict:
    """Decide whether the trace linearizes through the model.

    The verdict (accept/reject and max_depth) is deterministic and
    independent of opts.parallelism; counterexample selection is made
    deterministic by canonical tie-breaking.
    """
    opts = opts or CheckOptions()
    violations = validate_trace(tr)
    if violations:
        raise TraceValidationError(tuple(violations))
    known_ops = spec.op_names()
    for act in tr.actions():
        if act.op not in known_ops:
            raise SpecificationError(
                f"trace action {act.op!r} not in model {spec.name!r} signature"
            )

    t0 = time.perf_counter()
    view_fn = opts.view if opts.view is not None else spec.view
    blake2b = hashlib.blake2b
    threads = tr.threads
    total = tr.total_actions
    vt0 = initial_vt(tr)

    nodes: dict = {}
    edges: list = [] if opts.collect_graph else None
    frontier: dict = {}
    for s0 in spec.initial_states():
        fp = blake2b(view_fn(s0), digest_size=_DIGEST_SIZE).digest()
        key = (vt0, fp)
        if key not in nodes:
            node = _Node(0, s0, None)
            nodes[key] = node
            frontier[key] = node

    stats = CheckStats(nodes_explored=len(nodes), peak_frontier=len(frontier))

    mem_cap = opts.mem_cap_mb
    rss_baseline = _rss_mb() if mem_cap is not None else 0.0

    def expand_items(items: Sequence[tuple], viable_cache: dict) -> list:
        """Successor proposals for a slice of the frontier; no shared writes."""
        proposals = []
        budget_check = 200_000  # recheck the memory cap within wide layers
        for key, node in items:
            vt, _ = key
            viable = viable_cache[vt]
            state = node.state
            for aref in viable:
                act = threads[aref.thread][aref.index]
                successors = spec.step(state, act.op, act.args)
                if not successors:
                    continue
                vt2 = vt_advance(vt, aref.thread)
                for s2 in successors:
                    fp2 = blake2b(view_fn(s2), digest_size=_DIGEST_SIZE).digest()
                    proposals.append(((vt2, fp2), s2, (aref.thread, aref.index, key)))
            if mem_cap is not None and len(proposals) >= budget_check:
                budget_check += 200_000
                if _rss_mb() - rss_baseline > mem_cap:
                    raise CheckResourceError(
                        f"memory growth cap of {mem_cap} MB exceeded mid-layer",
                        stats,
                    )
        return proposals

    depth = 0
    max_depth_reached = 0
    try:
        while frontier:
            max_depth_reached = depth
            if depth == total:
                break
            if mem_cap is not None and _rss_mb() - rss_baseline > mem_cap:
                raise CheckResourceError(
                    f"memory growth cap of {mem_cap} MB exceeded at depth {depth}",
                    stats,
                )

            viable_cache: dict = {}
            for vt, _ in frontier:
                if vt not in viable_cache:
                    viable_cache[vt] = viable_actions(tr, vt)

            items = list(frontier.items())
            if opts.parallelism > 1 and len(items) > 1:
                workers = min(opts.parallelism, len(items))
                chunk = (len(items) + workers - 1) // workers
                slices = [items[i : i + chunk] for i in range(0, len(items), chunk)]
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    proposal_lists = list(
                        pool.map(lambda sl: expand_items(sl, viable_cache), slices)
                    )
            else:
                proposal_lists = [expand_items(items, viable_cache)]

            next_frontier: dict = {}
            vt_intern: dict = {}
            for proposals in proposal_lists:
                for key2, s2, pred in proposals:
                    vt2 = key2[0]
                    shared = vt_intern.get(vt2)
                    if shared is None:
                        vt_intern[vt2] = vt2
                    elif shared is not vt2:
                        key2 = (shared, key2[1])
                    if edges is not None:
                        edges.append((pred[2], (pred[0], pred[1]), key2))
                    node = next_frontier.get(key2)
                    if node is None:
                        node = _Node(depth + 1, s2, pred)
                        next_frontier[key2] = node
                        nodes[key2] = node
                    elif pred < node.pred:
                        node.pred = pred
            if not opts.collect_graph:
                # Representatives are only needed to expand a layer; the
                # big runs would otherwise keep every state ever reached.
                # Counterexample states are recomputed by replay instead.
                for node in frontier.values():
                    node.state = None
            frontier = next_frontier
            depth += 1
            stats.nodes_explored = len(nodes)
            stats.peak_frontier = max(stats.peak_frontier, len(frontier))
    finally:
        stats.nodes_explored = len(nodes)
        stats.wall_ms = (time.perf_counter() - t0) * 1000.0

    graph = _build_graph(spec, nodes, edges, vt0) if opts.collect_graph else None

    if frontier and max_depth_reached == total:
        witness_key = min(frontier)
        refs = _backwalk_refs(nodes, witness_key)
        return Accepted(witness=refs, stats=stats, graph=graph)

    # Deepest layer is gone from `frontier` (it expanded to nothing), so
    # recover it from the node table.
    deepest = sorted(k for k, n in nodes.items() if n.depth == max_depth_reached)
    ces = []
    for key in deepest[: opts.max_counterexamples]:
        chain = [key]
        while nodes[chain[-1]].pred is not None:
            chain.append(nodes[chain[-1]].pred[2])
        chain.reverse()
        ces.append(_replay_chain(tr, spec, view_fn, nodes, chain))
    return Rejected(
        max_depth=max_depth_reached,
        counterexamples=tuple(ces),
        stats=stats,
        graph=graph,
    )


def _digest(view_fn, state) -> bytes:
    return hashlib.blake2b(view_fn(state), digest_size=_DIGEST_SIZE).digest()


def _replay_chain(tr, spec, view_fn, nodes: dict, chain) -> CounterexamplePath:
    """Recompute (action, state) pairs along a predecessor chain.

    Representative states are released during the search, so the states
    shown in counterexamples are rebuilt by replaying the chain's
    actions and following node fingerprints.  With the default injective
    view the replay is unique; under a deliberately lossy view any
    fingerprint-compatible successor is a genuinely reachable stand-in,
    and the path is truncated in the (lossy-only) case where no enabled
    successor exists.
    """
    state = None
    for s0 in spec.initial_states():
        if _digest(view_fn, s0) == chain[0][1]:
            state = s0
            break
    if state is None:  # lossy view: any initial state reached this root
        state = spec.initial_states()[0]
    path = []
    for node_key in chain[1:]:
        pred = nodes[node_key].pred
        act = tr.threads[pred[0]][pred[1]]
        successors = spec.step(state, act.op, act.args)
        nxt = None
        for s2 in successors:
            if _digest(view_fn, s2) == node_key[1]:
                nxt = s2
                break
        if nxt is None:
            if not successors:
                break
            nxt = successors[0]
        path.append((ActionRef(pred[0], pred[1]), nxt))
        state = nxt
    return tuple(path)


def _backwalk_refs(nodes: dict, key) -> Tuple[ActionRef, ...]:
    refs = []
    while True:
        pred = nodes[key].pred
        if pred is None:
            break
        refs.append(ActionRef(pred[0], pred[1]))
        key = pred[2]
    refs.reverse()
    return tuple(refs)


def _build_graph(spec: ModelSpec, nodes: dict, raw_edges, vt0) -> StateGraph:
    ordered = sorted(nodes.items(), key=lambda kv: (kv[1].depth, kv[0]))
    ids = {key: i for i, (key, _) in enumerate(ordered)}
    gnodes = tuple(
        GraphNode(id=i, vt=key[0], depth=node.depth, state=spec.render(node.state))
        for i, (key, node) in enumerate(ordered)
    )
    gedges = []
    if raw_edges:
        seen = set()
        for src_key, (t, i), dst_key in raw_edges:
            e = (ids[src_key], ids[dst_key], t, i)
            if e not in seen:
                seen.add(e)
                gedges.append(GraphEdge(*e))
        gedges.sort(key=lambda e: (e.src, e.dst, e.thread, e.index))
    roots = tuple(ids[key] for key, node in ordered if node.depth == 0)
    return StateGraph(nodes=gnodes, edges=tuple(gedges), roots=roots)


def replay_witness(
    tr: Trace, spec: ModelSpec, witness: Sequence[ActionRef]
) -> bool:
    """Independently validate an acceptance witness.

    True iff the witness covers every action exactly once, respects
    per-thread order and real-time order, and replays through the model
    from some initial state with every step enabled.
    """
    expected = {(t, i) for t in range(tr.thread_count) for i in range(len(tr.threads[t]))}
    seen = set()
    next_index = [0] * tr.thread_count
    max_start = None
    for ref in witness:
        key = (ref.thread, ref.index)
        if key not in expected or key in seen:
            return False
        seen.add(key)
        if ref.index != next_index[ref.thread]:
            return False
        next_index[ref.thread] += 1
        act = tr.threads[ref.thread][ref.index]
        # Real-time: a later witness entry may not have ended before an
        # earlier entry began.
        if max_start is not None and act.end_ns < max_start:
            return False
        max_start = act.start_ns if max_start is None else max(max_start, act.start_ns)
    if seen != expected:
        return False

    acts = [tr.threads[t][i] for t, i in witness]

    def replay(pos: int, state) -> bool:
        if pos == len(acts):
            return True
        act = acts[pos]
        for s2 in spec.step(state, act.op, act.args):
            if replay(pos + 1, s2):
                return True
        return False

    return any(replay(0, s0) for s0 in spec.initial_states())


def export_graph(g: StateGraph, tr: Trace, verdict: Verdict, sink: Union[str, IO[str]]) -> None:
    """Write the SGX1 viewer file for an explored state graph."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8") as f:
            export_graph(g, tr, verdict, f)
        return
    doc = {
        "sgx": 1,
        "model": tr.meta.model,
        "verdict": "accepted" if verdict.accepted else "rejected",
        "max_depth": g.max_depth,
        "nodes": [
            {
                "id": n.id,
                "vt": list(n.vt),
                "depth": n.depth,
                "state": value_to_json(n.state),
            }
            for n in g.nodes
        ],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "t": e.thread,
                "i": e.index,
                "op": tr.threads[e.thread][e.index].op,
                "args": [value_to_json(a) for a in tr.threads[e.thread][e.index].args],
            }
            for e in g.edges
        ],
        "trace": [_action_to_record(act) for act in tr.actions()],
    }
    json.dump(doc, sink, separators=(",", ":"))
