"""Multithreaded fuzz-and-record driver producing timeboxed traces.

Workers run truly concurrently against one shared reference structure.
Each worker keeps a private operation RNG (a per-thread substream of
the run seed) and a private action buffer, so the recording hot path
never crosses threads: capture start, call the structure, capture end,
then assemble the action record outside the box.  Buffers are merged
into a Trace only after every worker has stopped.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from ..trace import TimeboxedAction, Trace, TraceMeta, validate_trace
from ..models import NOT_FOUND, MODEL_REGISTRY
from .structures import (
    BUG_MODEL,
    EMPTY,
    BugId,
    Jitter,
    LockQueue,
    SegQueue,
    SnapshotMap,
)


class RecordRunError(RuntimeError):
    """A worker failed or the run configuration is unusable."""


@dataclass
class WorkloadConfig:
    model: str
    threads: int
    ops_per_thread: int
    seed: int
    value_universe_size: int = 16  # small on purpose: collisions create checkable dependencies
    bug: Optional[Union[BugId, str]] = None
    jitter: Optional[Tuple[float, int]] = None  # (probability, max_delay_ns)

    def __post_init__(self) -> None:
        if self.model not in MODEL_REGISTRY:
            raise RecordRunError(f"unknown model {self.model!r}")
        if self.threads < 1:
            raise RecordRunError("need at least one thread")
        if self.ops_per_thread < 0:
            raise RecordRunError("ops_per_thread must be >= 0")
        if self.value_universe_size < 1:
            raise RecordRunError("value universe must be non-empty")
        if isinstance(self.bug, str):
            try:
                self.bug = BugId(self.bug)
            except ValueError:
                raise RecordRunError(
                    f"unknown bug {self.bug!r}; known: {[b.value for b in BugId]}"
                ) from None
        if self.bug is not None and BUG_MODEL[self.bug] != self.model:
            raise RecordRunError(
                f"bug {self.bug.value} targets model {BUG_MODEL[self.bug]!r}, "
                f"not {self.model!r}"
            )


def _build_structure(cfg: WorkloadConfig):
    bugs = {cfg.bug} if cfg.bug is not None else set()
    jitter = (
        Jitter(cfg.jitter[0], cfg.jitter[1], seed=cfg.seed)
        if cfg.jitter is not None
        else None
    )
    if cfg.model == "queue":
        return LockQueue(bugs, jitter)
    if cfg.model == "omaprange":
        return SnapshotMap(bugs, jitter)
    return SegQueue(cfg.threads, bugs, jitter)


_now = time.monotonic_ns


def _queue_worker(q: LockQueue, rng: random.Random, ops: int, universe: int, buf: list):
    # Slight dequeue bias keeps the queue short.  Ambiguity between
    # overlapping enqueues persists until both values leave the queue,
    # so long queues make checking intractable, not more informative.
    for _ in range(ops):
        if rng.random() < 0.45:
            v = rng.randrange(universe)
            start = _now()
            _, commit = q.enqueue(v)
            end = _now()
            buf.append(("Enqueue", (v,), start, end, commit))
        else:
            start = _now()
            res, commit = q.dequeue()
            end = _now()
            if res is EMPTY:
                buf.append(("DequeueEmpty", (), start, end, commit))
            else:
                buf.append(("Dequeue", (res,), start, end, commit))


def _map_worker(m: SnapshotMap, rng: random.Random, ops: int, universe: int, buf: list):
    for _ in range(ops):
        r = rng.random()
        if r < 0.3:
            k = rng.randrange(universe)
            v = f"v{rng.randrange(universe)}"
            start = _now()
            ok, commit = m.insert(k, v)
            end = _now()
            buf.append(("Insert", (k, v, ok), start, end, commit))
        elif r < 0.5:
            k = rng.randrange(universe)
            start = _now()
            ok, commit = m.delete(k)
            end = _now()
            buf.append(("Delete", (k, ok), start, end, commit))
        elif r < 0.8:
            k = rng.randrange(universe)
            start = _now()
            res, commit = m.find(k)
            end = _now()
            result = NOT_FOUND if res is EMPTY else res
            buf.append(("Find", (k, result), start, end, commit))
        else:
            a = rng.randrange(universe)
            if rng.random() < 0.5:
                # Narrow ranges pin specific keys; wide-range counts are
                # explainable by any concurrent churn inside the range.
                lo, hi = a, min(universe - 1, a + rng.randint(0, 1))
            else:
                b = rng.randrange(universe)
                lo, hi = min(a, b), max(a, b)
            start = _now()
            count, commit = m.range_count(lo, hi)
            end = _now()
            buf.append(("RangeCount", (lo, hi, count), start, end, commit))


def _ppfifo_worker(
    q: SegQueue, rng: random.Random, thread: int, ops: int, universe: int, buf: list
):
    producers = q.producers
    for _ in range(ops):
        r = rng.random()
        if r < 0.3:
            payload = rng.randrange(universe)
            start = _now()
            v, commit = q.enqueue(thread, payload)
            end = _now()
            buf.append(("Enqueue", (thread, v), start, end, commit))
        elif r < 0.45:
            payloads = [rng.randrange(universe) for _ in range(rng.randint(2, 4))]
            start = _now()
            vs, commit = q.enqueue_bulk(thread, payloads)
            end = _now()
            buf.append(("EnqueueBulk", (thread, vs), start, end, commit))
        elif r < 0.8:
            scan_start = rng.randrange(producers)
            start = _now()
            res, commit = q.dequeue(scan_start)
            end = _now()
            if res is EMPTY:
                buf.append(("DequeueEmpty", (), start, end, commit))
            else:
                buf.append(("Dequeue", (res,), start, end, commit))
        else:
            scan_start = rng.randrange(producers)
            max_n = rng.randint(2, 4)
            start = _now()
            res, commit = q.dequeue_bulk(scan_start, max_n)
            end = _now()
            if res is EMPTY:
                buf.append(("DequeueEmpty", (), start, end, commit))
            else:
                buf.append(("DequeueBulk", (res,), start, end, commit))


def record_run(cfg: WorkloadConfig) -> Trace:
    """Run the configured workload and return its recorded trace.

    With bug=None the result always checks out against the matching
    model, jitter or not; with a bug injected, rejection depends on
    whether the weakened path actually raced during this run.
    """
    structure = _build_structure(cfg)
    buffers: list[list] = [[] for _ in range(cfg.threads)]
    errors: list = []

    def work(t: int) -> None:
        rng = random.Random(f"{cfg.seed}:{t}")
        try:
            if cfg.model == "queue":
                _queue_worker(structure, rng, cfg.ops_per_thread, cfg.value_universe_size, buffers[t])
            elif cfg.model == "omaprange":
                _map_worker(structure, rng, cfg.ops_per_thread, cfg.value_universe_size, buffers[t])
            else:
                _ppfifo_worker(structure, rng, t, cfg.ops_per_thread, cfg.value_universe_size, buffers[t])
        except BaseException as e:  # propagate worker panics as run failure
            errors.append((t, e))

    workers = [threading.Thread(target=work, args=(t,)) for t in range(cfg.threads)]
    # Overlap comes from jitter pauses inside the structures: while one
    # worker sleeps mid-operation, the others stream short operations
    # inside its box.  Forcing preemption via a tiny interpreter switch
    # interval is deliberately avoided: it stretches random boxes across
    # whole scheduling quanta, which both hides races behind overlap and
    # inflates checking ambiguity.
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    if errors:
        t, e = errors[0]
        raise RecordRunError(f"worker {t} failed: {e!r}") from e

    threads = []
    for t, buf in enumerate(buffers):
        seq = tuple(
            TimeboxedAction(
                op=op, args=args, thread=t, start_ns=s, end_ns=e, refined_ns=r
            )
            for op, args, s, e, r in buf
        )
        threads.append(seq)
    tr = Trace(
        threads=tuple(threads),
        meta=TraceMeta(model=cfg.model, seed=cfg.seed),
    )
    violations = validate_trace(tr)
    if violations:  # would indicate a recorder defect, not a structure bug
        raise RecordRunError(f"recorder produced an invalid trace: {violations[0]}")
    return tr
