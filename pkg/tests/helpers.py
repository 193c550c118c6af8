"""Shared builders for checker tests: fixed fixtures and random trace corpora."""

from __future__ import annotations

import random

from tracelin.models import NOT_FOUND, ModelSpec, get_model
from tracelin.trace import TimeboxedAction, Trace, TraceMeta


def make_trace(per_thread, model="queue", seed=0) -> Trace:
    """Entries are (op, args, start, end) or (op, args, start, end, refined)."""
    threads = []
    for t, seq in enumerate(per_thread):
        acts = []
        for entry in seq:
            op, args, s, e = entry[:4]
            r = entry[4] if len(entry) > 4 else None
            acts.append(
                TimeboxedAction(op=op, args=tuple(args), thread=t, start_ns=s,
                                end_ns=e, refined_ns=r)
            )
        threads.append(tuple(acts))
    return Trace(threads=tuple(threads), meta=TraceMeta(model=model, seed=seed))


def fig2_trace(dequeue_value=3) -> Trace:
    """Three threads, four boxed actions: E(1)/E(2) overlap, then E(3)/D(x)."""
    return make_trace(
        [
            [("Enqueue", (1,), 10, 30)],
            [("Enqueue", (2,), 15, 35), ("Dequeue", (dequeue_value,), 45, 65)],
            [("Enqueue", (3,), 40, 60)],
        ]
    )


def _random_queue_action(rng: random.Random, universe: int):
    r = rng.random()
    if r < 0.5:
        return ("Enqueue", (rng.randrange(universe),))
    if r < 0.85:
        return ("Dequeue", (rng.randrange(universe),))
    return ("DequeueEmpty", ())


def _random_map_action(rng: random.Random, universe: int):
    r = rng.random()
    k = rng.randrange(universe)
    if r < 0.3:
        return ("Insert", (k, rng.choice(["a", "b"]), rng.random() < 0.5))
    if r < 0.5:
        return ("Delete", (k, rng.random() < 0.5))
    if r < 0.8:
        return ("Find", (k, rng.choice(["a", "b", NOT_FOUND])))
    lo = rng.randrange(universe)
    hi = rng.randrange(lo, universe)
    return ("RangeCount", (lo, hi, rng.randrange(0, 4)))


def _random_ppfifo_action(rng: random.Random, universe: int):
    r = rng.random()
    p = rng.randrange(2)
    tagged = (p, rng.randrange(universe))
    if r < 0.3:
        return ("Enqueue", (p, tagged))
    if r < 0.45:
        vs = tuple((p, rng.randrange(universe)) for _ in range(rng.randint(1, 2)))
        return ("EnqueueBulk", (p, vs))
    if r < 0.75:
        return ("Dequeue", (tagged,))
    if r < 0.9:
        vs = tuple((rng.randrange(2), rng.randrange(universe)) for _ in range(rng.randint(1, 2)))
        return ("DequeueBulk", (vs,))
    return ("DequeueEmpty", ())


_ACTION_GENS = {
    "queue": _random_queue_action,
    "omaprange": _random_map_action,
    "ppfifo": _random_ppfifo_action,
}


def random_model_trace(
    rng: random.Random,
    model: str,
    max_threads: int = 4,
    max_actions: int = 8,
    universe: int = 3,
    refine: bool = False,
) -> Trace:
    """Arbitrary trace: results are random, so most (not all) reject."""
    gen = _ACTION_GENS[model]
    n_threads = rng.randint(1, max_threads)
    total = rng.randint(0, max_actions)
    per_thread: list[list] = [[] for _ in range(n_threads)]
    clocks = [rng.randint(0, 4) for _ in range(n_threads)]
    for _ in range(total):
        t = rng.randrange(n_threads)
        op, args = gen(rng, universe)
        start = clocks[t] + rng.randint(0, 4)
        end = start + rng.randint(0, 8)
        refined = rng.randint(start, end) if refine and rng.random() < 0.7 else None
        per_thread[t].append((op, args, start, end, refined))
        clocks[t] = end + rng.randint(0, 3)
    return make_trace(per_thread, model=model)


def valid_model_trace(
    rng: random.Random,
    model: str,
    max_threads: int = 4,
    max_actions: int = 8,
    universe: int = 3,
    refine: bool = False,
) -> Trace:
    """Trace built from a genuine sequential run, so it always accepts.

    Actions are laid out in execution order with boxes that may overlap
    later actions; the true order remains one admissible linearization,
    and wider boxes only add alternatives.
    """
    spec: ModelSpec = get_model(model)
    gen = _ACTION_GENS[model]
    n_threads = rng.randint(1, max_threads)
    total = rng.randint(0, max_actions)
    state = spec.initial_states()[0]
    per_thread: list[list] = [[] for _ in range(n_threads)]
    thread_clock = [0] * n_threads
    now = rng.randint(0, 4)
    for _ in range(total):
        # Rejection-sample an enabled action in the current state.
        for _ in range(40):
            op, args = gen(rng, universe)
            successors = spec.step(state, op, args)
            if successors:
                break
        else:
            continue
        state = successors[0]
        t = rng.randrange(n_threads)
        start = max(now, thread_clock[t]) + rng.randint(0, 2)
        end = start + rng.randint(0, 10)
        refined = rng.randint(start, end) if refine and rng.random() < 0.7 else None
        per_thread[t].append((op, args, start, end, refined))
        thread_clock[t] = end + rng.randint(0, 2)
        now = start + rng.randint(1, 4)
    return make_trace(per_thread, model=model)
