"""Brute-force linearizability oracle for small traces.

Ground truth for the frontier checker, formulated independently of it:
no vector timestamps, no state coalescing.  The timeboxes are consulted
exactly once, up front, to build the real-time partial order (a must
precede b whenever a's box ends strictly before b's begins); after that
the search enumerates linear extensions of that partial order by plain
backtracking, replaying the model along the way.
"""

from __future__ import annotations

from typing import Tuple

from .models import ModelSpec
from .trace import Trace

DEFAULT_BOUND = 10


class OracleBoundExceeded(Exception):
    """Trace too large for exhaustive enumeration; never a wrong verdict."""


def oracle_check(tr: Trace, spec: ModelSpec, bound: int = DEFAULT_BOUND) -> bool:
    """True iff some legal sequential order of all actions exists.

    The order must embed each thread's sequence, extend the real-time
    partial order, and replay through the model from some initial state
    with every step enabled.  Exhaustive; refuses traces with more than
    `bound` total actions.
    """
    acts = []
    for t, seq in enumerate(tr.threads):
        for i, act in enumerate(seq):
            acts.append((t, i, act))
    n = len(acts)
    if n > bound:
        raise OracleBoundExceeded(
            f"trace has {n} actions, oracle bound is {bound}"
        )

    # Real-time precedence, as predecessor index sets.  Thread order is
    # handled separately via per-thread cursors.
    preds: list[set] = [set() for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if a != b and acts[a][2].end_ns < acts[b][2].start_ns:
                preds[b].add(a)

    next_index = [0] * tr.thread_count
    consumed = [False] * n

    def extend(remaining: int, state) -> bool:
        if remaining == 0:
            return True
        for j in range(n):
            if consumed[j]:
                continue
            t, i, act = acts[j]
            if i != next_index[t]:
                continue
            if any(not consumed[p] for p in preds[j]):
                continue
            consumed[j] = True
            next_index[t] += 1
            for s2 in spec.step(state, act.op, act.args):
                if extend(remaining - 1, s2):
                    consumed[j] = False
                    next_index[t] -= 1
                    return True
            consumed[j] = False
            next_index[t] -= 1
        return False

    return any(extend(n, s0) for s0 in spec.initial_states())
