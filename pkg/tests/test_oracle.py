from __future__ import annotations

import random

import pytest

from helpers import fig2_trace, make_trace, random_model_trace, valid_model_trace
from tracelin.models import get_model
from tracelin.oracle import OracleBoundExceeded, oracle_check
from tracelin.trace import Trace, TraceMeta

QUEUE = get_model("queue")


def test_empty_trace_accepts():
    assert oracle_check(Trace(threads=(), meta=TraceMeta(model="queue")), QUEUE)


def test_fig2_rejects():
    assert not oracle_check(fig2_trace(), QUEUE)


def test_fig2_dequeue2_variant_accepts():
    assert oracle_check(fig2_trace(dequeue_value=2), QUEUE)


def test_bound_refusal_is_an_error_not_a_verdict():
    tr = make_trace([[("Enqueue", (i,), 2 * i, 2 * i + 1) for i in range(11)]])
    with pytest.raises(OracleBoundExceeded):
        oracle_check(tr, QUEUE)
    assert oracle_check(tr, QUEUE, bound=11)


def test_respects_thread_local_order():
    # Dequeue precedes its own thread's enqueue: impossible even though
    # the boxes would allow the reverse order across threads.
    tr = make_trace([[("Dequeue", (1,), 0, 10), ("Enqueue", (1,), 20, 30)]])
    assert not oracle_check(tr, QUEUE)


def test_real_time_order_forces_rejection():
    # E(2) strictly after E(1): dequeuing 2 first is impossible.
    tr = make_trace(
        [
            [("Enqueue", (1,), 0, 5)],
            [("Enqueue", (2,), 10, 15)],
            [("Dequeue", (2,), 20, 25)],
        ]
    )
    assert not oracle_check(tr, QUEUE)
    # Overlapping enqueues make it possible.
    tr2 = make_trace(
        [
            [("Enqueue", (1,), 0, 12)],
            [("Enqueue", (2,), 10, 15)],
            [("Dequeue", (2,), 20, 25)],
        ]
    )
    assert oracle_check(tr2, QUEUE)


def test_only_the_partial_order_matters_not_raw_boxes():
    # Two timestamp layouts inducing the same precedence relation must
    # produce the same verdict.
    a = make_trace(
        [
            [("Enqueue", (1,), 0, 10)],
            [("Enqueue", (2,), 5, 12), ("Dequeue", (1,), 20, 30)],
        ]
    )
    b = make_trace(
        [
            [("Enqueue", (1,), 100, 200)],
            [("Enqueue", (2,), 150, 210), ("Dequeue", (1,), 3000, 3001)],
        ]
    )
    assert oracle_check(a, QUEUE) == oracle_check(b, QUEUE)


@pytest.mark.parametrize("model", ["queue", "omaprange", "ppfifo"])
def test_oracle_and_valid_generation_agree(model):
    spec = get_model(model)
    rng = random.Random(f"oracle:{model}")
    for _ in range(100):
        assert oracle_check(valid_model_trace(rng, model), spec)


@pytest.mark.parametrize("model", ["queue", "omaprange", "ppfifo"])
def test_oracle_handles_arbitrary_small_traces(model):
    spec = get_model(model)
    rng = random.Random(f"arb:{model}")
    votes = {True: 0, False: 0}
    for _ in range(200):
        votes[oracle_check(random_model_trace(rng, model), spec)] += 1
    assert votes[True] > 0 and votes[False] > 0
