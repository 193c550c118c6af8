from __future__ import annotations

from tracelin.linearizer import check
from tracelin.models import get_model
from tracelin.workload import EMPTY, LockQueue, emit_fuzzer_template


def load_template(model_name):
    source = emit_fuzzer_template(get_model(model_name))
    namespace = {"__name__": f"template_{model_name}"}
    exec(compile(source, f"<template:{model_name}>", "exec"), namespace)
    return source, namespace


def test_queue_template_has_three_stubs():
    source, ns = load_template("queue")
    assert ns["OPS"] == ("Enqueue", "Dequeue", "DequeueEmpty")
    assert source.count("NotImplementedError") == 3
    assert source.count("UNIMPLEMENTED") == 3


def test_omaprange_template_has_four_stubs():
    source, ns = load_template("omaprange")
    assert len(ns["OPS"]) == 4
    assert source.count("NotImplementedError") == 4


def test_ppfifo_template_method_names():
    _, ns = load_template("ppfifo")
    assert ns["OP_METHODS"]["EnqueueBulk"] == "op_enqueue_bulk"
    assert ns["OP_METHODS"]["DequeueEmpty"] == "op_dequeue_empty"


def test_unfilled_stub_raises_not_implemented():
    _, ns = load_template("queue")
    harness = ns["FuzzHarness"]()
    try:
        harness.op_enqueue(None)
    except NotImplementedError as e:
        assert "Enqueue" in str(e)
    else:
        raise AssertionError("stub did not raise")


def test_partial_harness_skips_unimplemented_ops(capsys):
    _, ns = load_template("queue")

    class EnqueueOnly(ns["FuzzHarness"]):
        def setup(self, threads, seed):
            self.q = LockQueue()

        def op_enqueue(self, rng):
            v = rng.randrange(4)
            _, commit = self.q.enqueue(v)
            return (v,), commit

    tr = ns["run_harness"](EnqueueOnly(), threads=2, ops_per_thread=10, seed=1)
    out = capsys.readouterr().out
    assert "unimplemented" in out
    assert {a.op for a in tr.actions()} == {"Enqueue"}


def test_filled_queue_template_records_accepted_traces():
    _, ns = load_template("queue")

    class LockQueueHarness(ns["FuzzHarness"]):
        """Queue template glued to the in-repo LockQueue."""

        def setup(self, threads, seed):
            self.q = LockQueue()

        def op_enqueue(self, rng):
            v = rng.randrange(8)
            _, commit = self.q.enqueue(v)
            return (v,), commit

        def op_dequeue(self, rng):
            res, commit = self.q.dequeue()
            if res is EMPTY:
                return "DequeueEmpty", (), commit
            return (res,), commit

    for seed in range(3):
        harness = LockQueueHarness()
        tr = ns["run_harness"](harness, threads=3, ops_per_thread=40, seed=seed)
        assert tr.total_actions == 120
        assert check(tr, get_model("queue")).accepted


def test_template_main_writes_trace_when_filled(tmp_path, capsys):
    # The emitted module is runnable end to end once stubs are filled.
    _, ns = load_template("queue")

    class H(ns["FuzzHarness"]):
        def setup(self, threads, seed):
            self.q = LockQueue()

        def op_enqueue(self, rng):
            v = rng.randrange(4)
            _, commit = self.q.enqueue(v)
            return (v,), commit

    tr = ns["run_harness"](H(), threads=1, ops_per_thread=5, seed=0)
    from tracelin.trace import trace_to_string, trace_from_string, trace_equal

    assert trace_equal(trace_from_string(trace_to_string(tr)), tr)
