"""Fuzzer harness skeleton generation from a model signature.

The emitted source compiles as-is: thread loop, timebox capture, and
trace serialization are wired; only the per-operation glue (call the
system under test, report observed arguments) is stubbed out.  Stubs
raise NotImplementedError so unfilled operations are visible, and the
runner skips them with a warning rather than silently narrowing the
workload.
"""

from __future__ import annotations

import re

from ..models import ModelSpec


def _snake(op: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", op).lower()


_HEADER = '''\
"""Fuzzer harness skeleton for the {name!r} model (generated).

Fill in one method per operation.  Each method performs ONE call
against the system under test and returns (args, refined_ns) or, when
the observed outcome belongs to a different action name than the one
sampled (e.g. a dequeue that found the structure empty), the triple
(op_name, args, refined_ns):

  args        tuple of recorded action arguments, observed results
              included (e.g. a dequeue returns the value it saw);
  refined_ns  time.monotonic_ns() taken at the operation's internal
              commit point, or None when there is no unambiguous one.

The runner times the box around your method call, so do nothing inside
it except the call itself and cheap result capture.
"""

from __future__ import annotations

import random
import threading
import time

from tracelin.trace import TimeboxedAction, Trace, TraceMeta, validate_trace, write_trace

MODEL = {name!r}
OPS = {ops!r}


class FuzzHarness:
    """Override one method per operation; leave the rest unimplemented."""

    def setup(self, threads: int, seed: int) -> None:
        """Build the structure under test; called once before workers start."""

'''

_STUB = '''\
    def {method}(self, rng: random.Random):
        # UNIMPLEMENTED: {op}/{arity} — call the system under test and
        # return (args, refined_ns).
        raise NotImplementedError({op!r})

'''

_RUNNER = '''\

def implemented_ops(harness: FuzzHarness) -> list[str]:
    ops = []
    for op, method in OP_METHODS.items():
        if getattr(type(harness), method) is not getattr(FuzzHarness, method):
            ops.append(op)
    return ops


def run_harness(harness: FuzzHarness, threads: int, ops_per_thread: int, seed: int) -> Trace:
    harness.setup(threads, seed)
    ops = implemented_ops(harness)
    skipped = [op for op in OPS if op not in ops]
    if skipped:
        print(f"warning: unimplemented operations skipped: {skipped}")
    if not ops:
        raise RuntimeError("no operations implemented")
    buffers = [[] for _ in range(threads)]
    errors = []

    def work(t: int) -> None:
        rng = random.Random(f"{seed}:{t}")
        try:
            for _ in range(ops_per_thread):
                op = rng.choice(ops)
                method = getattr(harness, OP_METHODS[op])
                start = time.monotonic_ns()
                result = method(rng)
                end = time.monotonic_ns()
                if len(result) == 3:  # observed outcome renames the action
                    op, args, refined = result
                else:
                    args, refined = result
                buffers[t].append((op, tuple(args), start, end, refined))
        except BaseException as e:
            errors.append((t, e))

    workers = [threading.Thread(target=work, args=(t,)) for t in range(threads)]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    if errors:
        raise RuntimeError(f"worker {errors[0][0]} failed: {errors[0][1]!r}")

    per_thread = tuple(
        tuple(
            TimeboxedAction(op=op, args=args, thread=t, start_ns=s, end_ns=e, refined_ns=r)
            for op, args, s, e, r in buf
        )
        for t, buf in enumerate(buffers)
    )
    tr = Trace(threads=per_thread, meta=TraceMeta(model=MODEL, seed=seed))
    bad = validate_trace(tr)
    if bad:
        raise RuntimeError(f"recorded trace is invalid: {bad[0]}")
    return tr


def main() -> None:
    import argparse

    parser = argparse.ArgumentParser(description=f"record a fuzzed {MODEL} trace")
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--ops", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-o", "--output", required=True)
    args = parser.parse_args()
    tr = run_harness(FuzzHarness(), args.threads, args.ops, args.seed)
    write_trace(tr, args.output)
    print(f"wrote {tr.total_actions} actions to {args.output}")


if __name__ == "__main__":
    main()
'''


def emit_fuzzer_template(spec: ModelSpec) -> str:
    """Source text of a runnable fuzzer skeleton for the given model."""
    ops = tuple(sig.name for sig in spec.signature)
    methods = {op: f"op_{_snake(op)}" for op in ops}
    parts = [_HEADER.format(name=spec.name, ops=ops)]
    for sig in spec.signature:
        parts.append(
            _STUB.format(method=methods[sig.name], op=sig.name, arity=sig.arity)
        )
    parts.append("OP_METHODS = {\n")
    for op, method in methods.items():
        parts.append(f"    {op!r}: {method!r},\n")
    parts.append("}\n")
    parts.append(_RUNNER)
    return "".join(parts)
