"""Timeboxed trace data model, validation, the TBX1 file format, and re-timing.

A trace holds, per thread, an ordered sequence of timeboxed actions: an
operation name, its argument values (return values included as trailing
arguments by convention), and the [start_ns, end_ns] interval within
which the operation's effect must have occurred.  Threads are dense
integers 0..T-1.  Boxes within one thread may touch but never overlap.

Vector timestamps index into this structure: idx[t] counts how many of
thread t's actions have been consumed; idx[t] == len(threads[t]) means
thread t is exhausted.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterator, Optional, Tuple, Union

from .values import Value, ValueMap, ValueSet, canonical_encode

TRACE_FORMAT_VERSION = 1
RECORDER_VERSION = "tracelin-0.1"


class TraceParseError(ValueError):
    """Malformed trace file; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TraceValidationError(ValueError):
    """Structurally parseable trace that breaks trace invariants."""

    def __init__(self, violations: Tuple["Violation", ...]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class Violation:
    """One broken trace invariant, locatable by thread and index."""

    thread: int
    index: int
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"[thread {self.thread}, index {self.index}] {self.rule}: {self.detail}"


@dataclass(frozen=True)
class TimeboxedAction:
    """One recorded operation with the interval bounding its effect."""

    op: str
    args: Tuple[Value, ...]
    thread: int
    start_ns: int
    end_ns: int
    refined_ns: Optional[int] = None

    def __post_init__(self) -> None:
        if self.start_ns > self.end_ns:
            raise ValueError(
                f"timebox ends before it starts: [{self.start_ns}, {self.end_ns}]"
            )
        if self.refined_ns is not None and not (
            self.start_ns <= self.refined_ns <= self.end_ns
        ):
            raise ValueError(
                f"refined timestamp {self.refined_ns} outside box "
                f"[{self.start_ns}, {self.end_ns}]"
            )
        if self.thread < 0:
            raise ValueError(f"negative thread id: {self.thread}")


@dataclass(frozen=True)
class TraceMeta:
    model: str
    seed: Optional[int] = None
    recorder: str = RECORDER_VERSION


@dataclass(frozen=True)
class Trace:
    """Per-thread ordered sequences of timeboxed actions."""

    threads: Tuple[Tuple[TimeboxedAction, ...], ...]
    meta: TraceMeta = field(default_factory=lambda: TraceMeta(model=""))

    @property
    def thread_count(self) -> int:
        return len(self.threads)

    @property
    def total_actions(self) -> int:
        return sum(len(t) for t in self.threads)

    def actions(self) -> Iterator[TimeboxedAction]:
        for seq in self.threads:
            yield from seq

    def action_at(self, thread: int, index: int) -> TimeboxedAction:
        return self.threads[thread][index]


# --- Vector timestamps -------------------------------------------------------
#
# Represented as plain tuples of ints, one index per thread.

VectorTimestamp = Tuple[int, ...]


def initial_vt(tr: Trace) -> VectorTimestamp:
    return (0,) * tr.thread_count


def vt_in_bounds(tr: Trace, vt: VectorTimestamp) -> bool:
    return len(vt) == tr.thread_count and all(
        0 <= vt[t] <= len(tr.threads[t]) for t in range(tr.thread_count)
    )


def vt_advance(vt: VectorTimestamp, thread: int) -> VectorTimestamp:
    return vt[:thread] + (vt[thread] + 1,) + vt[thread + 1 :]


def vt_is_complete(tr: Trace, vt: VectorTimestamp) -> bool:
    return all(vt[t] == len(tr.threads[t]) for t in range(tr.thread_count))


def vt_depth(vt: VectorTimestamp) -> int:
    return sum(vt)


# --- Validation --------------------------------------------------------------


def validate_trace(tr: Trace) -> list[Violation]:
    """Check trace invariants; violations are data, not exceptions.

    Per-action invariants (box well-formedness) are enforced at
    construction, so this checks only cross-action structure: thread
    field consistency and per-thread ordering/non-overlap.
    """
    violations: list[Violation] = []
    for t, seq in enumerate(tr.threads):
        prev_end: Optional[int] = None
        for i, act in enumerate(seq):
            if act.thread != t:
                violations.append(
                    Violation(t, i, "thread-id", f"action carries thread {act.thread}")
                )
            if prev_end is not None and act.start_ns < prev_end:
                violations.append(
                    Violation(
                        t,
                        i,
                        "overlap",
                        f"box starts at {act.start_ns} before previous box ended "
                        f"at {prev_end}",
                    )
                )
            prev_end = max(prev_end, act.end_ns) if prev_end is not None else act.end_ns
    return violations


# --- TBX1 value encoding (JSON-compatible) -----------------------------------


def value_to_json(v: Value) -> object:
    t = type(v)
    if t is bool or t is int or t is str:
        return v
    if t is tuple:
        return {"tup": [value_to_json(x) for x in v]}
    if t is ValueSet:
        return {"set": [value_to_json(x) for x in v.members]}
    if t is ValueMap:
        return {"map": [[value_to_json(k), value_to_json(x)] for k, x in v.pairs]}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(obj: object) -> Value:
    if type(obj) is bool or type(obj) is int or type(obj) is str:
        return obj
    if isinstance(obj, dict) and len(obj) == 1:
        ((kind, payload),) = obj.items()
        if kind == "tup" and isinstance(payload, list):
            return tuple(value_from_json(x) for x in payload)
        if kind == "set" and isinstance(payload, list):
            return ValueSet(value_from_json(x) for x in payload)
        if kind == "map" and isinstance(payload, list):
            pairs = []
            for entry in payload:
                if not isinstance(entry, list) or len(entry) != 2:
                    raise ValueError(f"map entry is not a [key, value] pair: {entry!r}")
                pairs.append((value_from_json(entry[0]), value_from_json(entry[1])))
            return ValueMap(pairs)
    raise ValueError(f"not a value: {obj!r}")


# --- TBX1 reading and writing ------------------------------------------------

Source = Union[str, IO[str]]


def _action_to_record(act: TimeboxedAction) -> dict:
    rec = {
        "t": act.thread,
        "op": act.op,
        "args": [value_to_json(a) for a in act.args],
        "s": act.start_ns,
        "e": act.end_ns,
    }
    if act.refined_ns is not None:
        rec["r"] = act.refined_ns
    return rec


def write_trace(tr: Trace, sink: Source) -> None:
    """Write a trace in TBX1 line-delimited form (one JSON record per line)."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8") as f:
            write_trace(tr, f)
        return
    header = {
        "tbx": TRACE_FORMAT_VERSION,
        "model": tr.meta.model,
        "threads": tr.thread_count,
        "seed": tr.meta.seed,
    }
    sink.write(json.dumps(header, separators=(",", ":")) + "\n")
    for seq in tr.threads:
        for act in seq:
            sink.write(json.dumps(_action_to_record(act), separators=(",", ":")) + "\n")


def read_trace(source: Source) -> Trace:
    """Read a TBX1 trace.

    Records may appear in any global order; per-thread order is
    recovered by a stable sort on (thread, start_ns) and then checked
    against the trace invariants.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as f:
            return read_trace(f)
    lines = source.read().splitlines()
    if not lines or not lines[0].strip():
        raise TraceParseError(1, "missing TBX header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise TraceParseError(1, f"bad header JSON: {e}") from e
    if not isinstance(header, dict) or header.get("tbx") != TRACE_FORMAT_VERSION:
        raise TraceParseError(1, f"unknown or missing format version: {header!r}")
    model = header.get("model")
    thread_count = header.get("threads")
    seed = header.get("seed")
    if not isinstance(model, str) or not isinstance(thread_count, int):
        raise TraceParseError(1, "header must carry string 'model' and int 'threads'")
    if seed is not None and not isinstance(seed, int):
        raise TraceParseError(1, "header 'seed' must be an int or null")

    per_thread: list[list[TimeboxedAction]] = [[] for _ in range(thread_count)]
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceParseError(line_no, f"bad record JSON: {e}") from e
        if not isinstance(rec, dict):
            raise TraceParseError(line_no, "record is not an object")
        try:
            t = rec["t"]
            op = rec["op"]
            raw_args = rec["args"]
            s = rec["s"]
            e = rec["e"]
        except KeyError as exc:
            raise TraceParseError(line_no, f"record missing field {exc}") from exc
        if (
            not isinstance(t, int)
            or not isinstance(op, str)
            or not isinstance(raw_args, list)
            or not isinstance(s, int)
            or not isinstance(e, int)
        ):
            raise TraceParseError(line_no, "record field has wrong type")
        if not 0 <= t < thread_count:
            raise TraceParseError(line_no, f"thread {t} outside 0..{thread_count - 1}")
        r = rec.get("r")
        if r is not None and not isinstance(r, int):
            raise TraceParseError(line_no, "refined timestamp must be an int")
        try:
            args = tuple(value_from_json(a) for a in raw_args)
        except ValueError as exc:
            raise TraceParseError(line_no, f"bad value: {exc}") from exc
        try:
            act = TimeboxedAction(
                op=op, args=args, thread=t, start_ns=s, end_ns=e, refined_ns=r
            )
        except ValueError as exc:
            raise TraceValidationError(
                (Violation(t, len(per_thread[t]), "box", f"line {line_no}: {exc}"),)
            ) from exc
        per_thread[t].append(act)

    for t in range(thread_count):
        per_thread[t].sort(key=lambda a: a.start_ns)
    tr = Trace(
        threads=tuple(tuple(seq) for seq in per_thread),
        meta=TraceMeta(model=model, seed=seed),
    )
    violations = validate_trace(tr)
    if violations:
        raise TraceValidationError(tuple(violations))
    return tr


def trace_to_string(tr: Trace) -> str:
    buf = io.StringIO()
    write_trace(tr, buf)
    return buf.getvalue()


def trace_from_string(text: str) -> Trace:
    return read_trace(io.StringIO(text))


# --- Re-timing ---------------------------------------------------------------


def shrink_timeboxes(tr: Trace) -> Trace:
    """Collapse every box with a refined timestamp to [refined, refined].

    Narrower boxes only remove candidate linearizations, so a verdict on
    the shrunken trace implies the same verdict on the original.  The
    result is re-validated; if shrinking breaks per-thread non-overlap
    (possible only with inconsistent refined points), the offending pair
    is reported via TraceValidationError.
    """
    new_threads = []
    for seq in tr.threads:
        new_seq = []
        for act in seq:
            if act.refined_ns is not None:
                act = TimeboxedAction(
                    op=act.op,
                    args=act.args,
                    thread=act.thread,
                    start_ns=act.refined_ns,
                    end_ns=act.refined_ns,
                    refined_ns=act.refined_ns,
                )
            new_seq.append(act)
        new_threads.append(tuple(new_seq))
    shrunk = Trace(threads=tuple(new_threads), meta=tr.meta)
    violations = validate_trace(shrunk)
    if violations:
        raise TraceValidationError(tuple(violations))
    return shrunk


def trace_equal(a: Trace, b: Trace) -> bool:
    """Structural equality up to field order (args compared canonically)."""
    if a.thread_count != b.thread_count or a.meta.model != b.meta.model:
        return False
    if a.meta.seed != b.meta.seed:
        return False
    for sa, sb in zip(a.threads, b.threads):
        if len(sa) != len(sb):
            return False
        for x, y in zip(sa, sb):
            if (
                x.op != y.op
                or x.thread != y.thread
                or x.start_ns != y.start_ns
                or x.end_ns != y.end_ns
                or x.refined_ns != y.refined_ns
                or len(x.args) != len(y.args)
                or any(
                    canonical_encode(p) != canonical_encode(q)
                    for p, q in zip(x.args, y.args)
                )
            ):
                return False
    return True
