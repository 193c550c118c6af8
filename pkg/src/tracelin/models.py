"""Pluggable sequential specifications and the three built-in models.

A model is a nondeterministic guarded state machine: a finite set of
initial states plus a step function mapping (state, op, args) to the
finite set of successor states.  An empty successor set means the
action is disabled in that state (its precondition fails).  Return
values are encoded as trailing action arguments and checked in the
guard, so observer actions (Find, RangeCount, DequeueEmpty) never
change state and are enabled iff the recorded result matches.

Models must be pure: step may be called concurrently on shared
instances and must depend only on its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

from .values import Value, ValueMap, canonical_encode

NOT_FOUND = "NotFound"


class SpecificationError(Exception):
    """A trace action that the model cannot even interpret (bad op/shape)."""


@dataclass(frozen=True)
class OpSig:
    """One operation in a model's signature: name, arity, argument kinds."""

    name: str
    arity: int
    kinds: Tuple[str, ...]


class ModelSpec:
    """Base interface; concrete models override the four core methods."""

    name: str = ""
    signature: Tuple[OpSig, ...] = ()

    def initial_states(self) -> Tuple[object, ...]:
        raise NotImplementedError

    def step(self, state: object, op: str, args: Tuple[Value, ...]) -> Tuple[object, ...]:
        raise NotImplementedError

    def render(self, state: object) -> Value:
        """Injective rendering of a state as a value, for display."""
        raise NotImplementedError

    def view(self, state: object) -> bytes:
        """State fingerprint controlling search coalescing.

        The default is the canonical encoding of the rendered state and
        is safe.  Overriding with a lossier function can only cause
        spurious rejection, never spurious acceptance.
        """
        return canonical_encode(self.render(state))

    def op_names(self) -> frozenset[str]:
        return frozenset(sig.name for sig in self.signature)

    def enabled_hints(self, state: object) -> Tuple[Tuple[str, Tuple], ...]:
        """Best-effort (op, args) templates; None marks a free argument slot.

        Fuzzer guidance only.  Checking soundness never depends on this.
        """
        return tuple((sig.name, (None,) * sig.arity) for sig in self.signature)


def _check_arity(spec: ModelSpec, op: str, args: Tuple[Value, ...]) -> OpSig:
    for sig in spec.signature:
        if sig.name == op:
            if len(args) != sig.arity:
                raise SpecificationError(
                    f"{spec.name}.{op} takes {sig.arity} argument(s), got {len(args)}"
                )
            return sig
    raise SpecificationError(f"unknown operation {op!r} for model {spec.name!r}")


def _is_int(v: Value) -> bool:
    return type(v) is int


def _is_bool(v: Value) -> bool:
    return type(v) is bool


# --- AtomicQueue --------------------------------------------------------------


class AtomicQueue(ModelSpec):
    """Single linearizable FIFO queue; state is the tuple of queued values.

    Enqueue(v) is always enabled and appends.  Dequeue(v) is enabled iff
    the queue is nonempty and its head equals v.  DequeueEmpty() is
    enabled iff the queue is empty, letting recorders log observed-empty
    results.
    """

    name = "queue"
    signature = (
        OpSig("Enqueue", 1, ("value",)),
        OpSig("Dequeue", 1, ("value",)),
        OpSig("DequeueEmpty", 0, ()),
    )

    def initial_states(self) -> Tuple[object, ...]:
        return ((),)

    def step(self, state, op, args):
        _check_arity(self, op, args)
        if op == "Enqueue":
            return (state + (args[0],),)
        if op == "Dequeue":
            if state and canonical_encode(state[0]) == canonical_encode(args[0]):
                return (state[1:],)
            return ()
        # DequeueEmpty
        return (state,) if not state else ()

    def render(self, state) -> Value:
        return state

    def enabled_hints(self, state):
        hints = [("Enqueue", (None,))]
        if state:
            hints.append(("Dequeue", (state[0],)))
        else:
            hints.append(("DequeueEmpty", ()))
        return tuple(hints)


# --- OrderedMapRange ----------------------------------------------------------


class OrderedMapRange(ModelSpec):
    """Ordered int-keyed map with an inclusive range-count query.

    State is a tuple of (key, value) pairs sorted by key.  Insert and
    Delete carry their success flag as the final argument; the guard
    requires the flag to match whether the key was absent/present.
    RangeCount(lo, hi, n) counts keys with lo <= k <= hi, both bounds
    inclusive (pinned by tests; an easy off-by-one hazard otherwise).
    """

    name = "omaprange"
    signature = (
        OpSig("Insert", 3, ("int", "value", "bool")),
        OpSig("Delete", 2, ("int", "bool")),
        OpSig("Find", 2, ("int", "value-or-notfound")),
        OpSig("RangeCount", 3, ("int", "int", "int")),
    )

    def initial_states(self) -> Tuple[object, ...]:
        return ((),)

    @staticmethod
    def _lookup(state, k: int):
        for key, val in state:
            if key == k:
                return val
        return None

    def step(self, state, op, args):
        _check_arity(self, op, args)
        if op == "Insert":
            k, v, ok = args
            if not _is_int(k):
                raise SpecificationError(f"Insert key must be an int, got {k!r}")
            if not _is_bool(ok):
                raise SpecificationError("Insert flag must be a bool")
            present = any(key == k for key, _ in state)
            if ok != (not present):
                return ()
            if not ok:
                return (state,)
            return (tuple(sorted(state + ((k, v),), key=lambda kv: kv[0])),)
        if op == "Delete":
            k, ok = args
            if not _is_int(k):
                raise SpecificationError(f"Delete key must be an int, got {k!r}")
            if not _is_bool(ok):
                raise SpecificationError("Delete flag must be a bool")
            present = any(key == k for key, _ in state)
            if ok != present:
                return ()
            if not ok:
                return (state,)
            return (tuple(kv for kv in state if kv[0] != k),)
        if op == "Find":
            k, result = args
            if not _is_int(k):
                raise SpecificationError(f"Find key must be an int, got {k!r}")
            stored = self._lookup(state, k)
            if stored is None:
                ok = canonical_encode(result) == canonical_encode(NOT_FOUND)
            else:
                ok = canonical_encode(result) == canonical_encode(stored)
            return (state,) if ok else ()
        # RangeCount
        lo, hi, count = args
        if not (_is_int(lo) and _is_int(hi) and _is_int(count)):
            raise SpecificationError("RangeCount arguments must be ints")
        actual = sum(1 for key, _ in state if lo <= key <= hi)
        return (state,) if actual == count else ()

    def render(self, state) -> Value:
        return ValueMap(state)

    def enabled_hints(self, state):
        hints = [("Insert", (None, None, True)), ("Find", (None, NOT_FOUND))]
        if state:
            k, v = state[0]
            hints.extend(
                [
                    ("Insert", (k, None, False)),
                    ("Delete", (k, True)),
                    ("Find", (k, v)),
                    ("RangeCount", (k, k, 1)),
                ]
            )
        return tuple(hints)


# --- PerProducerFIFO ----------------------------------------------------------


class PerProducerFIFO(ModelSpec):
    """Per-producer FIFO: a map from producer to subqueue.

    Values are tuples (producer, payload) so a dequeue can locate the
    owning subqueue from the value alone.  Only same-producer elements
    are ordered; heads of different producers may be consumed in any
    interleaving, which is this model's deliberate weakening relative
    to a single global queue.  Empty subqueues are dropped from the
    state so rendering stays injective.
    """

    name = "ppfifo"
    signature = (
        OpSig("Enqueue", 2, ("producer", "tagged-value")),
        OpSig("EnqueueBulk", 2, ("producer", "tuple-of-tagged-values")),
        OpSig("Dequeue", 1, ("tagged-value",)),
        OpSig("DequeueBulk", 1, ("tuple-of-tagged-values",)),
        OpSig("DequeueEmpty", 0, ()),
    )

    def initial_states(self) -> Tuple[object, ...]:
        return ((),)

    @staticmethod
    def _tag_of(v: Value) -> bytes:
        if type(v) is not tuple or len(v) != 2:
            raise SpecificationError(
                f"per-producer values must be (producer, payload) pairs, got {v!r}"
            )
        return canonical_encode(v[0])

    @staticmethod
    def _with_subqueue(state, tag: bytes, producer: Value, items: tuple):
        rest = tuple(
            (p, q) for p, q in state if canonical_encode(p) != tag
        )
        if items:
            rest = rest + ((producer, items),)
        return tuple(sorted(rest, key=lambda pq: canonical_encode(pq[0])))

    def _subqueue(self, state, tag: bytes):
        for p, q in state:
            if canonical_encode(p) == tag:
                return p, q
        return None, ()

    def _enqueue_one(self, state, producer: Value, v: Value):
        tag = self._tag_of(v)
        if tag != canonical_encode(producer):
            raise SpecificationError(
                f"value {v!r} is tagged with a different producer than {producer!r}"
            )
        _, items = self._subqueue(state, tag)
        return self._with_subqueue(state, tag, producer, items + (v,))

    def _dequeue_one(self, state, v: Value):
        """Successor state, or None when v is not the head of its subqueue."""
        tag = self._tag_of(v)
        producer, items = self._subqueue(state, tag)
        if not items or canonical_encode(items[0]) != canonical_encode(v):
            return None
        return self._with_subqueue(state, tag, producer, items[1:])

    def step(self, state, op, args):
        _check_arity(self, op, args)
        if op == "Enqueue":
            return (self._enqueue_one(state, args[0], args[1]),)
        if op == "EnqueueBulk":
            producer, vs = args
            if type(vs) is not tuple:
                raise SpecificationError("EnqueueBulk takes a tuple of values")
            for v in vs:
                state = self._enqueue_one(state, producer, v)
            return (state,)
        if op == "Dequeue":
            nxt = self._dequeue_one(state, args[0])
            return (nxt,) if nxt is not None else ()
        if op == "DequeueBulk":
            (vs,) = args
            if type(vs) is not tuple:
                raise SpecificationError("DequeueBulk takes a tuple of values")
            for v in vs:
                state = self._dequeue_one(state, v)
                if state is None:
                    return ()
            return (state,)
        # DequeueEmpty
        return (state,) if not state else ()

    def render(self, state) -> Value:
        return ValueMap(state)

    def enabled_hints(self, state):
        hints = [("Enqueue", (None, None))]
        if state:
            for _, items in state:
                hints.append(("Dequeue", (items[0],)))
        else:
            hints.append(("DequeueEmpty", ()))
        return tuple(hints)


# --- Registry -----------------------------------------------------------------

MODEL_REGISTRY: Dict[str, Callable[[], ModelSpec]] = {
    "queue": AtomicQueue,
    "omaprange": OrderedMapRange,
    "ppfifo": PerProducerFIFO,
}


def get_model(name: str) -> ModelSpec:
    try:
        return MODEL_REGISTRY[name]()
    except KeyError:
        raise SpecificationError(
            f"unknown model {name!r}; known: {sorted(MODEL_REGISTRY)}"
        ) from None


def enabled_actions_hint(spec: ModelSpec, state: object) -> Tuple[Tuple[str, Tuple], ...]:
    """Finite (op, args) templates a fuzzer may sample; None = free slot."""
    return spec.enabled_hints(state)
