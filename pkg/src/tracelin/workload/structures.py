"""Reference concurrent data structures, correct by default, with injectable bugs.

Each structure is the in-repo stand-in for one evaluated system class:
LockQueue (mutex-guarded FIFO), SnapshotMap (copy-on-write ordered map
whose queries read the last published snapshot), and SegQueue
(per-producer subqueues with a scanning consumer).  Every bug flag
weakens exactly one code path in exactly one structure; the recorded
histories then stop linearizing against the corresponding model.

Structure methods return (result, commit_ns): commit_ns is a refined
timestamp taken at the operation's internal commit instant when the
structure has an unambiguous one, else None.
"""

from __future__ import annotations

import enum
import os
import random
import threading
import time
from collections import deque
from typing import Iterable, Optional, Tuple


class BugId(enum.Enum):
    Q1_READ_UNLOCKED = "Q1_READ_UNLOCKED"
    Q2_RETURN_BEFORE_LINEARIZED = "Q2_RETURN_BEFORE_LINEARIZED"
    Q3_LOST_ELEMENT = "Q3_LOST_ELEMENT"
    M1_READ_MUTABLE = "M1_READ_MUTABLE"
    M2_FUTURE_SNAPSHOT = "M2_FUTURE_SNAPSHOT"
    M3_EARLY_FAILED_UPDATE = "M3_EARLY_FAILED_UPDATE"
    S1_BATCH_SPLIT = "S1_BATCH_SPLIT"


BUG_MODEL = {
    BugId.Q1_READ_UNLOCKED: "queue",
    BugId.Q2_RETURN_BEFORE_LINEARIZED: "queue",
    BugId.Q3_LOST_ELEMENT: "queue",
    BugId.M1_READ_MUTABLE: "omaprange",
    BugId.M2_FUTURE_SNAPSHOT: "omaprange",
    BugId.M3_EARLY_FAILED_UPDATE: "omaprange",
    BugId.S1_BATCH_SPLIT: "ppfifo",
}

# Sentinel for "structure observed empty / key absent".
EMPTY = object()


class Jitter:
    """Seeded micro-delays at annotated yield points inside structures.

    Substitutes for scheduler randomization: a pause both yields the
    interpreter and stretches the enclosing operation, raising the odds
    that independently timed operations overlap.  Thread-local RNG
    substreams keep pauses cheap and lock-free.
    """

    def __init__(self, probability: float, max_delay_ns: int, seed: int = 0):
        if not 0.0 <= probability <= 1.0:
            raise ValueError("jitter probability must be in [0, 1]")
        if max_delay_ns < 0:
            raise ValueError("jitter delay must be non-negative")
        self.probability = probability
        self.max_delay_ns = max_delay_ns
        self._seed = seed
        self._local = threading.local()

    def _rng(self) -> random.Random:
        rng = getattr(self._local, "rng", None)
        if rng is None:
            rng = random.Random(f"jitter:{self._seed}:{threading.get_ident()}")
            self._local.rng = rng
        return rng

    def pause(self) -> None:
        rng = self._rng()
        if rng.random() >= self.probability:
            return
        if self.max_delay_ns > 0 and rng.random() < 0.25:
            # Occasional real sleep: stalls this operation long enough
            # for the rest of the system to move on without it.
            time.sleep(rng.random() * self.max_delay_ns / 1e9)
        else:
            # Cheap cross-thread handoff (~1us): operations interleave
            # the way they would on parallel hardware, without the box
            # inflation a sleep causes.  time.sleep(0) does NOT work
            # for this: the sleeper usually reacquires the interpreter
            # before any waiter wakes.
            os.sched_yield()


class _NoJitter:
    probability = 0.0
    max_delay_ns = 0

    def pause(self) -> None:
        pass


NO_JITTER = _NoJitter()


def _now() -> int:
    return time.monotonic_ns()


class LockQueue:
    """Mutex-guarded FIFO queue; linearization point inside the lock."""

    def __init__(self, bugs: Iterable[BugId] = (), jitter=None):
        self._bugs = frozenset(bugs)
        self._jitter = jitter or NO_JITTER
        self._lock = threading.Lock()
        self._items: deque = deque()
        # Q2 only: elements parked here become visible when the NEXT
        # enqueue flushes them — after the staging enqueue has already
        # returned.  Readers do not flush, so they can observe a state
        # in which a completed enqueue has not happened yet.
        self._staged: list = []

    def enqueue(self, v) -> Tuple[None, Optional[int]]:
        if BugId.Q3_LOST_ELEMENT in self._bugs:
            # Unlocked read-modify-write: concurrent appends to the old
            # deque are dropped when the copy is published.
            snapshot = list(self._items)
            self._jitter.pause()
            snapshot.append(v)
            self._items = deque(snapshot)
            return None, None
        with self._lock:
            if BugId.Q2_RETURN_BEFORE_LINEARIZED in self._bugs:
                while self._staged:
                    self._items.append(self._staged.pop(0))
                self._staged.append(v)
                return None, None
            self._jitter.pause()
            self._items.append(v)
            return None, _now()

    def dequeue(self):
        if BugId.Q1_READ_UNLOCKED in self._bugs:
            items = self._items
            if not items:
                return EMPTY, _now()
            v = items[0]  # unlocked peek; a racer may pop it first
            self._jitter.pause()
            with self._lock:
                if self._items:
                    self._items.popleft()
            return v, _now()
        with self._lock:
            self._jitter.pause()
            if self._items:
                v = self._items.popleft()
                return v, _now()
            return EMPTY, _now()


class SnapshotMap:
    """Copy-on-write ordered map with version-published snapshots.

    Mutations serialize on a lock, build a fresh dict, and publish it
    atomically; published dicts are never mutated again.  Queries read
    the last published snapshot without locking, so their linearization
    point is the snapshot capture instant.
    """

    def __init__(self, bugs: Iterable[BugId] = (), jitter=None):
        self._bugs = frozenset(bugs)
        self._jitter = jitter or NO_JITTER
        self._lock = threading.Lock()
        self._snapshot: dict = {}
        self._pending: Optional[dict] = None  # M1: mid-mutation working copy
        self._staged: Optional[dict] = None  # M2: built but not yet published
        # M3: per-thread snapshot captured at the thread's last
        # SUCCESSFUL mutation; failed updates consult it unsynchronized.
        self._cache = threading.local()

    def _refresh_cache(self, snap: dict) -> None:
        self._cache.snap = snap

    def _stale_cached(self) -> Optional[dict]:
        return getattr(self._cache, "snap", None)

    def insert(self, k, v):
        if BugId.M3_EARLY_FAILED_UPDATE in self._bugs:
            cached = self._stale_cached()
            if cached is not None and k in cached:
                # Failure decided against this thread's stale view, no
                # synchronization: may contradict updates that completed
                # before this call even began.
                return False, _now()
        with self._lock:
            working = dict(self._snapshot)
            if BugId.M1_READ_MUTABLE in self._bugs:
                self._pending = working
            try:
                if k in working:
                    return False, _now()
                self._jitter.pause()
                working[k] = v
                self._jitter.pause()
                if BugId.M2_FUTURE_SNAPSHOT in self._bugs:
                    # The future version stays queryable for a while
                    # before it is actually published.
                    self._staged = working
                    self._jitter.pause()
                    self._jitter.pause()
                    self._jitter.pause()
                self._snapshot = working
                commit = _now()
                self._refresh_cache(working)
                return True, commit
            finally:
                self._pending = None
                self._staged = None

    def delete(self, k):
        if BugId.M3_EARLY_FAILED_UPDATE in self._bugs:
            cached = self._stale_cached()
            if cached is not None and k not in cached:
                return False, _now()
        with self._lock:
            working = dict(self._snapshot)
            if BugId.M1_READ_MUTABLE in self._bugs:
                self._pending = working
            try:
                if k not in working:
                    return False, _now()
                self._jitter.pause()
                del working[k]
                self._jitter.pause()
                if BugId.M2_FUTURE_SNAPSHOT in self._bugs:
                    self._staged = working
                    self._jitter.pause()
                    self._jitter.pause()
                    self._jitter.pause()
                self._snapshot = working
                commit = _now()
                self._refresh_cache(working)
                return True, commit
            finally:
                self._pending = None
                self._staged = None

    def find(self, k):
        self._jitter.pause()
        if BugId.M1_READ_MUTABLE in self._bugs and self._pending is not None:
            # Reads the mutable working copy of an in-flight mutation.
            snap = self._pending
        else:
            snap = self._snapshot
        commit = _now()
        result = snap.get(k, EMPTY)
        return result, commit

    def range_count(self, lo, hi):
        self._jitter.pause()
        snap = self._snapshot
        if BugId.M2_FUTURE_SNAPSHOT in self._bugs and self._staged is not None:
            # Reads a version that will only be published later.
            snap = self._staged
        commit = _now()
        count = sum(1 for key in snap if lo <= key <= hi)
        return count, commit


class SegQueue:
    """Per-producer subqueues with a scanning consumer.

    Producers append to their own subqueue under that subqueue's lock;
    consumers scan from a caller-supplied start offset and pop from the
    first nonempty subqueue.  Reporting "empty" requires holding every
    subqueue lock at once (acquired in fixed order), so the observation
    has a true linearization instant.
    """

    def __init__(self, producers: int, bugs: Iterable[BugId] = (), jitter=None):
        if producers < 1:
            raise ValueError("need at least one producer")
        self._bugs = frozenset(bugs)
        self._jitter = jitter or NO_JITTER
        self._locks = [threading.Lock() for _ in range(producers)]
        self._subqs: list[list] = [[] for _ in range(producers)]

    @property
    def producers(self) -> int:
        return len(self._subqs)

    def enqueue(self, producer: int, payload):
        v = (producer, payload)
        with self._locks[producer]:
            self._jitter.pause()
            self._subqs[producer].append(v)
            return v, _now()

    def enqueue_bulk(self, producer: int, payloads):
        vs = tuple((producer, p) for p in payloads)
        with self._locks[producer]:
            self._jitter.pause()
            self._subqs[producer].extend(vs)
            return vs, _now()

    def _certify_empty_or_pop(self, take):
        # All locks held simultaneously: either some subqueue turned
        # nonempty since the scan (pop from it), or all are empty at one
        # instant and EMPTY is a sound observation.
        for lock in self._locks:
            lock.acquire()
        try:
            for p in range(len(self._subqs)):
                if self._subqs[p]:
                    return take(p), _now()
            return EMPTY, _now()
        finally:
            for lock in reversed(self._locks):
                lock.release()

    def dequeue(self, start: int = 0):
        n = len(self._subqs)
        for off in range(n):
            p = (start + off) % n
            with self._locks[p]:
                if self._subqs[p]:
                    self._jitter.pause()
                    return self._subqs[p].pop(0), _now()
        return self._certify_empty_or_pop(lambda p: self._subqs[p].pop(0))

    def dequeue_bulk(self, start: int = 0, max_n: int = 2):
        n = len(self._subqs)
        for off in range(n):
            p = (start + off) % n
            with self._locks[p]:
                if self._subqs[p]:
                    self._jitter.pause()
                    subq = self._subqs[p]
                    k = min(max_n, len(subq))
                    if BugId.S1_BATCH_SPLIT in self._bugs:
                        # Takes the newest block first; an older block
                        # can then surface in a later batch, out of
                        # per-producer order.
                        chunk = subq[-k:]
                        del subq[-k:]
                    else:
                        chunk = subq[:k]
                        del subq[:k]
                    return tuple(chunk), _now()
        return self._certify_empty_or_pop(
            lambda p: tuple([self._subqs[p].pop(0)])
        )
