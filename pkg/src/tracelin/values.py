"""Concrete value universe shared by traces, models, and file formats.

A value is one of: bool, signed 64-bit int, str, tuple of values,
ValueSet, ValueMap.  Every value has a canonical byte encoding that is
injective (equal bytes iff semantically equal), so equality, hashing,
and set/map member ordering are all derived from it.  Note that plain
Python equality is *not* trusted anywhere: ``True == 1`` in Python, but
``Bool(true)`` and ``Int(1)`` are distinct values here.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Iterator, Tuple, Union

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

_TAG_BOOL = b"b"
_TAG_INT = b"i"
_TAG_STR = b"s"
_TAG_TUPLE = b"t"
_TAG_SET = b"S"
_TAG_MAP = b"m"

Value = Union[bool, int, str, tuple, "ValueSet", "ValueMap"]

# Scalar encodings recur heavily in hot loops (state fingerprints); the
# fuzzers draw from small universes so a bounded memo stays tiny.
_SCALAR_MEMO: dict = {}
_SCALAR_MEMO_CAP = 65536


def _uvarint(n: int) -> bytes:
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def canonical_encode(v: Value) -> bytes:
    """Encode a value to its canonical byte form.

    Set members and map pairs are ordered by their own encodings, so the
    result is independent of construction order.  Raises TypeError for
    anything outside the value universe and ValueError for ints outside
    signed 64-bit range.
    """
    t = type(v)
    if t is bool:
        return b"b\x01" if v else b"b\x00"
    if t is int:
        enc = _SCALAR_MEMO.get(v)
        if enc is None:
            if not INT64_MIN <= v <= INT64_MAX:
                raise ValueError(f"int value out of signed 64-bit range: {v}")
            enc = _TAG_INT + v.to_bytes(8, "big", signed=True)
            if len(_SCALAR_MEMO) < _SCALAR_MEMO_CAP:
                _SCALAR_MEMO[v] = enc
        return enc
    if t is str:
        key = ("s", v)
        enc = _SCALAR_MEMO.get(key)
        if enc is None:
            raw = v.encode("utf-8")
            enc = _TAG_STR + _uvarint(len(raw)) + raw
            if len(_SCALAR_MEMO) < _SCALAR_MEMO_CAP:
                _SCALAR_MEMO[key] = enc
        return enc
    if t is tuple:
        parts = [canonical_encode(x) for x in v]
        return _TAG_TUPLE + _uvarint(len(parts)) + b"".join(parts)
    if t is ValueSet:
        return v._enc
    if t is ValueMap:
        return v._enc
    raise TypeError(f"not a value: {v!r} of type {t.__name__}")


class ValueSet:
    """Finite set of values, canonicalized at construction.

    Members are deduplicated and ordered by canonical encoding, so two
    sets built from the same members in any order are identical.
    """

    __slots__ = ("_members", "_enc")

    def __init__(self, members: Iterable[Value] = ()):
        by_enc = {canonical_encode(m): m for m in members}
        ordered = sorted(by_enc.items())
        self._members: Tuple[Value, ...] = tuple(m for _, m in ordered)
        self._enc = _TAG_SET + _uvarint(len(ordered)) + b"".join(e for e, _ in ordered)

    @property
    def members(self) -> Tuple[Value, ...]:
        return self._members

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[Value]:
        return iter(self._members)

    def __contains__(self, item: Value) -> bool:
        enc = canonical_encode(item)
        return any(canonical_encode(m) == enc for m in self._members)

    def __eq__(self, other: object) -> bool:
        return type(other) is ValueSet and self._enc == other._enc

    def __hash__(self) -> int:
        return hash(self._enc)

    def __repr__(self) -> str:
        return "ValueSet({%s})" % ", ".join(repr(m) for m in self._members)


class ValueMap:
    """Finite key-value mapping, canonicalized at construction.

    Keys must be unique (by canonical encoding); pairs are stored in
    ascending key-encoding order.  Iteration order is canonical order
    and carries no meaning beyond determinism.
    """

    __slots__ = ("_pairs", "_enc")

    def __init__(self, pairs: Iterable[Tuple[Value, Value]] = ()):
        by_enc: dict = {}
        for k, v in pairs:
            ke = canonical_encode(k)
            if ke in by_enc:
                raise ValueError(f"duplicate map key: {k!r}")
            by_enc[ke] = (k, v)
        ordered = sorted(by_enc.items())
        self._pairs: Tuple[Tuple[Value, Value], ...] = tuple(kv for _, kv in ordered)
        self._enc = _TAG_MAP + _uvarint(len(ordered)) + b"".join(
            ke + canonical_encode(v) for ke, (_, v) in ordered
        )

    @property
    def pairs(self) -> Tuple[Tuple[Value, Value], ...]:
        return self._pairs

    def get(self, key: Value, default: Value | None = None) -> Value | None:
        ke = canonical_encode(key)
        for k, v in self._pairs:
            if canonical_encode(k) == ke:
                return v
        return default

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[Tuple[Value, Value]]:
        return iter(self._pairs)

    def __contains__(self, key: Value) -> bool:
        ke = canonical_encode(key)
        return any(canonical_encode(k) == ke for k, _ in self._pairs)

    def __eq__(self, other: object) -> bool:
        return type(other) is ValueMap and self._enc == other._enc

    def __hash__(self) -> int:
        return hash(self._enc)

    def __repr__(self) -> str:
        return "ValueMap({%s})" % ", ".join(f"{k!r}: {v!r}" for k, v in self._pairs)


def value_eq(a: Value, b: Value) -> bool:
    """Semantic equality: equal canonical encodings."""
    return canonical_encode(a) == canonical_encode(b)


def value_hash(v: Value) -> int:
    """64-bit digest of the canonical encoding; equal values hash equally."""
    return int.from_bytes(
        hashlib.blake2b(canonical_encode(v), digest_size=8).digest(), "big"
    )


def value_sort_key(v: Value) -> bytes:
    """Strict total order over values, for deterministic tie-breaking."""
    return canonical_encode(v)


def _read_uvarint(buf: bytes, pos: int) -> Tuple[int, int]:
    n = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ValueError("truncated varint")
        byte = buf[pos]
        pos += 1
        n |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return n, pos
        shift += 7


def _decode_at(buf: bytes, pos: int) -> Tuple[Value, int]:
    if pos >= len(buf):
        raise ValueError("truncated encoding")
    tag = buf[pos : pos + 1]
    pos += 1
    if tag == _TAG_BOOL:
        if pos >= len(buf) or buf[pos] not in (0, 1):
            raise ValueError("bad bool payload")
        return buf[pos] == 1, pos + 1
    if tag == _TAG_INT:
        if pos + 8 > len(buf):
            raise ValueError("truncated int")
        return int.from_bytes(buf[pos : pos + 8], "big", signed=True), pos + 8
    if tag == _TAG_STR:
        length, pos = _read_uvarint(buf, pos)
        if pos + length > len(buf):
            raise ValueError("truncated string")
        return buf[pos : pos + length].decode("utf-8"), pos + length
    if tag == _TAG_TUPLE:
        count, pos = _read_uvarint(buf, pos)
        items = []
        for _ in range(count):
            item, pos = _decode_at(buf, pos)
            items.append(item)
        return tuple(items), pos
    if tag == _TAG_SET:
        count, pos = _read_uvarint(buf, pos)
        items = []
        for _ in range(count):
            item, pos = _decode_at(buf, pos)
            items.append(item)
        return ValueSet(items), pos
    if tag == _TAG_MAP:
        count, pos = _read_uvarint(buf, pos)
        pairs = []
        for _ in range(count):
            k, pos = _decode_at(buf, pos)
            v, pos = _decode_at(buf, pos)
            pairs.append((k, v))
        return ValueMap(pairs), pos
    raise ValueError(f"unknown value tag: {tag!r}")


def canonical_decode(buf: bytes) -> Value:
    """Inverse of canonical_encode; raises ValueError on malformed input."""
    v, pos = _decode_at(buf, 0)
    if pos != len(buf):
        raise ValueError("trailing bytes after value")
    return v
