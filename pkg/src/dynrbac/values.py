"""Runtime values.

A value is one of:

* ``str`` -- an element of a carrier set,
* ``tuple`` of length 2 -- a maplet ``a |-> b``,
* ``frozenset`` -- a finite set (relations are sets of maplets),
* :class:`FMap` -- a finite function, used for map-typed variables.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping


class FMap(Mapping):
    """Immutable, hashable finite function."""

    __slots__ = ("_d", "_hash")

    def __init__(self, items: Iterable[tuple] | Mapping = ()):
        self._d = dict(items)
        self._hash = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self) -> Iterator:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, FMap):
            return self._d == other._d
        if isinstance(other, Mapping):
            return self._d == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"FMap({format_value(self)})"

    def updated(self, updates: Mapping) -> FMap:
        d = dict(self._d)
        d.update(updates)
        return FMap(d)

    def relation(self) -> frozenset:
        return frozenset(self._d.items())


def as_relation(v) -> frozenset:
    if isinstance(v, FMap):
        return v.relation()
    return v


def value_key(v):
    """Total order over values, used wherever output must be deterministic."""
    if isinstance(v, str):
        return (0, v)
    if isinstance(v, tuple):
        return (1, value_key(v[0]), value_key(v[1]))
    if isinstance(v, FMap):
        return (2, tuple(sorted(value_key(p) for p in v.items())))
    return (2, tuple(sorted(value_key(x) for x in v)))


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return f"{format_value(v[0])} |-> {format_value(v[1])}"
    items = v.items() if isinstance(v, FMap) else v
    parts = [format_value(x) for x in sorted(items, key=value_key)]
    return "{" + ", ".join(parts) + "}"
