"""Immutable multisets with exact integer arithmetic.

Multisets are the workhorse container of the whole package: markings count
tokens per place, colored places hold value multisets, and event logs are
multisets of traces. Arithmetic is exact; a difference that would drive a
count negative raises instead of clamping.
"""

from __future__ import annotations

from typing import Any, Dict, Hashable, Iterable, Iterator, Mapping, Tuple


def sort_key(value: Any) -> Tuple[str, str]:
    """Total, deterministic order over heterogeneous hashable values.

    Used for canonical serialization and deterministic search order; the
    order itself carries no meaning.
    """
    return (value.__class__.__name__, repr(value))


class MultisetUnderflow(ValueError):
    """A multiset difference would make some multiplicity negative."""


class Multiset:
    """Finite multiset over hashable elements."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, items: Iterable[Hashable] = ()):
        counts: Dict[Hashable, int] = {}
        for x in items:
            counts[x] = counts.get(x, 0) + 1
        self._counts = counts
        self._hash: int | None = None

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int]) -> "Multiset":
        ms = cls.__new__(cls)
        clean: Dict[Hashable, int] = {}
        for x, n in counts.items():
            if n < 0:
                raise ValueError(f"negative multiplicity {n!r} for {x!r}")
            if n:
                clean[x] = int(n)
        ms._counts = clean
        ms._hash = None
        return ms

    def count(self, x: Hashable) -> int:
        return self._counts.get(x, 0)

    def support(self) -> Tuple[Hashable, ...]:
        """Distinct elements in canonical order."""
        return tuple(sorted(self._counts, key=sort_key))

    def items(self) -> Tuple[Tuple[Hashable, int], ...]:
        return tuple((x, self._counts[x]) for x in self.support())

    def total(self) -> int:
        return sum(self._counts.values())

    def __len__(self) -> int:
        return self.total()

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __contains__(self, x: Hashable) -> bool:
        return x in self._counts

    def __iter__(self) -> Iterator[Hashable]:
        for x, n in self.items():
            for _ in range(n):
                yield x

    def __add__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._counts)
        for x, n in other._counts.items():
            counts[x] = counts.get(x, 0) + n
        return Multiset.from_counts(counts)

    def __sub__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._counts)
        for x, n in other._counts.items():
            have = counts.get(x, 0)
            if have < n:
                raise MultisetUnderflow(
                    f"cannot remove {n} of {x!r}, only {have} present"
                )
            counts[x] = have - n
        return Multiset.from_counts(counts)

    def __le__(self, other: "Multiset") -> bool:
        return all(n <= other.count(x) for x, n in self._counts.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.items())
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{x!r}: {n}" for x, n in self.items())
        return "Multiset({%s})" % inner


EMPTY = Multiset()
