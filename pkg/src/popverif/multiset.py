"""Immutable multisets over strings.

Configurations (agent counts per state) and inputs (agent counts per symbol)
are both multisets; all step semantics reduce to multiset arithmetic.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Union

MultisetLike = Union["Multiset", Mapping[str, int], Iterable[str]]


class Multiset:
    """A frozen mapping element -> positive count; absent means zero."""

    __slots__ = ("_items", "_total", "_hash")

    def __init__(self, counts: MultisetLike = ()) -> None:
        acc: dict[str, int] = {}
        if isinstance(counts, Multiset):
            acc = dict(counts._items)
        elif isinstance(counts, Mapping):
            for k, v in counts.items():
                v = int(v)
                if v < 0:
                    raise ValueError(f"negative count for {k!r}: {v}")
                if v:
                    acc[k] = acc.get(k, 0) + v
        else:
            for k in counts:
                acc[k] = acc.get(k, 0) + 1
        self._items: tuple[tuple[str, int], ...] = tuple(sorted(acc.items()))
        self._total = sum(acc.values())
        self._hash = hash(self._items)

    @staticmethod
    def of(*elements: str) -> "Multiset":
        return Multiset(elements)

    # -- access ------------------------------------------------------------

    def __getitem__(self, key: str) -> int:
        for k, v in self._items:
            if k == key:
                return v
        return 0

    def get(self, key: str, default: int = 0) -> int:
        v = self[key]
        return v if v else default

    def items(self) -> tuple[tuple[str, int], ...]:
        return self._items

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._items)

    @property
    def total(self) -> int:
        return self._total

    def __len__(self) -> int:
        return self._total

    def __iter__(self) -> Iterator[str]:
        for k, _ in self._items:
            yield k

    def __bool__(self) -> bool:
        return bool(self._items)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Multiset") -> "Multiset":
        acc = dict(self._items)
        for k, v in other._items:
            acc[k] = acc.get(k, 0) + v
        return Multiset(acc)

    def saturating_sub(self, other: "Multiset") -> "Multiset":
        """Pointwise max(self - other, 0)."""
        acc = dict(self._items)
        for k, v in other._items:
            n = acc.get(k, 0) - v
            if n > 0:
                acc[k] = n
            else:
                acc.pop(k, None)
        return Multiset(acc)

    def __sub__(self, other: "Multiset") -> "Multiset":
        """Exact difference; raises if other is not contained in self."""
        acc = dict(self._items)
        for k, v in other._items:
            n = acc.get(k, 0) - v
            if n < 0:
                raise ValueError(f"multiset difference would be negative at {k!r}")
            if n:
                acc[k] = n
            else:
                acc.pop(k, None)
        return Multiset(acc)

    def __ge__(self, other: "Multiset") -> bool:
        return all(self[k] >= v for k, v in other._items)

    def __le__(self, other: "Multiset") -> bool:
        return other.__ge__(self)

    # -- identity ------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}:{v}" for k, v in self._items)
        return f"{{{inner}}}"

    def to_dict(self) -> dict[str, int]:
        return dict(self._items)
