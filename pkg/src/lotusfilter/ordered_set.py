"""Ordered candidate pool with O(1) average removal and cursor-based pops."""

from __future__ import annotations

from typing import Iterable


class OrderedSet:
    """Array + hash-set hybrid.

    The construction order is kept in an immutable array while a hash set
    tracks which entries are still present. remove() only touches the set
    (a shallow delete); pop() advances a cursor past deleted entries, so
    entries come out in construction order. The cursor never moves backwards,
    which bounds total pop work by the initial size.
    """

    __slots__ = ("_order", "_members", "_cursor", "skip_count")

    def __init__(self, ids: Iterable[int]):
        order = [int(i) for i in ids]
        members = set(order)
        if len(members) != len(order):
            raise ValueError("ids must be distinct")
        self._order = order
        self._members = members
        self._cursor = 0
        # cursor advances over deleted entries, for instrumentation
        self.skip_count = 0

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, i: int) -> bool:
        return i in self._members

    def pop(self) -> int:
        """Smallest-position surviving entry; removes and returns it."""
        if not self._members:
            raise IndexError("pop from empty OrderedSet")
        order = self._order
        c = self._cursor
        while order[c] not in self._members:
            c += 1
            self.skip_count += 1
        head = order[c]
        self._members.remove(head)
        self._cursor = c + 1
        return head

    def remove(self, i: int) -> None:
        """Delete i if present; absent ids are a no-op."""
        self._members.discard(i)

    def count_present(self, ids: Iterable[int]) -> int:
        """How many of the listed ids are currently in the set."""
        return len(self._members.intersection(ids))

    def remove_all(self, ids: Iterable[int]) -> None:
        """remove() for every listed id in one call."""
        self._members.difference_update(ids)

    def drain_in_order(self) -> list[int]:
        """Remaining entries in construction order; leaves the set empty."""
        out = [x for x in self._order[self._cursor:] if x in self._members]
        self._members.clear()
        self._cursor = len(self._order)
        return out
