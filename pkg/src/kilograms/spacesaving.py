"""Space-Saving stream summary.

Monitored items are grouped into buckets of equal count, kept in an
ascending doubly linked list, so finding the minimum and incrementing by
one are both O(1). Each monitored item carries an overestimation
``error``; for every item ``count - error <= true <= count``.

Within a bucket, items are kept in the order they arrived there, so the
eviction victim among equal minima is the least recently updated one.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple


class Entry(NamedTuple):
    ngram: bytes
    count: int
    error: int


class _Bucket:
    __slots__ = ("count", "items", "prev", "next")

    def __init__(self, count: int):
        self.count = count
        self.items: dict[bytes, None] = {}
        self.prev: _Bucket | None = None
        self.next: _Bucket | None = None


class SpaceSaving:
    def __init__(self, capacity: int, n: int | None = None):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.n = n
        self.inserted_total = 0
        self.evictions = 0
        self._error: dict[bytes, int] = {}
        self._where: dict[bytes, _Bucket] = {}
        self._buckets: dict[int, _Bucket] = {}
        self._head: _Bucket | None = None

    def __len__(self) -> int:
        return len(self._where)

    def __contains__(self, item: bytes) -> bool:
        return item in self._where

    @property
    def full(self) -> bool:
        return len(self._where) >= self.capacity

    @property
    def min_count(self) -> int:
        """Smallest monitored count, or 0 while there is free space.

        Any unmonitored item occurred at most this many times.
        """
        if not self.full or self._head is None:
            return 0
        return self._head.count

    def count(self, item: bytes) -> int:
        b = self._where.get(item)
        return 0 if b is None else b.count

    def error(self, item: bytes) -> int:
        return self._error.get(item, 0)

    def _link_after(self, new: _Bucket, prev: _Bucket | None) -> None:
        if prev is None:
            new.next = self._head
            if self._head is not None:
                self._head.prev = new
            self._head = new
        else:
            new.prev = prev
            new.next = prev.next
            if prev.next is not None:
                prev.next.prev = new
            prev.next = new
        self._buckets[new.count] = new

    def _unlink(self, b: _Bucket) -> None:
        if b.prev is not None:
            b.prev.next = b.next
        else:
            self._head = b.next
        if b.next is not None:
            b.next.prev = b.prev
        del self._buckets[b.count]

    def _place(self, item: bytes, count: int, after: _Bucket | None) -> None:
        """Put ``item`` in the bucket for ``count``, searching forward from ``after``."""
        target = self._buckets.get(count)
        if target is None:
            prev = after
            nxt = self._head if prev is None else prev.next
            while nxt is not None and nxt.count < count:
                prev, nxt = nxt, nxt.next
            target = _Bucket(count)
            self._link_after(target, prev)
        target.items[item] = None
        self._where[item] = target

    def _detach(self, item: bytes) -> _Bucket | None:
        """Remove ``item`` from its bucket; return the bucket a search may start after."""
        b = self._where.pop(item)
        del b.items[item]
        if b.items:
            return b
        prev = b.prev
        self._unlink(b)
        return prev

    def offer(self, item: bytes, weight: int = 1) -> None:
        """Count ``weight`` consecutive occurrences of ``item``."""
        if self.n is not None and len(item) != self.n:
            raise ValueError(f"item has {len(item)} bytes, expected {self.n}")
        if weight < 1:
            raise ValueError(f"weight must be >= 1, got {weight}")
        self.inserted_total += weight
        b = self._where.get(item)
        if b is not None:
            start = self._detach(item)
            self._place(item, b.count + weight, start)
            return
        if len(self._where) < self.capacity:
            self._error[item] = 0
            self._place(item, weight, None)
            return
        head = self._head
        victim = next(iter(head.items))
        floor = head.count
        self._detach(victim)
        del self._error[victim]
        self.evictions += 1
        self._error[item] = floor
        self._place(item, floor + weight, None)

    def update(self, items: Iterable[bytes]) -> None:
        for item in items:
            self.offer(item)

    def entries(self) -> list[Entry]:
        """All monitored entries ranked by count descending, then bytes ascending."""
        out = [Entry(item, b.count, self._error[item]) for item, b in self._where.items()]
        out.sort(key=lambda e: (-e.count, e.ngram))
        return out

    def top_entries(self, k: int) -> list[Entry]:
        return self.entries()[:max(k, 0)]

    def check(self) -> None:
        """Verify internal structure; raises AssertionError on corruption."""
        seen = 0
        b, prev = self._head, None
        while b is not None:
            assert b.items, "empty bucket linked"
            assert prev is None or prev.count < b.count, "buckets out of order"
            assert self._buckets[b.count] is b
            for item in b.items:
                assert self._where[item] is b
                assert 0 <= self._error[item] <= b.count
            seen += len(b.items)
            prev, b = b, b.next
        assert seen == len(self._where) == len(self._error) <= self.capacity


def merge(a: SpaceSaving, b: SpaceSaving) -> SpaceSaving:
    """Combine two summaries of disjoint streams.

    An item monitored on one side only may still have occurred up to the
    other side's ``min_count`` times there, so that amount is added to both
    its count and its error. The ``capacity`` largest counts survive; ties
    keep the lexicographically smaller item.
    """
    if a.capacity != b.capacity or a.n != b.n:
        raise ValueError(
            f"cannot merge summaries with (capacity, n) = {(a.capacity, a.n)} and {(b.capacity, b.n)}")
    ma, mb = a.min_count, b.min_count
    rows: dict[bytes, list[int]] = {}
    for item, bucket in a._where.items():
        rows[item] = [bucket.count + mb, a._error[item] + mb]
    for item, bucket in b._where.items():
        row = rows.get(item)
        if row is None:
            rows[item] = [bucket.count + ma, b._error[item] + ma]
        else:
            row[0] += bucket.count - mb
            row[1] += b._error[item] - mb
    ranked = sorted(rows.items(), key=lambda kv: (-kv[1][0], kv[0]))[: a.capacity]
    out = SpaceSaving(a.capacity, a.n)
    out.inserted_total = a.inserted_total + b.inserted_total
    out.evictions = a.evictions + b.evictions + max(0, len(rows) - a.capacity)
    # ascending order: each item joins the tail bucket or opens a new one
    tail = None
    for item, (count, error) in reversed(ranked):
        if tail is None or tail.count != count:
            bucket = _Bucket(count)
            out._link_after(bucket, tail)
            tail = bucket
        tail.items[item] = None
        out._where[item] = tail
        out._error[item] = error
    return out
