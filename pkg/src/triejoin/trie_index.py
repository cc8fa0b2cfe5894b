"""Sorted-array tries over relations and the seekable iterator protocol."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class TrieError(Exception):
    pass


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: tuple

    def __post_init__(self):
        for t in self.tuples:
            if len(t) != self.arity:
                raise TrieError(
                    f"relation {self.name}: tuple {t} does not match arity {self.arity}"
                )


def relation(name: str, tuples: Iterable[Sequence[int]], arity: Optional[int] = None) -> Relation:
    tuples = tuple(tuple(t) for t in tuples)
    if arity is None:
        if not tuples:
            raise TrieError(f"relation {name}: arity required for empty relation")
        arity = len(tuples[0])
    return Relation(name, arity, tuples)


class TrieIndex:
    """Nested sorted arrays: one value array per level, with per-node child
    ranges into the next level. Duplicate input tuples collapse to one path.
    """

    __slots__ = ("arity", "num_tuples", "values", "child_lo", "child_hi")

    def __init__(self, rel: Relation, attr_order: Sequence[int]):
        if sorted(attr_order) != list(range(rel.arity)):
            raise TrieError(f"attr_order {attr_order} is not a permutation of columns")
        self.arity = rel.arity
        tuples = sorted({tuple(t[i] for i in attr_order) for t in rel.tuples})
        self.num_tuples = len(tuples)

        # boundaries[l][j] = index of the first tuple of node j at level l
        boundaries = []
        prev = [0, len(tuples)] if tuples else [0]
        for level in range(self.arity):
            b = [
                i
                for i in range(len(tuples))
                if i == 0 or tuples[i][: level + 1] != tuples[i - 1][: level + 1]
            ]
            boundaries.append(b + [len(tuples)])

        self.values = []
        self.child_lo = []
        self.child_hi = []
        for level in range(self.arity):
            b = boundaries[level]
            self.values.append(
                np.array([tuples[i][level] for i in b[:-1]], dtype=np.int64)
            )
            if level + 1 < self.arity:
                nxt = boundaries[level + 1]
                lo = [bisect_left(nxt, b[j]) for j in range(len(b) - 1)]
                hi = [bisect_left(nxt, b[j + 1]) for j in range(len(b) - 1)]
                self.child_lo.append(np.array(lo, dtype=np.int64))
                self.child_hi.append(np.array(hi, dtype=np.int64))
            else:
                self.child_lo.append(np.zeros(0, dtype=np.int64))
                self.child_hi.append(np.zeros(0, dtype=np.int64))

    def paths(self):
        """All root-to-leaf paths, in sorted order."""
        out = []

        def walk(level, lo, hi, prefix):
            vals = self.values[level]
            for j in range(lo, hi):
                path = prefix + (int(vals[j]),)
                if level + 1 == self.arity:
                    out.append(path)
                else:
                    walk(level + 1, int(self.child_lo[level][j]), int(self.child_hi[level][j]), path)

        walk(0, 0, len(self.values[0]), ())
        return out


def build_trie(rel: Relation, attr_order: Sequence[int]) -> TrieIndex:
    return TrieIndex(rel, attr_order)


class IterCounters:
    """Engine-visible trie operation counters."""

    __slots__ = ("seeks", "opens", "advances")

    def __init__(self):
        self.seeks = 0
        self.opens = 0
        self.advances = 0


class TrieIterator:
    """Seekable cursor over one TrieIndex.

    depth 0 is the root (nothing open); at depth d the iterator points at a
    sibling of level d-1 or sits at-end of that sibling range.
    """

    __slots__ = ("trie", "counters", "depth", "_pos", "_hi")

    def __init__(self, trie: TrieIndex, counters: Optional[IterCounters] = None):
        self.trie = trie
        self.counters = counters if counters is not None else IterCounters()
        self.depth = 0
        self._pos = [0] * (trie.arity + 1)
        self._hi = [0] * (trie.arity + 1)

    def at_end(self) -> bool:
        assert self.depth >= 1, "at_end below root"
        return self._pos[self.depth] >= self._hi[self.depth]

    def key(self) -> int:
        assert self.depth >= 1 and not self.at_end(), "key on exhausted iterator"
        return int(self.trie.values[self.depth - 1][self._pos[self.depth]])

    def open(self) -> None:
        self.counters.opens += 1
        if self.depth == 0:
            lo, hi = 0, len(self.trie.values[0])
        else:
            assert not self.at_end(), "open on exhausted iterator"
            level = self.depth - 1
            j = self._pos[self.depth]
            lo = int(self.trie.child_lo[level][j])
            hi = int(self.trie.child_hi[level][j])
        self.depth += 1
        self._pos[self.depth] = lo
        self._hi[self.depth] = hi

    def up(self) -> None:
        assert self.depth >= 1, "up at root"
        self.depth -= 1

    def next(self) -> None:
        self.counters.advances += 1
        assert not self.at_end(), "next on exhausted iterator"
        self._pos[self.depth] += 1

    def seek(self, lower_bound: int) -> None:
        """Position at the least sibling >= lower_bound, or at-end."""
        self.counters.seeks += 1
        assert self.depth >= 1, "seek below root"
        values = self.trie.values[self.depth - 1]
        pos = self._pos[self.depth]
        hi = self._hi[self.depth]
        self._pos[self.depth] = pos + np.searchsorted(values[pos:hi], lower_bound, side="left")

    def remaining(self) -> int:
        """Number of siblings from the current position to the end."""
        return self._hi[self.depth] - self._pos[self.depth]


def leapfrog_join(iterators: Sequence[TrieIterator]):
    """Yield the strictly ascending intersection of the iterators' sibling sets.

    All iterators must already be positioned at a common level.
    """
    if not iterators:
        raise TrieError("leapfrog_join needs at least one iterator")
    if any(it.at_end() for it in iterators):
        return
    its = sorted(iterators, key=lambda it: it.key())
    k = len(its)
    p = 0
    x = its[-1].key()
    while True:
        it = its[p]
        if it.key() == x:
            yield x
            it.next()
            if it.at_end():
                return
        else:
            it.seek(x)
            if it.at_end():
                return
        x = it.key()
        p = (p + 1) % k


class Database:
    """Relation store with per-(relation, column order) trie caching."""

    def __init__(self, relations: Iterable[Relation] = ()):
        self.relations = {}
        for r in relations:
            self.add(r)
        self._tries = {}

    def add(self, rel: Relation) -> None:
        self.relations[rel.name] = rel

    def trie(self, name: str, attr_order: Sequence[int]) -> TrieIndex:
        if name not in self.relations:
            raise TrieError(f"missing relation {name!r}")
        key = (name, tuple(attr_order))
        if key not in self._tries:
            self._tries[key] = build_trie(self.relations[name], attr_order)
        return self._tries[key]

    def max_value(self) -> int:
        m = -1
        for rel in self.relations.values():
            for t in rel.tuples:
                for v in t:
                    if v > m:
                        m = v
        return m

    def min_value(self) -> int:
        m = 0
        for rel in self.relations.values():
            for t in rel.tuples:
                for v in t:
                    if v < m:
                        m = v
        return m
