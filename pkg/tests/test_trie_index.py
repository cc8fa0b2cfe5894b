import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import triejoin as tj


def unary_iter(values):
    rel = tj.Relation("A", 1, tuple((v,) for v in values))
    it = tj.TrieIterator(tj.build_trie(rel, [0]))
    it.open()
    return it


def level_keys(it):
    out = []
    while not it.at_end():
        out.append(it.key())
        it.next()
    return out


class TestBuild:
    def test_complete_two_by_two(self):
        rel = tj.Relation("R", 2, ((1, 1), (1, 2), (2, 1), (2, 2)))
        trie = tj.build_trie(rel, [0, 1])
        it = tj.TrieIterator(trie)
        it.open()
        assert it.key() == 1
        it.open()
        assert level_keys(it) == [1, 2]
        it.up()
        it.next()
        assert it.key() == 2
        it.open()
        assert level_keys(it) == [1, 2]

    def test_empty_relation(self):
        trie = tj.build_trie(tj.Relation("R", 2, ()), [0, 1])
        it = tj.TrieIterator(trie)
        it.open()
        assert it.at_end()

    def test_reversed_column_order(self):
        rel = tj.Relation("R", 2, ((3, 9), (1, 9)))
        trie = tj.build_trie(rel, [1, 0])
        it = tj.TrieIterator(trie)
        it.open()
        assert level_keys(it) == [9]
        it = tj.TrieIterator(trie)
        it.open()
        it.open()
        assert level_keys(it) == [1, 3]

    def test_duplicates_are_set_semantics(self):
        rel = tj.Relation("R", 1, ((2,), (2,), (1,)))
        assert list(tj.build_trie(rel, [0]).paths()) == [(1,), (2,)]


class TestIterator:
    def test_seek_exact(self):
        it = unary_iter([2, 5, 8])
        it.seek(5)
        assert it.key() == 5

    def test_seek_past_end(self):
        it = unary_iter([2, 5, 8])
        it.seek(9)
        assert it.at_end()

    def test_seek_then_next(self):
        it = unary_iter([2, 5, 8])
        it.seek(3)
        assert it.key() == 5
        it.next()
        assert it.key() == 8

    def test_seek_monotone_never_moves_back(self):
        rng = random.Random(7)
        for _ in range(50):
            values = sorted(random.Random(rng.random()).sample(range(100), 12))
            it = unary_iter(values)
            prev = it.key()
            bound = 0
            while not it.at_end():
                bound += rng.randint(0, 30)
                if bound <= it.key():
                    bound = it.key()
                it.seek(bound)
                if it.at_end():
                    break
                assert it.key() >= prev
                prev = it.key()

    def test_up_restores_parent(self):
        rel = tj.Relation("R", 2, ((1, 5), (2, 6)))
        it = tj.TrieIterator(tj.build_trie(rel, [0, 1]))
        it.open()
        it.next()
        it.open()
        assert it.key() == 6
        it.up()
        assert it.key() == 2


class TestLeapfrog:
    def test_three_way_example(self):
        its = [unary_iter(v) for v in ([1, 3, 5], [3, 4, 5], [0, 3, 5, 9])]
        assert list(tj.leapfrog_join(its)) == [3, 5]

    def test_single_iterator(self):
        assert list(tj.leapfrog_join([unary_iter([2, 4, 6])])) == [2, 4, 6]

    def test_disjoint(self):
        its = [unary_iter([1, 2]), unary_iter([3, 4])]
        assert list(tj.leapfrog_join(its)) == []

    def test_matches_set_intersection_randomized(self):
        rng = random.Random(13)
        for _ in range(1000):
            sets = [
                sorted(rng.sample(range(40), rng.randint(1, 15)))
                for _ in range(rng.randint(1, 4))
            ]
            got = list(tj.leapfrog_join([unary_iter(s) for s in sets]))
            want = sorted(set.intersection(*map(set, sets)))
            assert got == want


@settings(max_examples=200, deadline=None)
@given(
    st.sets(
        st.tuples(st.integers(0, 9), st.integers(0, 9), st.integers(0, 9)),
        min_size=0,
        max_size=25,
    ),
    st.permutations([0, 1, 2]),
)
def test_paths_bijection(tuples, order):
    """Root-to-leaf paths reproduce the tuple set permuted by attr_order."""
    rel = tj.Relation("R", 3, tuple(tuples))
    trie = tj.build_trie(rel, list(order))
    want = sorted({tuple(t[i] for i in order) for t in tuples})
    assert list(trie.paths()) == want
