import itertools
import random

import pytest

import triejoin as tj

from conftest import brute_separators, random_connected_graph


def path_graph(n):
    return tj.Graph(range(n), [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return tj.Graph(range(n), [(i, (i + 1) % n) for i in range(n)])


class TestMinSeparator:
    def test_four_cycle_lexicographic_minimum(self):
        r = tj.min_constrained_separator(tj.SeparatorProblem(cycle_graph(4)))
        assert r.S == frozenset({0, 2})

    def test_three_path(self):
        r = tj.min_constrained_separator(tj.SeparatorProblem(path_graph(3)))
        assert r.S == frozenset({1})
        assert r.U == frozenset({0})  # component with the smallest node

    def test_three_path_excluding_the_cut(self):
        p = tj.SeparatorProblem(path_graph(3), exclude=frozenset({1}))
        assert tj.min_constrained_separator(p) is None

    def test_include_is_respected(self):
        p = tj.SeparatorProblem(path_graph(4), include=frozenset({2}))
        r = tj.min_constrained_separator(p)
        assert 2 in r.S

    def test_clique_has_no_separator(self):
        g = tj.Graph(range(4), list(itertools.combinations(range(4), 2)))
        assert tj.min_constrained_separator(tj.SeparatorProblem(g)) is None

    def test_overlapping_constraints_rejected(self):
        with pytest.raises(tj.DecompError):
            tj.SeparatorProblem(
                path_graph(3),
                include=frozenset({1}),
                exclude=frozenset({1}),
            )

    def test_randomized_minimum_matches_brute_force(self):
        rng = random.Random(4)
        for _ in range(200):
            g = random_connected_graph(rng)
            nodes = list(g.nodes)
            include = frozenset(
                v for v in nodes if rng.random() < 0.15
            )
            exclude = frozenset(
                v for v in nodes if v not in include and rng.random() < 0.15
            )
            C = frozenset(v for v in nodes if rng.random() < 0.2)
            p = tj.SeparatorProblem(g, C, include, exclude)
            feasible = [
                S
                for S in brute_separators(g, C)
                if include <= S and not (S & exclude)
            ]
            r = tj.min_constrained_separator(p)
            if not feasible:
                assert r is None
            else:
                assert len(r.S) == min(len(S) for S in feasible)
                assert include <= r.S and not (r.S & exclude)
                comps = g.minus(r.S).components()
                assert len(comps) >= 2
                assert any(not (C & set(c)) for c in comps)
                assert C <= r.S | r.U


class TestEnumeration:
    def test_four_path_order(self):
        got = list(tj.enumerate_constrained_separators(path_graph(4)))
        assert got == [
            frozenset({1}),
            frozenset({2}),
            frozenset({0, 2}),
            frozenset({1, 2}),
            frozenset({1, 3}),
        ]

    def test_constraint_filters_components(self):
        g = path_graph(4)
        for S in tj.enumerate_constrained_separators(g, C={0}):
            comps = g.minus(S).components()
            assert any(not ({0} & set(c)) for c in comps)

    def test_k4_is_empty(self):
        g = tj.Graph(range(4), list(itertools.combinations(range(4), 2)))
        assert list(tj.enumerate_constrained_separators(g)) == []

    def test_matches_brute_force_on_random_graphs(self):
        rng = random.Random(6)
        for _ in range(40):
            g = random_connected_graph(rng)
            C = frozenset() if rng.random() < 0.5 else frozenset(
                {rng.choice(list(g.nodes))}
            )
            got = list(tj.enumerate_constrained_separators(g, C))
            assert sorted(map(sorted, got)) == sorted(
                map(sorted, brute_separators(g, C))
            )
            sizes = [len(S) for S in got]
            assert sizes == sorted(sizes)
            assert len(set(got)) == len(got)

    def test_truncation_sees_the_smallest(self):
        g = cycle_graph(6)
        first = list(itertools.islice(
            tj.enumerate_constrained_separators(g), 3
        ))
        all_sizes = sorted(len(S) for S in brute_separators(g))
        assert [len(S) for S in first] == all_sizes[:3]


class TestRecursiveTD:
    def test_chooser_bottom_gives_singleton(self):
        g = tj.gaifman_graph(tj.gen_cycle_query(4))
        td = tj.recursive_td(g, frozenset(), lambda g_, C_: None)
        assert len(td) == 1 and td.bags[0] == frozenset(range(4))

    def test_four_cycle_two_bags(self):
        td = tj.generic_decompose(tj.gen_cycle_query(4))
        assert sorted(map(set, td.bags)) in (
            [{0, 1, 2}, {0, 2, 3}],
            [{0, 1, 3}, {1, 2, 3}],
        )

    def test_five_path_all_adhesions_one(self):
        q = tj.gen_path_query(5)
        td = tj.generic_decompose(q)
        assert tj.validate_td(q, td) is None
        assert all(len(a) == 1 for a in td.adhesion[1:])

    def test_triangle_singleton(self):
        td = tj.generic_decompose(tj.gen_cycle_query(3))
        assert len(td) == 1

    def test_five_cycle_max_adhesion_two(self):
        q = tj.gen_cycle_query(5)
        td = tj.generic_decompose(q)
        assert tj.validate_td(q, td) is None
        assert td.max_adhesion() == 2


class TestEnumerateTDs:
    def test_four_cycle_contains_both_separator_tds(self):
        q = tj.gen_cycle_query(4)
        tds = list(tj.enumerate_tds(q))
        families = {tuple(sorted(map(tuple, map(sorted, td.bags)))) for td in tds}
        assert ((0, 1, 2), (0, 2, 3)) in families
        assert ((0, 1, 3), (1, 2, 3)) in families
        assert all(tj.validate_td(q, td) is None for td in tds)

    def test_triangle_only_singleton(self):
        tds = list(tj.enumerate_tds(tj.gen_cycle_query(3)))
        assert len(tds) == 1 and len(tds[0]) == 1

    def test_six_path_adhesion_one_limit_ten(self):
        q = tj.gen_path_query(6)
        tds = list(tj.enumerate_tds(q, max_adhesion=1, max_tds=10))
        assert len(tds) == 10
        assert len({td.canonical() for td in tds}) == 10
        for td in tds:
            assert tj.validate_td(q, td) is None
            assert td.max_adhesion() <= 1


class TestScoring:
    def test_singleton_conventions(self):
        td = tj.singleton_td(range(5))
        s = tj.score_td(td)
        assert (s.max_adhesion, s.bag_count, s.depth) == (0, 1, 0)

    def test_path_td_beats_singleton(self):
        q = tj.gen_path_query(5)
        deco = tj.generic_decompose(q)
        assert tj.score_td(deco, q) < tj.score_td(
            tj.singleton_td(range(q.num_vars)), q
        )

    def test_skewed_adhesion_preferred(self):
        q = tj.gen_cycle_query(4)
        td_ac = tj.OrderedTD([{0, 1, 2}, {0, 2, 3}], [None, 0])
        td_bd = tj.OrderedTD([{0, 1, 3}, {1, 2, 3}], [None, 0])
        # column 0 is one value repeated: variables seen only in column 0
        # (here: a) carry the skew, so the {a,c} adhesion should win
        tuples = tuple((0, i) for i in range(20))
        ds = tj.Dataset(
            relations={"E": tj.Relation("E", 2, tuples)},
            encode={}, decode=(),
        )
        stats = tj.compute_stats(ds)
        assert tj.score_td(td_ac, q, stats) < tj.score_td(td_bd, q, stats)

    def test_best_td_is_minimum(self):
        q = tj.gen_cycle_query(5)
        tds = list(tj.enumerate_tds(q, max_tds=64))
        best = tj.best_td(q, max_tds=64)
        scores = [tj.score_td(td, q) for td in tds]
        assert tj.score_td(best, q).key() == min(s.key() for s in scores)
