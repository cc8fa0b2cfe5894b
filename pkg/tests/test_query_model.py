import random

import pytest

import triejoin as tj


MASK64 = (1 << 64) - 1


def reference_splitmix(seed):
    """Independent transcription of the 64-bit splitmix stream used for
    random pattern queries (documented in the README)."""
    x = seed & MASK64
    while True:
        x = (x + 0x9E3779B97F4A7C15) & MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield (z ^ (z >> 31)) & MASK64


class TestParse:
    def test_four_path_text(self):
        q = tj.parse_query("E(a,b), E(b,c), E(c,d)")
        assert len(q.atoms) == 3
        assert q.var_names == ("a", "b", "c", "d")

    def test_repeated_variable_is_legal(self):
        q = tj.parse_query("R(x,x)")
        assert len(q.atoms) == 1
        assert q.var_names == ("x",)
        assert q.atoms[0].terms == (tj.Var(0), tj.Var(0))

    def test_missing_comma_is_a_syntax_error(self):
        with pytest.raises(tj.QuerySyntaxError):
            tj.parse_query("E(a,b) E(b,c)")

    def test_constants_parse(self):
        q = tj.parse_query("R(1,x)")
        assert q.atoms[0].terms == (tj.Const(1), tj.Var(0))

    def test_arity_mismatch_rejected(self):
        with pytest.raises(tj.QueryError):
            tj.parse_query("R(a,b), R(a)")


class TestGaifman:
    def test_path(self):
        g = tj.gaifman_graph(tj.gen_path_query(3))
        assert sorted(g.edges()) == [(0, 1), (1, 2), (2, 3)]

    def test_cycle(self):
        g = tj.gaifman_graph(tj.gen_cycle_query(4))
        assert len(g) == 4
        assert all(g.degree(v) == 2 for v in g.nodes)

    def test_self_pair_excluded(self):
        g = tj.gaifman_graph(tj.parse_query("R(x,x)"))
        assert len(g) == 1 and g.edges() == []

    def test_idempotent_under_atom_reordering(self):
        q = tj.gen_random_graph_query(5, 0.6, 3)
        g = tj.gaifman_graph(q)
        rng = random.Random(0)
        for _ in range(5):
            atoms = list(q.atoms)
            rng.shuffle(atoms)
            q2 = tj.FullCQ(tuple(atoms), q.var_names)
            assert tj.gaifman_graph(q2) == g


class TestGenerators:
    def test_path_k4(self):
        got = tj.gen_path_query(4).render().replace(" ", "")
        assert got == "E(a,b),E(b,c),E(c,d),E(d,e)"

    def test_path_k1(self):
        assert tj.gen_path_query(1).render().replace(" ", "") == "E(a,b)"

    def test_path_k3_shape(self):
        q = tj.gen_path_query(3)
        assert len(q.atoms) == 3 and q.num_vars == 4

    def test_path_k0_error(self):
        with pytest.raises(tj.QueryError):
            tj.gen_path_query(0)

    def test_cycle_k4(self):
        got = tj.gen_cycle_query(4).render().replace(" ", "")
        assert got == "E(a,b),E(b,c),E(c,d),E(a,d)"

    def test_cycle_k3(self):
        assert tj.gen_cycle_query(3).render().replace(" ", "") == "E(a,b),E(b,c),E(a,c)"

    def test_cycle_k2_error(self):
        with pytest.raises(tj.QueryError):
            tj.gen_cycle_query(2)

    def test_cycle_degree_two(self):
        for k in range(3, 7):
            g = tj.gaifman_graph(tj.gen_cycle_query(k))
            assert all(g.degree(v) == 2 for v in g.nodes)

    def test_random_full_probability_is_clique(self):
        q = tj.gen_random_graph_query(5, 1.0, 0)
        assert len(q.atoms) == 10

    def test_random_two_nodes(self):
        got = tj.gen_random_graph_query(2, 1.0, 0).render().replace(" ", "")
        assert got == "E(a,b)"

    def test_random_matches_reference_stream(self):
        # replay the documented convention: attempt t draws from
        # splitmix(seed + t), one draw per unordered pair in lex order
        n, p, seed = 5, 0.4, 7
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        attempt = 0
        while True:
            stream = reference_splitmix(seed + attempt)
            edges = [pq for pq in pairs if next(stream) / 2.0**64 < p]
            if edges and tj.Graph(range(n), edges).is_connected():
                break
            attempt += 1
        q = tj.gen_random_graph_query(n, p, seed)
        got = [
            (a.terms[0].index, a.terms[1].index) for a in q.atoms
        ]
        assert got == edges

    def test_random_deterministic(self):
        a = tj.gen_random_graph_query(6, 0.4, 11)
        b = tj.gen_random_graph_query(6, 0.4, 11)
        assert a == b

    def test_render_parse_round_trip(self):
        def canon(q):
            # rename variables by first appearance so the comparison is
            # structural, independent of index assignment
            mapping = {}
            atoms = []
            for a in q.atoms:
                terms = []
                for t in a.terms:
                    if isinstance(t, tj.Var):
                        if t.index not in mapping:
                            mapping[t.index] = len(mapping)
                        terms.append(tj.Var(mapping[t.index]))
                    else:
                        terms.append(t)
                atoms.append(tj.Atom(a.relation, tuple(terms)))
            return tuple(atoms)

        queries = [
            tj.gen_path_query(5),
            tj.gen_cycle_query(5),
            tj.gen_random_graph_query(5, 0.5, 2),
        ]
        for q in queries:
            assert canon(tj.parse_query(q.render())) == canon(q)
