import random
import statistics

import numpy as np
import pytest

import triejoin as tj


class TestLoad:
    def test_directed_two_edges(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("1 2\n2 3\n")
        ds = tj.load_edge_list(f)
        assert ds.relations["E"].tuples == ((0, 1), (1, 2))
        assert ds.encode == {1: 0, 2: 1, 3: 2}
        assert ds.decode == (1, 2, 3)

    def test_undirected_doubles_tuples(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("1 2\n2 3\n")
        ds = tj.load_edge_list(f, directed=False)
        assert len(ds.relations["E"].tuples) == 4

    def test_comments_and_self_loops(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("# comment\n1 1\n")
        ds = tj.load_edge_list(f)
        assert ds.relations["E"].tuples == ()

    def test_bad_line_reports_line_number(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("1 2\noops\n")
        with pytest.raises(tj.DataError, match="2"):
            tj.load_edge_list(f)

    def test_round_trip_dictionary(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("10 20\n20 30\n10 30\n")
        ds = tj.load_edge_list(f)
        for ext, internal in ds.encode.items():
            assert ds.decode[internal] == ext

    def test_shuffle_insensitive(self, tmp_path):
        rng = random.Random(0)
        lines = [f"{rng.randrange(30)} {rng.randrange(30)}" for _ in range(60)]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("\n".join(lines) + "\n")
        shuffled = lines[:]
        rng.shuffle(shuffled)
        b.write_text("\n".join(shuffled) + "\n")
        da, db_ = tj.load_edge_list(a), tj.load_edge_list(b)
        # compare in external ids: the dictionary depends on appearance order
        ta = {(da.decode[u], da.decode[v]) for u, v in da.relations["E"].tuples}
        tb = {(db_.decode[u], db_.decode[v]) for u, v in db_.relations["E"].tuples}
        assert ta == tb


class TestZipf:
    def test_deterministic_and_clean(self):
        a = tj.gen_zipf_graph(50, 200, 1.0, 3)
        b = tj.gen_zipf_graph(50, 200, 1.0, 3)
        assert a.relations["E"].tuples == b.relations["E"].tuples
        assert len(a.relations["E"].tuples) == 200
        assert all(u != v for u, v in a.relations["E"].tuples)

    def test_zero_skew_is_uniform(self):
        ds = tj.gen_zipf_graph(100, 400, 0.0, 4)
        degrees = np.zeros(100, dtype=int)
        for u, v in ds.relations["E"].tuples:
            degrees[u] += 1
        # a uniform draw keeps the top degree near the mean, far from the
        # 10x-median blowup of the skewed case below
        assert degrees.max() <= 10 * max(1, np.median(degrees))

    def test_skewed_top_degree(self):
        ds = tj.gen_zipf_graph(500, 3000, 1.2, 1)
        degrees = {}
        for u, v in ds.relations["E"].tuples:
            degrees[u] = degrees.get(u, 0) + 1
            degrees[v] = degrees.get(v, 0) + 1
        values = sorted(degrees.values())
        median = statistics.median(values)
        assert max(values) >= 10 * median

    def test_infeasible_edge_count(self):
        with pytest.raises(tj.DataError):
            tj.gen_zipf_graph(5, 21, 1.0, 0)


class TestStats:
    def test_column_duplication(self):
        ds = tj.Dataset(
            relations={"E": tj.Relation("E", 2, ((1, 2), (1, 3)))},
            encode={}, decode=(),
        )
        s = tj.compute_stats(ds)["E"]
        assert s.rows == 2
        assert s.distinct == (1, 2)
        assert s.duplication == (2.0, 1.0)
        assert s.top_values[0][0] == (1, 2)

    def test_empty_relation_convention(self):
        ds = tj.Dataset(
            relations={"E": tj.Relation("E", 2, ())}, encode={}, decode=()
        )
        s = tj.compute_stats(ds)["E"]
        assert s.distinct == (0, 0)
        assert s.duplication == (1.0, 1.0)

    def test_zipf_frequencies_are_skewed(self):
        ds = tj.gen_zipf_graph(300, 2000, 1.2, 9)
        s = tj.compute_stats(ds)["E"]
        top = s.top_values[0]
        # frequencies nonincreasing and head much heavier than rank 16
        freqs = [f for _, f in top]
        assert freqs == sorted(freqs, reverse=True)
        assert freqs[0] >= 5 * freqs[-1]
