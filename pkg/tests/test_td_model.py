import itertools

import pytest

import triejoin as tj


@pytest.fixture
def six_var_query(worked_example):
    return worked_example[0]


@pytest.fixture
def six_var_td(worked_example):
    return worked_example[1]


class TestValidate:
    def test_worked_example_td_is_valid(self, six_var_query, six_var_td):
        assert tj.validate_td(six_var_query, six_var_td) is None

    def test_triangle_two_bags_violates_coverage(self):
        q = tj.gen_cycle_query(3)
        td = tj.OrderedTD([{0, 1}, {1, 2}], [None, 0])
        report = tj.validate_td(q, td)
        assert report is not None and "not covered" in report

    def test_singleton_always_valid(self):
        for q in (tj.gen_path_query(4), tj.gen_cycle_query(5)):
            td = tj.singleton_td(range(q.num_vars))
            assert tj.validate_td(q, td) is None

    def test_running_intersection_violation(self):
        q = tj.gen_path_query(3)
        td = tj.OrderedTD([{0, 1}, {1, 2}, {2, 3, 0}], [None, 0, 1])
        report = tj.validate_td(q, td)
        assert report is not None


class TestDeriveOrdering:
    def test_worked_example_block_structure(self, six_var_td):
        vo = tj.derive_ordering(six_var_td)
        # owned blocks follow preorder: {x1,x2} | {x3,x4} | {x5} | {x6}
        assert vo.order == (0, 1, 2, 3, 4, 5)
        assert vo.owner_at == (0, 0, 1, 1, 2, 3)
        assert tj.is_strongly_compatible(six_var_td, vo.order)

    def test_singleton_is_a_permutation(self):
        td = tj.singleton_td(range(5))
        vo = tj.derive_ordering(td)
        assert sorted(vo.order) == list(range(5))

    def test_path_td_first_appearance(self):
        td = tj.OrderedTD([{0, 1}, {1, 2}, {2, 3}], [None, 0, 1])
        vo = tj.derive_ordering(td)
        assert vo.order == (0, 1, 2, 3)

    def test_adhesion_precedes_owned_block(self, six_var_td):
        vo = tj.derive_ordering(six_var_td)
        pos = vo.position
        for v in range(1, len(six_var_td)):
            owned = [i for i, o in enumerate(vo.owner_at) if o == v]
            for x in six_var_td.adhesion[v]:
                assert all(pos[x] < i for i in owned)

    def test_owned_positions_contiguous_per_subtree(self, six_var_td):
        vo = tj.derive_ordering(six_var_td)
        for v in range(len(six_var_td)):
            sub = six_var_td.subtree(v)
            positions = sorted(
                i for i, o in enumerate(vo.owner_at) if o in sub
            )
            assert positions == list(
                range(positions[0], positions[0] + len(positions))
            )
            assert positions[-1] == vo.last_owned[v]


class TestCompatibility:
    def test_derived_is_strongly_compatible(self, six_var_td):
        vo = tj.derive_ordering(six_var_td)
        assert tj.is_strongly_compatible(six_var_td, vo.order)

    def test_swap_across_owners_breaks_it(self, six_var_td):
        # x3 before x2: owner(x2)=root precedes owner(x3)=node 1
        assert not tj.is_strongly_compatible(six_var_td, (0, 2, 1, 3, 4, 5))

    def test_singleton_accepts_any_order(self):
        td = tj.singleton_td(range(4))
        for order in itertools.permutations(range(4)):
            assert tj.is_strongly_compatible(td, order)

    def test_non_permutation_rejected(self, six_var_td):
        with pytest.raises(tj.TDError):
            tj.is_strongly_compatible(six_var_td, (0, 1, 2))

    def test_strong_implies_weak(self):
        q = tj.gen_cycle_query(5)
        for td in tj.enumerate_tds(q, max_tds=8):
            order = tj.derive_ordering(td).order
            assert tj.is_strongly_compatible(td, order)
            assert tj.is_compatible(td, order)


class TestRedundantBags:
    def test_contained_child_removed(self):
        td = tj.OrderedTD([{0, 1, 2}, {0, 1}], [None, 0])
        out = tj.remove_redundant_bags(td)
        assert len(out) == 1 and out.bags[0] == {0, 1, 2}

    def test_no_containment_is_identity(self, six_var_td):
        out = tj.remove_redundant_bags(six_var_td)
        assert out.canonical() == six_var_td.canonical()

    def test_chain_reparenting(self):
        td = tj.OrderedTD([{0, 1, 2}, {0, 1}, {0, 3}], [None, 0, 1])
        out = tj.remove_redundant_bags(td)
        assert [set(b) for b in out.bags] == [{0, 1, 2}, {0, 3}]
        assert out.parent == (None, 0)
        q = tj.parse_query("R(a,b,c), S(a,d)")
        assert tj.validate_td(q, out) is None


class TestSerialization:
    def test_round_trip(self, six_var_query, six_var_td):
        text = tj.serialize_td(six_var_td, six_var_query.var_names)
        back = tj.parse_td(text, six_var_query.var_names)
        assert back.canonical() == six_var_td.canonical()

    def test_parse_rejects_bad_ids(self):
        with pytest.raises(tj.TDError):
            tj.parse_td("bag 1 parent - vars a b", ("a", "b"))
