"""Shared fixtures and independent oracles for the test suite."""

import itertools
import random

import pytest

import triejoin as tj
from triejoin import _kernel


@pytest.fixture(scope="session", autouse=True)
def _warm_kernel():
    """Compile the numba kernels once so timed tests measure steady state."""
    if _kernel.HAVE_NUMBA:
        _kernel.warmup()


@pytest.fixture(scope="session")
def worked_example():
    """The six-variable query, its four-bag TD, and the 4-tuple database on
    which every engine must count 64."""
    q = tj.parse_query(
        "R(x1,x2), R(x2,x3), R(x2,x4), R(x3,x4), R(x3,x5), R(x4,x6)"
    )
    td = tj.OrderedTD(
        [{0, 1}, {1, 2, 3}, {2, 4}, {3, 5}],
        [None, 0, 1, 1],
    )
    db = tj.Database(
        [tj.Relation("R", 2, ((1, 1), (1, 2), (2, 1), (2, 2)))]
    )
    return q, td, db


def brute_count(q, db):
    """Nested-loop count: extend an assignment atom by atom, scanning each
    relation's tuple list. Shares no code with the join engines."""
    return sum(1 for _ in brute_eval(q, db))


def brute_eval(q, db):
    """Yield every satisfying assignment (ordered by variable index)."""
    def rec(i, env):
        if i == len(q.atoms):
            yield tuple(env[x] for x in range(q.num_vars))
            return
        atom = q.atoms[i]
        for t in db.relations[atom.relation].tuples:
            added = []
            ok = True
            for term, val in zip(atom.terms, t):
                if isinstance(term, tj.Const):
                    ok = term.value == val
                else:
                    if term.index in env:
                        ok = env[term.index] == val
                    else:
                        env[term.index] = val
                        added.append(term.index)
                if not ok:
                    break
            if ok:
                yield from rec(i + 1, env)
            for x in added:
                del env[x]

    yield from rec(0, {})


def random_instance(rng, min_vars=3, max_vars=5, max_tuples=30, max_value=7):
    """A small connected pattern query plus a random binary relation."""
    while True:
        n = rng.randint(min_vars, max_vars)
        q = tj.gen_random_graph_query(n, 0.6, rng.randrange(1 << 30))
        if q.num_vars == n:
            break
    m = rng.randint(1, max_tuples)
    tuples = {
        (rng.randint(0, max_value), rng.randint(0, max_value))
        for _ in range(m)
    }
    db = tj.Database([tj.Relation("E", 2, tuple(sorted(tuples)))])
    return q, db


def brute_separators(g, C=()):
    """Every C-constrained separating set, by exhaustive subset search."""
    nodes = sorted(g.nodes)
    C = set(C)
    out = []
    for r in range(len(nodes) + 1):
        for S in itertools.combinations(nodes, r):
            comps = g.minus(S).components()
            if len(comps) < 2:
                continue
            if any(not (C & set(c)) for c in comps):
                out.append(frozenset(S))
    return out


def random_connected_graph(rng, max_nodes=7):
    while True:
        n = rng.randint(3, max_nodes)
        edges = [
            (i, j)
            for i, j in itertools.combinations(range(n), 2)
            if rng.random() < 0.5
        ]
        g = tj.Graph(range(n), edges)
        if g.is_connected():
            return g
