"""Yannakakis over a tree decomposition: per-bag worst-case-optimal joins,
two-pass semijoin reduction, and count/eval combination along the tree."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from .lftj import EngineStats, make_plan, tj_eval
from .query_model import Atom, FullCQ, Var
from .td_model import OrderedTD, VarOrdering, derive_ordering
from .trie_index import Database, Relation


class YTDError(Exception):
    pass


@dataclass
class BagRelation:
    node: int
    schema: tuple        # bag variables, adhesion variables first
    tuples: set          # set of value tuples over the schema

    def project_positions(self, variables) -> tuple:
        return tuple(self.schema.index(x) for x in variables)


@dataclass
class YTDStats:
    peak_intermediate_tuples: int = 0
    semijoin_passes: int = 0
    wall_time_ms: float = 0.0
    bag_engine: EngineStats = field(default_factory=EngineStats)


def _bag_schema(td: OrderedTD, vo: VarOrdering, v: int) -> tuple:
    """Bag variables with the adhesion first, both in ordering order."""
    pos = vo.position
    adhesion = sorted(td.adhesion[v], key=pos.get)
    rest = sorted(td.bags[v] - td.adhesion[v], key=pos.get)
    return tuple(adhesion + rest)


def _var_domain(q: FullCQ, db: Database, x: int) -> tuple:
    """Values variable x can take: the intersection of the distinct values of
    every column position where x occurs."""
    vals = None
    for atom in q.atoms:
        for col, t in enumerate(atom.terms):
            if isinstance(t, Var) and t.index == x:
                colvals = {tp[col] for tp in db.relations[atom.relation].tuples}
                vals = colvals if vals is None else vals & colvals
    if vals is None:
        raise YTDError(f"variable {q.var_names[x]} occurs in no atom")
    return tuple(sorted(vals))


def _prepare_bags(q: FullCQ, td: OrderedTD, db: Database):
    """Per-bag atom lists plus a database extended with unary domain guards.

    A bag introduced as a graph separator need not contain any atom of the
    query; its variables are then constrained only through the adhesions, and
    a per-variable domain guard keeps the bag relation finite and sound (the
    guard is implied by the atoms in the other bags).
    """
    guards: Dict[str, Relation] = {}
    bag_atoms = []
    for v in range(len(td)):
        bag = td.bags[v]
        atoms = [a for a in q.atoms if a.var_indices() <= bag]
        covered = set()
        for a in atoms:
            covered |= a.var_indices()
        for x in sorted(bag - covered):
            name = f"__dom_{q.var_names[x]}"
            if name not in guards:
                guards[name] = Relation(
                    name, 1, tuple((val,) for val in _var_domain(q, db, x))
                )
            atoms.append(Atom(name, (Var(x),)))
        bag_atoms.append(tuple(atoms))
    db2 = Database(list(db.relations.values()) + list(guards.values()))
    return db2, bag_atoms


def _compute_bag(
    q: FullCQ, db: Database, td: OrderedTD, vo: VarOrdering, v: int,
    atoms: tuple, stats: YTDStats,
) -> BagRelation:
    """Join the bag's atoms (plus any domain guards), worst-case optimally."""
    schema = _bag_schema(td, vo, v)
    # sub-query over the bag, evaluated in schema order
    remap = {x: i for i, x in enumerate(schema)}
    sub_atoms = tuple(
        Atom(a.relation, tuple(
            Var(remap[t.index]) if isinstance(t, Var) else t for t in a.terms
        ))
        for a in atoms
    )
    sub_q = FullCQ(sub_atoms, tuple(q.var_names[x] for x in schema))
    plan = make_plan(sub_q, list(range(len(schema))))
    tuples = set(tj_eval(plan, db, stats.bag_engine))
    stats.peak_intermediate_tuples = max(
        stats.peak_intermediate_tuples, len(tuples)
    )
    return BagRelation(v, schema, tuples)


def _semijoin(parent: BagRelation, child: BagRelation, adhesion: tuple,
              reduce_parent: bool) -> None:
    """Filter one side to the adhesion values present on the other."""
    ppos = parent.project_positions(adhesion)
    cpos = child.project_positions(adhesion)
    if reduce_parent:
        keys = {tuple(t[i] for i in cpos) for t in child.tuples}
        parent.tuples = {
            t for t in parent.tuples if tuple(t[i] for i in ppos) in keys
        }
    else:
        keys = {tuple(t[i] for i in ppos) for t in parent.tuples}
        child.tuples = {
            t for t in child.tuples if tuple(t[i] for i in cpos) in keys
        }


def _reduce(td: OrderedTD, vo: VarOrdering, bags: List[BagRelation],
            stats: YTDStats) -> None:
    pos = vo.position
    order = list(range(len(td)))
    # leaves to root, then root to leaves
    for v in reversed(order):
        p = td.parent[v]
        if p is not None:
            adhesion = tuple(sorted(td.adhesion[v], key=pos.get))
            _semijoin(bags[p], bags[v], adhesion, reduce_parent=True)
    stats.semijoin_passes += 1
    for v in order:
        p = td.parent[v]
        if p is not None:
            adhesion = tuple(sorted(td.adhesion[v], key=pos.get))
            _semijoin(bags[p], bags[v], adhesion, reduce_parent=False)
    stats.semijoin_passes += 1


def _two_bag_count(q, db, td, vo, bag_atoms, stats) -> int:
    """Two-bag decompositions are a single pairwise join, no reduction."""
    a, b = (_compute_bag(q, db, td, vo, v, bag_atoms[v], stats) for v in (0, 1))
    pos = vo.position
    adhesion = tuple(sorted(td.adhesion[1], key=pos.get))
    apos = a.project_positions(adhesion)
    bpos = b.project_positions(adhesion)
    groups: Dict[tuple, int] = {}
    for t in b.tuples:
        k = tuple(t[i] for i in bpos)
        groups[k] = groups.get(k, 0) + 1
    return sum(groups.get(tuple(t[i] for i in apos), 0) for t in a.tuples)


def ytd_count(
    q: FullCQ, td: OrderedTD, db: Database, vo: Optional[VarOrdering] = None
) -> Tuple[int, YTDStats]:
    """|q(D)| by per-bag joins, semijoin reduction, and a bottom-up count
    combination grouped by adhesion keys."""
    stats = YTDStats()
    t0 = time.perf_counter()
    if vo is None:
        vo = derive_ordering(td)
    db2, bag_atoms = _prepare_bags(q, td, db)
    if len(td) == 2:
        total = _two_bag_count(q, db2, td, vo, bag_atoms, stats)
        stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
        return total, stats
    bags = [
        _compute_bag(q, db2, td, vo, v, bag_atoms[v], stats)
        for v in range(len(td))
    ]
    if len(td) > 1:
        _reduce(td, vo, bags, stats)
    pos = vo.position

    # counts[v] maps an adhesion key of v to the number of subtree matches
    counts: List[Dict[tuple, int]] = [dict() for _ in range(len(td))]
    for v in reversed(range(len(td))):
        rel = bags[v]
        adh = tuple(sorted(td.adhesion[v], key=pos.get))
        apos = rel.project_positions(adh)
        acc = counts[v]
        child_info = [
            (c, rel.project_positions(
                tuple(sorted(td.adhesion[c], key=pos.get))))
            for c in td.children[v]
        ]
        for t in rel.tuples:
            prod = 1
            for c, cpos in child_info:
                prod *= counts[c].get(tuple(t[i] for i in cpos), 0)
                if prod == 0:
                    break
            if prod:
                k = tuple(t[i] for i in apos)
                acc[k] = acc.get(k, 0) + prod
    total = counts[0].get((), 0)
    stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return total, stats


def ytd_eval(
    q: FullCQ, td: OrderedTD, db: Database, vo: Optional[VarOrdering] = None
) -> Iterator[tuple]:
    """Stream q(D) (values in ordering order) by joining the reduced bag
    relations from the root downward."""
    if vo is None:
        vo = derive_ordering(td)
    stats = YTDStats()
    db2, bag_atoms = _prepare_bags(q, td, db)
    bags = [
        _compute_bag(q, db2, td, vo, v, bag_atoms[v], stats)
        for v in range(len(td))
    ]
    if len(td) > 1:
        _reduce(td, vo, bags, stats)
    pos = vo.position
    n = len(vo.order)

    # index each non-root bag by its adhesion key
    index: List[Dict[tuple, list]] = [dict() for _ in range(len(td))]
    for v in range(1, len(td)):
        adh = tuple(sorted(td.adhesion[v], key=pos.get))
        apos = bags[v].project_positions(adh)
        for t in bags[v].tuples:
            index[v].setdefault(tuple(t[i] for i in apos), []).append(t)

    assignment = [None] * n

    def fill(v: int, t: tuple):
        for x, val in zip(bags[v].schema, t):
            assignment[pos[x]] = val

    def walk(order_nodes: list, i: int) -> Iterator[tuple]:
        if i == len(order_nodes):
            yield tuple(assignment)
            return
        v = order_nodes[i]
        adh = tuple(sorted(td.adhesion[v], key=pos.get))
        key = tuple(assignment[pos[x]] for x in adh)
        for t in index[v].get(key, ()):
            fill(v, t)
            yield from walk(order_nodes, i + 1)

    nodes_below_root = list(range(1, len(td)))
    for t0 in sorted(bags[0].tuples):
        fill(0, t0)
        yield from walk(nodes_below_root, 0)
