"""Vanilla trie join: worst-case-optimal count and evaluation over a
variable ordering, one leapfrog intersection per variable."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

from .query_model import Const, FullCQ, Var
from .trie_index import Database, IterCounters, TrieError, TrieIterator, leapfrog_join

COUNT_LIMIT = 2 ** 64


class PlanError(Exception):
    pass


class CountOverflow(Exception):
    pass


class TimeoutExceeded(Exception):
    pass


# One trie level of one atom: a constant filter, the first occurrence of a
# variable (a join level), or a repeated occurrence (an equality check).
@dataclass(frozen=True)
class LevelSpec:
    kind: str          # "const" | "var" | "dup"
    value: int = 0     # constant value for "const"
    pos: int = -1      # ordering position for "var"/"dup"


@dataclass(frozen=True)
class AtomAccess:
    atom_index: int
    relation: str
    attr_order: tuple        # trie column permutation
    levels: tuple            # LevelSpec per trie level
    dup_tail: dict           # ordering position -> number of dup levels after it


@dataclass(frozen=True)
class JoinPlan:
    query: FullCQ
    ordering: tuple                  # variable indices, position -> variable
    atoms: tuple                     # AtomAccess per query atom
    participants: tuple              # position -> tuple of atom indices

    @property
    def num_vars(self) -> int:
        return len(self.ordering)


def make_plan(q: FullCQ, ordering: Sequence[int]) -> JoinPlan:
    if sorted(ordering) != list(range(q.num_vars)):
        raise PlanError("ordering is not a permutation of the query variables")
    pos_of = {x: i for i, x in enumerate(ordering)}

    accesses = []
    participants = [[] for _ in range(q.num_vars)]
    for ai, atom in enumerate(q.atoms):
        first_col = {}
        keys = []
        for c, t in enumerate(atom.terms):
            if isinstance(t, Const):
                keys.append((c, (0, 0, 0, c)))
            else:
                p = pos_of[t.index]
                if t.index not in first_col:
                    first_col[t.index] = c
                    keys.append((c, (1, p, 0, c)))
                else:
                    keys.append((c, (1, p, 1, c)))
        attr_order = tuple(c for c, _ in sorted(keys, key=lambda e: e[1]))
        levels = []
        dup_tail = {}
        for c in attr_order:
            t = atom.terms[c]
            if isinstance(t, Const):
                levels.append(LevelSpec("const", value=t.value))
            elif first_col[t.index] == c:
                levels.append(LevelSpec("var", pos=pos_of[t.index]))
                participants[pos_of[t.index]].append(ai)
            else:
                p = pos_of[t.index]
                levels.append(LevelSpec("dup", pos=p))
                dup_tail[p] = dup_tail.get(p, 0) + 1
        accesses.append(
            AtomAccess(ai, atom.relation, attr_order, tuple(levels), dup_tail)
        )
    if any(not p for p in participants):
        # cannot happen for a well-formed FullCQ, but guard the invariant
        raise PlanError("a variable has no participating atom")
    return JoinPlan(q, tuple(ordering), tuple(accesses), tuple(map(tuple, participants)))


@dataclass
class EngineStats:
    recursive_calls: int = 0
    matches_enumerated: int = 0
    seeks: int = 0
    opens: int = 0
    advances: int = 0
    wall_time_ms: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class _Run:
    """Shared traversal state for one execution of a plan."""

    def __init__(self, plan: JoinPlan, db: Database, stats: EngineStats):
        self.plan = plan
        self.stats = stats
        self.counters = IterCounters()
        self.iters = [
            TrieIterator(db.trie(a.relation, a.attr_order), self.counters)
            for a in plan.atoms
        ]

    def flush_counters(self) -> None:
        self.stats.seeks = self.counters.seeks
        self.stats.opens = self.counters.opens
        self.stats.advances = self.counters.advances

    def bind_constants(self) -> bool:
        """Descend every atom's leading constant levels; False = empty result."""
        ok = True
        for acc, it in zip(self.plan.atoms, self.iters):
            for spec in acc.levels:
                if spec.kind != "const":
                    break
                it.open()
                it.seek(spec.value)
                if it.at_end() or it.key() != spec.value:
                    ok = False
                    break
            if not ok:
                break
        return ok

    def descend_dups(self, atom_index: int, pos: int, value: int) -> int:
        """Open the equality-check levels for a repeated variable.

        Returns the number of levels descended (to undo later), or -1 when the
        check fails (every opened level is already undone).
        """
        tail = self.plan.atoms[atom_index].dup_tail.get(pos, 0)
        it = self.iters[atom_index]
        for k in range(tail):
            it.open()
            it.seek(value)
            if it.at_end() or it.key() != value:
                for _ in range(k + 1):
                    it.up()
                return -1
        return tail

    def undo_dups(self, atom_index: int, descended: int) -> None:
        it = self.iters[atom_index]
        for _ in range(descended):
            it.up()


def _bulk_last_level(run: _Run, parts: tuple) -> Optional[int]:
    """Count the matches at the last position without enumerating them.

    Applicable when a single atom constrains the last variable and it has no
    equality-check tail; the iterators are assumed opened at that level.
    """
    if len(parts) != 1:
        return None
    acc = run.plan.atoms[parts[0]]
    if acc.dup_tail.get(run.plan.num_vars - 1, 0):
        return None
    return run.iters[parts[0]].remaining()


def tj_count(
    plan: JoinPlan,
    db: Database,
    use_kernel: object = "auto",
    deadline: Optional[float] = None,
) -> Tuple[int, EngineStats]:
    """|q(D)| by recursive leapfrog descent, per-variable in ordering order."""
    stats = EngineStats()
    t0 = time.perf_counter()

    from . import _kernel

    if _kernel.eligible(plan) and (use_kernel is True or use_kernel == "auto"):
        count = _kernel.run_count(plan, db, stats, deadline)
        stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
        return count, stats
    if use_kernel is True:
        raise PlanError("plan not eligible for the compiled kernel")

    run = _Run(plan, db, stats)
    n = plan.num_vars
    total = 0

    def rjoin(d: int) -> int:
        stats.recursive_calls += 1
        if deadline is not None and stats.recursive_calls % 16384 == 0:
            if time.perf_counter() > deadline:
                raise TimeoutExceeded()
        parts = plan.participants[d]
        for a in parts:
            run.iters[a].open()
        subtotal = 0
        if d == n - 1:
            bulk = _bulk_last_level(run, parts)
            if bulk is not None:
                stats.matches_enumerated += bulk
                subtotal = bulk
            else:
                for value in leapfrog_join([run.iters[a] for a in parts]):
                    stats.matches_enumerated += 1
                    descended = []
                    ok = True
                    for a in parts:
                        k = run.descend_dups(a, d, value)
                        if k < 0:
                            ok = False
                            break
                        descended.append((a, k))
                    if ok:
                        subtotal += 1
                    for a, k in reversed(descended):
                        run.undo_dups(a, k)
        else:
            for value in leapfrog_join([run.iters[a] for a in parts]):
                stats.matches_enumerated += 1
                descended = []
                ok = True
                for a in parts:
                    k = run.descend_dups(a, d, value)
                    if k < 0:
                        ok = False
                        break
                    descended.append((a, k))
                if ok:
                    subtotal += rjoin(d + 1)
                for a, k in reversed(descended):
                    run.undo_dups(a, k)
        for a in parts:
            run.iters[a].up()
        if subtotal >= COUNT_LIMIT:
            raise CountOverflow("count exceeds 64 bits")
        return subtotal

    if run.bind_constants():
        total = rjoin(0) if n > 0 else 1
    run.flush_counters()
    stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return total, stats


def tj_eval(
    plan: JoinPlan, db: Database, stats: Optional[EngineStats] = None
) -> Iterator[tuple]:
    """Stream q(D), one tuple per result, values in ordering order,
    lexicographically ascending. Nothing is materialized internally."""
    if stats is None:
        stats = EngineStats()
    run = _Run(plan, db, stats)
    n = plan.num_vars
    mu = [None] * n

    def rjoin(d: int):
        stats.recursive_calls += 1
        parts = plan.participants[d]
        for a in parts:
            run.iters[a].open()
        for value in leapfrog_join([run.iters[a] for a in parts]):
            stats.matches_enumerated += 1
            descended = []
            ok = True
            for a in parts:
                k = run.descend_dups(a, d, value)
                if k < 0:
                    ok = False
                    break
                descended.append((a, k))
            if ok:
                mu[d] = value
                if d == n - 1:
                    yield tuple(mu)
                else:
                    yield from rjoin(d + 1)
                mu[d] = None
            for a, k in reversed(descended):
                run.undo_dups(a, k)
        for a in parts:
            run.iters[a].up()

    if run.bind_constants():
        yield from rjoin(0)
    run.flush_counters()
