"""Cache-augmented trie join driven by an ordered tree decomposition.

Counting keeps one running counter per decomposition node (the number of
subtree matches under the current adhesion assignment) and an adhesion-keyed
cache; a hit skips the whole owned block of the node's subtree. Evaluation
produces a factorized union/product tree whose cached fragments are shared.
"""

from __future__ import annotations

import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

from .lftj import (
    COUNT_LIMIT,
    CountOverflow,
    EngineStats,
    JoinPlan,
    PlanError,
    TimeoutExceeded,
    _Run,
    _bulk_last_level,
    make_plan,
)
from .query_model import FullCQ
from .td_model import OrderedTD, VarOrdering, is_strongly_compatible
from .trie_index import Database, leapfrog_join


@dataclass(frozen=True)
class CacheConfig:
    capacity: Optional[int] = None   # entries; None = unlimited
    policy: str = "reject"           # "reject" (when full) | "lru"
    min_support: int = 1             # cache a key once seen this many times
    shadow_verify: bool = False      # recompute on hit and compare

    def __post_init__(self):
        if self.policy not in ("reject", "lru"):
            raise ValueError(f"unknown cache policy {self.policy!r}")
        if self.capacity is not None and self.capacity < 0:
            raise ValueError("capacity must be nonnegative")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    inserts: int = 0
    evictions: int = 0
    peak_entries: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class CacheTable:
    """Bounded map from (node, adhesion-key) to a count or fragment.

    Keys are per decomposition node, not per adhesion variable set: two
    sibling nodes can share an adhesion schema while rooting different
    subtrees, and conflating them would return wrong values.
    """

    def __init__(self, config: CacheConfig):
        self.config = config
        self.entries = OrderedDict()
        # support side map, insertion-ordered (FIFO eviction), bounded at
        # 4x capacity; only consulted when min_support > 1
        self.support = OrderedDict()
        self.support_cap = (
            None if config.capacity is None else 4 * config.capacity
        )
        self.stats = CacheStats()

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, node: int, key: tuple):
        k = (node, key)
        if k in self.entries:
            self.stats.hits += 1
            if self.config.policy == "lru":
                self.entries.move_to_end(k)
            return self.entries[k]
        self.stats.misses += 1
        return None

    def offer(self, node: int, key: tuple, value) -> None:
        """The caching decision point: support threshold, then capacity/policy."""
        cap = self.config.capacity
        if cap == 0:
            return
        k = (node, key)
        if self.config.min_support > 1:
            if k in self.support:
                self.support[k] += 1
            else:
                if self.support_cap is not None and len(self.support) >= self.support_cap:
                    self.support.popitem(last=False)
                self.support[k] = 1
            if self.support[k] < self.config.min_support:
                return
        if cap is not None and len(self.entries) >= cap:
            if self.config.policy == "reject":
                return
            self.entries.popitem(last=False)
            self.stats.evictions += 1
        self.entries[k] = value
        self.stats.inserts += 1
        if len(self.entries) > self.stats.peak_entries:
            self.stats.peak_entries = len(self.entries)
        assert cap is None or len(self.entries) <= cap


@dataclass(frozen=True)
class CachedPlan:
    """A join plan bound to a decomposition and strongly compatible ordering."""

    plan: JoinPlan
    td: OrderedTD
    vo: VarOrdering
    enter: tuple        # position d -> True when owner changes at d (d > 0)
    last_of: tuple      # position d -> last position owned by owner_at[d] itself
    skip_to: tuple      # position d -> first position after owner_at[d]'s subtree
    adh_pos: tuple      # node -> ordering positions of its adhesion variables
    own_last: tuple     # node -> last position it owns itself (-1 if none)


def make_cached_plan(q: FullCQ, td: OrderedTD, vo: VarOrdering) -> CachedPlan:
    if not is_strongly_compatible(td, vo.order):
        raise PlanError("decomposition is not strongly compatible with the ordering")
    if td.variables != set(range(q.num_vars)):
        raise PlanError("decomposition does not cover the query variables")
    for v in range(1, len(td)):
        if vo.first_owned[v] < 0:
            raise PlanError(
                f"decomposition node {v} owns no variable; "
                "apply remove_redundant_bags first"
            )
    plan = make_plan(q, vo.order)
    n = q.num_vars
    pos = {x: i for i, x in enumerate(vo.order)}
    own_last = [-1] * len(td)
    for d, v in enumerate(vo.owner_at):
        own_last[v] = d
    enter = tuple(
        d > 0 and vo.owner_at[d] != vo.owner_at[d - 1] for d in range(n)
    )
    last_of = tuple(d == own_last[vo.owner_at[d]] for d in range(n))
    skip_to = tuple(vo.last_owned[vo.owner_at[d]] + 1 for d in range(n))
    adh_pos = tuple(
        tuple(sorted(pos[x] for x in td.adhesion[v])) for v in range(len(td))
    )
    return CachedPlan(
        plan, td, vo, enter, last_of, skip_to, adh_pos, tuple(own_last)
    )


def cached_tj_count(
    cplan: CachedPlan,
    db: Database,
    config: Optional[CacheConfig] = None,
    use_kernel: object = "auto",
    deadline: Optional[float] = None,
) -> Tuple[int, EngineStats, CacheStats, CacheTable]:
    """|q(D)| with adhesion-keyed caching and skip-ahead on hits."""
    if config is None:
        config = CacheConfig()
    stats = EngineStats()
    t0 = time.perf_counter()

    from . import _kernel

    if (
        _kernel.eligible_cached(cplan, config, db)
        and (use_kernel is True or use_kernel == "auto")
    ):
        count, cache = _kernel.run_cached_count(cplan, db, config, stats, deadline)
        stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
        return count, stats, cache.stats, cache
    if use_kernel is True:
        raise PlanError("plan/config not eligible for the compiled kernel")

    plan = cplan.plan
    run = _Run(plan, db, stats)
    n = plan.num_vars
    cache = CacheTable(config)
    mu = [None] * n
    intrmd = [0] * len(cplan.td)

    def subtree_product(v: int) -> int:
        p = 1
        for c in cplan.td.children[v]:
            p *= intrmd[c]
        return p

    def rcjoin(d: int) -> int:
        """Number of completions of positions d..n-1 under the current prefix."""
        stats.recursive_calls += 1
        if deadline is not None and stats.recursive_calls % 16384 == 0:
            if time.perf_counter() > deadline:
                raise TimeoutExceeded()
        v = cplan.vo.owner_at[d]
        if cplan.enter[d]:
            intrmd[v] = 0
            key = tuple(mu[p] for p in cplan.adh_pos[v])
            val = cache.lookup(v, key)
            if val is not None and not config.shadow_verify:
                l1 = cplan.skip_to[d]
                sub = val if l1 == n else val * rcjoin(l1)
                intrmd[v] = val
                return sub
            shadow_val = val  # None unless verifying
        else:
            shadow_val = None
            key = None

        parts = plan.participants[d]
        for a in parts:
            run.iters[a].open()
        subtotal = 0
        bulk = _bulk_last_level(run, parts) if d == n - 1 else None
        if bulk is not None:
            stats.matches_enumerated += bulk
            subtotal = bulk
            intrmd[v] += bulk  # leaf node, empty child product
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
                    mu[d] = value
                    if d == n - 1:
                        subtotal += 1
                    else:
                        subtotal += rcjoin(d + 1)
                    if cplan.last_of[d]:
                        intrmd[v] += subtree_product(v)
                    mu[d] = None
                for a, k in reversed(descended):
                    run.undo_dups(a, k)
        for a in parts:
            run.iters[a].up()
        if subtotal >= COUNT_LIMIT:
            raise CountOverflow("count exceeds 64 bits")
        if cplan.enter[d]:
            if shadow_val is not None and intrmd[v] != shadow_val:
                raise AssertionError(
                    f"cache hit mismatch at node {v}: "
                    f"cached {shadow_val}, recomputed {intrmd[v]}"
                )
            cache.offer(v, key, intrmd[v])
        return subtotal

    total = 0
    if run.bind_constants():
        total = rcjoin(0) if n > 0 else 1
    run.flush_counters()
    stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return total, stats, cache.stats, cache


# ---------------------------------------------------------------------------
# factorized evaluation


class FRUnit:
    """The empty-schema result with exactly one (empty) tuple."""

    __slots__ = ()

    def __repr__(self):
        return "FRUnit()"


FR_UNIT = FRUnit()


class FRUnion:
    """Alternatives for one variable; each value carries the fragment for the
    positions that follow it."""

    __slots__ = ("pos", "entries")

    def __init__(self, pos: int, entries: list):
        self.pos = pos
        self.entries = entries

    def __repr__(self):
        return f"FRUnion(pos={self.pos}, width={len(self.entries)})"


class FRProduct:
    """Cross product of fragments over disjoint, consecutive position blocks."""

    __slots__ = ("parts",)

    def __init__(self, parts: tuple):
        self.parts = parts

    def __repr__(self):
        return f"FRProduct(arity={len(self.parts)})"


def fr_count(fr) -> int:
    """Distinct expanded tuples, computed as sums of products, no expansion.
    Shared (cached) fragments are counted once thanks to memoization."""
    memo = {}

    def go(node) -> int:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, FRUnit):
            c = 1
        elif isinstance(node, FRUnion):
            c = sum(go(child) for _, child in node.entries)
        else:
            c = 1
            for part in node.parts:
                c *= go(part)
        memo[key] = c
        return c

    return go(fr)


def fr_enumerate(fr, num_vars: int) -> Iterator[tuple]:
    """Expand to flat tuples (values in ordering order), lexicographically."""
    buf = [None] * num_vars

    def go(node) -> Iterator[None]:
        if isinstance(node, FRUnit):
            yield None
        elif isinstance(node, FRUnion):
            for value, child in node.entries:
                buf[node.pos] = value
                yield from go(child)
        else:
            def prod(i: int) -> Iterator[None]:
                if i == len(node.parts):
                    yield None
                else:
                    for _ in go(node.parts[i]):
                        yield from prod(i + 1)

            yield from prod(0)

    for _ in go(fr):
        yield tuple(buf)


def cached_tj_eval(
    cplan: CachedPlan, db: Database, config: Optional[CacheConfig] = None
):
    """Evaluate to a factorized result; cache hits share stored fragments."""
    if config is None:
        config = CacheConfig()
    stats = EngineStats()
    t0 = time.perf_counter()
    plan = cplan.plan
    run = _Run(plan, db, stats)
    n = plan.num_vars
    cache = CacheTable(config)
    td = cplan.td
    mu = [None] * n

    def eval_node(v: int):
        key = None
        if td.parent[v] is not None:
            key = tuple(mu[p] for p in cplan.adh_pos[v])
            frag = cache.lookup(v, key)
            if frag is not None:
                return frag
        if cplan.vo.first_owned[v] < 0:
            # only the root may own nothing (e.g. a cross-product query)
            frag = FRProduct(tuple(eval_node(c) for c in td.children[v]))
        else:
            frag = rec_var(v, cplan.vo.first_owned[v])
        if td.parent[v] is not None:
            cache.offer(v, key, frag)
        return frag

    def rec_var(v: int, d: int):
        stats.recursive_calls += 1
        parts = plan.participants[d]
        for a in parts:
            run.iters[a].open()
        entries = []
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
                if d < cplan.own_last[v]:
                    child = rec_var(v, d + 1)
                elif td.children[v]:
                    child = FRProduct(tuple(eval_node(c) for c in td.children[v]))
                else:
                    child = FR_UNIT
                entries.append((value, child))
                mu[d] = None
            for a, k in reversed(descended):
                run.undo_dups(a, k)
        for a in parts:
            run.iters[a].up()
        return FRUnion(d, entries)

    result = FR_UNIT
    if run.bind_constants():
        result = eval_node(0) if n > 0 else FR_UNIT
    else:
        result = FRUnion(0, []) if n > 0 else FRUnion(-1, [])
    run.flush_counters()
    stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return result, stats, cache.stats, cache
