"""Constrained graph separators, their ranked enumeration, and tree
decompositions built by recursive adhesion selection.

A C-constrained separating set S disconnects g while leaving at least one
component untouched by C. Minimum separators under forced-in/forced-out
membership constraints reduce to minimum vertex cuts (node splitting), and
ranked enumeration by increasing size follows the Lawler-Murty scheme of
partitioning the solution space with membership constraints.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from . import _kernel
from .query_model import FullCQ, Graph, gaifman_graph
from .td_model import OrderedTD, remove_redundant_bags, singleton_td, validate_td

_INF = 1 << 60


class DecompError(Exception):
    pass


@dataclass(frozen=True)
class SeparatorProblem:
    g: Graph
    C: frozenset = frozenset()
    include: frozenset = frozenset()   # nodes forced into S
    exclude: frozenset = frozenset()   # nodes forbidden from S

    def __post_init__(self):
        nodes = set(self.g.nodes)
        if self.include & self.exclude:
            raise DecompError("include and exclude sets overlap")
        for name, s in (("C", self.C), ("include", self.include),
                        ("exclude", self.exclude)):
            if not set(s) <= nodes:
                raise DecompError(f"{name} contains nodes outside the graph")


@dataclass(frozen=True)
class SeparatorResult:
    S: frozenset
    U: frozenset


def _make_result(g: Graph, C: Iterable[int], S: Iterable[int]) -> SeparatorResult:
    """Derive U from g - S: the components meeting C, or the component with
    the smallest node when none does."""
    S = frozenset(S)
    comps = g.minus(S).components()
    assert len(comps) >= 2, "S does not disconnect g"
    C = set(C)
    assert any(not (C & set(c)) for c in comps), "no component avoids C"
    hit = [c for c in comps if C & set(c)]
    if hit:
        U = frozenset(x for c in hit for x in c)
    else:
        U = frozenset(min(comps, key=min))
    assert C <= S | U
    return SeparatorResult(S, U)


def _pack_graph(g: Graph):
    nodes = list(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    nv = len(nodes)
    adj = np.zeros((nv, nv), dtype=np.uint8)
    for u, v in g.edges():
        adj[index[u], index[v]] = 1
        adj[index[v], index[u]] = 1
    return nodes, index, adj


def _mask(index: dict, s: Iterable[int], nv: int) -> np.ndarray:
    m = np.zeros(nv, dtype=np.uint8)
    for v in s:
        m[index[v]] = 1
    return m


if _kernel.HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover
    def njit(*a, **k):
        return a[0] if a and callable(a[0]) else (lambda f: f)


@njit(cache=True)
def _region_min_packed(adj, imask, xmask, cmask):
    """Minimum size of a constrained separating set with include/exclude
    masks, via min vertex cuts over witness pairs. Returns (size, S mask);
    size is -1 when the region is infeasible.

    For a witness pair (t, w): t seeds the component that must avoid C and
    w guarantees a second component. The flow network splits every node
    (capacity 1; infinite when excluded or a witness) and joins C and w to
    a super-source; the min cut is then exactly the removable part of S.
    """
    nv = adj.shape[0]
    na = 0
    for i in range(nv):
        if imask[i] == 0:
            na += 1
    best = np.int64(-1)
    best_s = np.zeros(nv, dtype=np.uint8)
    if na < 2:
        return best, best_s
    act = np.empty(na, dtype=np.int64)
    j = 0
    for i in range(nv):
        if imask[i] == 0:
            act[j] = i
            j += 1
    nn = 2 * na + 1
    cap = np.zeros((nn, nn), dtype=np.int64)
    pos = np.empty(na, dtype=np.int64)
    for ti in range(na):
        if cmask[act[ti]] == 1:
            continue
        for wi in range(na):
            if wi == ti:
                continue
            # position permutation putting t first, so t_in is matrix node 1
            p = 1
            for i in range(na):
                if i == ti:
                    pos[i] = 0
                else:
                    pos[i] = p
                    p += 1
            for a in range(nn):
                for b in range(nn):
                    cap[a, b] = 0
            for i in range(na):
                ii = 1 + 2 * pos[i]
                oo = 2 + 2 * pos[i]
                if xmask[act[i]] == 1 or i == wi or i == ti:
                    cap[ii, oo] = _INF
                else:
                    cap[ii, oo] = 1
            for i in range(na):
                for k in range(na):
                    if i != k and adj[act[i], act[k]] == 1:
                        cap[2 + 2 * pos[i], 1 + 2 * pos[k]] = _INF
            for i in range(na):
                if i != ti and (cmask[act[i]] == 1 or i == wi):
                    cap[0, 1 + 2 * pos[i]] = _INF
            flow, reach = _kernel.maxflow_mincut(cap)
            if flow >= _INF:
                continue
            if best < 0 or flow < best:
                best = flow
                for i in range(nv):
                    best_s[i] = 0
                for i in range(na):
                    if reach[1 + 2 * pos[i]] == 1 and reach[2 + 2 * pos[i]] == 0:
                        best_s[act[i]] = 1
    if best >= 0:
        for i in range(nv):
            if imask[i] == 1:
                best_s[i] = 1
        # best so far excludes the forced-in nodes
        cnt = np.int64(0)
        for i in range(nv):
            if imask[i] == 1:
                cnt += 1
        best += cnt
    return best, best_s


def _region_min(g: Graph, C, include, exclude):
    """(size, S frozenset) of the region minimum, or None if infeasible."""
    if set(include) & set(exclude):
        return None
    nodes, index, adj = _pack_graph(g)
    nv = len(nodes)
    size, smask = _region_min_packed(
        adj,
        _mask(index, include, nv),
        _mask(index, exclude, nv),
        _mask(index, set(C) - set(include), nv),
    )
    if size < 0:
        return None
    return int(size), frozenset(nodes[i] for i in range(nv) if smask[i])


def min_constrained_separator(p: SeparatorProblem) -> Optional[SeparatorResult]:
    """Lexicographically-smallest minimum separating set under the membership
    constraints, with its U side; None when the region is infeasible."""
    first = _region_min(p.g, p.C, p.include, p.exclude)
    if first is None:
        return None
    k, _ = first
    forced = set(p.include)
    for v in p.g.nodes:
        if len(forced) == k:
            break
        if v in forced or v in p.exclude:
            continue
        r = _region_min(p.g, p.C, forced | {v}, p.exclude)
        if r is not None and r[0] == k:
            forced.add(v)
    assert len(forced) == k
    return _make_result(p.g, p.C, forced)


def enumerate_constrained_separators(g: Graph, C: Iterable[int] = ()) -> Iterator[frozenset]:
    """All C-constrained separating sets, by increasing size, ascending
    lexicographic node sequence within a size class. Safe to truncate: the
    first k results are the k smallest."""
    C = frozenset(C)
    if len(g) < 2:
        return
    counter = itertools.count()
    heap = []

    def push(include, exclude):
        r = _region_min(g, C, include, exclude)
        if r is not None:
            size, S = r
            heapq.heappush(heap, (size, next(counter), S, include, exclude))

    push(frozenset(), frozenset())
    buffer = []
    cur_size = None
    while heap:
        size, _, S, include, exclude = heapq.heappop(heap)
        if cur_size is not None and size > cur_size:
            for out in sorted(buffer, key=sorted):
                yield out
            buffer = []
        cur_size = size
        buffer.append(S)
        # partition the rest of this region by first disagreement with S
        free = [v for v in g.nodes if v not in include and v not in exclude]
        inc, exc = set(include), set(exclude)
        for v in free:
            if v in S:
                push(frozenset(inc), frozenset(exc | {v}))
                inc.add(v)
            else:
                push(frozenset(inc | {v}), frozenset(exc))
                exc.add(v)
    for out in sorted(buffer, key=sorted):
        yield out


Chooser = Callable[[Graph, frozenset], Optional[SeparatorResult]]


def recursive_td(g: Graph, C: frozenset, chooser: Chooser) -> OrderedTD:
    """Decompose by adhesion selection: the chooser's S becomes the adhesion
    between the S-and-U part (decomposed with constraint C + S) and each
    remaining component (decomposed with constraint S)."""
    if len(g) == 0:
        raise DecompError("cannot decompose an empty graph")
    if not g.is_connected():
        bags = [set(C)]
        parents = [None]
        for comp in g.components():
            sub = recursive_td(g.induced(comp), C & frozenset(comp), chooser)
            off = len(bags)
            bags.extend(set(b) for b in sub.bags)
            parents.extend(0 if p is None else p + off for p in sub.parent)
        return OrderedTD(bags, parents)
    res = chooser(g, C)
    if res is None:
        return singleton_td(g.nodes)
    S, U = set(res.S), set(res.U)
    rest = g.minus(S)
    if rest.is_connected() or not any(
        not (C & set(c)) for c in rest.components()
    ):
        raise DecompError("chooser returned a non-separating set")
    top = recursive_td(g.induced(S | U), C | frozenset(S), chooser)
    bags = [set(b) for b in top.bags]
    parents = list(top.parent)
    for comp in g.minus(S | U).components():
        sub = recursive_td(g.induced(S | set(comp)), frozenset(S), chooser)
        off = len(bags)
        bags.extend(set(b) for b in sub.bags)
        parents.extend(0 if p is None else p + off for p in sub.parent)
    return OrderedTD(bags, parents)


def default_chooser(max_adhesion: int = 2) -> Chooser:
    """Smallest separator within the adhesion bound, or give up (singleton)."""

    def choose(g: Graph, C: frozenset) -> Optional[SeparatorResult]:
        if len(g) < 3:
            return None
        for S in enumerate_constrained_separators(g, C):
            if len(S) > max_adhesion:
                return None  # sizes only grow from here
            return _make_result(g, C, S)
        return None

    return choose


def generic_decompose(q: FullCQ, max_adhesion: int = 2) -> OrderedTD:
    g = gaifman_graph(q)
    td = recursive_td(g, frozenset(), default_chooser(max_adhesion))
    td = remove_redundant_bags(td)
    err = validate_td(q, td)
    assert err is None, err
    return td


def enumerate_tds(
    q: FullCQ,
    max_adhesion: int = 2,
    max_tds: Optional[int] = None,
    max_seps_per_level: int = 4,
) -> Iterator[OrderedTD]:
    """Distinct valid TDs from the cross product of separator choices at
    every recursion site, each choice drawn from the ranked enumeration
    truncated at max_seps_per_level sets within the adhesion bound."""
    g = gaifman_graph(q)

    def rec(g: Graph, C: frozenset) -> Iterator[OrderedTD]:
        if not g.is_connected():
            comps = g.components()
            subs = [list(rec(g.induced(c), C & frozenset(c))) for c in comps]
            for combo in itertools.product(*subs):
                bags = [set(C)]
                parents = [None]
                for sub in combo:
                    off = len(bags)
                    bags.extend(set(b) for b in sub.bags)
                    parents.extend(0 if p is None else p + off for p in sub.parent)
                yield OrderedTD(bags, parents)
            return
        options = []
        if len(g) >= 3:
            for S in enumerate_constrained_separators(g, C):
                if len(S) > max_adhesion or len(options) >= max_seps_per_level:
                    break
                options.append(_make_result(g, C, S))
        if not options:
            yield singleton_td(g.nodes)
            return
        for res in options:
            S, U = set(res.S), set(res.U)
            comps = g.minus(S | U).components()
            top_alts = list(rec(g.induced(S | U), C | frozenset(S)))
            comp_alts = [
                list(rec(g.induced(S | set(c)), frozenset(S))) for c in comps
            ]
            for combo in itertools.product(top_alts, *comp_alts):
                top = combo[0]
                bags = [set(b) for b in top.bags]
                parents = list(top.parent)
                for sub in combo[1:]:
                    off = len(bags)
                    bags.extend(set(b) for b in sub.bags)
                    parents.extend(0 if p is None else p + off for p in sub.parent)
                yield OrderedTD(bags, parents)

    seen = set()
    emitted = 0
    for raw in rec(g, frozenset()):
        td = remove_redundant_bags(raw)
        key = td.canonical()
        if key in seen:
            continue
        if validate_td(q, td) is not None:
            continue
        seen.add(key)
        yield td
        emitted += 1
        if max_tds is not None and emitted >= max_tds:
            return


@dataclass(frozen=True)
class TDScore:
    max_adhesion: int
    bag_count: int
    depth: int
    skew: float = 0.0

    def key(self) -> tuple:
        # any real decomposition beats the single-bag fallback (which cannot
        # cache anything); then smaller adhesions, more bags, shallower,
        # higher skew
        single = 1 if self.bag_count <= 1 else 0
        return (single, self.max_adhesion, -self.bag_count, self.depth, -self.skew)

    def __lt__(self, other: "TDScore") -> bool:
        return self.key() < other.key()


def score_td(td: OrderedTD, q: Optional[FullCQ] = None,
             stats: Optional[dict] = None) -> TDScore:
    """Heuristic ranking key; the optional stats (per-relation column
    statistics) favor adhesions over high-duplication variables."""
    skew = 0.0
    if q is not None and stats is not None:
        factors = []
        adh_vars = set()
        for a in td.adhesion:
            adh_vars |= a
        for x in adh_vars:
            for atom in q.atoms:
                for col, t in enumerate(atom.terms):
                    if getattr(t, "index", None) == x and atom.relation in stats:
                        factors.append(stats[atom.relation].duplication[col])
        if factors:
            skew = sum(factors) / len(factors)
    return TDScore(td.max_adhesion(), len(td), td.depth(), skew)


def best_td(q: FullCQ, max_adhesion: int = 2, max_tds: int = 64,
            stats: Optional[dict] = None) -> OrderedTD:
    """The top-scored decomposition among the first max_tds enumerated."""
    cands = list(enumerate_tds(q, max_adhesion=max_adhesion, max_tds=max_tds))
    if not cands:
        raise DecompError("no decomposition found")
    return min(cands, key=lambda td: score_td(td, q, stats).key())
