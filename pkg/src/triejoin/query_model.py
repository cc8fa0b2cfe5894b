"""Full conjunctive queries: parsing, Gaifman graphs and workload generators."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence


class QueryError(Exception):
    pass


class QuerySyntaxError(QueryError):
    """Raised on malformed query text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    value: int


Term = "Var | Const"


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple

    def var_indices(self) -> set:
        return {t.index for t in self.terms if isinstance(t, Var)}


@dataclass(frozen=True)
class FullCQ:
    """A projection-free conjunctive query.

    Variables are identified by dense indices in order of first appearance;
    `var_names` maps an index back to its textual name.
    """

    atoms: tuple
    var_names: tuple

    def __post_init__(self):
        if not self.atoms:
            raise QueryError("query must have at least one atom")
        used = set()
        for atom in self.atoms:
            used |= atom.var_indices()
        if used != set(range(len(self.var_names))):
            raise QueryError("every declared variable must occur in an atom")

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    def relation_arities(self) -> dict:
        arities = {}
        for atom in self.atoms:
            arities[atom.relation] = len(atom.terms)
        return arities

    def render(self) -> str:
        parts = []
        for atom in self.atoms:
            terms = ", ".join(
                self.var_names[t.index] if isinstance(t, Var) else str(t.value)
                for t in atom.terms
            )
            parts.append(f"{atom.relation}({terms})")
        return ", ".join(parts)


@dataclass
class PartialAssignment:
    """Per-variable values, `None` where unassigned."""

    values: list

    @classmethod
    def empty(cls, num_vars: int) -> "PartialAssignment":
        return cls([None] * num_vars)

    def restrict(self, positions: Sequence[int]) -> tuple:
        """Values at the given variable positions; all must be assigned."""
        out = []
        for p in positions:
            v = self.values[p]
            if v is None:
                raise ValueError(f"restriction to unassigned variable {p}")
            out.append(v)
        return tuple(out)


class Graph:
    """Undirected simple graph over integer node labels."""

    __slots__ = ("adj",)

    def __init__(self, nodes: Iterable[int], edges: Iterable[tuple] = ()):
        adj = {v: set() for v in nodes}
        for u, v in edges:
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        self.adj = {v: tuple(sorted(ns)) for v, ns in sorted(adj.items())}

    @property
    def nodes(self) -> tuple:
        return tuple(self.adj)

    def edges(self) -> list:
        return [(u, v) for u in self.adj for v in self.adj[u] if u < v]

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, v) -> bool:
        return v in self.adj

    def degree(self, v) -> int:
        return len(self.adj[v])

    def neighbors(self, v) -> tuple:
        return self.adj[v]

    def induced(self, keep: Iterable[int]) -> "Graph":
        keep = set(keep)
        return Graph(keep, ((u, v) for u in keep for v in self.adj[u] if v in keep))

    def minus(self, drop: Iterable[int]) -> "Graph":
        return self.induced(set(self.adj) - set(drop))

    def components(self) -> list:
        """Connected components as sorted node lists, ordered by smallest node."""
        seen = set()
        comps = []
        for start in self.adj:
            if start in seen:
                continue
            stack = [start]
            comp = set()
            while stack:
                v = stack.pop()
                if v in comp:
                    continue
                comp.add(v)
                stack.extend(n for n in self.adj[v] if n not in comp)
            seen |= comp
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self) <= 1 or len(self.components()) == 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.adj == other.adj

    def __repr__(self) -> str:
        return f"Graph(nodes={len(self)}, edges={len(self.edges())})"


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>-?\d+)|(?P<punct>[(),]))")


def parse_query(text: str) -> FullCQ:
    """Parse `R(a,b), S(b,1)` style query text into a FullCQ."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise QuerySyntaxError(f"unexpected character {stripped[0]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()

    def expect_punct(i, what):
        if i >= len(tokens) or tokens[i][0] != "punct" or tokens[i][1] != what:
            at = tokens[i][2] if i < len(tokens) else len(text)
            raise QuerySyntaxError(f"expected {what!r}", at)
        return i + 1

    var_ids: dict = {}
    var_names: list = []
    atoms = []
    arities: dict = {}
    i = 0
    while True:
        if i >= len(tokens) or tokens[i][0] != "name":
            at = tokens[i][2] if i < len(tokens) else len(text)
            raise QuerySyntaxError("expected relation name", at)
        rel = tokens[i][1]
        rel_pos = tokens[i][2]
        i = expect_punct(i + 1, "(")
        terms = []
        while True:
            if i >= len(tokens):
                raise QuerySyntaxError("unterminated atom", len(text))
            kind, value, at = tokens[i]
            if kind == "name":
                if value not in var_ids:
                    var_ids[value] = len(var_names)
                    var_names.append(value)
                terms.append(Var(var_ids[value]))
            elif kind == "int":
                terms.append(Const(int(value)))
            else:
                raise QuerySyntaxError("expected variable or constant", at)
            i += 1
            if i < len(tokens) and tokens[i][0] == "punct" and tokens[i][1] == ",":
                i += 1
                continue
            i = expect_punct(i, ")")
            break
        if rel in arities and arities[rel] != len(terms):
            raise QuerySyntaxError(
                f"relation {rel} used with arity {len(terms)} but previously {arities[rel]}",
                rel_pos,
            )
        arities[rel] = len(terms)
        atoms.append(Atom(rel, tuple(terms)))
        if i >= len(tokens):
            break
        if tokens[i][0] == "punct" and tokens[i][1] == ",":
            i += 1
            continue
        raise QuerySyntaxError("expected ',' between atoms", tokens[i][2])

    return FullCQ(tuple(atoms), tuple(var_names))


def gaifman_graph(q: FullCQ) -> Graph:
    """Graph on variable indices with an edge per co-occurring pair."""
    edges = []
    for atom in q.atoms:
        vs = sorted(atom.var_indices())
        edges.extend(itertools.combinations(vs, 2))
    return Graph(range(q.num_vars), edges)


def _var_name(i: int) -> str:
    if i < 26:
        return chr(ord("a") + i)
    return f"v{i}"


def _edge_query(edges: Sequence[tuple], num_vars: int) -> FullCQ:
    atoms = tuple(Atom("E", (Var(u), Var(v))) for u, v in edges)
    return FullCQ(atoms, tuple(_var_name(i) for i in range(num_vars)))


def gen_path_query(k: int) -> FullCQ:
    """k-path pattern: E(v1,v2), ..., E(vk,vk+1)."""
    if k < 1:
        raise QueryError("path length must be >= 1")
    return _edge_query([(i, i + 1) for i in range(k)], k + 1)


def gen_cycle_query(k: int) -> FullCQ:
    """k-cycle pattern, closing atom oriented E(v1,vk)."""
    if k < 3:
        raise QueryError("cycle length must be >= 3")
    edges = [(i, i + 1) for i in range(k - 1)] + [(0, k - 1)]
    return _edge_query(edges, k)


_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """The 64-bit splitmix stream; pair decisions for random patterns come
    from consecutive outputs (see README for the exact convention)."""
    x = seed & _MASK64
    while True:
        x = (x + _SPLITMIX_GAMMA) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield (z ^ (z >> 31)) & _MASK64


def gen_random_graph_query(n: int, p: float, seed: int, max_attempts: int = 10_000) -> FullCQ:
    """Connected Erdos-Renyi pattern over n variables, one atom per chosen
    unordered pair oriented low-index to high-index.

    Attempt t uses the splitmix64 stream seeded with seed + t and consumes one
    draw per pair in lexicographic pair order; a pair is an edge when
    draw / 2**64 < p. Disconnected patterns are regenerated with the next
    derived seed.
    """
    if n < 2:
        raise QueryError("random pattern needs at least 2 variables")
    if not (0.0 < p <= 1.0):
        raise QueryError("edge probability must be in (0, 1]")
    for attempt in range(max_attempts):
        stream = splitmix64(seed + attempt)
        edges = [
            (i, j)
            for (i, j), draw in zip(itertools.combinations(range(n), 2), stream)
            if draw / 2.0**64 < p
        ]
        if edges and Graph(range(n), edges).is_connected():
            return _edge_query(edges, n)
    raise QueryError(f"no connected pattern found after {max_attempts} attempts")
