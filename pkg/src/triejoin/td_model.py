"""Ordered tree decompositions: adhesions, owners, orderings, validation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .query_model import FullCQ, gaifman_graph


class TDError(Exception):
    pass


class OrderedTD:
    """Rooted ordered tree of bags over variable indices, stored in preorder.

    Construction takes bags plus a parent index per bag (None for the root,
    exactly one) and renumbers nodes into preorder, preserving the given
    child order. Adhesions and owners are derived, never supplied.
    """

    __slots__ = ("bags", "parent", "children", "adhesion")

    def __init__(self, bags: Sequence[Iterable[int]], parent: Sequence[Optional[int]]):
        if len(bags) != len(parent):
            raise TDError("bags and parent lists differ in length")
        n = len(bags)
        roots = [i for i, p in enumerate(parent) if p is None]
        if len(roots) != 1:
            raise TDError(f"expected exactly one root, found {len(roots)}")
        kids = [[] for _ in range(n)]
        for i, p in enumerate(parent):
            if p is None:
                continue
            if not (0 <= p < n) or p == i:
                raise TDError(f"node {i} has invalid parent {p}")
            kids[p].append(i)

        # renumber into preorder, keeping sibling order
        order = []
        stack = [roots[0]]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(kids[v]))
        if len(order) != n:
            raise TDError("parent links contain a cycle")
        new_id = {old: new for new, old in enumerate(order)}

        self.bags = tuple(frozenset(bags[old]) for old in order)
        self.parent = tuple(
            None if parent[old] is None else new_id[parent[old]] for old in order
        )
        self.children = tuple(
            tuple(new_id[c] for c in kids[old]) for old in order
        )
        self.adhesion = tuple(
            frozenset() if p is None else self.bags[i] & self.bags[p]
            for i, p in enumerate(self.parent)
        )

    def __len__(self) -> int:
        return len(self.bags)

    @property
    def variables(self) -> frozenset:
        out = frozenset()
        for b in self.bags:
            out |= b
        return out

    def owner(self, x: int) -> int:
        """Preorder-minimal node whose bag contains x."""
        for i, b in enumerate(self.bags):
            if x in b:
                return i
        raise TDError(f"variable {x} not in any bag")

    def owners(self) -> dict:
        out = {}
        for i, b in enumerate(self.bags):
            for x in b:
                out.setdefault(x, i)
        return out

    def subtree(self, v: int) -> list:
        """Node ids of the subtree rooted at v; contiguous in preorder."""
        out = []
        stack = [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(reversed(self.children[u]))
        return sorted(out)

    def depth(self) -> int:
        d = [0] * len(self.bags)
        for i, p in enumerate(self.parent):
            if p is not None:
                d[i] = d[p] + 1
        return max(d)

    def max_adhesion(self) -> int:
        return max((len(a) for a in self.adhesion), default=0)

    def canonical(self) -> tuple:
        """Hashable identity: bags (sorted) plus parent links, in preorder."""
        return tuple((tuple(sorted(b)), p) for b, p in zip(self.bags, self.parent))

    def __eq__(self, other) -> bool:
        return isinstance(other, OrderedTD) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return f"OrderedTD({[sorted(b) for b in self.bags]})"


def singleton_td(variables: Iterable[int]) -> OrderedTD:
    return OrderedTD([set(variables)], [None])


def validate_td(q: FullCQ, td: OrderedTD) -> Optional[str]:
    """None when td is a tree decomposition of q, else the first violation."""
    g_vars = set(range(q.num_vars))
    if not td.variables <= g_vars:
        extra = sorted(td.variables - g_vars)
        return f"bag variable {extra[0]} not in the query"
    if td.variables != g_vars:
        missing = sorted(g_vars - td.variables)
        return f"variable {q.var_names[missing[0]]} is in no bag"
    for atom in q.atoms:
        vs = atom.var_indices()
        if not any(vs <= b for b in td.bags):
            return f"atom {atom.relation}({len(atom.terms)}-ary) not covered by any bag"
    # running intersection: the nodes containing x must induce a connected subtree
    for x in sorted(td.variables):
        holders = [i for i, b in enumerate(td.bags) if x in b]
        for v in holders[1:]:
            if td.parent[v] not in holders:
                return (
                    f"variable {q.var_names[x]} violates running intersection "
                    f"at node {v}"
                )
    return None


@dataclass(frozen=True)
class VarOrdering:
    """A variable ordering together with its per-position TD bookkeeping.

    order[i] is the variable at position i. For strong compatibility the
    owners along the ordering are nondecreasing in preorder, which makes
    each subtree's owned positions one contiguous block.
    """

    order: tuple
    owner_at: tuple          # owner_at[i] = owning TD node of order[i]
    last_owned: tuple        # last_owned[v] = max position owned inside subtree of node v
    first_owned: tuple       # first position owned by node v itself, or -1

    @property
    def position(self) -> dict:
        return {x: i for i, x in enumerate(self.order)}


def _ordering_tables(td: OrderedTD, order: Sequence[int]) -> VarOrdering:
    owners = td.owners()
    owner_at = tuple(owners[x] for x in order)
    first_owned = [-1] * len(td)
    last_self = [-1] * len(td)
    for i, v in enumerate(owner_at):
        if first_owned[v] < 0:
            first_owned[v] = i
        last_self[v] = i
    last_owned = list(last_self)
    # children precede parents nowhere in preorder, so fold bottom-up by id
    for v in range(len(td) - 1, -1, -1):
        for c in td.children[v]:
            last_owned[v] = max(last_owned[v], last_owned[c])
    return VarOrdering(tuple(order), owner_at, tuple(last_owned), tuple(first_owned))


def derive_ordering(
    td: OrderedTD, within_bag_rank: Optional[Callable[[int], tuple]] = None
) -> VarOrdering:
    """Walk bags in preorder, appending each node's not-yet-seen variables.

    Strong compatibility holds by construction. within_bag_rank maps a
    variable index to a sort key for ordering the new variables of one bag;
    the default is ascending variable index.
    """
    if within_bag_rank is None:
        within_bag_rank = lambda x: x
    order = []
    seen = set()
    for b in td.bags:
        fresh = sorted((x for x in b if x not in seen), key=within_bag_rank)
        order.extend(fresh)
        seen.update(fresh)
    return _ordering_tables(td, order)


def degree_rank(q: FullCQ) -> Callable[[int], tuple]:
    """Within-bag tie rule: descending Gaifman degree, then first appearance."""
    g = gaifman_graph(q)
    return lambda x: (-g.degree(x), x)


def is_strongly_compatible(td: OrderedTD, order: Sequence[int]) -> bool:
    """True iff owner preorder positions are nondecreasing along the order."""
    if sorted(order) != sorted(td.variables):
        raise TDError("ordering is not a permutation of the TD's variables")
    owners = td.owners()
    seq = [owners[x] for x in order]
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[j] < seq[i]:  # owner(x_j) strictly preorder-before owner(x_i)
                return False
    return True


def is_compatible(td: OrderedTD, order: Sequence[int]) -> bool:
    """The weaker parent-child condition: a variable owned by a parent never
    comes after one owned by its child."""
    owners = td.owners()
    pos = {x: i for i, x in enumerate(order)}
    for x in order:
        for y in order:
            vx, vy = owners[x], owners[y]
            if td.parent[vy] == vx and pos[y] < pos[x]:
                return False
    return True


def remove_redundant_bags(td: OrderedTD) -> OrderedTD:
    """Drop bags contained in an adjacent bag, re-attaching their children."""
    bags = list(td.bags)
    parent = list(td.parent)
    children = [list(c) for c in td.children]
    alive = [True] * len(bags)
    changed = True
    while changed:
        changed = False
        for v in range(len(bags)):
            if not alive[v]:
                continue
            p = parent[v]
            if p is not None and bags[v] <= bags[p]:
                # fold v into its parent
                idx = children[p].index(v)
                children[p][idx:idx + 1] = children[v]
                for c in children[v]:
                    parent[c] = p
                alive[v] = False
                changed = True
            elif p is not None and bags[p] <= bags[v]:
                # fold the parent into v: v takes the parent's place
                gp = parent[p]
                idx = children[p].index(v)
                sibs = children[p][:idx] + children[p][idx + 1:]
                children[v] = sibs[:idx] + children[v] + sibs[idx:]
                for c in sibs:
                    parent[c] = v
                parent[v] = gp
                if gp is not None:
                    children[gp][children[gp].index(p)] = v
                alive[p] = False
                changed = True
            if changed:
                break
    keep = [i for i in range(len(bags)) if alive[i]]
    remap = {old: new for new, old in enumerate(keep)}
    return OrderedTD(
        [bags[i] for i in keep],
        [None if parent[i] is None else remap[parent[i]] for i in keep],
    )


def serialize_td(td: OrderedTD, var_names: Sequence[str]) -> str:
    lines = []
    for i, b in enumerate(td.bags):
        p = "-" if td.parent[i] is None else str(td.parent[i])
        vs = " ".join(var_names[x] for x in sorted(b))
        lines.append(f"bag {i} parent {p} vars {vs}".rstrip())
    return "\n".join(lines) + "\n"


def parse_td(text: str, var_names: Sequence[str]) -> OrderedTD:
    """Parse the one-node-per-line TD format; children follow line order."""
    name_to_idx = {n: i for i, n in enumerate(var_names)}
    ids, bags, parents = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) < 5 or toks[0] != "bag" or toks[2] != "parent" or toks[4] != "vars":
            raise TDError(f"line {lineno}: expected 'bag <id> parent <id|-> vars ...'")
        try:
            node_id = int(toks[1])
        except ValueError:
            raise TDError(f"line {lineno}: bad node id {toks[1]!r}")
        parent = None if toks[3] == "-" else int(toks[3])
        vs = set()
        for name in toks[5:]:
            if name not in name_to_idx:
                raise TDError(f"line {lineno}: unknown variable {name!r}")
            vs.add(name_to_idx[name])
        ids.append(node_id)
        bags.append(vs)
        parents.append(parent)
    if ids != list(range(len(ids))):
        raise TDError("node ids must be 0..k-1 in line order")
    return OrderedTD(bags, parents)
