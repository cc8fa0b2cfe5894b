"""Dataset ingestion and synthesis: edge lists with dictionary encoding,
skewed random graphs, and per-column relation statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

from .trie_index import Relation


class DataError(Exception):
    pass


@dataclass
class Dataset:
    relations: Dict[str, Relation]
    encode: Dict[int, int]            # external id -> dense internal id
    decode: tuple                     # internal id -> external id
    source: Optional[str] = None
    directed: bool = True
    rows_read: int = 0

    def relation_list(self):
        return list(self.relations.values())


def _encode_pairs(pairs, name: str, source, directed, rows_read) -> Dataset:
    encode = {}
    decode = []
    out = []
    for u, v in pairs:
        for x in (u, v):
            if x not in encode:
                encode[x] = len(decode)
                decode.append(x)
        out.append((encode[u], encode[v]))
    rel = Relation(name, 2, tuple(sorted(set(out))))
    return Dataset({name: rel}, encode, tuple(decode), source, directed, rows_read)


def load_edge_list(
    path,
    directed: bool = True,
    dedup: bool = True,
    drop_self_loops: bool = True,
    name: str = "E",
) -> Dataset:
    """Read a whitespace-separated edge list ('#' lines are comments) into a
    binary relation over dense internal ids."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}")
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected two integers")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected two integers")
        pairs.append((u, v))
    rows = len(pairs)
    if drop_self_loops:
        pairs = [(u, v) for u, v in pairs if u != v]
    if not directed:
        pairs = [p for uv in pairs for p in (uv, (uv[1], uv[0]))]
    if not dedup:
        # relation storage is set-semantics regardless; the flag only matters
        # for the row count reported in provenance
        pass
    return _encode_pairs(pairs, name, str(path), directed, rows)


def gen_zipf_graph(
    nodes: int, edges: int, skew_exponent: float, seed: int, name: str = "E"
) -> Dataset:
    """Directed random graph whose endpoints follow a Zipf(skew_exponent)
    distribution over node ranks; no self-loops, distinct edges."""
    if nodes <= 0 or edges <= 0:
        raise DataError("nodes and edges must be positive")
    if skew_exponent < 0:
        raise DataError("skew exponent must be nonnegative")
    if edges > nodes * (nodes - 1):
        raise DataError(
            f"cannot place {edges} distinct directed edges on {nodes} nodes"
        )
    weights = 1.0 / np.arange(1, nodes + 1) ** skew_exponent
    p = weights / weights.sum()
    rng = np.random.default_rng(seed)
    chosen = set()
    while len(chosen) < edges:
        u, v = rng.choice(nodes, p=p), rng.choice(nodes, p=p)
        if u != v:
            chosen.add((int(u), int(v)))
    rel = Relation(name, 2, tuple(sorted(chosen)))
    ds = Dataset(
        {name: rel},
        {i: i for i in range(nodes)},
        tuple(range(nodes)),
        source=f"zipf({nodes},{edges},{skew_exponent},seed={seed})",
        directed=True,
        rows_read=edges,
    )
    return ds


TOP_K = 16


@dataclass
class RelationStats:
    rows: int
    distinct: tuple                   # per-column distinct count
    duplication: tuple                # per-column rows / distinct (>= 1)
    top_values: tuple                 # per-column [(value, frequency)] top-16


def compute_stats(dataset: Dataset) -> Dict[str, RelationStats]:
    out = {}
    for name, rel in dataset.relations.items():
        rows = len(rel.tuples)
        distinct, dup, tops = [], [], []
        for col in range(rel.arity):
            counts = Counter(t[col] for t in rel.tuples)
            d = len(counts)
            distinct.append(d)
            dup.append(rows / d if d else 1.0)
            tops.append(tuple(counts.most_common(TOP_K)))
        out[name] = RelationStats(rows, tuple(distinct), tuple(dup), tuple(tops))
    return out
