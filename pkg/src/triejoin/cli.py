"""Command-line front end: count/eval with a chosen engine, decomposition
listing, workload generation, and a benchmark harness."""

from __future__ import annotations

import argparse
import csv
import io
import json
import shlex
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .clftj import (
    CacheConfig,
    cached_tj_count,
    cached_tj_eval,
    fr_count,
    fr_enumerate,
)
from .dataio import DataError, Dataset, compute_stats, gen_zipf_graph, load_edge_list
from .decomp import best_td, enumerate_tds, score_td
from .lftj import TimeoutExceeded, make_plan, tj_count, tj_eval
from .clftj import make_cached_plan
from .query_model import (
    FullCQ,
    QueryError,
    gen_cycle_query,
    gen_path_query,
    gen_random_graph_query,
    parse_query,
)
from .td_model import derive_ordering, parse_td, serialize_td, validate_td
from .trie_index import Database
from .ytd import ytd_count, ytd_eval

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2


class CLIError(Exception):
    pass


@dataclass
class RunReport:
    """Everything needed to reproduce and interpret one engine run."""

    command: str
    query: str
    dataset: Optional[str]
    algo: str
    td: Optional[str]
    ordering: Optional[list]
    count: Optional[int]
    timed_out: bool
    engine_stats: dict
    cache_stats: Optional[dict]
    build_ms: float
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        flat = {}
        for k, v in asdict(self).items():
            if isinstance(v, dict):
                for k2, v2 in v.items():
                    flat[f"{k}_{k2}"] = v2
            elif isinstance(v, list):
                flat[k] = " ".join(map(str, v))
            else:
                flat[k] = v
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat))
        w.writeheader()
        w.writerow(flat)
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _resolve_query(spec: str, seed: int) -> FullCQ:
    """Query text, `@file`, or a generator shorthand path:k / cycle:k /
    rand:n,p[,seed]."""
    if spec.startswith("@"):
        spec = open(spec[1:]).read().strip()
    head, sep, rest = spec.partition(":")
    if sep and head in ("path", "cycle", "rand") and "(" not in spec:
        try:
            if head == "path":
                return gen_path_query(int(rest))
            if head == "cycle":
                return gen_cycle_query(int(rest))
            parts = rest.split(",")
            n, p = int(parts[0]), float(parts[1])
            s = int(parts[2]) if len(parts) > 2 else seed
            return gen_random_graph_query(n, p, s)
        except (ValueError, IndexError) as e:
            raise CLIError(f"bad query shorthand {spec!r}: {e}")
    return parse_query(spec)


def _resolve_data(spec: Optional[str], undirected: bool, seed: int,
                  keep_self_loops: bool = False) -> Optional[Dataset]:
    """A file path or the shorthand zipf:nodes,edges,exp[,seed]."""
    if spec is None:
        return None
    if spec.startswith("zipf:"):
        parts = spec[5:].split(",")
        try:
            nodes, edges, exp = int(parts[0]), int(parts[1]), float(parts[2])
            s = int(parts[3]) if len(parts) > 3 else seed
        except (ValueError, IndexError) as e:
            raise CLIError(f"bad dataset shorthand {spec!r}: {e}")
        return gen_zipf_graph(nodes, edges, exp, s)
    return load_edge_list(
        spec, directed=not undirected, drop_self_loops=not keep_self_loops
    )


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--query", required=True, help="query text, @file, or path:k/cycle:k/rand:n,p[,seed]")
    p.add_argument("--data", required=True, help="edge-list path or zipf:nodes,edges,exp[,seed]")
    p.add_argument("--algo", choices=("lftj", "clftj", "ytd"), default="lftj")
    p.add_argument("--cache-entries", type=int, default=None, help="cache capacity (default unlimited)")
    p.add_argument("--cache-policy", choices=("reject", "lru"), default="reject")
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--td", default="auto", help="'auto' or @file in the bag/parent/vars format")
    p.add_argument("--order", default="auto", help="'auto' or a comma-separated variable list")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout-secs", type=float, default=300.0)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--keep-self-loops", action="store_true",
                   help="keep u->u rows when loading an edge list")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="(eval) dump result tuples here")


@dataclass
class _Prepared:
    q: FullCQ
    db: Database
    td: object
    vo: object
    ordering_idx: list
    build_ms: float
    dataset_label: Optional[str]


def _prepare(args) -> _Prepared:
    t0 = time.perf_counter()
    q = _resolve_query(args.query, args.seed)
    ds = _resolve_data(
        args.data, args.undirected, args.seed,
        keep_self_loops=args.keep_self_loops,
    )
    db = Database(ds.relation_list())

    needs_td = args.algo in ("clftj", "ytd") or args.td.startswith("@")
    td = None
    if needs_td:
        if args.td == "auto":
            td = best_td(q, max_adhesion=2, max_tds=64, stats=compute_stats(ds))
        elif args.td.startswith("@"):
            td = parse_td(open(args.td[1:]).read(), q.var_names)
            err = validate_td(q, td)
            if err is not None:
                raise CLIError(f"invalid decomposition: {err}")
        else:
            raise CLIError("--td must be 'auto' or @file")

    if args.order == "auto":
        if td is not None:
            vo = derive_ordering(td)
            ordering = list(vo.order)
        else:
            vo = None
            ordering = list(range(q.num_vars))
    else:
        name_to_idx = {n: i for i, n in enumerate(q.var_names)}
        try:
            ordering = [name_to_idx[n.strip()] for n in args.order.split(",")]
        except KeyError as e:
            raise CLIError(f"unknown variable {e.args[0]!r} in --order")
        vo = None
        if td is not None:
            from .td_model import _ordering_tables

            vo = _ordering_tables(td, ordering)

    # build the tries each atom will use, so run timings cover only the join
    plan = make_plan(q, ordering)
    for acc in plan.atoms:
        db.trie(acc.relation, acc.attr_order)
    build_ms = (time.perf_counter() - t0) * 1000.0
    return _Prepared(q, db, td, vo, ordering, build_ms, args.data)


def _cache_config(args) -> CacheConfig:
    return CacheConfig(
        capacity=args.cache_entries,
        policy=args.cache_policy,
        min_support=args.min_support,
    )


def _run_count(args) -> RunReport:
    prep = _prepare(args)
    q, db = prep.q, prep.db
    deadline = time.perf_counter() + args.timeout_secs
    count = None
    engine_stats = {}
    cache_stats = None
    timed_out = False
    try:
        if args.algo == "lftj":
            plan = make_plan(q, prep.ordering_idx)
            count, stats = tj_count(plan, db, deadline=deadline)
            engine_stats = stats.as_dict()
        elif args.algo == "clftj":
            cplan = make_cached_plan(q, prep.td, prep.vo)
            count, stats, cstats, _ = cached_tj_count(
                cplan, db, _cache_config(args), deadline=deadline
            )
            engine_stats = stats.as_dict()
            cache_stats = cstats.as_dict()
        else:
            count, ystats = ytd_count(q, prep.td, db, prep.vo)
            engine_stats = {
                "peak_intermediate_tuples": ystats.peak_intermediate_tuples,
                "semijoin_passes": ystats.semijoin_passes,
                "wall_time_ms": ystats.wall_time_ms,
                **{f"bag_{k}": v for k, v in ystats.bag_engine.as_dict().items()},
            }
    except TimeoutExceeded:
        timed_out = True
    return RunReport(
        command="count",
        query=q.render(),
        dataset=prep.dataset_label,
        algo=args.algo,
        td=serialize_td(prep.td, q.var_names) if prep.td is not None else None,
        ordering=[q.var_names[i] for i in prep.ordering_idx],
        count=count,
        timed_out=timed_out,
        engine_stats=engine_stats,
        cache_stats=cache_stats,
        build_ms=prep.build_ms,
        config=_config_echo(args),
    )


def _config_echo(args) -> dict:
    return {
        "cache_entries": args.cache_entries,
        "cache_policy": args.cache_policy,
        "min_support": args.min_support,
        "td": args.td,
        "order": args.order,
        "seed": args.seed,
        "timeout_secs": args.timeout_secs,
        "undirected": args.undirected,
        "keep_self_loops": args.keep_self_loops,
    }


def _run_eval(args) -> RunReport:
    prep = _prepare(args)
    q, db = prep.q, prep.db
    t0 = time.perf_counter()
    cardinality = 0
    engine_stats = {}
    cache_stats = None
    sink = open(args.out, "w") if args.out else None
    names = [q.var_names[i] for i in prep.ordering_idx]

    def emit(t):
        if sink is not None:
            sink.write("\t".join(map(str, t)) + "\n")

    try:
        if args.algo == "lftj":
            plan = make_plan(q, prep.ordering_idx)
            from .lftj import EngineStats

            stats = EngineStats()
            for t in tj_eval(plan, db, stats):
                cardinality += 1
                emit(t)
            stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
            engine_stats = stats.as_dict()
        elif args.algo == "clftj":
            cplan = make_cached_plan(q, prep.td, prep.vo)
            frag, stats, cstats, _ = cached_tj_eval(cplan, db, _cache_config(args))
            cardinality = fr_count(frag)
            if sink is not None:
                for t in fr_enumerate(frag, q.num_vars):
                    emit(t)
            engine_stats = stats.as_dict()
            cache_stats = cstats.as_dict()
        else:
            for t in ytd_eval(q, prep.td, db, prep.vo):
                cardinality += 1
                emit(t)
            engine_stats = {"wall_time_ms": (time.perf_counter() - t0) * 1000.0}
    finally:
        if sink is not None:
            sink.close()
    return RunReport(
        command="eval",
        query=q.render(),
        dataset=prep.dataset_label,
        algo=args.algo,
        td=serialize_td(prep.td, q.var_names) if prep.td is not None else None,
        ordering=names,
        count=cardinality,
        timed_out=False,
        engine_stats=engine_stats,
        cache_stats=cache_stats,
        build_ms=prep.build_ms,
        config=_config_echo(args),
    )


def cmd_count(args) -> int:
    report = _run_count(args)
    print(report.render(args.format))
    return EXIT_TIMEOUT if report.timed_out else EXIT_OK


def cmd_eval(args) -> int:
    report = _run_eval(args)
    print(report.render(args.format))
    return EXIT_TIMEOUT if report.timed_out else EXIT_OK


def cmd_decompose(args) -> int:
    q = _resolve_query(args.query, args.seed)
    stats = None
    if args.data:
        ds = _resolve_data(args.data, args.undirected, args.seed)
        stats = compute_stats(ds)
    tds = list(
        enumerate_tds(q, max_adhesion=args.max_adhesion, max_tds=args.max_tds)
    )
    tds.sort(key=lambda td: score_td(td, q, stats).key())
    blocks = [serialize_td(td, q.var_names).rstrip() for td in tds]
    print("\n---\n".join(blocks))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.zipf:
        parts = args.zipf.split(",")
        try:
            nodes, edges, exp = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError) as e:
            raise CLIError(f"bad --zipf spec: {e}")
        ds = gen_zipf_graph(nodes, edges, exp, args.seed)
        lines = [f"{u} {v}" for u, v in ds.relations["E"].tuples]
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.kind == "path":
        q = gen_path_query(args.k)
    elif args.kind == "cycle":
        q = gen_cycle_query(args.k)
    elif args.kind == "rand":
        q = gen_random_graph_query(args.n, args.p, args.seed)
    else:
        raise CLIError("--kind or --zipf is required")
    text = q.render() + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _bench_cell(line: str, lineno: int, repeats: int):
    parser = _count_parser()
    try:
        cell_args = parser.parse_args(shlex.split(line))
    except SystemExit:
        raise CLIError(f"suite line {lineno}: bad flags: {line!r}")
    reports = [_run_count(cell_args) for _ in range(repeats)]
    r0 = reports[0]
    times = [r.engine_stats.get("wall_time_ms", 0.0) for r in reports]
    row = {
        "query": r0.query,
        "dataset": r0.dataset,
        "algo": r0.algo,
        "count": r0.count,
        "timed_out": any(r.timed_out for r in reports),
        "repeats": repeats,
        "mean_wall_ms": sum(times) / len(times),
        "build_ms": r0.build_ms,
    }
    for k, v in r0.engine_stats.items():
        if k != "wall_time_ms":
            row[f"stat_{k}"] = v
    if r0.cache_stats:
        for k, v in r0.cache_stats.items():
            row[f"cache_{k}"] = v
    for k, v in r0.config.items():
        row[f"config_{k}"] = v
    return row


def cmd_bench(args) -> int:
    try:
        text = open(args.suite).read()
    except OSError as e:
        raise CLIError(f"cannot read suite: {e}")
    lines = [
        (i, ln.strip())
        for i, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if args.parallel_cells > 1:
        with ThreadPoolExecutor(max_workers=args.parallel_cells) as ex:
            rows = list(
                ex.map(lambda e: _bench_cell(e[1], e[0], args.repeats), lines)
            )
    else:
        rows = [_bench_cell(ln, i, args.repeats) for i, ln in lines]
    if args.format == "json":
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    else:
        keys = []
        for row in rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(sys.stdout, fieldnames=keys)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return EXIT_TIMEOUT if any(r["timed_out"] for r in rows) else EXIT_OK


def _count_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triejoin-cell", add_help=False)
    _add_run_flags(p)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triejoin",
        description="Worst-case-optimal trie joins with adhesion-keyed caching.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("count", help="compute |q(D)|")
    _add_run_flags(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("eval", help="compute q(D)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decompose", help="list scored tree decompositions")
    p.add_argument("--query", required=True)
    p.add_argument("--max-adhesion", type=int, default=2)
    p.add_argument("--max-tds", type=int, default=64)
    p.add_argument("--data", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--undirected", action="store_true")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gen", help="generate pattern queries or datasets")
    p.add_argument("--kind", choices=("path", "cycle", "rand"), default=None)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("-n", type=int, default=4)
    p.add_argument("-p", type=float, default=0.5)
    p.add_argument("--zipf", default=None, help="nodes,edges,exp dataset mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run a suite of count cells")
    p.add_argument("--suite", required=True, help="file of count-flag lines")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--parallel-cells", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, QueryError, DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:  # engine/plan errors surface as exit 1 too
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
