"""Command-line driver: gen | build | train | eval | bench."""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .cutoff import build_cutoff_table, deserialize, serialize
from .dataset import (
    QuerySet,
    generate_synthetic,
    generate_synthetic_queries,
    load_binary,
    load_queries,
    save_binary,
)
from .filter import filter_candidates
from .index import build_index
from .objective import brute_force_optimal, clustering_baseline, cost_f, gmm_baseline
from .report import aggregate_times_ms, build_manifest, render_table, write_json
from .trainer import TrainConfig, estimate_eps_max, train_epsilon

METHODS = ("none", "clustering", "gmm", "lotus", "brute")


class UsageError(Exception):
    """Bad invocation that argparse could not catch on its own."""


def _lambda_arg(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not (0.0 <= v <= 1.0):
        raise argparse.ArgumentTypeError(f"lambda must be in [0, 1], got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _first_rows_queries(base, count: int) -> QuerySet:
    return QuerySet(base.data[: min(count, base.n_vectors)])


def cmd_gen(args) -> None:
    ds = generate_synthetic(args.clusters, args.per_cluster, args.dim, args.spread, args.seed)
    qs = generate_synthetic_queries(args.clusters, args.n_queries, args.dim, args.spread, args.seed)
    save_binary(ds, args.base)
    save_binary(qs, args.queries)
    print(f"base: {ds.n_vectors} x {ds.dim} -> {args.base}")
    print(f"queries: {qs.n_queries} x {qs.dim} -> {args.queries}")
    if args.out:
        write_json(
            args.out,
            {
                "manifest": build_manifest(
                    "gen", sys.argv[1:], args.seed, {"base": args.base, "queries": args.queries}
                ),
                "params": {
                    "clusters": args.clusters,
                    "per_cluster": args.per_cluster,
                    "dim": args.dim,
                    "spread": args.spread,
                    "n_queries": args.n_queries,
                    "seed": args.seed,
                },
            },
        )


def cmd_build(args) -> None:
    base = load_binary(args.base)
    index = build_index(base)
    trained = None
    if args.train:
        if args.lam is None or args.s is None or args.k is None:
            raise UsageError("--train requires --lambda, --s and --k")
        eps_max = args.eps_max
        if eps_max is None:
            eps_max = estimate_eps_max(base, args.samples, args.seed)
        cfg = TrainConfig(eps_max, args.lam, args.s, args.k)
        trained = train_epsilon(_first_rows_queries(base, args.train_queries), index, base, cfg)
        eps = trained.eps_star
    else:
        if args.eps is None:
            raise UsageError("either --eps or --train is required")
        eps = args.eps
    t0 = time.perf_counter()
    table = build_cutoff_table(index, base, eps)
    build_s = time.perf_counter() - t0
    serialize(table, args.table)
    stats = {
        "n_vectors": table.n_vectors,
        "dim": base.dim,
        "eps": table.epsilon,
        "avg_list_length": table.avg_list_length(),
        "total_entries": table.total_entries(),
        "memory_bits": table.memory_bits(),
        "build_seconds": build_s,
    }
    print(
        f"table: N={stats['n_vectors']} eps={stats['eps']:.6g} "
        f"L={stats['avg_list_length']:.3f} memory_bits={stats['memory_bits']} "
        f"build_s={build_s:.3f} -> {args.table}"
    )
    if args.out:
        doc = {
            "manifest": build_manifest(
                "build", sys.argv[1:], args.seed, {"base": args.base, "table": args.table}
            ),
            "stats": stats,
        }
        if trained is not None:
            doc["train"] = {"eps_star": trained.eps_star, "f_star": trained.f_star}
        write_json(args.out, doc)


def cmd_train(args) -> None:
    base = load_binary(args.base)
    index = build_index(base)
    eps_max = args.eps_max
    if eps_max is None:
        eps_max = estimate_eps_max(base, args.samples, args.seed)
    cfg = TrainConfig(eps_max, args.lam, args.s, args.k)
    queries = _first_rows_queries(base, args.train_queries)
    t0 = time.perf_counter()
    result = train_epsilon(queries, index, base, cfg)
    train_s = time.perf_counter() - t0
    print(
        f"eps_star={result.eps_star:.10g} f_star={result.f_star:.10g} "
        f"eps_max={eps_max:.6g} train_s={train_s:.3f}"
    )
    if args.out:
        write_json(
            args.out,
            {
                "manifest": build_manifest("train", sys.argv[1:], args.seed, {"base": args.base}),
                "params": {
                    "lambda": cfg.lam,
                    "s": cfg.s_candidates,
                    "k": cfg.k_results,
                    "eps_max": eps_max,
                    "train_queries": queries.n_queries,
                    "width_schedule": list(cfg.width_schedule),
                },
                "result": {
                    "eps_star": result.eps_star,
                    "f_star": result.f_star,
                    "train_seconds": train_s,
                    "trace": [
                        {
                            "round": r.round_index,
                            "grid": r.grid,
                            "values": r.values,
                            "skipped": r.skipped,
                        }
                        for r in result.trace
                    ],
                },
            },
        )


def _make_method(method, *, index, base, table, s, k, lam, safeguard, seed):
    """Return (search_fn, post_fn); post_fn gives (ids, truncated_or_None)."""
    if method == "none":
        return (
            lambda q: index.knn(q, k)[0],
            lambda q, cand: ([int(c) for c in cand], None),
        )
    if method == "clustering":
        return (
            lambda q: index.knn(q, s)[0],
            lambda q, cand: (clustering_baseline(q, cand, k, base, seed), None),
        )
    if method == "gmm":
        return (
            lambda q: index.knn(q, s)[0],
            lambda q, cand: (gmm_baseline(q, cand, k, base), None),
        )
    if method == "lotus":
        def _post(q, cand):
            res = filter_candidates(cand, table, k, safeguard)
            return res.ids, res.truncated
        return (lambda q: index.knn(q, s)[0]), _post
    if method == "brute":
        def _post(q, cand):
            ids, _ = brute_force_optimal(q, cand, k, base, lam)
            return sorted(ids), None
        return (lambda q: index.knn(q, s)[0]), _post
    raise UsageError(f"unknown method {method!r}")


def _time_method(queries, search_fn, post_fn, trials, threads):
    n_q = queries.n_queries
    rows = [queries.row(i) for i in range(n_q)]

    def _run(q):
        return post_fn(q, search_fn(q))

    # untimed results pass; doubles as warm-up
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run, rows))
    else:
        results = [_run(q) for q in rows]
    search_ns = [[0] * n_q for _ in range(trials)]
    filter_ns = [[0] * n_q for _ in range(trials)]
    for t in range(trials):
        for qi, q in enumerate(rows):
            t0 = time.perf_counter_ns()
            cand = search_fn(q)
            t1 = time.perf_counter_ns()
            post_fn(q, cand)
            t2 = time.perf_counter_ns()
            search_ns[t][qi] = t1 - t0
            filter_ns[t][qi] = t2 - t1
    total_ns = [
        [search_ns[t][qi] + filter_ns[t][qi] for qi in range(n_q)] for t in range(trials)
    ]
    return results, search_ns, filter_ns, total_ns


def cmd_eval(args) -> None:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if not methods:
        raise UsageError("no methods given")
    if args.k < 2:
        raise UsageError("eval requires --k >= 2 (the objective needs two results)")
    if args.s < args.k:
        raise UsageError("--s must be >= --k")
    base = load_binary(args.base)
    queries = load_queries(args.queries)
    if queries.dim != base.dim:
        raise ValueError(f"query dim {queries.dim} != base dim {base.dim}")
    index = build_index(base)
    table = None
    if "lotus" in methods:
        if not args.table:
            raise UsageError("method 'lotus' requires --table")
        table = deserialize(args.table)
        if table.n_vectors != base.n_vectors:
            raise ValueError(
                f"table size {table.n_vectors} != base size {base.n_vectors}"
            )
    baseline_bits = 32 * base.n_vectors * base.dim
    method_docs = []
    table_rows = []
    for method in methods:
        search_fn, post_fn = _make_method(
            method,
            index=index,
            base=base,
            table=table,
            s=args.s,
            k=args.k,
            lam=args.lam,
            safeguard=args.safeguard,
            seed=args.seed,
        )
        results, search_ns, filter_ns, total_ns = _time_method(
            queries, search_fn, post_fn, args.trials, args.threads
        )
        per_query = []
        f_sum = s_sum = d_sum = 0.0
        f_count = 0
        trunc_count = 0
        for qi, (ids, truncated) in enumerate(results):
            entry = {"ids": [int(i) for i in ids], "truncated": truncated}
            if truncated:
                trunc_count += 1
            if len(ids) >= 2:
                c = cost_f(queries.row(qi), ids, base, args.lam)
                entry.update(
                    f=c.total, search_term=c.search_term, diversity_term=c.diversity_term
                )
                f_sum += c.total
                s_sum += c.search_term
                d_sum += c.diversity_term
                f_count += 1
            else:
                entry.update(f=None, search_term=None, diversity_term=None)
            per_query.append(entry)
        if method == "none":
            mem_bits = 0
        elif method == "lotus":
            mem_bits = table.memory_bits()
        else:
            mem_bits = baseline_bits
        doc = {
            "method": method,
            "f_mean": f_sum / f_count if f_count else None,
            "search_term_mean": s_sum / f_count if f_count else None,
            "diversity_term_mean": d_sum / f_count if f_count else None,
            "f_count": f_count,
            "truncation_rate": (trunc_count / len(results)) if method == "lotus" else None,
            "memory_overhead_bits": mem_bits,
            "search": aggregate_times_ms(search_ns),
            "filter": aggregate_times_ms(filter_ns),
            "total": aggregate_times_ms(total_ns),
            "per_query": per_query,
        }
        method_docs.append(doc)

        def _f(x, fmt="{:.6f}"):
            return "-" if x is None else fmt.format(x)

        table_rows.append(
            [
                method,
                _f(doc["f_mean"]),
                _f(doc["search_term_mean"]),
                _f(doc["diversity_term_mean"]),
                f"{doc['search']['ms']:.4f}",
                f"{doc['filter']['ms']:.4f}",
                f"{doc['total']['ms']:.4f}",
                str(mem_bits),
                _f(doc["truncation_rate"], "{:.3f}"),
            ]
        )
    print(
        render_table(
            ["method", "f", "search_term", "div_term", "search_ms", "filter_ms",
             "total_ms", "mem_bits", "trunc"],
            table_rows,
        )
    )
    if args.out:
        inputs = {"base": args.base, "queries": args.queries}
        if table is not None:
            inputs["table"] = args.table
        write_json(
            args.out,
            {
                "manifest": build_manifest("eval", sys.argv[1:], args.seed, inputs),
                "params": {
                    "methods": methods,
                    "s": args.s,
                    "k": args.k,
                    "lambda": args.lam,
                    "safeguard": args.safeguard,
                    "trials": args.trials,
                    "threads": args.threads,
                    "n_vectors": base.n_vectors,
                    "n_queries": queries.n_queries,
                    "dim": base.dim,
                    "eps": table.epsilon if table is not None else None,
                },
                "methods": method_docs,
            },
        )


def cmd_bench(args) -> None:
    s_list = sorted({int(v) for v in args.s_list.split(",") if v.strip()})
    if not s_list:
        raise UsageError("--s-list is empty")
    if args.k < 2:
        raise UsageError("bench requires --k >= 2")
    if s_list[0] < args.k:
        raise UsageError(f"every S in --s-list must be >= k={args.k}")
    base = load_binary(args.base)
    queries = load_queries(args.queries)
    if queries.dim != base.dim:
        raise ValueError(f"query dim {queries.dim} != base dim {base.dim}")
    index = build_index(base)
    table = deserialize(args.table)
    if table.n_vectors != base.n_vectors:
        raise ValueError(f"table size {table.n_vectors} != base size {base.n_vectors}")
    rows = []
    for s in s_list:
        search_fn, post_fn = _make_method(
            "lotus",
            index=index,
            base=base,
            table=table,
            s=s,
            k=args.k,
            lam=args.lam,
            safeguard=args.safeguard,
            seed=args.seed,
        )
        results, search_ns, filter_ns, _ = _time_method(
            queries, search_fn, post_fn, args.trials, args.threads
        )
        f_sum = 0.0
        f_count = 0
        for qi, (ids, _t) in enumerate(results):
            if len(ids) >= 2:
                f_sum += cost_f(queries.row(qi), ids, base, args.lam).total
                f_count += 1
        rows.append(
            {
                "s": s,
                "search": aggregate_times_ms(search_ns),
                "filter": aggregate_times_ms(filter_ns),
                "f_mean": f_sum / f_count if f_count else None,
                "f_count": f_count,
            }
        )
    growth = []
    linear_ok = True
    for prev, cur in zip(rows, rows[1:]):
        t_prev = max(prev["filter"]["ms"], 1e-4)
        ratio = (cur["filter"]["ms"] / t_prev) / (cur["s"] / prev["s"])
        ok = ratio <= 1.25
        linear_ok = linear_ok and ok
        growth.append({"from_s": prev["s"], "to_s": cur["s"], "normalized_growth": ratio, "ok": ok})
    print(
        render_table(
            ["S", "filter_ms", "search_ms", "f"],
            [
                [str(r["s"]), f"{r['filter']['ms']:.4f}", f"{r['search']['ms']:.4f}",
                 "-" if r["f_mean"] is None else f"{r['f_mean']:.6f}"]
                for r in rows
            ],
        )
    )
    print(f"filter time linear in S (25% slack): {'yes' if linear_ok else 'NO'}")
    if args.out:
        write_json(
            args.out,
            {
                "manifest": build_manifest(
                    "bench", sys.argv[1:], args.seed,
                    {"base": args.base, "queries": args.queries, "table": args.table},
                ),
                "params": {
                    "s_list": s_list,
                    "k": args.k,
                    "lambda": args.lam,
                    "safeguard": args.safeguard,
                    "trials": args.trials,
                    "threads": args.threads,
                },
                "rows": rows,
                "growth": growth,
                "linear_ok": linear_ok,
            },
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lotus",
        description="Diverse nearest-neighbor search via cutoff-table filtering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic clustered dataset and queries")
    p.add_argument("--base", required=True, help="output path for base vectors")
    p.add_argument("--queries", required=True, help="output path for query vectors")
    p.add_argument("--clusters", type=_positive_int, default=50)
    p.add_argument("--per-cluster", type=_positive_int, default=200)
    p.add_argument("--dim", type=_positive_int, default=16)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--n-queries", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional manifest JSON path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build a cutoff table (fixed eps or trained)")
    p.add_argument("--base", required=True)
    p.add_argument("--table", required=True, help="output path for the table")
    p.add_argument("--eps", type=_nonneg_float, help="squared-distance threshold")
    p.add_argument("--train", action="store_true", help="calibrate eps before building")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg)
    p.add_argument("--s", type=_positive_int)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--train-queries", type=_positive_int, default=1000,
                   help="use this many leading base vectors as training queries")
    p.add_argument("--eps-max", type=_nonneg_float, help="search window upper end")
    p.add_argument("--samples", type=_positive_int, default=10000,
                   help="pairs sampled when estimating the window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional stats JSON path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="calibrate the cutoff threshold")
    p.add_argument("--base", required=True)
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, required=True)
    p.add_argument("--s", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--train-queries", type=_positive_int, default=1000)
    p.add_argument("--eps-max", type=_nonneg_float)
    p.add_argument("--samples", type=_positive_int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional trace JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="compare selection methods on a query set")
    p.add_argument("--base", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--table", help="cutoff table, required for method 'lotus'")
    p.add_argument("--methods", default="none,clustering,gmm,lotus")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, required=True)
    p.add_argument("--s", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--safeguard", type=_onoff, default=True, metavar="{on,off}")
    p.add_argument("--trials", type=_positive_int, default=3)
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="parallelism for the untimed results pass only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="sweep candidate-list sizes and time the filter")
    p.add_argument("--base", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--s-list", required=True, help="comma-separated S values")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--safeguard", type=_onoff, default=True, metavar="{on,off}")
    p.add_argument("--trials", type=_positive_int, default=3)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
