"""Command-line pipeline: embed, eval-nc, eval-lp, sweep-lambda, stats.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every run writes a JSON reproducibility manifest (full configuration,
seeds, library versions, input checksums) next to its outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import scipy
import threadpoolctl

from . import __version__
from .evaluation import (
    lambda_sweep,
    evaluate_link_prediction,
    make_link_split,
    run_node_classification,
    write_rows_tsv,
)
from .io import (
    AttributedGraph,
    DataError,
    build_graph,
    file_sha256,
    load_edge_list,
    load_embeddings,
    load_labels,
    load_matrix_market,
    save_embeddings,
    write_manifest,
)
from .solver import DivergenceError, InitDegenerateError, SolverConfig, embed


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="gage", description=__doc__)
    p.add_argument("--version", action="version", version=f"gage {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_graph_args(sp):
        sp.add_argument("--graph", required=True, help="adjacency (.mtx or edge list)")
        sp.add_argument("--attrs", required=True, help="attribute matrix (.mtx)")
        sp.add_argument("--directed", action="store_true",
                        help="treat an edge-list graph as directed")

    sp = sub.add_parser("embed", help="compute node embeddings")
    add_graph_args(sp)
    sp.add_argument("--labels", help="optional labels TSV (recorded, not used)")
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.8)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--init", choices=["evd", "paper-box", "paper-text", "random"],
                    default="evd")
    sp.add_argument("--format", choices=["tsv", "bin"], default="tsv")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=_cmd_embed)

    sp = sub.add_parser("eval-nc", help="node-classification evaluation")
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--splits", default="0.9,0.5,0.1",
                    help="comma-separated training fractions")
    sp.add_argument("--shuffles", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--report", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=_cmd_eval_nc)

    sp = sub.add_parser("eval-lp", help="link-prediction evaluation")
    add_graph_args(sp)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--removal", type=float, default=0.5)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--shuffles", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--report", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=_cmd_eval_lp)

    sp = sub.add_parser("sweep-lambda", help="metric across a mixing-weight grid")
    add_graph_args(sp)
    sp.add_argument("--labels", help="labels TSV (required for --task nc)")
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--grid", default="1.0:0.0:0.1", help="start:stop:step")
    sp.add_argument("--task", choices=["nc", "lp"], required=True)
    sp.add_argument("--removal", type=float, default=0.5)
    sp.add_argument("--shuffles", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--report", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("stats", help="print dataset summary")
    add_graph_args(sp)
    sp.add_argument("--labels")
    sp.set_defaults(func=_cmd_stats)

    return p


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise _UsageError(f"bad grid {spec!r}, expected start:stop:step")
    start, stop, step = (float(t) for t in parts)
    if step <= 0:
        raise _UsageError("grid step must be positive")
    count = int(round(abs(start - stop) / step)) + 1
    sign = 1.0 if stop >= start else -1.0
    grid = [round(start + sign * step * i, 12) for i in range(count)]
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise _UsageError("grid values must lie in [0, 1]")
    return grid


def _load_graph(args) -> AttributedGraph:
    gpath = args.graph
    if gpath.endswith(".mtx"):
        adj = load_matrix_market(gpath)
        node_ids = None
    else:
        adj, node_ids = load_edge_list(gpath, directed=args.directed)
    attrs = load_matrix_market(args.attrs)
    labels_map = None
    if getattr(args, "labels", None):
        labels_map, _ = load_labels(args.labels)
    return build_graph(adj, attrs, labels_map, node_ids)


def _manifest_payload(args, inputs: list[str], extra: dict | None = None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}
    payload = {
        "command": args.command,
        "config": cfg,
        "versions": {
            "gage": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "inputs": {p: file_sha256(p) for p in inputs if p},
    }
    if extra:
        payload.update(extra)
    return payload


def _cmd_embed(args) -> int:
    graph = _load_graph(args)
    config = SolverConfig(rank=args.rank, tol=args.tol, max_iter=args.max_iter,
                          seed=args.seed, lam=args.lam)
    emb, _factors, info = embed(graph.adjacency, graph.attributes, config,
                                init=args.init)
    save_embeddings(emb, args.out, format=args.format, node_ids=graph.node_ids)
    write_manifest(
        args.out + ".manifest.json",
        _manifest_payload(
            args,
            [args.graph, args.attrs, args.labels or ""],
            {
                "node_ids": graph.node_ids,
                "dropped_self_loops": graph.dropped_self_loops,
                "als": {
                    "n_sweeps": info.n_sweeps,
                    "converged": info.converged,
                    "final_delta": info.final_delta,
                },
                "clamped_dims": list(emb.clamped_dims),
                "outputs": [args.out],
            },
        ),
    )
    print(f"embedded {graph.n} nodes at rank {args.rank} "
          f"({info.n_sweeps} sweeps, converged={info.converged}) -> {args.out}")
    return 0


def _report_paths(report: str):
    base = Path(report)
    summary = base.with_name(base.stem + "_summary" + (base.suffix or ".tsv"))
    manifest = base.with_name(base.name + ".manifest.json")
    return base, summary, manifest


def _cmd_eval_nc(args) -> int:
    loaded = load_embeddings(args.embeddings)
    labels_map, _ = load_labels(args.labels)
    labels = np.array([labels_map.get(nid, -1) for nid in loaded.node_ids],
                      dtype=np.int64)
    if not np.any(labels >= 0):
        raise DataError("no embedding node has a label")
    splits = tuple(float(t) for t in args.splits.split(","))
    report = run_node_classification(loaded.E, labels, splits=splits,
                                     n_shuffles=args.shuffles, seed=args.seed)
    base, summary, manifest = _report_paths(args.report)
    write_rows_tsv(report["rows"], base)
    write_rows_tsv(report["splits"], summary)
    write_manifest(manifest, _manifest_payload(
        args, [args.embeddings, args.labels],
        {"outputs": [str(base), str(summary)]},
    ))
    for s in report["splits"]:
        print(f"split {s['train_fraction']}: "
              f"micro {s['micro_mean']:.4f} ± {s['micro_std']:.4f}, "
              f"macro {s['macro_mean']:.4f} ± {s['macro_std']:.4f}")
    return 0


def _cmd_eval_lp(args) -> int:
    graph = _load_graph(args)
    rows = []
    for sh in range(args.shuffles):
        split = make_link_split(graph.adjacency, args.removal, seed=[args.seed, sh])
        config = SolverConfig(rank=args.rank, seed=args.seed, lam=args.lam)
        emb, _factors, _info = embed(split.train_adjacency, graph.attributes, config)
        a, ap = evaluate_link_prediction(emb.E, split)
        rows.append({"shuffle": sh, "auc": a, "average_precision": ap})
    base, summary, manifest = _report_paths(args.report)
    write_rows_tsv(rows, base)
    aucs = [r["auc"] for r in rows]
    aps = [r["average_precision"] for r in rows]
    write_rows_tsv(
        [{
            "auc_mean": float(np.mean(aucs)),
            "auc_std": float(np.std(aucs)),
            "ap_mean": float(np.mean(aps)),
            "ap_std": float(np.std(aps)),
        }],
        summary,
    )
    write_manifest(manifest, _manifest_payload(
        args, [args.graph, args.attrs],
        {"outputs": [str(base), str(summary)]},
    ))
    print(f"link prediction: AUC {np.mean(aucs):.4f} ± {np.std(aucs):.4f}, "
          f"AP {np.mean(aps):.4f} ± {np.std(aps):.4f}")
    return 0


def _cmd_sweep(args) -> int:
    grid = _parse_grid(args.grid)
    graph = _load_graph(args)
    config = SolverConfig(rank=args.rank, seed=args.seed)
    if args.task == "nc":
        if graph.labels is None:
            raise DataError("sweep-lambda --task nc requires --labels")
        _emb, factors, _info = embed(graph.adjacency, graph.attributes, config)
        rows = lambda_sweep(factors, grid, "nc", labels=graph.labels,
                            n_shuffles=args.shuffles, seed=args.seed)
    else:
        split = make_link_split(graph.adjacency, args.removal, seed=args.seed)
        _emb, factors, _info = embed(split.train_adjacency, graph.attributes, config)
        rows = lambda_sweep(factors, grid, "lp", link_split=split)
    base, _summary, manifest = _report_paths(args.report)
    write_rows_tsv(rows, base)
    write_manifest(manifest, _manifest_payload(
        args, [args.graph, args.attrs, getattr(args, "labels", None) or ""],
        {"outputs": [str(base)]},
    ))
    for r in rows:
        print(f"lambda {r['lam']:.2f}: {r['metric']:.4f}")
    return 0


def _cmd_stats(args) -> int:
    graph = _load_graph(args)
    name = Path(args.graph).stem
    classes = graph.n_classes if graph.labels is not None else "-"
    print("dataset\tvertices\tedges\tattribute_dim\tclasses")
    print(f"{name}\t{graph.n}\t{graph.n_edges}\t{graph.attributes.n_cols}\t{classes}")
    return 0


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        with threadpoolctl.threadpool_limits(limits=max(1, args.threads)
                                             if hasattr(args, "threads") else 1):
            return int(args.func(args) or 0)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, InitDegenerateError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
