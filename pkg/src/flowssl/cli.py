"""Command-line front end.

Commands
--------
build    points.csv + labels.csv -> graph.json (kNN graph, Laplacian-matched costs)
predict  graph.json -> predictions.json, optionally choosing lambda by validation
explain  graph.json + node -> one DOT + one JSON flow subgraph per lambda
serve    graph.json -> HTTP API for the explorer UI

Exit codes: 0 success, 1 usage, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as gio
from .graph import (
    GraphError,
    add_anchor_nodes,
    build_knn_graph,
    costs_from_laplacian,
    laplacian,
    to_directed,
    with_costs,
    with_labels,
)
from .predict import DEFAULT_LAMBDA_GRID, AdmmOptions, predict_all, regularization_path
from .solver import SolverError
from .subgraph import export_dot, export_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

_NORMALIZATIONS = {"unnorm": "unnormalized", "sym": "symmetric", "markov": "markov"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowssl", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a graph from a point cloud")
    p.add_argument("points", help="CSV, one numeric row per point")
    p.add_argument("labels", help="CSV rows of (row_index, value)")
    p.add_argument("--k", type=int, default=20, help="neighbor count (default 20)")
    p.add_argument("--normalization", choices=sorted(_NORMALIZATIONS), default="sym")
    p.add_argument("--mu", type=float, default=None, help="anchor-node transform strength (soft labels)")
    p.add_argument("--directed", action="store_true", help="double edges into forward/backward versions")
    p.add_argument("--out", required=True, help="output graph JSON path")

    p = sub.add_parser("predict", help="predict values at all unlabeled nodes")
    p.add_argument("graph")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--lambda-grid", default=None, help="comma-separated ascending values")
    p.add_argument("--validate", type=float, default=None, metavar="FRAC",
                   help="hold out FRAC of labeled nodes and pick lambda from the grid")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")

    p = sub.add_parser("explain", help="export flow subgraphs for one node across lambdas")
    p.add_argument("graph")
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--lambda-grid", default=None, help="comma-separated ascending values")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--eps", type=float, default=1e-8, help="support threshold")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("serve", help="serve the HTTP API for a graph")
    p.add_argument("graph")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--eps", type=float, default=1e-8)

    return parser


def _parse_grid(text: str | None, parser: _Parser):
    if text is None:
        return list(DEFAULT_LAMBDA_GRID)
    try:
        grid = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        parser.error(f"bad --lambda-grid: {text!r}")
    if not grid or grid != sorted(grid) or grid[0] < 0:
        parser.error("--lambda-grid must be nonnegative and ascending")
    return grid


def cmd_build(args) -> int:
    points = gio.load_points_csv(args.points)
    labels = gio.load_labels_csv(args.labels)
    for idx, _ in labels:
        if not 0 <= idx < len(points):
            raise GraphError(f"label row index {idx} out of range for {len(points)} points")
    graph = build_knn_graph(points, args.k)
    graph = with_labels(graph, [i for i, _ in labels], [v for _, v in labels])
    lap = laplacian(graph, _NORMALIZATIONS[args.normalization])
    graph = with_costs(graph, costs_from_laplacian(lap))
    if args.mu is not None:
        graph = add_anchor_nodes(graph, args.mu)
    if args.directed:
        graph = to_directed(graph)
    gio.save_graph(graph, args.out)
    print(f"wrote {args.out}: n={graph.n} m={graph.m} n_l={graph.n_labeled} directed={graph.directed}")
    return EXIT_OK


def _is_classification(values) -> bool:
    return set(values) <= {-1.0, 1.0}


def _heldout_error(predicted: dict, truth: dict, classify: bool) -> float:
    pairs = [(predicted.get(i), v) for i, v in truth.items()]
    if any(p is None for p, _ in pairs):
        return float("inf")
    if classify:
        # Sign rule with ties going to +1.
        return float(np.mean([(1.0 if p >= 0 else -1.0) != v for p, v in pairs]))
    return float(np.mean([(p - v) ** 2 for p, v in pairs]))


def cmd_predict(args, parser: _Parser) -> int:
    graph = gio.load_graph(args.graph)
    opts = AdmmOptions(rho=args.rho, tol=args.tol, max_iter=args.max_iter)
    result: dict = {}

    if args.validate is not None:
        if not 0 < args.validate < 1:
            parser.error("--validate expects a fraction in (0, 1)")
        if graph.n_labeled < 2:
            raise GraphError("validation needs at least 2 labeled nodes")
        grid = _parse_grid(args.lambda_grid, parser)
        rng = np.random.default_rng(args.seed)
        order = rng.permutation(graph.n_labeled)
        n_held = min(max(1, round(args.validate * graph.n_labeled)), graph.n_labeled - 1)
        held = sorted(order[:n_held])
        kept = sorted(order[n_held:])
        trial = with_labels(
            graph, [graph.labeled[i] for i in kept], [graph.values[i] for i in kept]
        )
        truth = {graph.labeled[i]: graph.values[i] for i in held}
        classify = _is_classification(graph.values)
        errors = {}
        for lam in grid:
            report = predict_all(trial, lam, opts)
            errors[lam] = _heldout_error(report.values(), truth, classify)
        best = min(grid, key=lambda l: (errors[l], l))
        result["validation"] = {
            "held_out": sorted(truth),
            "metric": "misclassification" if classify else "mse",
            "errors": {format(l, "g"): errors[l] for l in grid},
            "chosen_lambda": best,
        }
        lam = best
    else:
        lam = args.lam
        if lam is None:
            parser.error("predict needs --lambda or --validate")
        if lam < 0:
            parser.error("--lambda must be nonnegative")

    report = predict_all(graph, lam, opts)
    result.update(report.to_dict())
    text = json.dumps(result, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    failed = report.failed()
    if failed:
        print(f"{len(failed)} of {len(report.nodes)} nodes failed to converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_explain(args, parser: _Parser) -> int:
    graph = gio.load_graph(args.graph)
    if not 0 <= args.node < graph.n:
        raise GraphError(f"unknown node {args.node}")
    if args.node in graph.labeled:
        raise GraphError(f"node {args.node} is labeled; flows target unlabeled nodes")
    grid = _parse_grid(args.lambda_grid, parser)
    opts = AdmmOptions(rho=args.rho, tol=args.tol, max_iter=args.max_iter)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = regularization_path(graph, args.node, grid, opts, eps=args.eps)
    for lam, wv, sub in path:
        stem = f"flow_{args.node}_{format(lam, 'g')}"
        (outdir / f"{stem}.dot").write_text(export_dot(sub), encoding="utf-8")
        (outdir / f"{stem}.json").write_text(export_json(sub) + "\n", encoding="utf-8")
        print(f"{stem}: {len(sub.edges)} edges, entropy {wv.entropy():.4f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    graph = gio.load_graph(args.graph)
    opts = AdmmOptions(rho=args.rho, tol=args.tol, max_iter=args.max_iter)
    app = create_app(graph, opts, eps=args.eps)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "predict":
            return cmd_predict(args, parser)
        if args.command == "explain":
            return cmd_explain(args, parser)
        if args.command == "serve":
            return cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except (GraphError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
