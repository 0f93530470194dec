"""From flows to predictions: weights, values, entropies, lambda paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, incidence_system
from .solver import (
    AdmmOptions,
    CholeskyCache,
    FlowProblem,
    FlowSolution,
    SolverError,
    admm_solve,
    admm_solve_batch,
    admm_solve_directed,
    factorize,
    solve_exact_lambda0,
)
from .subgraph import FlowSubgraph, extract_support

# Lambda values swept by validation and the default explorer path.
DEFAULT_LAMBDA_GRID = (0.0, 0.025, 0.05, 0.1, 0.2)

# Weight entries this negative mean the solve failed; smaller wobble is
# clamped to zero and renormalized away.
_WEIGHT_FLOOR = -1e-8
_WEIGHT_SUM_GUARD = 1e-4


@dataclass(frozen=True)
class WeightVector:
    """Per-labeled-node prediction weights for one sink.

    Entries align with the graph's labeled order, are nonnegative, and sum
    to one: the sink's unit in-flow is drawn entirely from labeled nodes.
    """

    sink: int
    weights: np.ndarray
    lam: float

    def entropy(self) -> float:
        return weight_entropy(self)


def weights_from_flow(solution: FlowSolution, system) -> WeightVector:
    """Read prediction weights off a converged flow: w = A_l z.

    Entries in [-1e-8, 0) are numerical zeros and get clamped, then the
    vector is renormalized to sum exactly 1 so entropy computations see a
    true distribution. Anything more negative, or a sum far from 1, is a
    solver failure and raises.
    """
    if not solution.converged:
        raise SolverError(
            f"flow for sink {solution.sink} did not converge "
            f"({solution.iterations} iterations, primal residual {solution.primal_residual:.3g})"
        )
    w = np.asarray(system.A_l @ solution.z, dtype=float)
    if np.min(w) < _WEIGHT_FLOOR:
        raise SolverError(f"negative weight {np.min(w):.3g} at sink {solution.sink}; solve unreliable")
    total = float(w.sum())
    if abs(total - 1.0) > _WEIGHT_SUM_GUARD:
        raise SolverError(f"weights sum to {total:.6g} at sink {solution.sink}; solve unreliable")
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return WeightVector(sink=solution.sink, weights=w, lam=solution.lam)


def predict(weights: WeightVector, labels) -> float:
    """Predicted value: inner product of weights with the label values."""
    values = np.asarray(labels, dtype=float)
    if values.shape != weights.weights.shape:
        raise ValueError(f"expected {weights.weights.shape[0]} label values, got {values.shape}")
    return float(weights.weights @ values)


def weight_entropy(weights: WeightVector) -> float:
    """Shannon entropy -sum w log w (natural log, 0 log 0 = 0).

    Near zero the weight mass sits on one labeled node; the maximum
    log(n_l) means uniform weights, the flat-solution failure mode.
    """
    w = weights.weights
    nz = w[w > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass
class NodePrediction:
    node: int
    value: float | None
    weights: WeightVector | None
    entropy: float | None
    iterations: int
    converged: bool
    error: str | None = None


@dataclass
class PredictionReport:
    """Batch prediction over every unlabeled node at one lambda."""

    lam: float
    labeled: tuple
    label_values: tuple
    nodes: list

    def values(self) -> dict:
        return {p.node: p.value for p in self.nodes if p.converged}

    def failed(self) -> list:
        return [p for p in self.nodes if not p.converged]

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "nodes": [
                {
                    "id": p.node,
                    "value": p.value,
                    "entropy": p.entropy,
                    "weights": None
                    if p.weights is None
                    else [
                        {"label_node": i, "w": float(wi)}
                        for i, wi in zip(self.labeled, p.weights.weights)
                    ],
                    "converged": p.converged,
                    **({"error": p.error} if p.error else {}),
                }
                for p in self.nodes
            ],
        }


def predict_all(
    graph: Graph,
    lam: float,
    opts: AdmmOptions = AdmmOptions(),
    refactorize_per_node: bool = False,
    batch: bool = True,
) -> PredictionReport:
    """Solve every unlabeled node's flow problem and collect predictions.

    One factorization is shared across all sinks (``refactorize_per_node``
    exists to benchmark exactly that reuse; ``batch=False`` forces plain
    per-sink loops). Per-node solver failures are recorded on the report
    instead of aborting the batch.
    """
    system = incidence_system(graph)
    values = np.asarray(graph.values, dtype=float)
    rho = 0.0 if (lam == 0 and not graph.directed) else opts.rho
    cache = factorize(system, rho)
    report = PredictionReport(lam=lam, labeled=graph.labeled, label_values=graph.values, nodes=[])

    use_batch = (
        batch
        and not refactorize_per_node
        and not graph.directed
        and lam > 0
        and len(system.unlabeled) > 1
    )
    if use_batch:
        solutions = admm_solve_batch(system, cache, system.unlabeled, lam, opts)
        for solution in solutions:
            _append_prediction(report, system, values, solution, opts)
        return report

    for sink in system.unlabeled:
        node_cache = factorize(system, rho) if refactorize_per_node else cache
        try:
            solution = _solve_one(system, node_cache, sink, lam, opts)
        except SolverError as exc:
            report.nodes.append(
                NodePrediction(
                    node=sink,
                    value=None,
                    weights=None,
                    entropy=None,
                    iterations=opts.max_iter,
                    converged=False,
                    error=str(exc),
                )
            )
            continue
        _append_prediction(report, system, values, solution, opts)
    return report


def _append_prediction(report, system, values, solution, opts) -> None:
    try:
        wv = weights_from_flow(solution, system)
        report.nodes.append(
            NodePrediction(
                node=solution.sink,
                value=predict(wv, values),
                weights=wv,
                entropy=weight_entropy(wv),
                iterations=solution.iterations,
                converged=True,
            )
        )
    except SolverError as exc:
        report.nodes.append(
            NodePrediction(
                node=solution.sink,
                value=None,
                weights=None,
                entropy=None,
                iterations=solution.iterations,
                converged=False,
                error=str(exc),
            )
        )


def _solve_one(system, cache: CholeskyCache, sink: int, lam: float, opts: AdmmOptions) -> FlowSolution:
    problem = FlowProblem(system=system, lam=lam, sink=sink)
    if system.directed:
        return admm_solve_directed(problem, cache, opts)
    if lam == 0:
        return solve_exact_lambda0(problem, cache)
    return admm_solve(problem, cache, opts)


def regularization_path(
    graph: Graph,
    sink: int,
    lambdas=DEFAULT_LAMBDA_GRID,
    opts: AdmmOptions = AdmmOptions(),
    eps: float = 1e-8,
) -> list:
    """Solve one sink across a sorted lambda grid.

    Returns a list of (lambda, WeightVector, FlowSubgraph) triples sharing
    a single factorization; larger lambda concentrates the flow on fewer
    edges, so the subgraphs shrink along the path.
    """
    lambdas = list(lambdas)
    if lambdas != sorted(lambdas):
        raise ValueError("lambda grid must be sorted ascending")
    if any(l < 0 for l in lambdas):
        raise ValueError("lambda values must be nonnegative")
    system = incidence_system(graph)
    cache = factorize(system, opts.rho)
    exact_cache = None
    out = []
    for lam in lambdas:
        if lam == 0 and not graph.directed:
            if exact_cache is None:
                exact_cache = factorize(system, 0.0)
            solution = solve_exact_lambda0(FlowProblem(system, 0.0, sink), exact_cache)
        else:
            solution = _solve_one(system, cache, sink, lam, opts)
        wv = weights_from_flow(solution, system)
        sub = extract_support(solution, system, eps)
        out.append((lam, wv, sub))
    return out
