"""HTTP facade for the explorer UI.

Serves one loaded graph. Flow solves are computed on demand per
(node, lambda) and memoized; the factorization is shared read-only across
requests, so concurrent solves for different sinks are independent.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from .graph import Graph, incidence_system
from .predict import (
    DEFAULT_LAMBDA_GRID,
    AdmmOptions,
    predict_all,
    weight_entropy,
    weights_from_flow,
)
from .solver import FlowProblem, SolverError, admm_solve, admm_solve_directed, factorize, solve_exact_lambda0
from .subgraph import extract_support, subgraph_to_dict

# Lambda values are rounded to this grain for cache keys; the UI slider is
# continuous and would otherwise grow the cache without bound.
_LAMBDA_KEY_GRAIN = 1e-4


class SessionState:
    """Loaded graph plus factorizations and a per-(node, lambda) solve cache."""

    def __init__(self, graph: Graph, opts: AdmmOptions, lambda_grid, eps: float):
        self.graph = graph
        self.opts = opts
        self.lambda_grid = list(lambda_grid)
        self.eps = eps
        self.system = incidence_system(graph)
        self.cache = factorize(self.system, opts.rho)
        self.exact_cache = None if graph.directed else factorize(self.system, 0.0)
        self._flows: dict = {}
        self._predictions: dict = {}
        self._lock = threading.Lock()

    def _lambda_key(self, lam: float) -> int:
        return int(round(lam / _LAMBDA_KEY_GRAIN))

    def flow_payload(self, node: int, lam: float) -> dict:
        key = (node, self._lambda_key(lam))
        with self._lock:
            hit = self._flows.get(key)
        if hit is not None:
            return hit
        payload = self._solve_flow(node, lam)
        with self._lock:
            return self._flows.setdefault(key, payload)

    def _solve_flow(self, node: int, lam: float) -> dict:
        problem = FlowProblem(self.system, lam, node)
        if self.graph.directed:
            solution = admm_solve_directed(problem, self.cache, self.opts)
        elif lam == 0:
            solution = solve_exact_lambda0(problem, self.exact_cache)
        else:
            solution = admm_solve(problem, self.cache, self.opts)
        wv = weights_from_flow(solution, self.system)
        sub = extract_support(solution, self.system, self.eps)
        return {
            "node": node,
            "lambda": lam,
            "converged": solution.converged,
            "iterations": solution.iterations,
            "weights": [
                {"label_node": i, "w": float(w)} for i, w in zip(self.system.labeled, wv.weights)
            ],
            "entropy": weight_entropy(wv),
            "subgraph": subgraph_to_dict(sub),
        }

    def predictions_payload(self, lam: float) -> dict:
        key = self._lambda_key(lam)
        with self._lock:
            hit = self._predictions.get(key)
        if hit is not None:
            return hit
        payload = predict_all(self.graph, lam, self.opts).to_dict()
        with self._lock:
            return self._predictions.setdefault(key, payload)


def create_app(
    graph: Graph | None,
    opts: AdmmOptions = AdmmOptions(),
    lambda_grid=DEFAULT_LAMBDA_GRID,
    eps: float = 1e-8,
) -> FastAPI:
    """Build the API app around one graph (None = not loaded, endpoints 503)."""
    app = FastAPI(title="flowssl explorer API")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )
    state = None if graph is None else SessionState(graph, opts, lambda_grid, eps)
    app.state.session = state

    def session() -> SessionState:
        if state is None:
            raise HTTPException(status_code=503, detail="no graph loaded")
        return state

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/graph/meta")
    def meta():
        st = session()
        g = st.graph
        return {
            "n": g.n,
            "m": g.m,
            "n_l": g.n_labeled,
            "directed": g.directed,
            "lambda_grid": st.lambda_grid,
        }

    @app.get("/nodes")
    def nodes():
        st = session()
        values = st.graph.label_map()
        return [
            {"id": i, "labeled": i in values, "value": values.get(i)}
            for i in range(st.graph.n)
        ]

    @app.get("/flow")
    def flow(node: int, lam: float = Query(alias="lambda")):
        st = session()
        if lam < 0:
            raise HTTPException(status_code=422, detail="lambda must be nonnegative")
        if not 0 <= node < st.graph.n:
            raise HTTPException(status_code=404, detail=f"unknown node {node}")
        if node in st.graph.labeled:
            raise HTTPException(status_code=422, detail=f"node {node} is labeled; pick an unlabeled node")
        try:
            return st.flow_payload(node, lam)
        except SolverError as exc:
            raise HTTPException(status_code=500, detail=f"solver failure: {exc}") from exc

    @app.get("/predictions")
    def predictions(lam: float = Query(alias="lambda")):
        st = session()
        if lam < 0:
            raise HTTPException(status_code=422, detail="lambda must be nonnegative")
        return st.predictions_payload(lam)

    return app
