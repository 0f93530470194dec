"""Closed-form reference methods the flow solver is checked against.

These deliberately use a separate code path (generic sparse solves on
Laplacian blocks, plain Dijkstra) so that agreement with the flow solver
is meaningful evidence of correctness rather than shared bugs.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import Graph, GraphError, Laplacian


@dataclass
class LinearSystemSolve:
    """The harmonic-extension linear system and its solution."""

    L_uu: sp.csr_matrix
    L_ul: sp.csr_matrix
    f_l: np.ndarray
    f_u: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.L_uu @ self.f_u + self.L_ul @ self.f_l)))


def _split_labels(labels: dict, n: int):
    labeled = sorted(labels)
    for i in labeled:
        if not 0 <= i < n:
            raise GraphError(f"labeled node {i} out of range")
    unlabeled = [i for i in range(n) if i not in labels]
    f_l = np.array([labels[i] for i in labeled], dtype=float)
    return labeled, unlabeled, f_l


def _edge_objective_laplacian(L: sp.spmatrix) -> sp.csr_matrix:
    """Zero-row-sum Laplacian carrying the edge-wise objective of ``L``.

    The harmonic objective sum_edges -L_ij (f_i - f_j)^2 sees only the
    symmetrized off-diagonal entries; normalized Laplacians' diagonals do
    not enter it. Rebuilding Deg - W from the implied edge weights
    w_ij = -(L_ij + L_ji)/2 makes the matrix solve agree with that
    objective for every normalization.
    """
    S = ((L + L.T) * 0.5).tocsr()
    W = -S.copy().tolil()
    W.setdiag(0.0)
    W = W.tocsr()
    if W.nnz and W.data.min() < -1e-12:
        raise GraphError("Laplacian has positive off-diagonal entries; edge weights would be negative")
    W.data = np.maximum(W.data, 0.0)
    deg = np.asarray(W.sum(axis=1)).ravel()
    return (sp.diags(deg) - W).tocsr()


def hf_system(lap: Laplacian, labels: dict) -> LinearSystemSolve:
    """Harmonic extension of the labels: solve L_uu f_u = -L_ul f_l on the
    edge-objective Laplacian (see :func:`_edge_objective_laplacian`)."""
    Ls = _edge_objective_laplacian(lap.matrix)
    labeled, unlabeled, f_l = _split_labels(labels, lap.n)
    if not labeled:
        raise GraphError("no labeled nodes")
    if not unlabeled:
        raise GraphError("all nodes are labeled; nothing to predict")
    L_uu = Ls[unlabeled, :][:, unlabeled].tocsc()
    L_ul = Ls[unlabeled, :][:, labeled].tocsr()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            f_u = spla.spsolve(L_uu, -(L_ul @ f_l))
    except RuntimeError as exc:
        raise GraphError(f"L_uu is singular (component without labels?): {exc}") from exc
    f_u = np.atleast_1d(f_u)
    if not np.all(np.isfinite(f_u)):
        raise GraphError("L_uu is singular: some unlabeled component has no labeled node")
    return LinearSystemSolve(L_uu=L_uu.tocsr(), L_ul=L_ul, f_l=f_l, f_u=f_u)


def hf_solve(lap: Laplacian, labels: dict) -> np.ndarray:
    """Harmonic-function predictions at the unlabeled nodes.

    Parameters
    ----------
    lap : Laplacian
    labels : dict
        node id -> value.

    Returns
    -------
    ndarray aligned with the unlabeled nodes in ascending id order.
    """
    return hf_system(lap, labels).f_u


def lr_solve(lap: Laplacian, labels: dict, mu: float) -> np.ndarray:
    """Quadratic label regularization over the whole graph.

    Minimizes (1/mu) sum_labeled (f_i - value_i)^2 plus the harmonic
    smoothness term (edge contributions counted in both directions), and
    returns f at every node. As mu -> 0 the labels harden and the result
    approaches :func:`hf_solve`.
    """
    if mu <= 0:
        raise GraphError(f"mu must be positive, got {mu}")
    n = lap.n
    labeled, unlabeled, _ = _split_labels(labels, n)
    if not labeled:
        raise GraphError("no labeled nodes")
    Ls = _edge_objective_laplacian(lap.matrix)
    e_l = np.zeros(n)
    fhat = np.zeros(n)
    for i, v in labels.items():
        e_l[i] = 1.0
        fhat[i] = v
    system = (sp.diags(e_l / mu) + 2.0 * Ls).tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        f = np.atleast_1d(spla.spsolve(system, e_l * fhat / mu))
    if not np.all(np.isfinite(f)):
        raise GraphError("singular system: some component has no labeled node")
    return f


def nearest_labeled(graph: Graph, sink: int) -> tuple:
    """Closest labeled node to ``sink`` by shortest-path edge cost.

    Dijkstra over the edge costs; on directed graphs edges are walked
    against their direction, so the distance is that of a directed path
    from the labeled node to the sink. Ties resolve to the smallest
    labeled node id.

    Returns
    -------
    (labeled node id, distance)
    """
    if sink in graph.labeled:
        raise GraphError(f"sink {sink} is labeled")
    adj: dict = {i: [] for i in range(graph.n)}
    for t, h, c in graph.edges:
        adj[h].append((t, c))
        if not graph.directed:
            adj[t].append((h, c))
    dist = {sink: 0.0}
    heap = [(0.0, sink)]
    done = set()
    while heap:
        d0, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w, c in adj[v]:
            nd = d0 + c
            if nd < dist.get(w, np.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    best = None
    for i in graph.labeled:
        if i in dist:
            key = (dist[i], i)
            if best is None or key < best:
                best = key
    if best is None:
        raise GraphError(f"sink {sink} is unreachable from every labeled node")
    return best[1], best[0]
