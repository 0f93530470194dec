"""Graph construction and linear-algebra views of it.

A :class:`Graph` is a plain edge list with positive per-edge costs plus an
ordered set of labeled nodes. From it we derive the objects the solvers
work with: similarity Laplacians (:func:`laplacian`), flow costs matched
to a Laplacian (:func:`costs_from_laplacian`), and the signed incidence
blocks used by the flow problems (:func:`incidence_system`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

# Similarities this small are treated as "effectively disconnected" but kept
# finite so downstream 1/s costs never overflow to inf.
_MIN_SIMILARITY = 1e-300

NORMALIZATIONS = ("unnormalized", "symmetric", "markov")


class GraphError(ValueError):
    """Invalid graph structure or graph-derived data."""


@dataclass(frozen=True)
class Graph:
    """Edge-list graph with per-edge costs and labeled nodes.

    Parameters
    ----------
    n : int
        Node count; node ids are 0..n-1.
    edges : sequence of (tail, head, cost)
        Costs are positive dissimilarities (low cost = strong connection).
    labeled : sequence of int
        Ids of labeled nodes, in a fixed order that also fixes the order
        of prediction-weight vectors.
    values : sequence of float
        Label values, aligned with ``labeled``.
    directed : bool
        If True, edges are one-way and flows on them must be nonnegative.
    """

    n: int
    edges: tuple = ()
    labeled: tuple = ()
    values: tuple = ()
    directed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(t), int(h), float(c)) for t, h, c in self.edges))
        object.__setattr__(self, "labeled", tuple(int(i) for i in self.labeled))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        self._validate()

    def _validate(self):
        if self.n <= 0:
            raise GraphError("graph needs at least one node")
        seen = set()
        for t, h, c in self.edges:
            if not (0 <= t < self.n and 0 <= h < self.n):
                raise GraphError(f"edge ({t},{h}) out of range for n={self.n}")
            if t == h:
                raise GraphError(f"self-loop at node {t}")
            if not (np.isfinite(c) and c > 0):
                raise GraphError(f"edge ({t},{h}) has non-positive cost {c}")
            key = (t, h) if self.directed else (min(t, h), max(t, h))
            if key in seen:
                raise GraphError(f"duplicate edge between {t} and {h}")
            seen.add(key)
        if len(set(self.labeled)) != len(self.labeled):
            raise GraphError("labeled node ids must be distinct")
        if len(self.labeled) != len(self.values):
            raise GraphError("labeled ids and values must have equal length")
        for i, v in zip(self.labeled, self.values):
            if not 0 <= i < self.n:
                raise GraphError(f"labeled node {i} out of range")
            if not np.isfinite(v):
                raise GraphError(f"label value at node {i} is not finite")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def n_labeled(self) -> int:
        return len(self.labeled)

    @property
    def unlabeled(self) -> tuple:
        labeled = set(self.labeled)
        return tuple(i for i in range(self.n) if i not in labeled)

    def costs(self) -> np.ndarray:
        return np.array([c for _, _, c in self.edges], dtype=float)

    def similarities(self) -> np.ndarray:
        return 1.0 / self.costs()

    def label_map(self) -> dict:
        return dict(zip(self.labeled, self.values))


def with_labels(graph: Graph, nodes: Sequence[int], values: Sequence[float]) -> Graph:
    """Return a copy of ``graph`` with the given labeled nodes and values."""
    return Graph(graph.n, graph.edges, tuple(nodes), tuple(values), graph.directed)


def with_costs(graph: Graph, costs: Sequence[float]) -> Graph:
    """Return a copy of ``graph`` with per-edge costs replaced (same order)."""
    costs = np.asarray(costs, dtype=float)
    if costs.shape != (graph.m,):
        raise GraphError(f"expected {graph.m} costs, got {costs.shape}")
    edges = tuple((t, h, float(c)) for (t, h, _), c in zip(graph.edges, costs))
    return Graph(graph.n, edges, graph.labeled, graph.values, graph.directed)


def build_knn_graph(points, k: int, sigma: float | None = None) -> Graph:
    """Build a symmetrized k-nearest-neighbor graph from a point cloud.

    Each point is connected to its ``k`` nearest neighbors; the edge set is
    the union over both endpoints, so (i, j) is an edge iff j is among i's
    k nearest or vice versa. Edge similarity is a Gaussian RBF

        s_ij = exp(-||p_i - p_j||^2 / (2 sigma^2))

    and the stored edge cost is 1/s_ij. When ``sigma`` is None it is set to
    one third of the mean distance between a point and its tenth nearest
    neighbor; with fewer than 10 neighbors available, the ceil(k/2)-th
    neighbor is used instead.

    Parameters
    ----------
    points : array-like, shape (n, dim)
    k : int
        Neighbor count, 1 <= k < n.
    sigma : float, optional
        RBF bandwidth override.

    Returns
    -------
    Graph
        Undirected, unlabeled graph with costs 1/s_ij.
    """
    pts = None
    try:
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 2:
            pts = arr
    except (ValueError, TypeError):
        pass
    if pts is None:
        dims = sorted({np.atleast_1d(np.asarray(r, dtype=float)).shape[-1] for r in list(points)})
        if len(dims) > 1:
            raise GraphError(f"points have mixed dimensions {dims}")
        raise GraphError("points must be a 2-D array of vectors")
    n = pts.shape[0]
    if k < 1:
        raise GraphError("k must be >= 1")
    if k >= n:
        raise GraphError(f"k={k} requires at least k+1={k + 1} points, got {n}")

    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # Stable sort so equidistant neighbors resolve by node id; self is
    # dropped explicitly because duplicate points can sort ahead of it.
    order = np.argsort(dist, axis=1, kind="stable")
    neighbors = [[int(j) for j in order[i] if j != i] for i in range(n)]

    if sigma is None:
        ref = 10 if n - 1 >= 10 else int(np.ceil(k / 2))
        sigma = float(np.mean([dist[i, nb[ref - 1]] for i, nb in enumerate(neighbors)])) / 3.0
    if sigma <= 0:
        sigma = 1.0

    pairs = set()
    for i in range(n):
        for j in neighbors[i][:k]:
            pairs.add((min(i, j), max(i, j)))

    edges = []
    for i, j in sorted(pairs):
        s = np.exp(-dist[i, j] ** 2 / (2.0 * sigma**2))
        s = min(max(s, _MIN_SIMILARITY), 1.0)
        edges.append((i, j, 1.0 / s))
    return Graph(n, tuple(edges))


@dataclass(frozen=True)
class Laplacian:
    """A graph Laplacian together with the edge order it was built from."""

    matrix: sp.csr_matrix
    kind: str
    edges: tuple  # (tail, head) per original edge, same order as the graph

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def laplacian(graph: Graph, normalization: str = "unnormalized") -> Laplacian:
    """Build the similarity Laplacian of an undirected graph.

    Edge similarities are 1/cost. With W the symmetric similarity matrix
    and Deg = diag(W 1):

    - ``unnormalized``:  Deg - W
    - ``symmetric``:     Deg^{-1/2} (Deg - W) Deg^{-1/2}
    - ``markov``:        Deg^{-1} (Deg - W)

    Raises
    ------
    GraphError
        If the graph is directed, the tag is unknown, or a node is
        isolated (zero degree).
    """
    if graph.directed:
        raise GraphError("Laplacians are defined here for undirected graphs")
    if normalization not in NORMALIZATIONS:
        raise GraphError(f"unknown normalization {normalization!r}; expected one of {NORMALIZATIONS}")
    n = graph.n
    s = graph.similarities()
    tails = np.array([t for t, _, _ in graph.edges], dtype=int)
    heads = np.array([h for _, h, _ in graph.edges], dtype=int)
    W = sp.csr_matrix(
        (np.concatenate([s, s]), (np.concatenate([tails, heads]), np.concatenate([heads, tails]))),
        shape=(n, n),
    )
    deg = np.asarray(W.sum(axis=1)).ravel()
    if np.any(deg == 0):
        isolated = int(np.argmax(deg == 0))
        raise GraphError(f"node {isolated} is isolated (zero degree)")
    L = sp.diags(deg) - W
    if normalization == "symmetric":
        dinv = sp.diags(1.0 / np.sqrt(deg))
        L = dinv @ L @ dinv
    elif normalization == "markov":
        L = sp.diags(1.0 / deg) @ L
    return Laplacian(L.tocsr(), normalization, tuple((t, h) for t, h, _ in graph.edges))


def costs_from_laplacian(lap: Laplacian) -> np.ndarray:
    """Flow costs that make the lambda=0 flow solve match the Laplacian's
    harmonic predictions: d_ij = -2 / (L_ij + L_ji) per edge.

    Works for asymmetric (markov) Laplacians because the harmonic objective
    only sees the symmetrized off-diagonal entries.
    """
    L = lap.matrix
    costs = np.empty(len(lap.edges))
    for e, (i, j) in enumerate(lap.edges):
        pair = L[i, j] + L[j, i]
        if pair >= 0:
            raise GraphError(f"edge ({i},{j}) has L_ij + L_ji = {pair} >= 0; no flow-cost match")
        costs[e] = -2.0 / pair
    return costs


@dataclass(frozen=True)
class IncidenceSystem:
    """Signed incidence blocks of a graph, split by the label partition.

    Columns are edges in graph order; each column has +1 at the tail row
    and -1 at the head row of the stacked [A_l; A_u]. Rows of ``A_l``
    follow the graph's labeled order (so weight vectors align with it);
    rows of ``A_u`` are the unlabeled nodes in ascending id order.
    """

    A_l: sp.csr_matrix
    A_u: sp.csr_matrix
    d: np.ndarray
    orientation: tuple  # (tail, head) actually used per edge
    labeled: tuple
    unlabeled: tuple
    directed: bool
    _row_of: dict = field(repr=False, default_factory=dict)

    @property
    def m(self) -> int:
        return self.A_u.shape[1]

    @property
    def n_unlabeled(self) -> int:
        return self.A_u.shape[0]

    def row_of(self, node: int) -> int:
        try:
            return self._row_of[node]
        except KeyError:
            raise KeyError(f"node {node} is not unlabeled") from None

    def sink_vector(self, sink: int) -> np.ndarray:
        """Right-hand side for conservation constraints: a unit in-flow at
        the sink, zero net flow at every other unlabeled node."""
        b = np.zeros(self.n_unlabeled)
        b[self.row_of(sink)] = -1.0
        return b


def incidence_system(graph: Graph) -> IncidenceSystem:
    """Build the labeled/unlabeled incidence blocks of a graph.

    Undirected edges get the deterministic orientation tail=min(id),
    head=max(id); directed edges keep their stored direction.
    """
    if not graph.labeled:
        raise GraphError("graph has no labeled nodes")
    n, m = graph.n, graph.m
    orientation = []
    rows, cols, vals = [], [], []
    for e, (t, h, _) in enumerate(graph.edges):
        if not graph.directed and t > h:
            t, h = h, t
        orientation.append((t, h))
        rows += [t, h]
        cols += [e, e]
        vals += [1.0, -1.0]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, m))
    labeled = list(graph.labeled)
    unlabeled = [i for i in range(n) if i not in set(labeled)]
    return IncidenceSystem(
        A_l=A[labeled, :],
        A_u=A[unlabeled, :],
        d=graph.costs(),
        orientation=tuple(orientation),
        labeled=tuple(labeled),
        unlabeled=tuple(unlabeled),
        directed=graph.directed,
        _row_of={node: r for r, node in enumerate(unlabeled)},
    )


def add_anchor_nodes(graph: Graph, mu: float) -> Graph:
    """Soft-label transform: move each label onto a new anchor node.

    Every labeled node i becomes unlabeled and gains a single edge to a
    fresh anchor node carrying its value. The anchor edge has similarity
    1/(2 mu), i.e. cost 2 mu, so that a lambda=0 flow solve on the result
    reproduces quadratic label regularization with strength mu on the
    original graph.
    """
    if mu <= 0:
        raise GraphError(f"mu must be positive, got {mu}")
    if not graph.labeled:
        raise GraphError("graph has no labeled nodes to anchor")
    edges = list(graph.edges)
    anchors = []
    for idx, node in enumerate(graph.labeled):
        anchor = graph.n + idx
        anchors.append(anchor)
        if graph.directed:
            edges.append((anchor, node, 2.0 * mu))
            edges.append((node, anchor, 2.0 * mu))
        else:
            edges.append((node, anchor, 2.0 * mu))
    return Graph(graph.n + graph.n_labeled, tuple(edges), tuple(anchors), graph.values, graph.directed)


def to_directed(graph: Graph, forward_multiplier: Callable[[int, int], float] | None = None) -> Graph:
    """Double every undirected edge into forward and backward directed edges.

    ``forward_multiplier(tail, head)`` scales the cost of the edge going
    tail -> head; the default keeps costs unchanged in both directions.
    """
    if graph.directed:
        raise GraphError("graph is already directed")
    mult = forward_multiplier or (lambda i, j: 1.0)
    edges = []
    for t, h, c in graph.edges:
        for a, b in ((t, h), (h, t)):
            factor = float(mult(a, b))
            if not (np.isfinite(factor) and factor > 0):
                raise GraphError(f"multiplier for edge {a}->{b} must be positive, got {factor}")
            edges.append((a, b, c * factor))
    return Graph(graph.n, tuple(edges), graph.labeled, graph.values, directed=True)
