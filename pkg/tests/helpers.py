"""Shared graph generators for the test suite."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as csgraph_dijkstra

from flowssl import Graph, build_knn_graph, costs_from_laplacian, laplacian, with_costs, with_labels


def path_graph(values=(-1.0, 1.0), n=4, cost=1.0) -> Graph:
    """Path 0-1-...-(n-1) with the endpoints labeled."""
    edges = [(i, i + 1, cost) for i in range(n - 1)]
    return Graph(n, edges, labeled=(0, n - 1), values=values)


def g1() -> Graph:
    return path_graph(n=3)


def g2() -> Graph:
    return path_graph(n=4)


def random_connected_graph(rng, n=20, extra=None, n_labeled=3, cost_range=(0.1, 10.0)) -> Graph:
    """Random spanning tree plus extra edges; random labeled subset."""
    if extra is None:
        extra = n
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a = order[rng.integers(0, i)]
        b = order[i]
        edges.add((min(a, b), max(a, b)))
    tries = 0
    while len(edges) < n - 1 + extra and tries < 50 * extra:
        a, b = rng.integers(0, n, size=2)
        tries += 1
        if a != b:
            edges.add((min(a, b), max(a, b)))
    edges = sorted(edges)
    costs = rng.uniform(*cost_range, size=len(edges))
    labeled = rng.choice(n, size=n_labeled, replace=False)
    values = rng.uniform(-1, 1, size=n_labeled)
    return Graph(
        n,
        [(int(a), int(b), float(c)) for (a, b), c in zip(edges, costs)],
        labeled=tuple(int(i) for i in sorted(labeled)),
        values=tuple(float(v) for v in values),
    )


def two_gaussians(seed, n=200, dim=10, n_labeled=50, shift=1.5):
    """Two spherical Gaussians shifted apart along the first axis.

    Returns (points, true_labels, labeled_ids). Half of each class's
    labeled quota is drawn from each Gaussian.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    pts = rng.normal(size=(n, dim))
    pts[:half, 0] -= shift
    pts[half:, 0] += shift
    truth = np.array([-1.0] * half + [1.0] * (n - half))
    per_class = n_labeled // 2
    labeled = np.concatenate(
        [
            rng.choice(half, size=per_class, replace=False),
            half + rng.choice(n - half, size=n_labeled - per_class, replace=False),
        ]
    )
    return pts, truth, np.sort(labeled)


def recipe_graph(points, labeled_ids, values, k=20, normalization="symmetric") -> Graph:
    """kNN graph with flow costs matched to the chosen Laplacian."""
    graph = build_knn_graph(points, k)
    graph = with_labels(graph, [int(i) for i in labeled_ids], [float(v) for v in values])
    lap = laplacian(graph, normalization)
    return with_costs(graph, costs_from_laplacian(lap))


def labeled_distances(graph: Graph, sink: int) -> dict:
    """Shortest-path cost from each labeled node to the sink (scipy's
    Dijkstra, independent of the package's own)."""
    n = graph.n
    tails = [t for t, _, _ in graph.edges]
    heads = [h for _, h, _ in graph.edges]
    costs = [c for _, _, c in graph.edges]
    adj = sp.csr_matrix((costs, (tails, heads)), shape=(n, n))
    dist = csgraph_dijkstra(adj, directed=graph.directed, indices=sink)
    return {i: float(dist[i]) for i in graph.labeled}
