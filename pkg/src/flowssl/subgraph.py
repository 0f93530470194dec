"""Flow subgraphs: the support of an optimal flow, oriented positively.

Keeping only edges whose flow magnitude exceeds a threshold and flipping
the ones with negative flow yields a subgraph in which every edge carries
positive flow toward the sink. That subgraph is provably acyclic, so it
has a topological order and lays out cleanly as a top-to-bottom DAG.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

from .solver import FlowSolution, SolverError


class CyclicFlowError(RuntimeError):
    """A directed cycle in an extracted subgraph; indicates a failed solve."""


@dataclass(frozen=True)
class FlowSubgraph:
    """Support of one sink's optimal flow, reoriented to positive flows."""

    sink: int
    lam: float
    edges: tuple  # (from, to, flow > 0)
    sources: tuple  # (labeled node, weight drawn from it), ascending by node
    topo_order: tuple

    @property
    def nodes(self) -> tuple:
        seen = set()
        for f, t, _ in self.edges:
            seen.add(f)
            seen.add(t)
        seen.add(self.sink)
        return tuple(sorted(seen))

    def source_map(self) -> dict:
        return dict(self.sources)

    def role(self, node: int) -> str:
        if node == self.sink:
            return "sink"
        return "source" if node in self.source_map() else "interior"

    def net_flow(self, node: int) -> float:
        """Out-flow minus in-flow at a node; ~0 interior, -1 at the sink."""
        out = sum(f for a, _, f in self.edges if a == node)
        inn = sum(f for _, b, f in self.edges if b == node)
        return out - inn


def extract_support(solution: FlowSolution, system, eps: float = 1e-8) -> FlowSubgraph:
    """Extract the positively-oriented support of a converged flow.

    Edges with |flow| > eps are kept; an edge whose stored-orientation flow
    is negative appears flipped. Labeled nodes with positive net out-flow
    over the kept edges are recorded as sources with their weights.
    """
    if not solution.converged:
        raise SolverError(f"cannot extract support of an unconverged solve (sink {solution.sink})")
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = solution.z
    edges = []
    for e, (tail, head) in enumerate(system.orientation):
        flow = z[e]
        if abs(flow) <= eps:
            continue
        if flow > 0:
            edges.append((tail, head, float(flow)))
        else:
            edges.append((head, tail, float(-flow)))
    edges = tuple(sorted(edges))
    sources = []
    for node in system.labeled:
        out = sum(f for a, _, f in edges if a == node)
        inn = sum(f for _, b, f in edges if b == node)
        if out - inn > 0:
            sources.append((node, out - inn))
    sub = FlowSubgraph(
        sink=solution.sink,
        lam=solution.lam,
        edges=edges,
        sources=tuple(sorted(sources)),
        topo_order=(),
    )
    order = verify_dag(sub)
    return FlowSubgraph(
        sink=sub.sink, lam=sub.lam, edges=sub.edges, sources=sub.sources, topo_order=tuple(order)
    )


def verify_dag(subgraph: FlowSubgraph) -> list:
    """Topologically sort the subgraph (Kahn's algorithm, smallest node id
    first). Raises :class:`CyclicFlowError` naming a cycle if one exists;
    the extraction invariant says it never should for an optimal flow."""
    nodes = set(subgraph.nodes)
    succ = {v: [] for v in nodes}
    indeg = {v: 0 for v in nodes}
    for a, b, _ in subgraph.edges:
        succ[a].append(b)
        indeg[b] += 1
    ready = [v for v in nodes if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) < len(nodes):
        raise CyclicFlowError(f"flow subgraph contains a cycle: {_find_cycle(succ, indeg)}")
    return order


def _find_cycle(succ, indeg) -> list:
    remaining = {v for v, k in indeg.items() if k > 0}
    start = min(remaining)
    path = [start]
    seen = {start}
    v = start
    while True:
        v = min(w for w in succ[v] if w in remaining)
        if v in seen:
            return path[path.index(v) :] + [v]
        path.append(v)
        seen.add(v)


def _percent(flow: float) -> int:
    # Round half up: 0.665 -> 67, matching displayed-percent conventions.
    return int(math.floor(flow * 100.0 + 0.5))


def export_dot(subgraph: FlowSubgraph, node_labels: dict | None = None, rankdir: str = "TB") -> str:
    """Render the subgraph as Graphviz DOT.

    Edge labels are flows in percent (rounded half up); the sink is
    outlined red, sources blue. ``node_labels`` substitutes display text
    for node ids. Output is deterministic: nodes ascending, edges sorted.
    """
    node_labels = node_labels or {}
    lines = ["digraph flow {", f"  rankdir={rankdir};"]
    for v in subgraph.nodes:
        attrs = []
        if v == subgraph.sink:
            attrs.append("color=red, penwidth=2.0")
        elif subgraph.role(v) == "source":
            attrs.append("color=blue, penwidth=2.0")
        if v in node_labels:
            attrs.append(f'label="{node_labels[v]}"')
        body = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {v}{body};")
    for a, b, f in sorted(subgraph.edges):
        lines.append(f'  {a} -> {b} [label="{_percent(f)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def subgraph_to_dict(subgraph: FlowSubgraph) -> dict:
    weights = subgraph.source_map()
    return {
        "sink": subgraph.sink,
        "lambda": subgraph.lam,
        "nodes": [
            {"id": v, "role": subgraph.role(v)}
            | ({"weight": weights[v]} if v in weights else {})
            for v in subgraph.nodes
        ],
        "edges": [{"from": a, "to": b, "flow": f} for a, b, f in subgraph.edges],
        "topo_order": list(subgraph.topo_order),
    }


def export_json(subgraph: FlowSubgraph) -> str:
    """Serialize for the explorer UI; see :func:`subgraph_from_json`."""
    return json.dumps(subgraph_to_dict(subgraph), indent=1)


def subgraph_from_json(text: str) -> FlowSubgraph:
    data = json.loads(text)
    return FlowSubgraph(
        sink=data["sink"],
        lam=data["lambda"],
        edges=tuple((e["from"], e["to"], e["flow"]) for e in data["edges"]),
        sources=tuple((n["id"], n["weight"]) for n in data["nodes"] if n["role"] == "source"),
        topo_order=tuple(data["topo_order"]),
    )
