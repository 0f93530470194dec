"""File formats: graph JSON, point-cloud CSV, labels CSV.

The graph JSON schema is fixed (field names are load-bearing for golden
files):

    {"nodes": n, "directed": bool,
     "edges": [{"tail": int, "head": int, "cost": float}, ...],
     "labels": [{"node": int, "value": float}, ...]}
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .graph import Graph, GraphError


def graph_to_dict(graph: Graph) -> dict:
    return {
        "nodes": graph.n,
        "directed": graph.directed,
        "edges": [{"tail": t, "head": h, "cost": c} for t, h, c in graph.edges],
        "labels": [{"node": i, "value": v} for i, v in zip(graph.labeled, graph.values)],
    }


def graph_from_dict(data: dict) -> Graph:
    try:
        edges = tuple((e["tail"], e["head"], e["cost"]) for e in data["edges"])
        labels = [(lbl["node"], lbl["value"]) for lbl in data["labels"]]
        return Graph(
            n=data["nodes"],
            edges=edges,
            labeled=tuple(i for i, _ in labels),
            values=tuple(v for _, v in labels),
            directed=bool(data["directed"]),
        )
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from exc


def save_graph(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh, indent=1)
        fh.write("\n")


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: not valid JSON ({exc})") from exc
    return graph_from_dict(data)


def load_points_csv(path) -> np.ndarray:
    """Read a point cloud: one row per point, numeric columns, no header."""
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise GraphError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(i for i, cell in enumerate(row) if not _is_float(cell))
                raise GraphError(f"{path}: row {lineno}, column {bad + 1} is not numeric: {row[bad]!r}") from None
    if not rows:
        raise GraphError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def load_labels_csv(path) -> list:
    """Read labels: rows of (point_row_index, value)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise GraphError(f"{path}: row {lineno} has {len(row)} columns, expected 2 (index,value)")
            try:
                idx = int(row[0])
                val = float(row[1])
            except ValueError:
                raise GraphError(f"{path}: row {lineno} is not (int,float): {row!r}") from None
            out.append((idx, val))
    if not out:
        raise GraphError(f"{path}: no label rows")
    return out


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
