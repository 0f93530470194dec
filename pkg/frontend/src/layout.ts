/** Layered DAG layout driven by the subgraph's topological order.
 *
 * Each node's layer is the length of the longest path reaching it, so
 * every edge points strictly downward: sources sit in the top layers and
 * the sink at the bottom. No force simulation, no edge crossings
 * minimization; flow subgraphs are small enough that deterministic
 * placement reads better than a clever one.
 */

import { percent } from "./format.js";
import type { NodeRole, SubgraphPayload } from "./types.js";

export interface SceneNode {
  id: number;
  role: NodeRole;
  weight?: number;
  layer: number;
  x: number;
  y: number;
}

export interface SceneEdge {
  from: number;
  to: number;
  flow: number;
  label: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Scene {
  nodes: SceneNode[];
  edges: SceneEdge[];
  layerCount: number;
  width: number;
  height: number;
}

/** Longest-path layer per node; guarantees layer(from) < layer(to). */
export function layerAssignment(subgraph: SubgraphPayload): Map<number, number> {
  const layer = new Map<number, number>();
  for (const node of subgraph.nodes) layer.set(node.id, 0);
  const outgoing = new Map<number, Array<number>>();
  for (const edge of subgraph.edges) {
    const list = outgoing.get(edge.from) ?? [];
    list.push(edge.to);
    outgoing.set(edge.from, list);
  }
  for (const v of subgraph.topo_order) {
    const base = layer.get(v) ?? 0;
    for (const w of outgoing.get(v) ?? []) {
      layer.set(w, Math.max(layer.get(w) ?? 0, base + 1));
    }
  }
  return layer;
}

export function buildScene(
  subgraph: SubgraphPayload,
  width = 640,
  height = 480,
  margin = 48,
): Scene {
  const layers = layerAssignment(subgraph);
  const layerCount = Math.max(...layers.values()) + 1;

  const byLayer = new Map<number, number[]>();
  for (const node of subgraph.nodes) {
    const l = layers.get(node.id) ?? 0;
    const row = byLayer.get(l) ?? [];
    row.push(node.id);
    byLayer.set(l, row);
  }

  const yOf = (l: number) =>
    layerCount === 1 ? height / 2 : margin + (l * (height - 2 * margin)) / (layerCount - 1);

  const position = new Map<number, { x: number; y: number }>();
  for (const [l, ids] of byLayer) {
    ids.sort((a, b) => a - b);
    ids.forEach((id, i) => {
      position.set(id, { x: ((i + 1) * width) / (ids.length + 1), y: yOf(l) });
    });
  }

  const nodes: SceneNode[] = subgraph.nodes.map((n) => ({
    id: n.id,
    role: n.role,
    weight: n.weight,
    layer: layers.get(n.id) ?? 0,
    x: position.get(n.id)!.x,
    y: position.get(n.id)!.y,
  }));

  const edges: SceneEdge[] = subgraph.edges.map((e) => ({
    from: e.from,
    to: e.to,
    flow: e.flow,
    label: `${percent(e.flow)}`,
    x1: position.get(e.from)!.x,
    y1: position.get(e.from)!.y,
    x2: position.get(e.to)!.x,
    y2: position.get(e.to)!.y,
  }));

  return { nodes, edges, layerCount, width, height };
}

/** Sum of displayed (rounded) percents on the sink's incoming edges. */
export function sinkPercentTotal(scene: Scene, sink: number): number {
  return scene.edges
    .filter((e) => e.to === sink)
    .reduce((acc, e) => acc + Number(e.label), 0);
}
