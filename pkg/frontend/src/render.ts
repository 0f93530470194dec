/** SVG rendering of a laid-out scene plus the side readouts. Sources are
 * outlined blue, the sink red; edge labels carry flow percents and every
 * node and weight row exposes full precision on hover. */

import { formatPercent, formatValue, fullPrecision, percent } from "./format.js";
import type { Scene } from "./layout.js";
import type { FlowResponse, NodeInfo, WeightEntry } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_RADIUS = 16;

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

export function renderScene(svg: SVGSVGElement, scene: Scene, labels: Map<number, string>): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${scene.width} ${scene.height}`);

  for (const edge of scene.edges) {
    const line = svgEl("line");
    line.setAttribute("x1", String(edge.x1));
    line.setAttribute("y1", String(edge.y1 + NODE_RADIUS));
    line.setAttribute("x2", String(edge.x2));
    line.setAttribute("y2", String(edge.y2 - NODE_RADIUS - 2));
    line.setAttribute("class", "flow-edge");
    line.setAttribute("marker-end", "url(#arrow)");
    svg.appendChild(line);

    const label = svgEl("text");
    label.setAttribute("x", String((edge.x1 + edge.x2) / 2 + 6));
    label.setAttribute("y", String((edge.y1 + edge.y2) / 2));
    label.setAttribute("class", "edge-label");
    label.textContent = edge.label;
    const tip = svgEl("title");
    tip.textContent = `flow ${fullPrecision(edge.flow)}`;
    label.appendChild(tip);
    svg.appendChild(label);
  }

  const defs = svgEl("defs");
  defs.innerHTML =
    '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" ' +
    'markerHeight="7" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z"/></marker>';
  svg.appendChild(defs);

  for (const node of scene.nodes) {
    const group = svgEl("g");
    group.setAttribute("class", `flow-node role-${node.role}`);
    const circle = svgEl("circle");
    circle.setAttribute("cx", String(node.x));
    circle.setAttribute("cy", String(node.y));
    circle.setAttribute("r", String(NODE_RADIUS));
    group.appendChild(circle);

    const text = svgEl("text");
    text.setAttribute("x", String(node.x));
    text.setAttribute("y", String(node.y + 4));
    text.setAttribute("text-anchor", "middle");
    text.textContent = labels.get(node.id) ?? String(node.id);
    group.appendChild(text);

    const tip = svgEl("title");
    tip.textContent =
      node.weight === undefined
        ? `node ${node.id} (${node.role})`
        : `node ${node.id} (${node.role}), weight ${fullPrecision(node.weight)}`;
    group.appendChild(tip);
    svg.appendChild(group);
  }
}

export function renderWeights(container: HTMLElement, weights: WeightEntry[]): void {
  container.innerHTML = "";
  const sorted = [...weights].sort((a, b) => b.w - a.w);
  for (const entry of sorted) {
    const row = document.createElement("div");
    row.className = "weight-row" + (entry.w > 0 ? "" : " weight-zero");
    row.title = fullPrecision(entry.w);
    row.textContent = `label ${entry.label_node}: ${formatPercent(entry.w)}`;
    container.appendChild(row);
  }
}

export function renderReadouts(
  supportEl: HTMLElement,
  entropyEl: HTMLElement,
  response: FlowResponse,
): void {
  supportEl.textContent = String(response.subgraph.edges.length);
  entropyEl.textContent = response.entropy.toFixed(4);
  entropyEl.title = fullPrecision(response.entropy);
}

export function renderNodeOptions(
  select: HTMLSelectElement,
  nodes: NodeInfo[],
  predictions: Map<number, number | null>,
): void {
  select.innerHTML = "";
  for (const node of nodes) {
    if (node.labeled) continue; // labeled nodes are sources, not sinks
    const option = document.createElement("option");
    option.value = String(node.id);
    const value = predictions.get(node.id) ?? null;
    option.textContent = `node ${node.id}  (f = ${formatValue(value)})`;
    select.appendChild(option);
  }
}

export function showError(banner: HTMLElement, message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

/** Exported for tests: the percent shown for a weight entry. */
export function displayedWeightPercent(entry: WeightEntry): number {
  return percent(entry.w);
}
