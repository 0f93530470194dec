/** Explorer bootstrap: load graph metadata, populate the node picker,
 * wire the lambda slider, and render flow DAGs as they arrive. */

import { ApiClient } from "./api.js";
import { formatLambda } from "./format.js";
import { buildScene } from "./layout.js";
import {
  renderNodeOptions,
  renderReadouts,
  renderScene,
  renderWeights,
  showError,
} from "./render.js";
import { ExplorerState } from "./state.js";
import type { FlowResponse } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://localhost:8000";
  const api = new ApiClient(baseUrl);

  const svg = byId<HTMLElement>("dag") as unknown as SVGSVGElement;
  const picker = byId<HTMLSelectElement>("node-picker");
  const slider = byId<HTMLInputElement>("lambda-slider");
  const lambdaReadout = byId<HTMLElement>("lambda-value");
  const banner = byId<HTMLElement>("error-banner");
  const weightsEl = byId<HTMLElement>("weights");
  const supportEl = byId<HTMLElement>("support-size");
  const entropyEl = byId<HTMLElement>("entropy");
  const metaEl = byId<HTMLElement>("meta");

  const onFlow = (response: FlowResponse) => {
    showError(banner, null);
    renderScene(svg, buildScene(response.subgraph), new Map());
    renderWeights(weightsEl, response.weights);
    renderReadouts(supportEl, entropyEl, response);
  };

  const state = new ExplorerState({
    fetchFlow: (node, lambda) => api.flow(node, lambda),
    onFlow,
    onError: (message) => showError(banner, `${message} – retrying may help`),
    onLoading: (loading) => document.body.classList.toggle("loading", loading),
  });

  try {
    const meta = await api.meta();
    metaEl.textContent =
      `${meta.n} nodes, ${meta.m} edges, ${meta.n_l} labeled` + (meta.directed ? ", directed" : "");
    const maxLambda = Math.max(2, ...meta.lambda_grid);
    slider.min = "0";
    slider.max = String(maxLambda);
    slider.step = String(maxLambda / 400);

    const nodes = await api.nodes();
    const primaryLambda = meta.lambda_grid.includes(0.1) ? 0.1 : meta.lambda_grid[0];
    const predictions = new Map<number, number | null>();
    try {
      const report = await api.predictions(primaryLambda);
      for (const entry of report.nodes) predictions.set(entry.id, entry.value);
    } catch {
      // picker still works without predicted values
    }
    renderNodeOptions(picker, nodes, predictions);

    picker.addEventListener("change", () => state.selectNode(Number(picker.value)));
    slider.addEventListener("input", () => {
      const lambda = Number(slider.value);
      lambdaReadout.textContent = formatLambda(lambda);
      state.setLambda(lambda);
    });

    if (picker.options.length > 0) {
      picker.selectedIndex = 0;
      state.selectNode(Number(picker.value));
    }
  } catch (err) {
    showError(banner, err instanceof Error ? err.message : String(err));
  }
}

void start();
