import { describe, expect, it } from "vitest";

import { buildScene, layerAssignment, sinkPercentTotal } from "../src/layout";
import type { FlowResponse } from "../src/types";

import flow0 from "./fixtures/g2_flow_lambda0.json";
import flow2 from "./fixtures/g2_flow_lambda2.json";

const sub0 = (flow0 as FlowResponse).subgraph;
const sub2 = (flow2 as FlowResponse).subgraph;

describe("layerAssignment", () => {
  it("puts every edge strictly downward", () => {
    const layers = layerAssignment(sub0);
    for (const edge of sub0.edges) {
      expect(layers.get(edge.from)!).toBeLessThan(layers.get(edge.to)!);
    }
  });

  it("keeps sources above the sink", () => {
    const layers = layerAssignment(sub0);
    const sinkLayer = layers.get(sub0.sink)!;
    for (const node of sub0.nodes) {
      if (node.role === "source") {
        expect(layers.get(node.id)!).toBeLessThan(sinkLayer);
      }
    }
  });

  it("single edge gives two layers", () => {
    const layers = layerAssignment(sub2);
    expect(new Set(layers.values()).size).toBe(2);
  });
});

describe("buildScene", () => {
  it("renders no upward edges", () => {
    for (const sub of [sub0, sub2]) {
      const scene = buildScene(sub);
      for (const edge of scene.edges) {
        expect(edge.y1).toBeLessThan(edge.y2);
      }
    }
  });

  it("labels edges with half-up percents", () => {
    const scene = buildScene(sub0);
    const labels = scene.edges.map((e) => e.label).sort();
    expect(labels).toEqual(["33", "33", "67"]);
  });

  it("keeps nodes inside the viewport", () => {
    const scene = buildScene(sub0, 640, 480, 48);
    for (const node of scene.nodes) {
      expect(node.x).toBeGreaterThan(0);
      expect(node.x).toBeLessThan(640);
      expect(node.y).toBeGreaterThanOrEqual(48);
      expect(node.y).toBeLessThanOrEqual(480 - 48);
    }
  });

  it("sink in-flow percents add to ~100", () => {
    for (const sub of [sub0, sub2]) {
      const total = sinkPercentTotal(buildScene(sub), sub.sink);
      expect(Math.abs(total - 100)).toBeLessThanOrEqual(2);
    }
  });
});
