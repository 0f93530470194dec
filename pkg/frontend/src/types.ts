/** Shapes of the JSON payloads served by the flowssl HTTP API. */

export interface GraphMeta {
  n: number;
  m: number;
  n_l: number;
  directed: boolean;
  lambda_grid: number[];
}

export interface NodeInfo {
  id: number;
  labeled: boolean;
  value: number | null;
}

export interface WeightEntry {
  label_node: number;
  w: number;
}

export type NodeRole = "source" | "interior" | "sink";

export interface SubgraphNode {
  id: number;
  role: NodeRole;
  weight?: number;
}

export interface SubgraphEdge {
  from: number;
  to: number;
  flow: number;
}

export interface SubgraphPayload {
  sink: number;
  lambda: number;
  nodes: SubgraphNode[];
  edges: SubgraphEdge[];
  topo_order: number[];
}

export interface FlowResponse {
  node: number;
  lambda: number;
  converged: boolean;
  iterations: number;
  weights: WeightEntry[];
  entropy: number;
  subgraph: SubgraphPayload;
}

export interface PredictionNode {
  id: number;
  value: number | null;
  entropy: number | null;
  converged: boolean;
}

export interface PredictionsResponse {
  lambda: number;
  nodes: PredictionNode[];
}
