/** Typed client for the flowssl HTTP API. GET-only: the UI never mutates
 * server state. Concurrent requests for the same (node, lambda) are
 * deduplicated onto one in-flight promise. */

import type { FlowResponse, GraphMeta, NodeInfo, PredictionsResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiClient {
  private inflight = new Map<string, Promise<unknown>>();

  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) {
      let detail = "request failed";
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // no JSON body; keep the generic detail
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private dedup<T>(key: string, make: () => Promise<T>): Promise<T> {
    const running = this.inflight.get(key);
    if (running) return running as Promise<T>;
    const promise = make().finally(() => this.inflight.delete(key));
    this.inflight.set(key, promise);
    return promise;
  }

  meta(): Promise<GraphMeta> {
    return this.getJson("/graph/meta");
  }

  nodes(): Promise<NodeInfo[]> {
    return this.getJson("/nodes");
  }

  flow(node: number, lambda: number): Promise<FlowResponse> {
    return this.dedup(`flow:${node}:${lambda}`, () =>
      this.getJson(`/flow?node=${node}&lambda=${lambda}`),
    );
  }

  predictions(lambda: number): Promise<PredictionsResponse> {
    return this.dedup(`pred:${lambda}`, () => this.getJson(`/predictions?lambda=${lambda}`));
  }
}
