/** View state: which node is selected, the current lambda, and the
 * debounced fetch pipeline feeding the renderer. Slider moves are
 * debounced (150 ms) so dragging does not hammer the solver; responses
 * arriving out of order are dropped via a sequence counter. */

import type { FlowResponse } from "./types.js";

export const SLIDER_DEBOUNCE_MS = 150;

export interface StateHooks {
  fetchFlow(node: number, lambda: number): Promise<FlowResponse>;
  onFlow(response: FlowResponse): void;
  onError(message: string): void;
  onLoading?(loading: boolean): void;
}

export class ExplorerState {
  selectedNode: number | null = null;
  lambda: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;
  private cache = new Map<string, FlowResponse>();

  constructor(
    private hooks: StateHooks,
    initialLambda = 0,
    private debounceMs = SLIDER_DEBOUNCE_MS,
  ) {
    this.lambda = initialLambda;
  }

  /** Picking a node refetches immediately. */
  selectNode(id: number): void {
    this.selectedNode = id;
    this.cancelPending();
    void this.refresh();
  }

  /** Slider movement: coalesce until the hand stops. */
  setLambda(lambda: number): void {
    this.lambda = lambda;
    if (this.selectedNode === null) return;
    this.cancelPending();
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.refresh();
    }, this.debounceMs);
  }

  private cancelPending(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private async refresh(): Promise<void> {
    if (this.selectedNode === null) return;
    const node = this.selectedNode;
    const lambda = this.lambda;
    const key = `${node}:${lambda}`;
    const ticket = ++this.seq;

    const cached = this.cache.get(key);
    if (cached) {
      this.hooks.onFlow(cached);
      return;
    }
    this.hooks.onLoading?.(true);
    try {
      const response = await this.hooks.fetchFlow(node, lambda);
      this.cache.set(key, response);
      if (ticket === this.seq) this.hooks.onFlow(response);
    } catch (err) {
      if (ticket === this.seq) this.hooks.onError(err instanceof Error ? err.message : String(err));
    } finally {
      if (ticket === this.seq) this.hooks.onLoading?.(false);
    }
  }
}
