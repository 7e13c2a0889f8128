/** View state: exactly one server config hash is "active" at any time, and
 * everything rendered corresponds to it. One what-if request may be in
 * flight; responses that no longer match the request generation (because
 * the active report changed meanwhile) are discarded, never rendered. */

import { ApiError, type WhatIfOutcome } from "./api.js";
import type { Report, WhatIfDelta } from "./types.js";

/** The slice of the API client the store depends on. */
export interface ReportApi {
  fetchReport(): Promise<Report>;
  postWhatIf(delta: WhatIfDelta, datasetDigest?: string): Promise<WhatIfOutcome>;
  fetchWhatIfStatus(configHash: string): Promise<WhatIfOutcome>;
}

export function emptyDelta(): WhatIfDelta {
  return { excluded_features: [], merges: [], k: null };
}

export interface StoreState {
  report: Report | null;
  previous: Report | null;       // report before the last successful what-if
  pendingDelta: WhatIfDelta;
  selectedCluster: number | null;
  selectedLeaf: { treeId: string; leafId: number } | null;
  inFlight: boolean;
  error: string | null;          // server unreachable or request failed
  invalidDetail: string | null;  // 4xx detail for the delta editor
}

type Listener = (state: StoreState) => void;

export class Store {
  private state: StoreState = {
    report: null,
    previous: null,
    pendingDelta: emptyDelta(),
    selectedCluster: null,
    selectedLeaf: null,
    inFlight: false,
    error: null,
    invalidDetail: null,
  };
  private listeners: Listener[] = [];
  private generation = 0;

  constructor(private api: ReportApi) {}

  get current(): StoreState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private patch(changes: Partial<StoreState>): void {
    this.state = { ...this.state, ...changes };
    for (const l of this.listeners) l(this.state);
  }

  get configHash(): string | null {
    return this.state.report?.config_hash ?? null;
  }

  async load(): Promise<void> {
    this.generation += 1;
    const gen = this.generation;
    try {
      const report = await this.api.fetchReport();
      if (gen !== this.generation) return; // superseded
      this.patch({ report, previous: null, error: null, invalidDetail: null });
    } catch (err) {
      if (gen !== this.generation) return;
      // unreachable server: visible error, no stale data
      this.patch({ report: null, error: String(err) });
    }
  }

  setDelta(delta: WhatIfDelta): void {
    this.patch({ pendingDelta: delta, invalidDetail: null });
  }

  selectCluster(clusterId: number | null): void {
    this.patch({ selectedCluster: clusterId, selectedLeaf: null });
  }

  selectLeaf(treeId: string, leafId: number): void {
    this.patch({ selectedLeaf: { treeId, leafId } });
  }

  deltaIsEmpty(): boolean {
    const d = this.state.pendingDelta;
    return d.excluded_features.length === 0 && d.merges.length === 0 && d.k === null;
  }

  /** Submit the pending delta. Returns false if a request is already in
   * flight (the UI allows one at a time) or there is nothing to submit. */
  async submitWhatIf(): Promise<boolean> {
    if (this.state.inFlight || !this.state.report || this.deltaIsEmpty()) {
      return false;
    }
    const gen = ++this.generation;
    const base = this.state.report;
    this.patch({ inFlight: true, invalidDetail: null });
    try {
      let outcome = await this.api.postWhatIf(
        this.state.pendingDelta, base.dataset_digest
      );
      while (outcome.kind === "pending") {
        await new Promise((resolve) => setTimeout(resolve, 250));
        if (gen !== this.generation) return false;
        outcome = await this.api.fetchWhatIfStatus(outcome.configHash);
      }
      if (gen !== this.generation) return false; // stale: active state moved on
      this.patch({
        report: outcome.report,
        previous: base,
        pendingDelta: emptyDelta(),
        inFlight: false,
        selectedLeaf: null,
      });
      return true;
    } catch (err) {
      if (gen !== this.generation) return false;
      if (err instanceof ApiError && err.status >= 400 && err.status < 500) {
        this.patch({ inFlight: false, invalidDetail: err.detail });
      } else {
        this.patch({ inFlight: false, error: String(err) });
      }
      return false;
    }
  }
}
