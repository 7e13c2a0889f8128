/** Typed client for the report server. The UI computes no analytics itself:
 * every number it renders comes from one of these response bodies. */

import type {
  ClustersResponse,
  DendrogramResponse,
  LeafInstancesResponse,
  Report,
  Ranking,
  TreeDoc,
  WhatIfDelta,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function getJson<T>(path: string): Promise<T> {
  const res = await fetch(path, { headers: { Accept: "application/json" } });
  if (!res.ok) {
    const detail = await res.text().catch(() => "");
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export type WhatIfOutcome =
  | { kind: "report"; report: Report }
  | { kind: "pending"; configHash: string };

export class ApiClient {
  constructor(private base: string = "") {}

  fetchReport(): Promise<Report> {
    return getJson<Report>(`${this.base}/api/report`);
  }

  fetchClusters(): Promise<ClustersResponse> {
    return getJson<ClustersResponse>(`${this.base}/api/clusters`);
  }

  fetchClusterTree(clusterId: number): Promise<{ cluster_id: number; tree: TreeDoc }> {
    return getJson(`${this.base}/api/clusters/${clusterId}/tree`);
  }

  fetchClusterRanking(clusterId: number): Promise<Ranking & { cluster_id: number }> {
    return getJson(`${this.base}/api/clusters/${clusterId}/ranking`);
  }

  fetchLeafInstances(treeId: string, leafId: number): Promise<LeafInstancesResponse> {
    return getJson(`${this.base}/api/trees/${treeId}/leaves/${leafId}/instances`);
  }

  fetchDendrogram(): Promise<DendrogramResponse> {
    return getJson(`${this.base}/api/dendrogram`);
  }

  async fetchWhatIfStatus(configHash: string): Promise<WhatIfOutcome> {
    const res = await fetch(`${this.base}/api/whatif/${configHash}`, {
      headers: { Accept: "application/json" },
    });
    if (res.status === 202) {
      return { kind: "pending", configHash };
    }
    if (!res.ok) {
      const detail = await res.text().catch(() => "");
      throw new ApiError(res.status, detail);
    }
    return { kind: "report", report: (await res.json()) as Report };
  }

  async postWhatIf(delta: WhatIfDelta, datasetDigest?: string): Promise<WhatIfOutcome> {
    const body: Record<string, unknown> = {
      excluded_features: delta.excluded_features,
      merges: delta.merges,
      k: delta.k,
    };
    if (datasetDigest) body.dataset_digest = datasetDigest;
    const res = await fetch(`${this.base}/api/whatif`, {
      method: "POST",
      headers: { "Content-Type": "application/json", Accept: "application/json" },
      body: JSON.stringify(body),
    });
    if (res.status === 202) {
      const raw = (await res.json()) as { config_hash: string };
      return { kind: "pending", configHash: raw.config_hash };
    }
    if (!res.ok) {
      let detail = "";
      try {
        const raw = (await res.json()) as { detail?: string };
        detail = raw.detail ?? "";
      } catch {
        detail = await res.text().catch(() => "");
      }
      throw new ApiError(res.status, detail);
    }
    return { kind: "report", report: (await res.json()) as Report };
  }
}
