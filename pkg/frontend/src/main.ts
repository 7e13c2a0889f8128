/** Application wiring: fetch the base report, render every section, and
 * funnel all interactions through the store so the screen always shows a
 * single config hash worth of data. */

import { ApiClient } from "./api.js";
import { Store, emptyDelta } from "./state.js";
import { renderClusterTable } from "./render/clusterTable.js";
import { renderDendrogram } from "./render/dendrogram.js";
import {
  renderLeafInstances,
  renderSkippedCluster,
  renderTree,
} from "./render/treeView.js";
import { renderWhatIfDiff, renderWhatIfPanel } from "./render/whatIfPanel.js";
import type { ClusterSummary, Report } from "./types.js";

const api = new ApiClient("");
const store = new Store(api);
const mergePicks = new Set<number>();

function summariesOf(report: Report): ClusterSummary[] {
  return report.clusters.map((c) => ({
    cluster_id: c.cluster_id,
    label: c.label,
    size: c.size,
    top_terms: c.top_terms,
    satisfaction_rate: c.satisfaction_rate,
    human_agreement: c.human_agreement,
    cv_accuracy: c.cv ? c.cv.mean_accuracy : null,
    highlight: c.highlight,
    skip_reason: c.skip_reason,
  }));
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing container #${id}`);
  return el;
}

async function showLeaf(treeId: string, leafId: number): Promise<void> {
  const body = await api.fetchLeafInstances(treeId, leafId);
  const host = byId("leaf-instances");
  host.replaceChildren(renderLeafInstances(document, body));
}

function renderAll(): void {
  const state = store.current;
  const banner = byId("error-banner");
  if (state.error) {
    banner.textContent = state.error;
    banner.hidden = false;
  } else {
    banner.hidden = true;
  }
  const hashEl = byId("config-hash");
  hashEl.textContent = state.report ? state.report.config_hash : "(no report)";

  const tableHost = byId("cluster-table");
  const treeHost = byId("tree-explorer");
  const whatIfHost = byId("whatif-panel");
  const diffHost = byId("whatif-diff");
  const dendroHost = byId("dendrogram");

  if (!state.report) {
    tableHost.replaceChildren();
    treeHost.replaceChildren();
    whatIfHost.replaceChildren();
    diffHost.replaceChildren();
    return;
  }
  const report = state.report;

  tableHost.replaceChildren(renderClusterTable(document, summariesOf(report), {
    onSelect: (clusterId) => {
      store.selectCluster(clusterId);
    },
    onToggleMerge: (clusterId, checked) => {
      if (checked) mergePicks.add(clusterId);
      else mergePicks.delete(clusterId);
    },
  }));

  const summary = byId("report-summary");
  summary.replaceChildren();
  const line = document.createElement("p");
  line.textContent =
    `view ${report.spec.view_kind}/${report.spec.data_source}, ` +
    `clustered on ${report.spec.clustering_source} terms, k=${report.spec.k} | ` +
    `all-clusters accuracy ${report.all_clusters_accuracy.toFixed(3)} | ` +
    `generic accuracy ${report.generic.cv.mean_accuracy.toFixed(3)}`;
  summary.appendChild(line);

  treeHost.replaceChildren();
  const heading = document.createElement("h3");
  const selected = state.selectedCluster !== null
    ? report.clusters.find((c) => c.cluster_id === state.selectedCluster)
    : null;
  if (selected) {
    heading.textContent = `Cluster ${selected.cluster_id}: ${selected.label}`;
    treeHost.appendChild(heading);
    if (selected.tree) {
      treeHost.appendChild(renderTree(document, selected.tree, {
        onLeafClick: (leafId) =>
          void showLeaf(`cluster-${selected.cluster_id}`, leafId),
      }));
    } else {
      treeHost.appendChild(
        renderSkippedCluster(document, selected.skip_reason ?? "not trained"));
    }
  } else {
    heading.textContent = "Generic model";
    treeHost.appendChild(heading);
    treeHost.appendChild(renderTree(document, report.generic.tree, {
      onLeafClick: (leafId) => void showLeaf("generic", leafId),
    }));
  }

  const features = report.generic.tree.feature_names;
  whatIfHost.replaceChildren(renderWhatIfPanel(
    document,
    state.pendingDelta,
    {
      features,
      inFlight: state.inFlight,
      invalidDetail: state.invalidDetail,
    },
    {
      onDeltaEdit: (delta) => store.setDelta(delta),
      onSubmit: () => void store.submitWhatIf(),
    },
  ));
  const mergeButton = document.createElement("button");
  mergeButton.id = "merge-selected";
  mergeButton.textContent = "merge checked clusters";
  mergeButton.addEventListener("click", () => {
    if (mergePicks.size >= 2) {
      const delta = store.current.pendingDelta;
      store.setDelta({
        ...delta,
        merges: [...delta.merges, [...mergePicks].sort((a, b) => a - b)],
      });
      mergePicks.clear();
    }
  });
  whatIfHost.appendChild(mergeButton);

  diffHost.replaceChildren();
  if (state.previous) {
    diffHost.appendChild(renderWhatIfDiff(document, state.previous, report));
  }
}

async function boot(): Promise<void> {
  store.subscribe(renderAll);
  await store.load();
  try {
    const dendro = await api.fetchDendrogram();
    byId("dendrogram").replaceChildren(renderDendrogram(document, dendro));
  } catch {
    // dendrogram is auxiliary; the error banner already reflects load failures
  }
}

void boot();

export { store, api, summariesOf, emptyDelta };
