/** Cluster overview: one row per cluster with size, top terms, satisfaction
 * rate, highlight color, and CV accuracy, all verbatim from the server. */

import type { ClusterSummary } from "../types.js";
import { numericCell, textCell } from "./format.js";

export interface ClusterTableHooks {
  onSelect?: (clusterId: number) => void;
  onToggleMerge?: (clusterId: number, checked: boolean) => void;
}

export function renderClusterTable(
  doc: Document,
  clusters: ClusterSummary[],
  hooks: ClusterTableHooks = {},
): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "cluster-table";
  const head = doc.createElement("tr");
  for (const title of ["merge", "id", "label", "size", "top terms",
                       "satisfaction", "agreement", "cv accuracy"]) {
    const th = doc.createElement("th");
    th.textContent = title;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const cluster of clusters) {
    const row = doc.createElement("tr");
    row.className = `cluster-row hl-${cluster.highlight}`;
    row.dataset.clusterId = String(cluster.cluster_id);

    const mergeCell = doc.createElement("td");
    const checkbox = doc.createElement("input");
    checkbox.type = "checkbox";
    checkbox.className = "merge-pick";
    checkbox.addEventListener("change", () =>
      hooks.onToggleMerge?.(cluster.cluster_id, checkbox.checked),
    );
    mergeCell.appendChild(checkbox);
    row.appendChild(mergeCell);

    const idCell = textCell(doc, String(cluster.cluster_id));
    idCell.className = "cluster-id";
    row.appendChild(idCell);
    row.appendChild(textCell(doc, cluster.label));

    const sizeCell = textCell(doc, String(cluster.size));
    sizeCell.className = "cluster-size";
    sizeCell.dataset.value = String(cluster.size);
    row.appendChild(sizeCell);

    row.appendChild(textCell(doc, cluster.top_terms.join(", ")));

    const rateCell = numericCell(doc, cluster.satisfaction_rate);
    rateCell.className = "cluster-rate";
    row.appendChild(rateCell);

    const agreementCell = numericCell(doc, cluster.human_agreement);
    agreementCell.className = "cluster-agreement";
    row.appendChild(agreementCell);

    const accuracyCell = numericCell(doc, cluster.cv_accuracy);
    accuracyCell.className = "cluster-accuracy";
    if (cluster.skip_reason) {
      accuracyCell.title = `skipped: ${cluster.skip_reason}`;
    }
    row.appendChild(accuracyCell);

    row.addEventListener("click", (event) => {
      if ((event.target as HTMLElement).classList.contains("merge-pick")) return;
      hooks.onSelect?.(cluster.cluster_id);
    });
    table.appendChild(row);
  }
  return table;
}
