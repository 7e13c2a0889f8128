/** Dendrogram as a collapsible merge list: each row is one merge (node ids,
 * distance, resulting size), latest merges first so the coarse structure
 * reads from the top. */

import type { DendrogramResponse } from "../types.js";

export function renderDendrogram(
  doc: Document, dendrogram: DendrogramResponse, initiallyVisible = 12,
): HTMLElement {
  const host = doc.createElement("div");
  host.className = "dendrogram";
  const n = dendrogram.leaves.length;
  const info = doc.createElement("p");
  info.className = "dendrogram-info";
  info.textContent =
    `${n} instances, ${dendrogram.merges.length} merges; node ids < ${n} are instances`;
  host.appendChild(info);

  const list = doc.createElement("ol");
  list.className = "merge-list";
  const rows = dendrogram.merges
    .map((merge, step) => ({ merge, step }))
    .reverse();
  rows.forEach(({ merge, step }, position) => {
    const item = doc.createElement("li");
    item.className = "merge-row";
    item.dataset.step = String(step);
    item.textContent =
      `node ${n + step} = ${merge.left} + ${merge.right}` +
      ` @ ${merge.distance.toFixed(4)} (size ${merge.size})`;
    if (position >= initiallyVisible) item.classList.add("merge-hidden");
    list.appendChild(item);
  });
  host.appendChild(list);

  if (rows.length > initiallyVisible) {
    const toggle = doc.createElement("button");
    toggle.className = "merge-toggle";
    toggle.textContent = `show all ${rows.length} merges`;
    let expanded = false;
    toggle.addEventListener("click", () => {
      expanded = !expanded;
      list.querySelectorAll(".merge-row").forEach((el, position) => {
        if (position >= initiallyVisible) {
          el.classList.toggle("merge-hidden", !expanded);
        }
      });
      toggle.textContent = expanded
        ? "collapse merge list"
        : `show all ${rows.length} merges`;
    });
    host.appendChild(toggle);
  }
  return host;
}
