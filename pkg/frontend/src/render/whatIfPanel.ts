/** What-if editor: feature exclusions, cluster merges picked in the table,
 * optional k change. After a successful run it shows the old-vs-new
 * accuracy and the root-split diff, both straight from the two reports. */

import type { Report, WhatIfDelta } from "../types.js";
import { numericCell } from "./format.js";

export interface WhatIfHooks {
  onSubmit?: () => void;
  onDeltaEdit?: (delta: WhatIfDelta) => void;
}

function rootFeature(report: Report): string {
  const root = report.generic.tree.root;
  return root.kind === "split" ? root.feature : "(single leaf)";
}

export function renderWhatIfPanel(
  doc: Document,
  delta: WhatIfDelta,
  options: {
    features: string[];
    inFlight: boolean;
    invalidDetail: string | null;
  },
  hooks: WhatIfHooks = {},
): HTMLElement {
  const host = doc.createElement("div");
  host.className = "whatif-panel";

  const excludeRow = doc.createElement("div");
  excludeRow.className = "exclude-row";
  const select = doc.createElement("select");
  select.className = "exclude-select";
  for (const feature of options.features) {
    const option = doc.createElement("option");
    option.value = feature;
    option.textContent = feature;
    select.appendChild(option);
  }
  const addButton = doc.createElement("button");
  addButton.className = "exclude-add";
  addButton.textContent = "exclude feature";
  addButton.addEventListener("click", () => {
    const feature = select.value;
    if (feature && !delta.excluded_features.includes(feature)) {
      hooks.onDeltaEdit?.({
        ...delta,
        excluded_features: [...delta.excluded_features, feature],
      });
    }
  });
  excludeRow.appendChild(select);
  excludeRow.appendChild(addButton);
  host.appendChild(excludeRow);

  const chips = doc.createElement("div");
  chips.className = "delta-chips";
  for (const feature of delta.excluded_features) {
    const chip = doc.createElement("span");
    chip.className = "chip chip-exclude";
    chip.dataset.feature = feature;
    chip.textContent = `- ${feature}`;
    if (options.invalidDetail && options.invalidDetail.includes(feature)) {
      chip.classList.add("chip-invalid");
    }
    chip.addEventListener("click", () =>
      hooks.onDeltaEdit?.({
        ...delta,
        excluded_features: delta.excluded_features.filter((f) => f !== feature),
      }),
    );
    chips.appendChild(chip);
  }
  for (const group of delta.merges) {
    const chip = doc.createElement("span");
    chip.className = "chip chip-merge";
    chip.textContent = `merge ${group.join("+")}`;
    if (options.invalidDetail &&
        group.some((cid) => options.invalidDetail!.includes(`cluster ${cid}`))) {
      chip.classList.add("chip-invalid");
    }
    chip.addEventListener("click", () =>
      hooks.onDeltaEdit?.({
        ...delta,
        merges: delta.merges.filter((g) => g !== group),
      }),
    );
    chips.appendChild(chip);
  }
  if (delta.k !== null) {
    const chip = doc.createElement("span");
    chip.className = "chip chip-k";
    chip.textContent = `k = ${delta.k}`;
    chip.addEventListener("click", () => hooks.onDeltaEdit?.({ ...delta, k: null }));
    chips.appendChild(chip);
  }
  host.appendChild(chips);

  if (options.invalidDetail) {
    const warning = doc.createElement("p");
    warning.className = "delta-invalid";
    warning.textContent = options.invalidDetail;
    host.appendChild(warning);
  }

  const submit = doc.createElement("button");
  submit.className = "whatif-submit";
  submit.textContent = options.inFlight ? "computing..." : "run what-if";
  submit.disabled = options.inFlight;
  submit.addEventListener("click", () => hooks.onSubmit?.());
  host.appendChild(submit);
  return host;
}

export function renderWhatIfDiff(
  doc: Document, previous: Report, current: Report,
): HTMLElement {
  const host = doc.createElement("div");
  host.className = "whatif-diff";
  const table = doc.createElement("table");
  const head = doc.createElement("tr");
  for (const title of ["", "previous", "current"]) {
    const th = doc.createElement("th");
    th.textContent = title;
    head.appendChild(th);
  }
  table.appendChild(head);

  const accuracyRow = doc.createElement("tr");
  accuracyRow.className = "diff-accuracy";
  const accuracyName = doc.createElement("td");
  accuracyName.textContent = "generic model accuracy";
  accuracyRow.appendChild(accuracyName);
  accuracyRow.appendChild(numericCell(doc, previous.generic.cv.mean_accuracy));
  accuracyRow.appendChild(numericCell(doc, current.generic.cv.mean_accuracy));
  table.appendChild(accuracyRow);

  const rootRow = doc.createElement("tr");
  rootRow.className = "diff-root";
  const rootName = doc.createElement("td");
  rootName.textContent = "generic root split";
  rootRow.appendChild(rootName);
  const prevRoot = doc.createElement("td");
  prevRoot.className = "diff-root-previous";
  prevRoot.textContent = rootFeature(previous);
  rootRow.appendChild(prevRoot);
  const curRoot = doc.createElement("td");
  curRoot.className = "diff-root-current";
  curRoot.textContent = rootFeature(current);
  rootRow.appendChild(curRoot);
  table.appendChild(rootRow);

  const hashRow = doc.createElement("tr");
  hashRow.className = "diff-hash";
  const hashName = doc.createElement("td");
  hashName.textContent = "config hash";
  hashRow.appendChild(hashName);
  for (const report of [previous, current]) {
    const cell = doc.createElement("td");
    cell.textContent = report.config_hash;
    hashRow.appendChild(cell);
  }
  table.appendChild(hashRow);

  host.appendChild(table);
  return host;
}
