/** Interactive decision tree: nested collapsible nodes showing each split's
 * predicate and every node's samples tuple (unsatisfactory count first).
 * Leaves are colored by their majority label; clicking one asks the host
 * to fetch and list its concrete instances. */

import type { LeafInstancesResponse, TreeDoc, TreeNode } from "../types.js";

export interface TreeViewHooks {
  onLeafClick?: (leafId: number) => void;
}

export function describeSplit(node: TreeNode & { kind: "split" }, branch: boolean): string {
  if (node.op === "eq") {
    return `${node.feature} = ${branch ? 1 : 0}`;
  }
  return branch
    ? `${node.feature} <= ${node.threshold}`
    : `${node.feature} > ${node.threshold}`;
}

function samplesText(samples: [number, number]): string {
  return `samples (${samples[0]}, ${samples[1]})`;
}

function renderNode(
  doc: Document, node: TreeNode, branchText: string, hooks: TreeViewHooks,
): HTMLElement {
  if (node.kind === "leaf") {
    const leaf = doc.createElement("div");
    leaf.className = `tree-leaf leaf-${node.label}`;
    leaf.dataset.leafId = String(node.id);
    leaf.dataset.samplesUnsat = String(node.samples[0]);
    leaf.dataset.samplesSat = String(node.samples[1]);
    leaf.textContent =
      `${branchText}[${node.label}] ${samplesText(node.samples)}`;
    leaf.addEventListener("click", () => hooks.onLeafClick?.(node.id));
    return leaf;
  }
  const details = doc.createElement("details");
  details.open = true;
  details.className = "tree-split";
  details.dataset.feature = node.feature;
  const summary = doc.createElement("summary");
  summary.textContent =
    `${branchText}${describeSplit(node, true)}? ${samplesText(node.samples)}`;
  details.appendChild(summary);
  details.appendChild(renderNode(doc, node.left, "yes: ", hooks));
  details.appendChild(renderNode(doc, node.right, "no: ", hooks));
  return details;
}

export function renderTree(doc: Document, tree: TreeDoc, hooks: TreeViewHooks = {}): HTMLElement {
  const host = doc.createElement("div");
  host.className = "tree-view";
  host.appendChild(renderNode(doc, tree.root, "", hooks));
  return host;
}

export function renderSkippedCluster(doc: Document, reason: string): HTMLElement {
  const note = doc.createElement("p");
  note.className = "skip-reason";
  note.textContent = `model skipped: ${reason}`;
  return note;
}

export function renderLeafInstances(
  doc: Document, body: LeafInstancesResponse,
): HTMLElement {
  const host = doc.createElement("div");
  host.className = "leaf-instances";
  const heading = doc.createElement("h4");
  heading.textContent =
    `Leaf ${body.leaf} of ${body.tree}: ${body.instances.length} instances`;
  host.appendChild(heading);
  const list = doc.createElement("ul");
  for (const inst of body.instances) {
    const item = doc.createElement("li");
    item.className = `leaf-instance label-${inst.label}`;
    item.dataset.instanceId = inst.id;
    const features = Object.entries(inst.features)
      .map(([name, value]) => `${name}=${value}`)
      .join(" ");
    item.textContent = `${inst.id} [${inst.label}] ${features}`;
    list.appendChild(item);
  }
  host.appendChild(list);
  return host;
}

/** Features tested anywhere in a rendered tree (for diffing and tests). */
export function featuresTested(tree: TreeDoc): Set<string> {
  const found = new Set<string>();
  const walk = (node: TreeNode): void => {
    if (node.kind === "split") {
      found.add(node.feature);
      walk(node.left);
      walk(node.right);
    }
  };
  walk(tree.root);
  return found;
}
