"""Static, self-contained HTML rendering of a performance report."""

from __future__ import annotations

import html

from .dtree import DecisionTree, Node, extract_rules
from .views import ClusterReport, PerformanceReport

_HIGHLIGHT_COLORS = {"good": "#d7f4d7", "bad": "#f8d0d0", "neutral": "#ffffff"}

_STYLE = """
body { font-family: sans-serif; margin: 2em; color: #222; }
table { border-collapse: collapse; margin: 1em 0; }
th, td { border: 1px solid #999; padding: 4px 10px; text-align: left; }
th { background: #eee; }
pre { background: #f6f6f6; padding: 8px; overflow-x: auto; }
.meta { color: #555; font-size: 0.9em; }
"""


def _fmt(value: float | None, digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _tree_text(tree: DecisionTree) -> str:
    lines: list[str] = []

    def walk(node: Node, indent: int, prefix: str) -> None:
        pad = "    " * indent
        samples = f"samples=({node.samples[0]}, {node.samples[1]})"
        if node.is_leaf:
            lines.append(f"{pad}{prefix}[{node.label}] {samples}")
            return
        split = node.split
        assert split is not None
        lines.append(f"{pad}{prefix}{split.describe(True)}? {samples}")
        walk(node.left, indent + 1, "yes: ")    # type: ignore[arg-type]
        walk(node.right, indent + 1, "no:  ")   # type: ignore[arg-type]

    walk(tree.root, 0, "")
    return "\n".join(lines)


def _cluster_section(cluster: ClusterReport) -> str:
    parts = [f"<h3>Cluster {cluster.cluster_id}: {html.escape(cluster.label)}</h3>"]
    if cluster.skip_reason:
        parts.append(
            f"<p class='meta'>model skipped: {html.escape(cluster.skip_reason)}</p>"
        )
    if cluster.tree is not None:
        rules = extract_rules(cluster.tree)
        parts.append("<pre>" + html.escape(_tree_text(cluster.tree)) + "</pre>")
        parts.append("<ul>")
        for rule in rules:
            parts.append(f"<li>{html.escape(rule.text)}</li>")
        parts.append("</ul>")
    ranked = ", ".join(
        f"{html.escape(name)} ({mi:.4f})" for name, mi in cluster.ranking.entries[:5]
    )
    parts.append(f"<p class='meta'>top features by MI: {ranked}</p>")
    return "\n".join(parts)


def render_html(report: PerformanceReport) -> str:
    """One shareable HTML page: overview table plus per-cluster details."""
    spec = report.spec
    rows = []
    for c in report.clusters:
        color = _HIGHLIGHT_COLORS[c.highlight]
        acc = _fmt(c.cv.mean_accuracy if c.cv else None)
        rows.append(
            f"<tr style='background:{color}'>"
            f"<td>{c.cluster_id}</td><td>{html.escape(c.label)}</td>"
            f"<td>{c.size}</td>"
            f"<td>{html.escape(', '.join(c.top_terms))}</td>"
            f"<td>{_fmt(c.satisfaction_rate)}</td>"
            f"<td>{_fmt(c.human_agreement)}</td>"
            f"<td>{acc}</td>"
            f"<td>{c.highlight}</td></tr>"
        )
    generic_rules = "".join(
        f"<li>{html.escape(r.text)}</li>" for r in extract_rules(report.generic.tree)
    )
    generic_ranking = ", ".join(
        f"{html.escape(name)} ({mi:.4f})"
        for name, mi in report.generic.ranking.entries[:10]
    )
    cluster_sections = "\n".join(_cluster_section(c) for c in report.clusters)
    return f"""<!DOCTYPE html>
<html><head><meta charset="utf-8">
<title>Performance view {spec.view_kind}/{spec.data_source}</title>
<style>{_STYLE}</style></head>
<body>
<h1>Performance view: {spec.view_kind} features, {spec.data_source} data</h1>
<p class="meta">config hash <code>{report.config_hash}</code>
 &middot; dataset <code>{report.dataset_digest[:12]}</code>
 &middot; provenance: {html.escape(report.provenance)}
 &middot; clustering on {spec.clustering_source} terms, k={spec.k}
 &middot; accuracy weighting: {report.weighting}</p>
<h2>Clusters</h2>
<table>
<tr><th>id</th><th>label</th><th>size</th><th>top terms</th>
<th>satisfaction</th><th>agreement</th><th>cv accuracy</th><th>highlight</th></tr>
{''.join(rows)}
</table>
<p>All-clusters accuracy (instance-weighted): <b>{report.all_clusters_accuracy:.3f}</b>
 &middot; generic model accuracy: <b>{report.generic.cv.mean_accuracy:.3f}</b></p>
<h2>Generic model</h2>
<pre>{html.escape(_tree_text(report.generic.tree))}</pre>
<ul>{generic_rules}</ul>
<p class="meta">top features by MI: {generic_ranking}</p>
<h2>Per-cluster models</h2>
{cluster_sections}
</body></html>
"""
