"""Performance view orchestration.

A view is one cell of the 2x2 analysis grid: content or component features,
drawn from crowd or system data, over topical clusters built from a chosen
term source. Building a view yields a PerformanceReport bundling the generic
model (trained on the whole dataset) with per-cluster satisfaction metrics,
trees, cross-validated accuracies, rankings, and highlight flags.

Reports are deterministic: the same dataset, spec, and seed always produce
byte-identical serialized output, at any parallelism level. Every report
carries a config hash so any view an analyst reaches interactively can be
reproduced from the command line.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping

from . import clustering, dtree, stats
from .dataset import (
    Dataset,
    build_feature_table,
    dataset_digest,
    failure_indicator,
    human_agreement,
    satisfaction_rate,
    validate,
)

REPORT_SCHEMA_VERSION = 1
CV_FOLDS = 5
TOP_TERMS = 5
DEFAULT_GOOD_THRESHOLD = 0.75
DEFAULT_BAD_THRESHOLD = 0.65


class ViewError(ValueError):
    pass


@dataclass(frozen=True)
class ViewSpec:
    """Everything that determines a report besides the dataset itself."""

    view_kind: str
    data_source: str
    clustering_source: str
    k: int = 30
    tree: dtree.TreeParams = dtree.TreeParams()
    merges: tuple[tuple[int, ...], ...] = ()
    good_threshold: float = DEFAULT_GOOD_THRESHOLD
    bad_threshold: float = DEFAULT_BAD_THRESHOLD

    def __post_init__(self):
        if self.view_kind not in ("content", "component"):
            raise ViewError(f"bad view kind {self.view_kind!r}")
        if self.data_source not in ("crowd", "system"):
            raise ViewError(f"bad data source {self.data_source!r}")
        if self.clustering_source not in ("crowd", "system"):
            raise ViewError(f"bad clustering source {self.clustering_source!r}")
        if self.k < 1:
            raise ViewError("k must be >= 1")
        object.__setattr__(
            self, "merges", tuple(tuple(sorted(set(g))) for g in self.merges)
        )


@dataclass(frozen=True)
class GenericBlock:
    tree: dtree.DecisionTree
    cv: dtree.CvResult
    ranking: stats.FeatureRanking


@dataclass(frozen=True)
class ClusterReport:
    cluster_id: int
    label: str
    size: int
    member_ids: tuple[str, ...]
    top_terms: tuple[str, ...]
    satisfaction_rate: float
    human_agreement: float | None
    highlight: str                       # good | bad | neutral
    ranking: stats.FeatureRanking
    tree: dtree.DecisionTree | None = None
    cv: dtree.CvResult | None = None
    skip_reason: str | None = None       # set when tree/cv were not computed


@dataclass(frozen=True)
class PerformanceReport:
    spec: ViewSpec
    dataset_digest: str
    provenance: str
    generic: GenericBlock
    clusters: tuple[ClusterReport, ...]
    all_clusters_accuracy: float
    config_hash: str
    weighting: str = "instance"
    schema_version: int = REPORT_SCHEMA_VERSION

    def cluster(self, cluster_id: int) -> ClusterReport:
        for c in self.clusters:
            if c.cluster_id == cluster_id:
                return c
        raise ViewError(f"unknown cluster {cluster_id}")


def highlight_for(rate: float, good: float, bad: float) -> str:
    if rate >= good:
        return "good"
    if rate <= bad:
        return "bad"
    return "neutral"


def spec_to_dict(spec: ViewSpec) -> dict:
    return {
        "view_kind": spec.view_kind,
        "data_source": spec.data_source,
        "clustering_source": spec.clustering_source,
        "k": spec.k,
        "merges": [list(g) for g in spec.merges],
        "good_threshold": spec.good_threshold,
        "bad_threshold": spec.bad_threshold,
        "tree": dtree.params_to_dict(spec.tree),
    }


def spec_from_dict(raw: dict) -> ViewSpec:
    return ViewSpec(
        view_kind=raw["view_kind"],
        data_source=raw["data_source"],
        clustering_source=raw["clustering_source"],
        k=int(raw["k"]),
        tree=dtree.params_from_dict(raw["tree"]),
        merges=tuple(tuple(g) for g in raw.get("merges", [])),
        good_threshold=float(raw["good_threshold"]),
        bad_threshold=float(raw["bad_threshold"]),
    )


def config_hash(digest: str, spec: ViewSpec) -> str:
    payload = json.dumps(
        {"dataset": digest, "spec": spec_to_dict(spec)},
        sort_keys=True, separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Dendrogram cache (clustering is the expensive, delta-invariant step)
# ---------------------------------------------------------------------------

_DENDRO_CACHE_LIMIT = 8
_dendro_cache: dict[tuple[str, str], tuple[clustering.Dendrogram, clustering.TermDocumentMatrix]] = {}
_dendro_lock = threading.Lock()


def _clustering_artifacts(dataset: Dataset, digest: str, source: str):
    key = (digest, source)
    with _dendro_lock:
        hit = _dendro_cache.get(key)
    if hit is not None:
        return hit
    matrix = clustering.build_term_matrix(dataset, source)
    dendrogram = clustering.agglomerate(matrix)
    with _dendro_lock:
        if len(_dendro_cache) >= _DENDRO_CACHE_LIMIT:
            _dendro_cache.pop(next(iter(_dendro_cache)))
        _dendro_cache[key] = (dendrogram, matrix)
    return dendrogram, matrix


# ---------------------------------------------------------------------------
# Build
# ---------------------------------------------------------------------------

def _eligibility(size: int, n_unsat: int, n_sat: int, params: dtree.TreeParams) -> str | None:
    """Reason a cluster is skipped for tree training and CV, or None."""
    if n_unsat == 0 or n_sat == 0:
        return "single-class cluster"
    if size < 2 * params.min_samples_leaf:
        return f"fewer than {2 * params.min_samples_leaf} instances"
    if size < CV_FOLDS:
        return f"fewer instances than {CV_FOLDS} folds"
    return None


def _cluster_key(spec: ViewSpec, cluster_id: int, member_ids: tuple[str, ...]) -> tuple:
    params = spec.tree
    return (
        cluster_id,
        member_ids,
        spec.view_kind,
        spec.data_source,
        spec.good_threshold,
        spec.bad_threshold,
        params.max_depth,
        params.min_samples_leaf,
        params.min_gain,
        tuple(sorted(params.excluded_features)),
        params.seed,
    )


def build_view(
    dataset: Dataset,
    spec: ViewSpec,
    jobs: int = 1,
    _reuse: Mapping[tuple, ClusterReport] | None = None,
) -> PerformanceReport:
    """Cluster the dataset, then report globally and per cluster."""
    check = validate(dataset)
    if not check.is_clean:
        raise ViewError(f"dataset is not analysis-ready:\n{check}")
    features = dataset.catalog.select(spec.view_kind, spec.data_source)
    if not features:
        raise ViewError(
            f"no catalog features for view ({spec.view_kind}, {spec.data_source})"
        )
    digest = dataset_digest(dataset)

    dendrogram, matrix = _clustering_artifacts(dataset, digest, spec.clustering_source)
    assignment = clustering.cut(dendrogram, spec.k)
    for group in spec.merges:
        assignment = clustering.merge_clusters(assignment, group)

    by_id = {inst.id: inst for inst in dataset.instances}
    y_all = failure_indicator(dataset.instances)
    reason = _eligibility(len(dataset), int(y_all.sum()), int(len(dataset) - y_all.sum()), spec.tree)
    if reason:
        raise ViewError(f"generic model ineligible: {reason}")
    table_all = build_feature_table(dataset, features)
    generic = GenericBlock(
        tree=dtree.train(table_all, y_all, spec.tree),
        cv=dtree.cross_validate(table_all, y_all, spec.tree, CV_FOLDS),
        ranking=stats.rank_features(
            dataset, spec, None, exclude=spec.tree.excluded_features
        ),
    )

    def build_cluster(cid: int) -> ClusterReport:
        member_ids = assignment.members(cid)
        if _reuse is not None:
            hit = _reuse.get(_cluster_key(spec, cid, member_ids))
            if hit is not None:
                return hit
        members = [by_id[i] for i in member_ids]
        rate = satisfaction_rate(members)
        voted = [m for m in members if m.votes]
        agreement = human_agreement(voted) if voted else None
        terms = clustering.top_terms(assignment, matrix, cid, TOP_TERMS)
        label = terms[0] if terms else f"cluster-{cid}"
        ranking = stats.rank_features(
            dataset, spec, members, exclude=spec.tree.excluded_features
        )
        y = failure_indicator(members)
        reason = _eligibility(len(members), int(y.sum()), int(len(members) - y.sum()), spec.tree)
        tree = cv = None
        if reason is None:
            sub = build_feature_table(dataset, features, members)
            tree = dtree.train(sub, y, spec.tree)
            cv = dtree.cross_validate(sub, y, spec.tree, CV_FOLDS)
        return ClusterReport(
            cluster_id=cid,
            label=label,
            size=len(members),
            member_ids=member_ids,
            top_terms=terms,
            satisfaction_rate=rate,
            human_agreement=agreement,
            highlight=highlight_for(rate, spec.good_threshold, spec.bad_threshold),
            ranking=ranking,
            tree=tree,
            cv=cv,
            skip_reason=reason,
        )

    cluster_ids = assignment.cluster_ids()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            built = list(pool.map(build_cluster, cluster_ids))
    else:
        built = [build_cluster(cid) for cid in cluster_ids]
    clusters = tuple(sorted(built, key=lambda c: c.cluster_id))

    trained = [c for c in clusters if c.cv is not None]
    if not trained:
        raise ViewError("all clusters are ineligible for tree training")
    weight = sum(c.size for c in trained)
    all_acc = math.fsum(c.size * c.cv.mean_accuracy for c in trained) / weight

    return PerformanceReport(
        spec=spec,
        dataset_digest=digest,
        provenance=dataset.provenance,
        generic=generic,
        clusters=clusters,
        all_clusters_accuracy=all_acc,
        config_hash=config_hash(digest, spec),
    )


# ---------------------------------------------------------------------------
# What-if
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WhatIfDelta:
    """Analyst modification: feature exclusions, cluster merges, or a new k."""

    excluded_features: frozenset[str] = frozenset()
    merges: tuple[tuple[int, ...], ...] = ()
    k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "excluded_features", frozenset(self.excluded_features))
        object.__setattr__(
            self, "merges", tuple(tuple(sorted(set(g))) for g in self.merges)
        )
        if self.k is not None and self.merges:
            raise ViewError("a delta cannot both change k and merge clusters")

    @property
    def is_empty(self) -> bool:
        return not self.excluded_features and not self.merges and self.k is None


def delta_to_dict(delta: WhatIfDelta) -> dict:
    return {
        "excluded_features": sorted(delta.excluded_features),
        "merges": [list(g) for g in delta.merges],
        "k": delta.k,
    }


def delta_from_dict(raw: dict) -> WhatIfDelta:
    return WhatIfDelta(
        excluded_features=frozenset(raw.get("excluded_features", [])),
        merges=tuple(tuple(g) for g in raw.get("merges", [])),
        k=raw.get("k"),
    )


def apply_delta(spec: ViewSpec, delta: WhatIfDelta) -> ViewSpec:
    """The spec that a from-scratch build equivalent to the delta would use."""
    params = spec.tree
    if delta.excluded_features:
        params = replace(
            params, excluded_features=params.excluded_features | delta.excluded_features
        )
    if delta.k is not None:
        # changing k renumbers clusters, so accumulated merges no longer apply
        return replace(spec, k=delta.k, merges=(), tree=params)
    return replace(spec, merges=spec.merges + delta.merges, tree=params)


def _validate_delta(report: PerformanceReport, dataset: Dataset, delta: WhatIfDelta) -> None:
    view_features = {
        d.name for d in dataset.catalog.select(report.spec.view_kind, report.spec.data_source)
    }
    for name in delta.excluded_features:
        if name not in view_features:
            raise ViewError(f"unknown feature {name!r} in delta")
    if delta.k is not None and not 1 <= delta.k <= len(dataset):
        raise ViewError(f"k={delta.k} out of range 1..{len(dataset)}")
    current = {c.cluster_id for c in report.clusters}
    for group in delta.merges:
        if len(group) < 1:
            raise ViewError("empty merge group in delta")
        for cid in group:
            if cid not in current:
                raise ViewError(f"unknown cluster {cid} in delta")
        current = (current - set(group)) | {min(group)}


def what_if(
    report: PerformanceReport,
    dataset: Dataset,
    delta: WhatIfDelta,
    jobs: int = 1,
) -> PerformanceReport:
    """Re-run the analysis under a delta.

    Equivalent to a from-scratch build with the modified spec; cluster
    reports untouched by the delta are reused rather than recomputed, and
    the dendrogram is shared through the cache.
    """
    if dataset_digest(dataset) != report.dataset_digest:
        raise ViewError("dataset does not match the report's digest")
    _validate_delta(report, dataset, delta)
    new_spec = apply_delta(report.spec, delta)
    reuse = {
        _cluster_key(report.spec, c.cluster_id, c.member_ids): c
        for c in report.clusters
    }
    return build_view(dataset, new_spec, jobs=jobs, _reuse=reuse)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    a_cluster: int
    b_cluster: int
    a_label: str
    b_label: str
    term_overlap: float
    a_rate: float
    b_rate: float
    rate_delta: float
    a_accuracy: float | None
    b_accuracy: float | None
    accuracy_delta: float | None


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    unmatched_a: tuple[int, ...]
    unmatched_b: tuple[int, ...]
    dataset_digest: str


def compare_views(a: PerformanceReport, b: PerformanceReport) -> ComparisonTable:
    """Align clusters across two reports by term overlap and tabulate deltas."""
    if a.dataset_digest != b.dataset_digest:
        raise ViewError("reports were built from different datasets")
    candidates = []
    for ca in a.clusters:
        for cb in b.clusters:
            sa, sb = set(ca.top_terms), set(cb.top_terms)
            union = sa | sb
            overlap = len(sa & sb) / len(union) if union else 0.0
            candidates.append((-overlap, ca.cluster_id, cb.cluster_id, ca, cb))
    candidates.sort(key=lambda t: (t[0], t[1], t[2]))
    used_a: set[int] = set()
    used_b: set[int] = set()
    rows = []
    for neg_overlap, _, _, ca, cb in candidates:
        if ca.cluster_id in used_a or cb.cluster_id in used_b:
            continue
        used_a.add(ca.cluster_id)
        used_b.add(cb.cluster_id)
        acc_a = ca.cv.mean_accuracy if ca.cv else None
        acc_b = cb.cv.mean_accuracy if cb.cv else None
        rows.append(ComparisonRow(
            a_cluster=ca.cluster_id,
            b_cluster=cb.cluster_id,
            a_label=ca.label,
            b_label=cb.label,
            term_overlap=-neg_overlap,
            a_rate=ca.satisfaction_rate,
            b_rate=cb.satisfaction_rate,
            rate_delta=ca.satisfaction_rate - cb.satisfaction_rate,
            a_accuracy=acc_a,
            b_accuracy=acc_b,
            accuracy_delta=(acc_a - acc_b) if acc_a is not None and acc_b is not None else None,
        ))
    rows.sort(key=lambda r: r.a_cluster)
    return ComparisonTable(
        rows=tuple(rows),
        unmatched_a=tuple(sorted(c.cluster_id for c in a.clusters if c.cluster_id not in used_a)),
        unmatched_b=tuple(sorted(c.cluster_id for c in b.clusters if c.cluster_id not in used_b)),
        dataset_digest=a.dataset_digest,
    )


def comparison_to_dict(table: ComparisonTable) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "view_comparison",
        "dataset_digest": table.dataset_digest,
        "rows": [
            {
                "a_cluster": r.a_cluster,
                "b_cluster": r.b_cluster,
                "a_label": r.a_label,
                "b_label": r.b_label,
                "term_overlap": r.term_overlap,
                "a_rate": r.a_rate,
                "b_rate": r.b_rate,
                "rate_delta": r.rate_delta,
                "a_accuracy": r.a_accuracy,
                "b_accuracy": r.b_accuracy,
                "accuracy_delta": r.accuracy_delta,
            }
            for r in table.rows
        ],
        "unmatched_a": list(table.unmatched_a),
        "unmatched_b": list(table.unmatched_b),
    }


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def _ranking_to_dict(ranking: stats.FeatureRanking) -> dict:
    return {
        "entries": [[name, mi] for name, mi in ranking.entries],
        "single_class": ranking.single_class,
    }


def _ranking_from_dict(raw: dict) -> stats.FeatureRanking:
    return stats.FeatureRanking(
        tuple((name, float(mi)) for name, mi in raw["entries"]),
        single_class=raw["single_class"],
    )


def _cluster_to_dict(c: ClusterReport) -> dict:
    return {
        "cluster_id": c.cluster_id,
        "label": c.label,
        "size": c.size,
        "member_ids": list(c.member_ids),
        "top_terms": list(c.top_terms),
        "satisfaction_rate": c.satisfaction_rate,
        "human_agreement": c.human_agreement,
        "highlight": c.highlight,
        "ranking": _ranking_to_dict(c.ranking),
        "tree": dtree.tree_to_dict(c.tree) if c.tree else None,
        "cv": dtree.cv_to_dict(c.cv) if c.cv else None,
        "skip_reason": c.skip_reason,
    }


def _cluster_from_dict(raw: dict) -> ClusterReport:
    return ClusterReport(
        cluster_id=int(raw["cluster_id"]),
        label=raw["label"],
        size=int(raw["size"]),
        member_ids=tuple(raw["member_ids"]),
        top_terms=tuple(raw["top_terms"]),
        satisfaction_rate=float(raw["satisfaction_rate"]),
        human_agreement=raw["human_agreement"],
        highlight=raw["highlight"],
        ranking=_ranking_from_dict(raw["ranking"]),
        tree=dtree.tree_from_dict(raw["tree"]) if raw["tree"] else None,
        cv=dtree.cv_from_dict(raw["cv"]) if raw["cv"] else None,
        skip_reason=raw["skip_reason"],
    )


def report_to_dict(report: PerformanceReport) -> dict:
    return {
        "schema_version": report.schema_version,
        "kind": "performance_report",
        "config_hash": report.config_hash,
        "dataset_digest": report.dataset_digest,
        "provenance": report.provenance,
        "weighting": report.weighting,
        "spec": spec_to_dict(report.spec),
        "generic": {
            "tree": dtree.tree_to_dict(report.generic.tree),
            "cv": dtree.cv_to_dict(report.generic.cv),
            "ranking": _ranking_to_dict(report.generic.ranking),
        },
        "clusters": [_cluster_to_dict(c) for c in report.clusters],
        "all_clusters_accuracy": report.all_clusters_accuracy,
    }


def report_from_dict(raw: dict) -> PerformanceReport:
    generic = GenericBlock(
        tree=dtree.tree_from_dict(raw["generic"]["tree"]),
        cv=dtree.cv_from_dict(raw["generic"]["cv"]),
        ranking=_ranking_from_dict(raw["generic"]["ranking"]),
    )
    return PerformanceReport(
        spec=spec_from_dict(raw["spec"]),
        dataset_digest=raw["dataset_digest"],
        provenance=raw["provenance"],
        generic=generic,
        clusters=tuple(_cluster_from_dict(c) for c in raw["clusters"]),
        all_clusters_accuracy=float(raw["all_clusters_accuracy"]),
        config_hash=raw["config_hash"],
        weighting=raw["weighting"],
        schema_version=int(raw["schema_version"]),
    )


def report_to_json_bytes(report: PerformanceReport) -> bytes:
    payload = json.dumps(report_to_dict(report), sort_keys=True, separators=(",", ":"))
    return payload.encode("utf-8") + b"\n"


def save_report(report: PerformanceReport, path: str) -> None:
    with open(path, "wb") as f:
        f.write(report_to_json_bytes(report))


def load_report(path: str) -> PerformanceReport:
    with open(path, "r", encoding="utf-8") as f:
        return report_from_dict(json.load(f))
