"""Synthetic component-pipeline dataset generator with planted ground truth.

Builds desk-scale evaluation datasets that look like the output of a
multi-component analysis pipeline: topical content terms reported by crowd
workers, a noisy detector re-reporting those terms with configurable
precision/recall plus optional cross-topic confusion, per-instance
component quality features, confidence aggregates, and satisfaction labels
sampled from planted failure rules. The accompanying manifest records every
planting decision so analyses can be scored against known truth.

All randomness comes from the seeded generator in :mod:`failscope.rng`;
identical configs produce identical datasets on any platform. Draw order
per instance is fixed: crowd terms, detection, confidences, caption and
sentence quality counts, label, votes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

from .dataset import (
    SATISFACTORY,
    UNSATISFACTORY,
    Dataset,
    FeatureCatalog,
    FeatureDescriptor,
    Instance,
    aggregate_confidences,
    dataset_digest,
)
from .rng import Rng

CONFIG_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

_OPS = {
    "le": lambda v, t: v <= t,
    "lt": lambda v, t: v < t,
    "ge": lambda v, t: v >= t,
    "gt": lambda v, t: v > t,
    "eq": lambda v, t: v == t,
}


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class TopicSpec:
    name: str
    terms: tuple[str, ...]
    n_instances: int


@dataclass(frozen=True)
class DetectorSpec:
    """Per-topic detection noise for system terms relative to crowd terms.

    ``confusion`` steers false positives toward specific other topics'
    vocabularies (topic name -> sampling weight); when empty, false
    positives draw uniformly from all terms outside the instance's own
    crowd list.
    """

    precision: float = 1.0
    recall: float = 1.0
    confusion: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ConfidenceModel:
    """Score distributions by detection correctness state."""

    correct_mean: float = 0.85
    correct_spread: float = 0.08
    false_mean: float = 0.40
    false_spread: float = 0.12


Condition = tuple[str, str, float]  # (feature name, op, value)


@dataclass(frozen=True)
class FailureRule:
    """Conjunction of feature predicates that triggers failure with a probability."""

    conditions: tuple[Condition, ...]
    failure_prob: float
    scope: str | None = None  # topic name; None applies everywhere


@dataclass(frozen=True)
class SynthConfig:
    topics: tuple[TopicSpec, ...]
    seed: int
    detectors: Mapping[str, DetectorSpec] = field(default_factory=dict)
    confidence: ConfidenceModel = ConfidenceModel()
    rules: tuple[FailureRule, ...] = ()
    background_failure_prob: float = 0.0
    term_presence_prob: float = 0.85
    language_error_prob: float = 0.2
    n_workers: int = 5
    vote_noise: float = 0.15
    with_votes: bool = True
    distractor_terms: tuple[str, ...] = ("background",)


def _check_prob(value: float, what: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise SynthError(f"{what} must be in [0, 1], got {value}")


def _vocabulary(cfg: SynthConfig) -> tuple[str, ...]:
    vocab: set[str] = set(cfg.distractor_terms)
    for t in cfg.topics:
        vocab.update(t.terms)
    return tuple(sorted(vocab))


def feature_names(cfg: SynthConfig) -> tuple[str, ...]:
    return tuple(d.name for d in build_catalog(cfg))


def build_catalog(cfg: SynthConfig) -> FeatureCatalog:
    descs: list[FeatureDescriptor] = []
    for term in _vocabulary(cfg):
        descs.append(FeatureDescriptor(
            f"has_{term}", "content", "crowd", "binary",
            f"crowd workers listed the term '{term}'",
        ))
        descs.append(FeatureDescriptor(
            f"detected_{term}", "content", "system", "binary",
            f"the detector reported the term '{term}'",
        ))
    descs.append(FeatureDescriptor(
        "term_count", "content", "crowd", "count", "number of crowd-listed terms"))
    descs.append(FeatureDescriptor(
        "detected_term_count", "content", "system", "count", "number of detected terms"))
    descs.append(FeatureDescriptor(
        "detector_precision", "component", "crowd", "continuous",
        "fraction of detected terms confirmed by the crowd list"))
    descs.append(FeatureDescriptor(
        "detector_recall", "component", "crowd", "continuous",
        "fraction of crowd terms the detector found"))
    descs.append(FeatureDescriptor(
        "satisfactory_captions", "component", "crowd", "count",
        "how many of the top 10 candidate captions workers accepted"))
    descs.append(FeatureDescriptor(
        "language_errors", "component", "crowd", "count",
        "candidate sentences flagged for bad language"))
    for agg in ("avg", "std", "max", "min"):
        descs.append(FeatureDescriptor(
            f"detector_confidence_{agg}", "component", "system", "continuous",
            f"{agg} of per-detection confidence scores"))
    return FeatureCatalog(descs)


def validate_config(cfg: SynthConfig) -> None:
    if not cfg.topics:
        raise SynthError("config needs at least one topic")
    names = set()
    for topic in cfg.topics:
        if not topic.terms:
            raise SynthError(f"topic {topic.name!r} has no terms")
        if topic.n_instances < 1:
            raise SynthError(f"topic {topic.name!r} has no instances")
        if topic.name in names:
            raise SynthError(f"duplicate topic name {topic.name!r}")
        names.add(topic.name)
    for topic_name, det in cfg.detectors.items():
        if topic_name not in names:
            raise SynthError(f"detector for unknown topic {topic_name!r}")
        _check_prob(det.precision, f"detector precision for {topic_name!r}")
        _check_prob(det.recall, f"detector recall for {topic_name!r}")
        for other in det.confusion:
            if other not in names:
                raise SynthError(f"confusion with unknown topic {other!r}")
    _check_prob(cfg.background_failure_prob, "background failure probability")
    _check_prob(cfg.term_presence_prob, "term presence probability")
    _check_prob(cfg.language_error_prob, "language error probability")
    _check_prob(cfg.vote_noise, "vote noise")
    if cfg.with_votes and cfg.vote_noise >= 1.0:
        raise SynthError("vote noise must be below 1 when votes are generated")
    if cfg.n_workers < 1:
        raise SynthError("n_workers must be >= 1")
    known_features = set(feature_names(cfg))
    for i, rule in enumerate(cfg.rules):
        _check_prob(rule.failure_prob, f"rule {i} failure probability")
        if rule.scope is not None and rule.scope not in names:
            raise SynthError(f"rule {i} scoped to unknown topic {rule.scope!r}")
        for feature, op, _ in rule.conditions:
            if op not in _OPS:
                raise SynthError(f"rule {i}: unknown operator {op!r}")
            if feature not in known_features:
                raise SynthError(f"rule {i}: unknown feature {feature!r}")


@dataclass(frozen=True)
class Manifest:
    """Ground truth for one generated dataset; replaying the config with its
    seed regenerates the dataset exactly."""

    seed: int
    dataset_digest: str
    instance_topics: Mapping[str, str]
    rule_fired: Mapping[str, int | None]
    config: SynthConfig

    def topic_of(self, instance_id: str) -> str:
        return self.instance_topics[instance_id]


def _rule_applies(rule: FailureRule, topic: str, values: Mapping[str, float]) -> bool:
    if rule.scope is not None and rule.scope != topic:
        return False
    for feature, op, target in rule.conditions:
        value = values.get(feature, 0.0)  # sparse binaries read as 0
        if not _OPS[op](value, float(target)):
            return False
    return True


def _draw_votes(rng: Rng, label: str, n_workers: int, noise: float) -> tuple[int, ...]:
    """Votes whose majority matches the label by construction.

    The number of agreeing workers follows Binomial(n, 1 - noise)
    conditioned on the majority holding (ties count as unsatisfactory).
    """
    if label == SATISFACTORY:
        a_min = n_workers // 2 + 1
    else:
        a_min = (n_workers + 1) // 2
    counts = list(range(a_min, n_workers + 1))
    weights = [
        math.comb(n_workers, a) * (1 - noise) ** a * noise ** (n_workers - a)
        for a in counts
    ]
    agree = rng.choice_weighted(counts, weights)
    dissent = set(rng.sample(range(n_workers), n_workers - agree))
    agree_vote = 1 if label == SATISFACTORY else 0
    return tuple(
        (1 - agree_vote) if w in dissent else agree_vote for w in range(n_workers)
    )


def generate(cfg: SynthConfig) -> tuple[Dataset, Manifest]:
    """Generate a dataset plus its ground-truth manifest."""
    validate_config(cfg)
    rng = Rng(cfg.seed)
    catalog = build_catalog(cfg)
    vocabulary = _vocabulary(cfg)
    terms_by_topic = {t.name: tuple(t.terms) for t in cfg.topics}

    instances: list[Instance] = []
    instance_topics: dict[str, str] = {}
    rule_fired: dict[str, int | None] = {}

    for topic in cfg.topics:
        detector = cfg.detectors.get(topic.name, DetectorSpec())
        if detector.confusion:
            pool = []
            weights = []
            for other, weight in sorted(detector.confusion.items()):
                for term in sorted(terms_by_topic[other]):
                    pool.append(term)
                    weights.append(float(weight))
        else:
            own = set(topic.terms)
            pool = [t for t in vocabulary if t not in own]
            weights = [1.0] * len(pool)
        weight_total = math.fsum(weights)

        for idx in range(topic.n_instances):
            inst_id = f"{topic.name}-{idx:05d}"

            crowd_terms = tuple(
                t for t in sorted(topic.terms) if rng.bernoulli(cfg.term_presence_prob)
            )
            if not crowd_terms:
                crowd_terms = (sorted(topic.terms)[0],)
            crowd_set = set(crowd_terms)

            detected = [t for t in crowd_terms if rng.bernoulli(detector.recall)]
            if detector.precision < 1.0 and pool and weight_total > 0:
                basis = max(len(detected), 1)
                expected_fp = basis * (1.0 - detector.precision) / detector.precision
                for term, weight in zip(pool, weights):
                    if term in crowd_set:
                        continue
                    q = min(1.0, expected_fp * weight / weight_total)
                    if rng.bernoulli(q):
                        detected.append(term)
            if not detected:
                fallback = cfg.distractor_terms[0] if cfg.distractor_terms else crowd_terms[0]
                detected.append(fallback)
            detected = sorted(set(detected))

            confidences = []
            for term in detected:
                if term in crowd_set:
                    c = rng.normal(cfg.confidence.correct_mean, cfg.confidence.correct_spread)
                else:
                    c = rng.normal(cfg.confidence.false_mean, cfg.confidence.false_spread)
                confidences.append(min(0.99, max(0.01, c)))
            agg = aggregate_confidences(confidences)

            correct = sum(1 for t in detected if t in crowd_set)
            values: dict[str, float] = {}
            for t in crowd_terms:
                values[f"has_{t}"] = 1.0
            for t in detected:
                values[f"detected_{t}"] = 1.0
            values["term_count"] = float(len(crowd_terms))
            values["detected_term_count"] = float(len(detected))
            values["detector_precision"] = correct / len(detected)
            values["detector_recall"] = sum(
                1 for t in crowd_terms if f"detected_{t}" in values
            ) / len(crowd_terms)
            values["satisfactory_captions"] = float(rng.randint(11))
            values["language_errors"] = float(rng.binomial(10, cfg.language_error_prob))
            values["detector_confidence_avg"] = agg.avg
            values["detector_confidence_std"] = agg.std
            values["detector_confidence_max"] = agg.max
            values["detector_confidence_min"] = agg.min

            fired: int | None = None
            failure_prob = cfg.background_failure_prob
            for rule_idx, rule in enumerate(cfg.rules):
                if _rule_applies(rule, topic.name, values):
                    fired = rule_idx
                    failure_prob = rule.failure_prob
                    break
            label = UNSATISFACTORY if rng.bernoulli(failure_prob) else SATISFACTORY

            votes = (
                _draw_votes(rng, label, cfg.n_workers, cfg.vote_noise)
                if cfg.with_votes else None
            )

            instances.append(Instance(
                id=inst_id,
                feature_values=values,
                label=label,
                votes=votes,
                content_terms={"crowd": crowd_terms, "system": tuple(detected)},
            ))
            instance_topics[inst_id] = topic.name
            rule_fired[inst_id] = fired

    provenance = "synth:seed={}:topics={}".format(
        cfg.seed, ",".join(t.name for t in cfg.topics)
    )
    dataset = Dataset(catalog, tuple(instances), provenance=provenance)
    manifest = Manifest(
        seed=cfg.seed,
        dataset_digest=dataset_digest(dataset),
        instance_topics=instance_topics,
        rule_fired=rule_fired,
        config=cfg,
    )
    return dataset, manifest


# ---------------------------------------------------------------------------
# Recovery scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryScore:
    """How well a report rediscovered what the generator planted."""

    rule_hits: tuple[bool, ...]       # per planted rule: feature surfaced?
    mean_cluster_purity: float        # size-weighted max topic share
    accuracy_gap: float               # clustered minus generic CV accuracy
    no_signal: bool                   # nothing was planted to recover


RECOVERY_TOP_RANKS = 5


def evaluate_recovery(report, manifest: Manifest) -> RecoveryScore:
    """Score a performance report against the generator's manifest."""
    if report.dataset_digest != manifest.dataset_digest:
        raise SynthError("report was not built from this manifest's dataset")

    weighted = 0.0
    total = 0
    majority_topic: dict[int, str] = {}
    for cluster in report.clusters:
        topics = [manifest.topic_of(i) for i in cluster.member_ids]
        counts: dict[str, int] = {}
        for t in topics:
            counts[t] = counts.get(t, 0) + 1
        best_topic = max(sorted(counts), key=lambda t: counts[t])
        majority_topic[cluster.cluster_id] = best_topic
        weighted += counts[best_topic]
        total += len(topics)
    purity = weighted / total if total else 0.0

    hits: list[bool] = []
    for rule in manifest.config.rules:
        wanted = {feature for feature, _, _ in rule.conditions}
        if rule.scope is None:
            hits.append(_block_mentions(report.generic, wanted))
            continue
        candidates = [
            c for c in report.clusters
            if majority_topic.get(c.cluster_id) == rule.scope
        ]
        if not candidates:
            hits.append(False)
            continue
        target = max(candidates, key=lambda c: c.size)
        hits.append(_block_mentions(target, wanted))

    gap = report.all_clusters_accuracy - report.generic.cv.mean_accuracy
    return RecoveryScore(
        rule_hits=tuple(hits),
        mean_cluster_purity=purity,
        accuracy_gap=gap,
        no_signal=not manifest.config.rules,
    )


def _block_mentions(block, wanted: set[str]) -> bool:
    """True if any wanted feature shows up in the block's tree or top ranks."""
    if block is None:
        return False
    tree = getattr(block, "tree", None)
    ranking = getattr(block, "ranking", None)
    in_tree = bool(tree) and bool(wanted & set(tree.features_tested()))
    in_rank = bool(ranking) and bool(wanted & set(ranking.top(RECOVERY_TOP_RANKS)))
    return in_tree or in_rank


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def config_to_dict(cfg: SynthConfig) -> dict:
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "seed": cfg.seed,
        "topics": [
            {"name": t.name, "terms": list(t.terms), "n_instances": t.n_instances}
            for t in cfg.topics
        ],
        "detectors": {
            name: {
                "precision": d.precision,
                "recall": d.recall,
                "confusion": dict(sorted(d.confusion.items())),
            }
            for name, d in sorted(cfg.detectors.items())
        },
        "confidence": {
            "correct_mean": cfg.confidence.correct_mean,
            "correct_spread": cfg.confidence.correct_spread,
            "false_mean": cfg.confidence.false_mean,
            "false_spread": cfg.confidence.false_spread,
        },
        "rules": [
            {
                "scope": r.scope,
                "conditions": [[f, op, v] for f, op, v in r.conditions],
                "failure_prob": r.failure_prob,
            }
            for r in cfg.rules
        ],
        "background_failure_prob": cfg.background_failure_prob,
        "term_presence_prob": cfg.term_presence_prob,
        "language_error_prob": cfg.language_error_prob,
        "n_workers": cfg.n_workers,
        "vote_noise": cfg.vote_noise,
        "with_votes": cfg.with_votes,
        "distractor_terms": list(cfg.distractor_terms),
    }


def config_from_dict(raw: dict) -> SynthConfig:
    topics = tuple(
        TopicSpec(t["name"], tuple(t["terms"]), int(t["n_instances"]))
        for t in raw["topics"]
    )
    detectors = {
        name: DetectorSpec(
            precision=float(d.get("precision", 1.0)),
            recall=float(d.get("recall", 1.0)),
            confusion={k: float(v) for k, v in d.get("confusion", {}).items()},
        )
        for name, d in raw.get("detectors", {}).items()
    }
    conf_raw = raw.get("confidence", {})
    confidence = ConfidenceModel(
        correct_mean=float(conf_raw.get("correct_mean", 0.85)),
        correct_spread=float(conf_raw.get("correct_spread", 0.08)),
        false_mean=float(conf_raw.get("false_mean", 0.40)),
        false_spread=float(conf_raw.get("false_spread", 0.12)),
    )
    rules = tuple(
        FailureRule(
            conditions=tuple((c[0], c[1], float(c[2])) for c in r["conditions"]),
            failure_prob=float(r["failure_prob"]),
            scope=r.get("scope"),
        )
        for r in raw.get("rules", [])
    )
    return SynthConfig(
        topics=topics,
        seed=int(raw["seed"]),
        detectors=detectors,
        confidence=confidence,
        rules=rules,
        background_failure_prob=float(raw.get("background_failure_prob", 0.0)),
        term_presence_prob=float(raw.get("term_presence_prob", 0.85)),
        language_error_prob=float(raw.get("language_error_prob", 0.2)),
        n_workers=int(raw.get("n_workers", 5)),
        vote_noise=float(raw.get("vote_noise", 0.15)),
        with_votes=bool(raw.get("with_votes", True)),
        distractor_terms=tuple(raw.get("distractor_terms", ("background",))),
    )


def load_config(path: str) -> SynthConfig:
    with open(path, "r", encoding="utf-8") as f:
        return config_from_dict(json.load(f))


def manifest_to_dict(manifest: Manifest) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "seed": manifest.seed,
        "dataset_digest": manifest.dataset_digest,
        "instance_topics": dict(sorted(manifest.instance_topics.items())),
        "rule_fired": dict(sorted(manifest.rule_fired.items())),
        "config": config_to_dict(manifest.config),
    }


def manifest_from_dict(raw: dict) -> Manifest:
    return Manifest(
        seed=int(raw["seed"]),
        dataset_digest=raw["dataset_digest"],
        instance_topics=dict(raw["instance_topics"]),
        rule_fired={k: v for k, v in raw["rule_fired"].items()},
        config=config_from_dict(raw["config"]),
    )


def save_manifest(manifest: Manifest, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest_to_dict(manifest), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_manifest(path: str) -> Manifest:
    with open(path, "r", encoding="utf-8") as f:
        return manifest_from_dict(json.load(f))
