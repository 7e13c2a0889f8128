"""Evaluation dataset model: typed features, satisfaction labels, votes.

A dataset is the universe every analysis runs over. It couples a feature
catalog (which assigns each feature a view kind, a data source, and a
dtype) with a list of instances carrying feature values, a binary
satisfaction label, optional per-worker votes, and the content terms used
for topical clustering.

Datasets are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

VIEW_KINDS = ("content", "component")
DATA_SOURCES = ("crowd", "system")
DTYPES = ("binary", "count", "continuous")

SATISFACTORY = "satisfactory"
UNSATISFACTORY = "unsatisfactory"
LABELS = (SATISFACTORY, UNSATISFACTORY)

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    """Raised for contract violations while loading or deriving features."""


@dataclass(frozen=True)
class FeatureDescriptor:
    """Catalog entry describing one feature column."""

    name: str
    view_kind: str
    data_source: str
    dtype: str
    description: str = ""

    def __post_init__(self):
        if self.view_kind not in VIEW_KINDS:
            raise DatasetError(f"feature {self.name!r}: bad view_kind {self.view_kind!r}")
        if self.data_source not in DATA_SOURCES:
            raise DatasetError(f"feature {self.name!r}: bad data_source {self.data_source!r}")
        if self.dtype not in DTYPES:
            raise DatasetError(f"feature {self.name!r}: bad dtype {self.dtype!r}")


class FeatureCatalog:
    """Ordered collection of descriptors with unique names."""

    def __init__(self, descriptors: Iterable[FeatureDescriptor]):
        self.descriptors: tuple[FeatureDescriptor, ...] = tuple(descriptors)
        self._by_name: dict[str, FeatureDescriptor] = {}
        for d in self.descriptors:
            if d.name in self._by_name:
                raise DatasetError(f"duplicate feature name {d.name!r} in catalog")
            self._by_name[d.name] = d

    def __len__(self) -> int:
        return len(self.descriptors)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self.descriptors)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureCatalog) and self.descriptors == other.descriptors

    def get(self, name: str) -> FeatureDescriptor:
        try:
            return self._by_name[name]
        except KeyError:
            raise DatasetError(f"unknown feature {name!r}") from None

    def select(self, view_kind: str, data_source: str) -> tuple[FeatureDescriptor, ...]:
        """Features of one cell of the view grid, in catalog order."""
        return tuple(
            d for d in self.descriptors
            if d.view_kind == view_kind and d.data_source == data_source
        )


def majority_label(votes: Sequence[int]) -> str:
    """Majority of binary votes (1 = satisfactory). Ties resolve to unsatisfactory."""
    if not votes:
        raise DatasetError("majority_label needs at least one vote")
    ones = sum(1 for v in votes if v == 1)
    return SATISFACTORY if ones * 2 > len(votes) else UNSATISFACTORY


@dataclass(frozen=True, eq=True)
class Instance:
    """One evaluation instance: feature values, label, votes, content terms."""

    id: str
    feature_values: Mapping[str, float]
    label: str
    votes: tuple[int, ...] | None = None
    content_terms: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise DatasetError(f"instance {self.id!r}: bad label {self.label!r}")
        if self.votes is not None:
            bad = [v for v in self.votes if v not in (0, 1)]
            if bad:
                raise DatasetError(f"instance {self.id!r}: votes must be 0 or 1")
        for source in self.content_terms:
            if source not in DATA_SOURCES:
                raise DatasetError(f"instance {self.id!r}: bad term source {source!r}")

    def terms(self, source: str) -> tuple[str, ...] | None:
        return self.content_terms.get(source)


@dataclass(frozen=True, eq=True)
class Dataset:
    """Immutable dataset: catalog + instances in canonical id order."""

    catalog: FeatureCatalog
    instances: tuple[Instance, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "instances", tuple(sorted(self.instances, key=lambda i: i.id))
        )

    def __len__(self) -> int:
        return len(self.instances)

    @cached_property
    def _index(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}

    def by_id(self, instance_id: str) -> Instance:
        try:
            return self._index[instance_id]
        except KeyError:
            raise DatasetError(f"unknown instance id {instance_id!r}") from None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    locus: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def is_clean(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.is_clean:
            return "dataset is analysis-ready"
        return "\n".join(f"[{v.kind}] {v.locus}: {v.message}" for v in self.violations)


def _check_value(desc: FeatureDescriptor, value: float) -> str | None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return f"feature {desc.name!r} has non-numeric value {value!r}"
    v = float(value)
    if not math.isfinite(v):
        return f"feature {desc.name!r} has non-finite value {value!r}"
    if desc.dtype == "binary" and v not in (0.0, 1.0):
        return f"binary feature {desc.name!r} has value {value!r} outside {{0, 1}}"
    if desc.dtype == "count" and (v < 0 or v != int(v)):
        return f"count feature {desc.name!r} has non-count value {value!r}"
    return None


def validate(dataset: Dataset) -> ValidationReport:
    """Scan for everything that would make analysis results meaningless.

    Violations are data, not failures: the report lists duplicated ids,
    unknown or ill-typed feature values, count/continuous features that are
    absent (binary features may be omitted and read as 0), and labels that
    contradict the majority of the recorded votes.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    required = [d for d in dataset.catalog if d.dtype in ("count", "continuous")]
    for inst in dataset.instances:
        locus = f"instance {inst.id}"
        if inst.id in seen:
            violations.append(Violation("duplicate-id", locus, "id appears more than once"))
        seen.add(inst.id)
        for name, value in inst.feature_values.items():
            if name not in dataset.catalog:
                violations.append(
                    Violation("unknown-feature", locus, f"feature {name!r} not in catalog")
                )
                continue
            problem = _check_value(dataset.catalog.get(name), value)
            if problem:
                violations.append(Violation("dtype", locus, problem))
        for desc in required:
            if desc.name not in inst.feature_values:
                violations.append(
                    Violation(
                        "missing-value", locus,
                        f"{desc.dtype} feature {desc.name!r} has no value",
                    )
                )
        if inst.votes:
            expected = majority_label(inst.votes)
            if expected != inst.label:
                violations.append(
                    Violation(
                        "label-vote-mismatch", locus,
                        f"label {inst.label!r} contradicts vote majority {expected!r}",
                    )
                )
    return ValidationReport(tuple(violations))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

class ConfidenceAggregate(NamedTuple):
    avg: float
    std: float
    max: float
    min: float


def aggregate_confidences(scores: Sequence[float]) -> ConfidenceAggregate:
    """Average, population standard deviation, max, and min of a score set.

    The std divisor is n, not n - 1: the aggregate describes the instance's
    own score set rather than estimating a population parameter.
    """
    if len(scores) == 0:
        raise DatasetError("aggregate_confidences needs at least one score")
    xs = [float(s) for s in scores]
    n = len(xs)
    hi, lo = max(xs), min(xs)
    if hi == lo:
        return ConfidenceAggregate(hi, 0.0, hi, lo)  # exact for constant input
    avg = math.fsum(xs) / n
    var = math.fsum((x - avg) ** 2 for x in xs) / n
    return ConfidenceAggregate(avg, math.sqrt(var), hi, lo)


def satisfaction_rate(instances: Sequence[Instance]) -> float:
    """Fraction of instances whose caption the crowd judged satisfactory."""
    if not instances:
        raise DatasetError("satisfaction_rate over an empty instance list")
    good = sum(1 for i in instances if i.label == SATISFACTORY)
    return good / len(instances)


def human_agreement(instances: Sequence[Instance]) -> float:
    """Mean fraction of workers that agree with each instance's majority vote."""
    if not instances:
        raise DatasetError("human_agreement over an empty instance list")
    fractions = []
    for inst in instances:
        if not inst.votes:
            raise DatasetError(f"instance {inst.id!r} has no votes")
        major = majority_label(inst.votes)
        agree = sum(
            1 for v in inst.votes
            if (v == 1) == (major == SATISFACTORY)
        )
        fractions.append(agree / len(inst.votes))
    return math.fsum(fractions) / len(fractions)


# ---------------------------------------------------------------------------
# Feature tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureTable:
    """Dense numeric projection of a set of instances onto chosen features."""

    feature_names: tuple[str, ...]
    dtypes: tuple[str, ...]
    values: np.ndarray          # shape (n_instances, n_features), float64
    instance_ids: tuple[str, ...]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]


def build_feature_table(
    dataset: Dataset,
    features: Sequence[FeatureDescriptor],
    instances: Sequence[Instance] | None = None,
) -> FeatureTable:
    """Materialize feature columns for the given instances.

    Missing binary features read as 0 (sparse encoding); a missing count or
    continuous value is a contract violation the caller should have caught
    with :func:`validate`.
    """
    insts = dataset.instances if instances is None else tuple(instances)
    names = tuple(d.name for d in features)
    x = np.zeros((len(insts), len(features)), dtype=np.float64)
    for i, inst in enumerate(insts):
        for j, desc in enumerate(features):
            value = inst.feature_values.get(desc.name)
            if value is None:
                if desc.dtype == "binary":
                    continue
                raise DatasetError(
                    f"instance {inst.id!r}: missing {desc.dtype} feature {desc.name!r}"
                )
            x[i, j] = float(value)
    return FeatureTable(names, tuple(d.dtype for d in features), x, tuple(i.id for i in insts))


def failure_indicator(instances: Sequence[Instance]) -> np.ndarray:
    """Label vector with 1 for unsatisfactory instances."""
    return np.array([1 if i.label == UNSATISFACTORY else 0 for i in instances], dtype=np.int64)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _descriptor_to_dict(d: FeatureDescriptor) -> dict:
    out = {
        "name": d.name,
        "view_kind": d.view_kind,
        "data_source": d.data_source,
        "dtype": d.dtype,
    }
    if d.description:
        out["description"] = d.description
    return out


def _instance_to_dict(inst: Instance) -> dict:
    out: dict = {
        "id": inst.id,
        "features": {k: inst.feature_values[k] for k in sorted(inst.feature_values)},
        "label": inst.label,
    }
    if inst.votes is not None:
        out["votes"] = list(inst.votes)
    if inst.content_terms:
        out["content_terms"] = {
            src: list(inst.content_terms[src]) for src in sorted(inst.content_terms)
        }
    return out


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "provenance": dataset.provenance,
        "catalog": [_descriptor_to_dict(d) for d in dataset.catalog],
        "instances": [_instance_to_dict(i) for i in dataset.instances],
    }


def _coerce_value(desc: FeatureDescriptor, raw, locus: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise DatasetError(f"{locus}: feature {desc.name!r} value {raw!r} is not numeric")
    value = float(raw)
    problem = _check_value(desc, value)
    if problem:
        raise DatasetError(f"{locus}: {problem}")
    return value


def _parse_catalog(raw_catalog, locus: str) -> FeatureCatalog:
    if not isinstance(raw_catalog, list):
        raise DatasetError(f"{locus}: catalog must be a list")
    descs = []
    for i, item in enumerate(raw_catalog):
        try:
            descs.append(FeatureDescriptor(
                name=item["name"],
                view_kind=item["view_kind"],
                data_source=item["data_source"],
                dtype=item["dtype"],
                description=item.get("description", ""),
            ))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{locus}: catalog entry {i}: {exc}") from exc
    return FeatureCatalog(descs)


def _parse_instance(catalog: FeatureCatalog, raw: dict, locus: str) -> Instance:
    try:
        inst_id = raw["id"]
        raw_features = raw.get("features", {})
        label = raw["label"]
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{locus}: {exc}") from exc
    values: dict[str, float] = {}
    for name, value in raw_features.items():
        if name not in catalog:
            raise DatasetError(f"{locus}: unknown feature {name!r}")
        values[name] = _coerce_value(catalog.get(name), value, locus)
    votes = raw.get("votes")
    terms_raw = raw.get("content_terms", {})
    terms = {src: tuple(ts) for src, ts in terms_raw.items()}
    return Instance(
        id=inst_id,
        feature_values=values,
        label=label,
        votes=tuple(votes) if votes is not None else None,
        content_terms=terms,
    )


def load_dataset(path: str, format: str = "records", catalog_path: str | None = None) -> Dataset:
    """Load a dataset file.

    ``records``: the canonical structured format with embedded catalog.
    ``table``: a CSV whose header is ``id,label,<feature...>``; requires a
    sidecar catalog file (JSON list of descriptors) via ``catalog_path``.
    """
    if format == "records":
        return _load_records(path)
    if format == "table":
        if catalog_path is None:
            raise DatasetError("table format requires a sidecar catalog file")
        return _load_table(path, catalog_path)
    raise DatasetError(f"unknown dataset format {format!r}")


def _load_records(path: str) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise DatasetError(f"{path}: top level must be an object")
    catalog = _parse_catalog(raw.get("catalog", []), path)
    instances = []
    for i, item in enumerate(raw.get("instances", [])):
        instances.append(_parse_instance(catalog, item, f"{path}: record {i}"))
    return Dataset(catalog, tuple(instances), provenance=raw.get("provenance", ""))


def _load_table(path: str, catalog_path: str) -> Dataset:
    with open(catalog_path, "r", encoding="utf-8") as f:
        catalog = _parse_catalog(json.load(f), catalog_path)
    instances = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        if "id" not in header or "label" not in header:
            raise DatasetError(f"{path}: header must contain 'id' and 'label'")
        for name in header:
            if name not in ("id", "label") and name not in catalog:
                raise DatasetError(f"{path}: unknown feature column {name!r}")
        for lineno, row in enumerate(reader, start=2):
            locus = f"{path}: line {lineno}"
            values = {}
            for name, cell in row.items():
                if name in ("id", "label") or cell in (None, ""):
                    continue
                desc = catalog.get(name)
                try:
                    raw_value = float(cell)
                except ValueError:
                    raise DatasetError(f"{locus}: feature {name!r} value {cell!r} is not numeric")
                values[name] = _coerce_value(desc, raw_value, locus)
            instances.append(Instance(id=row["id"], feature_values=values, label=row["label"]))
    return Dataset(catalog, tuple(instances), provenance=f"table:{path}")


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write the canonical record-oriented form (instances in id order)."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dataset_to_dict(dataset), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def dataset_digest(dataset: Dataset) -> str:
    """Stable content digest used for provenance and cache keys."""
    payload = json.dumps(dataset_to_dict(dataset), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
