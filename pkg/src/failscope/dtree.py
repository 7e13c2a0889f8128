"""Interpretable decision trees for failure prediction.

Binary CART-style trees whose split criterion is the mutual information
between the induced partition and the satisfaction label, the same
criterion the feature rankings use. Every leaf keeps its samples tuple
(unsatisfactory count first) and the ids of the training instances that
landed there, so an analyst can drill from a rule down to concrete cases.

Trees are immutable once built and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    SATISFACTORY,
    UNSATISFACTORY,
    FeatureTable,
    Instance,
)
from .rng import Rng
from .stats import DiscreteColumn, mutual_information

DEFAULT_MAX_DEPTH = 5
DEFAULT_MIN_SAMPLES_LEAF = 10
DEFAULT_MIN_GAIN = 1e-6


class TreeError(ValueError):
    pass


class StratificationError(TreeError):
    """Too few instances (or classes) to run stratified cross validation."""


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = DEFAULT_MAX_DEPTH
    min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF
    min_gain: float = DEFAULT_MIN_GAIN
    excluded_features: frozenset[str] = frozenset()
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise TreeError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise TreeError("min_samples_leaf must be >= 1")
        if self.min_gain < 0:
            raise TreeError("min_gain must be >= 0")
        object.__setattr__(self, "excluded_features", frozenset(self.excluded_features))


@dataclass(frozen=True)
class Split:
    feature: str
    op: str             # "eq" for binary presence, "le" for thresholds
    threshold: float
    gain: float         # bits

    def matches(self, value: float) -> bool:
        if self.op == "eq":
            return value == self.threshold
        return value <= self.threshold

    def describe(self, branch: bool) -> str:
        if self.op == "eq":
            return f"{self.feature} = {1 if branch else 0:d}"
        return f"{self.feature} {'<=' if branch else '>'} {self.threshold:g}"


@dataclass(frozen=True)
class Node:
    id: int
    samples: tuple[int, int]            # (n_unsatisfactory, n_satisfactory)
    split: Split | None = None
    left: "Node | None" = None          # split predicate holds
    right: "Node | None" = None
    label: str | None = None            # leaves only
    instance_ids: tuple[str, ...] = ()  # leaves only, sorted

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def failure_rate(self) -> float:
        total = self.samples[0] + self.samples[1]
        return self.samples[0] / total if total else 0.0


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    params: TreeParams
    feature_names: tuple[str, ...]

    def nodes(self) -> list[Node]:
        out: list[Node] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            if not node.is_leaf:
                stack.append(node.right)  # type: ignore[arg-type]
                stack.append(node.left)   # type: ignore[arg-type]
        return sorted(out, key=lambda n: n.id)

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes() if n.is_leaf]

    def node(self, node_id: int) -> Node:
        for n in self.nodes():
            if n.id == node_id:
                return n
        raise TreeError(f"unknown node id {node_id}")

    def features_tested(self) -> frozenset[str]:
        return frozenset(n.split.feature for n in self.nodes() if n.split is not None)

    @property
    def depth(self) -> int:
        def walk(node: Node) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))  # type: ignore[arg-type]
        return walk(self.root)


def _label_counts(y: np.ndarray) -> tuple[int, int]:
    unsat = int(np.sum(y == 1))
    return unsat, int(y.size - unsat)


def _majority(y: np.ndarray) -> str:
    unsat, sat = _label_counts(y)
    return SATISFACTORY if sat > unsat else UNSATISFACTORY


def _entropy_bits(unsat: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Vectorized binary entropy of (unsat, total-unsat) count pairs."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = unsat / total
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return h


def _threshold_candidates(
    x: np.ndarray, y: np.ndarray, min_leaf: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """All midpoint thresholds with their gains, honoring leaf size limits."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    boundaries = np.flatnonzero(xs[:-1] != xs[1:])
    if boundaries.size == 0:
        return None
    n = x.size
    left_sizes = boundaries + 1
    ok = (left_sizes >= min_leaf) & (n - left_sizes >= min_leaf)
    boundaries = boundaries[ok]
    if boundaries.size == 0:
        return None
    left_sizes = boundaries + 1
    cum_unsat = np.cumsum(ys == 1)
    left_unsat = cum_unsat[boundaries]
    total_unsat = cum_unsat[-1]
    right_sizes = n - left_sizes
    right_unsat = total_unsat - left_unsat
    h_parent = _entropy_bits(np.array([total_unsat]), np.array([n]))[0]
    h_left = _entropy_bits(left_unsat, left_sizes)
    h_right = _entropy_bits(right_unsat, right_sizes)
    gains = h_parent - (left_sizes / n) * h_left - (right_sizes / n) * h_right
    thresholds = (xs[boundaries] + xs[boundaries + 1]) / 2.0
    return thresholds, gains


def best_split(table: FeatureTable, y: np.ndarray, params: TreeParams) -> Split | None:
    """The split maximizing MI between the induced partition and the labels.

    Binary features use the presence partition; count and continuous
    features try every midpoint of consecutive distinct sorted values.
    Ties break lexicographically by feature name, then by smaller
    threshold. Returns None when no eligible split reaches min_gain.
    """
    y = np.asarray(y, dtype=np.int64)
    best: Split | None = None
    order = sorted(range(len(table.feature_names)), key=lambda j: table.feature_names[j])
    for j in order:
        name = table.feature_names[j]
        if name in params.excluded_features:
            continue
        x = table.values[:, j]
        if table.dtypes[j] == "binary":
            ones = int(np.sum(x == 1.0))
            zeros = x.size - ones
            if min(ones, zeros) < params.min_samples_leaf or ones == 0 or zeros == 0:
                continue
            gain = mutual_information(DiscreteColumn(x.astype(np.int64), 2), y)
            candidate = Split(name, "eq", 1.0, gain)
        else:
            found = _threshold_candidates(x, y, params.min_samples_leaf)
            if found is None:
                continue
            thresholds, gains = found
            i = int(np.argmax(gains))  # first max = smallest threshold
            candidate = Split(name, "le", float(thresholds[i]), float(gains[i]))
        if best is None or candidate.gain > best.gain:
            best = candidate
    if best is None or best.gain < params.min_gain:
        return None
    return best


def train(table: FeatureTable, y: Sequence[int] | np.ndarray, params: TreeParams) -> DecisionTree:
    """Grow a tree by recursive MI splitting.

    Growth stops at max_depth, purity, min_samples_leaf, or when the best
    remaining gain falls below min_gain. Leaf labels are the majority
    class, ties resolving to unsatisfactory.
    """
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise TreeError("empty training set")
    if y.size != len(table.instance_ids):
        raise TreeError("labels and table length mismatch")

    counter = {"next": 0}

    def next_id() -> int:
        counter["next"] += 1
        return counter["next"] - 1

    def grow(rows: np.ndarray, depth: int) -> Node:
        node_id = next_id()
        sub_y = y[rows]
        samples = _label_counts(sub_y)
        pure = samples[0] == 0 or samples[1] == 0
        split = None
        if not pure and depth < params.max_depth:
            sub = FeatureTable(
                table.feature_names,
                table.dtypes,
                table.values[rows],
                tuple(table.instance_ids[r] for r in rows),
            )
            split = best_split(sub, sub_y, params)
        if split is None:
            ids = tuple(sorted(table.instance_ids[r] for r in rows))
            return Node(node_id, samples, label=_majority(sub_y), instance_ids=ids)
        col = table.values[rows, table.feature_names.index(split.feature)]
        mask = (
            col == split.threshold if split.op == "eq" else col <= split.threshold
        )
        left = grow(rows[mask], depth + 1)
        right = grow(rows[~mask], depth + 1)
        return Node(node_id, samples, split=split, left=left, right=right)

    root = grow(np.arange(y.size), 0)
    return DecisionTree(root, params, table.feature_names)


def predict(
    tree: DecisionTree, features: Mapping[str, float] | Instance
) -> tuple[str, int]:
    """Route one instance to a leaf; returns (predicted label, leaf id)."""
    values = features.feature_values if isinstance(features, Instance) else features
    node = tree.root
    while not node.is_leaf:
        split = node.split
        assert split is not None
        if split.feature in values:
            value = float(values[split.feature])
        elif split.op == "eq":
            value = 0.0  # absent binary term reads as 0
        else:
            raise TreeError(f"instance is missing tested feature {split.feature!r}")
        node = node.left if split.matches(value) else node.right  # type: ignore[assignment]
    assert node.label is not None
    return node.label, node.id


def leaf_instances(tree: DecisionTree, leaf_id: int) -> tuple[str, ...]:
    node = tree.node(leaf_id)
    if not node.is_leaf:
        raise TreeError(f"node {leaf_id} is not a leaf")
    return node.instance_ids


@dataclass(frozen=True)
class Rule:
    conditions: tuple[str, ...]
    n_unsatisfactory: int
    n_satisfactory: int
    text: str


def _failure_percent(unsat: int, sat: int) -> str:
    total = unsat + sat
    pct = 100.0 * unsat / total if total else 0.0
    return f"{pct:.0f}"


def extract_rules(tree: DecisionTree) -> list[Rule]:
    """One conjunction per leaf, with the leaf's failure percentage."""
    rules: list[Rule] = []

    def walk(node: Node, conds: tuple[str, ...]) -> None:
        if node.is_leaf:
            unsat, sat = node.samples
            head = " AND ".join(conds) if conds else "(no conditions)"
            text = f"{head} => fails in {_failure_percent(unsat, sat)}% of cases"
            rules.append(Rule(conds, unsat, sat, text))
            return
        split = node.split
        assert split is not None
        walk(node.left, conds + (split.describe(True),))    # type: ignore[arg-type]
        walk(node.right, conds + (split.describe(False),))  # type: ignore[arg-type]

    walk(tree.root, ())
    return rules


@dataclass(frozen=True)
class CvResult:
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    fold_assignment: Mapping[str, int]


def stratified_folds(
    ids: Sequence[str], y: np.ndarray, folds: int, seed: int
) -> dict[str, int]:
    """Deterministic stratified fold assignment.

    Within each class (unsatisfactory first) the id-ordered instances are
    shuffled by the seeded generator and dealt round-robin into folds. The
    deal position carries over between classes so every fold ends up with
    floor(n/folds) or ceil(n/folds) instances overall.
    """
    rng = Rng(seed)
    assignment: dict[str, int] = {}
    position = 0
    for cls in (1, 0):
        members = [ids[i] for i in np.flatnonzero(y == cls)]
        members.sort()
        rng.shuffle(members)
        for inst in members:
            assignment[inst] = position % folds
            position += 1
    return assignment


def cross_validate(
    table: FeatureTable,
    y: Sequence[int] | np.ndarray,
    params: TreeParams,
    folds: int = 5,
) -> CvResult:
    """Stratified k-fold accuracy of trees trained with the given params."""
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if n < folds:
        raise StratificationError(f"{n} instances cannot fill {folds} folds")
    if len(set(y.tolist())) < 2:
        raise StratificationError("cross validation needs both label classes")
    assignment = stratified_folds(table.instance_ids, y, folds, params.seed)
    fold_of = np.array([assignment[i] for i in table.instance_ids])
    accuracies: list[float] = []
    for f in range(folds):
        test = fold_of == f
        train_rows = np.flatnonzero(~test)
        test_rows = np.flatnonzero(test)
        sub = FeatureTable(
            table.feature_names,
            table.dtypes,
            table.values[train_rows],
            tuple(table.instance_ids[r] for r in train_rows),
        )
        model = train(sub, y[train_rows], params)
        correct = 0
        for r in test_rows:
            values = dict(zip(table.feature_names, table.values[r]))
            predicted, _ = predict(model, values)
            actual = UNSATISFACTORY if y[r] == 1 else SATISFACTORY
            correct += predicted == actual
        accuracies.append(correct / test_rows.size)
    mean = math.fsum(accuracies) / folds
    return CvResult(tuple(accuracies), mean, assignment)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _node_to_dict(node: Node) -> dict:
    if node.is_leaf:
        return {
            "id": node.id,
            "kind": "leaf",
            "label": node.label,
            "samples": list(node.samples),
            "instance_ids": list(node.instance_ids),
        }
    split = node.split
    assert split is not None and node.left is not None and node.right is not None
    return {
        "id": node.id,
        "kind": "split",
        "feature": split.feature,
        "op": split.op,
        "threshold": split.threshold,
        "gain": split.gain,
        "samples": list(node.samples),
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "root": _node_to_dict(tree.root),
        "feature_names": list(tree.feature_names),
        "params": params_to_dict(tree.params),
    }


def params_to_dict(params: TreeParams) -> dict:
    return {
        "max_depth": params.max_depth,
        "min_samples_leaf": params.min_samples_leaf,
        "min_gain": params.min_gain,
        "excluded_features": sorted(params.excluded_features),
        "seed": params.seed,
    }


def params_from_dict(raw: dict) -> TreeParams:
    return TreeParams(
        max_depth=raw["max_depth"],
        min_samples_leaf=raw["min_samples_leaf"],
        min_gain=raw["min_gain"],
        excluded_features=frozenset(raw["excluded_features"]),
        seed=raw["seed"],
    )


def _node_from_dict(raw: dict) -> Node:
    if raw["kind"] == "leaf":
        return Node(
            raw["id"],
            tuple(raw["samples"]),  # type: ignore[arg-type]
            label=raw["label"],
            instance_ids=tuple(raw["instance_ids"]),
        )
    return Node(
        raw["id"],
        tuple(raw["samples"]),  # type: ignore[arg-type]
        split=Split(raw["feature"], raw["op"], raw["threshold"], raw["gain"]),
        left=_node_from_dict(raw["left"]),
        right=_node_from_dict(raw["right"]),
    )


def tree_from_dict(raw: dict) -> DecisionTree:
    return DecisionTree(
        _node_from_dict(raw["root"]),
        params_from_dict(raw["params"]),
        tuple(raw["feature_names"]),
    )


def cv_to_dict(cv: CvResult) -> dict:
    return {
        "fold_accuracies": list(cv.fold_accuracies),
        "mean_accuracy": cv.mean_accuracy,
        "fold_assignment": {i: f for i, f in sorted(cv.fold_assignment.items())},
    }


def cv_from_dict(raw: dict) -> CvResult:
    return CvResult(
        tuple(raw["fold_accuracies"]),
        raw["mean_accuracy"],
        dict(raw["fold_assignment"]),
    )
