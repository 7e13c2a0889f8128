"""Entropy, mutual information, and MI-based feature ranking.

Mutual information with human satisfaction is the single criterion shared
by the feature rankings and the decision-tree split search. Everything is
base-2: entropies and rankings are reported in bits. The estimator is the
plug-in (maximum likelihood) one over empirical histograms, which is what
a tree split needs and what the exhaustive test oracles can reproduce
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset, FeatureDescriptor, Instance, build_feature_table, failure_indicator


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteColumn:
    """Integer category column, optionally remembering its bin edges."""

    values: np.ndarray
    arity: int
    bin_edges: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.int64))
        if self.values.size and int(self.values.max()) >= self.arity:
            raise StatsError("category index out of range for declared arity")
        if self.values.size and int(self.values.min()) < 0:
            raise StatsError("category indices must be non-negative")
        if self.bin_edges is not None and any(
            a >= b for a, b in zip(self.bin_edges, self.bin_edges[1:])
        ):
            raise StatsError("bin edges must be strictly increasing")


def _entropy_from_counts(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        raise StatsError("entropy of an empty sample")
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log2(p)))


def entropy(labels: Sequence[int] | np.ndarray) -> float:
    """Shannon entropy in bits; 0*log(0) taken as 0."""
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise StatsError("entropy of an empty sample")
    return _entropy_from_counts(np.bincount(y))


def mutual_information(x: DiscreteColumn | Sequence[int], y: Sequence[int] | np.ndarray) -> float:
    """Plug-in MI in bits between a discrete column and binary labels.

    Computed as H(X) + H(Y) - H(X, Y) from the joint empirical histogram.
    """
    if isinstance(x, DiscreteColumn):
        xv = x.values
        arity = x.arity
    else:
        xv = np.asarray(x, dtype=np.int64)
        arity = int(xv.max()) + 1 if xv.size else 0
    yv = np.asarray(y, dtype=np.int64)
    if xv.size != yv.size:
        raise StatsError("x and y must have the same length")
    if xv.size == 0:
        raise StatsError("mutual information of an empty sample")
    y_arity = int(yv.max()) + 1 if yv.size else 1
    y_arity = max(y_arity, 2)
    joint = np.bincount(xv * y_arity + yv, minlength=arity * y_arity)
    hx = _entropy_from_counts(np.bincount(xv, minlength=arity))
    hy = _entropy_from_counts(np.bincount(yv, minlength=y_arity))
    hxy = _entropy_from_counts(joint)
    return hx + hy - hxy


def discretize(values: Sequence[float] | np.ndarray, strategy: str = "quantile", q: int = 4) -> DiscreteColumn:
    """Bin a real-valued column into quantile categories.

    ``median`` is shorthand for ``quantile`` with q=2. Duplicate quantile
    edges collapse, and edges at or above the maximum are dropped, so a
    constant column yields a single bin (arity 1) rather than an error.
    """
    xs = np.asarray(values, dtype=np.float64)
    if xs.size == 0:
        raise StatsError("discretize of an empty column")
    if strategy == "median":
        q = 2
    elif strategy != "quantile":
        raise StatsError(f"unknown discretization strategy {strategy!r}")
    if q < 2:
        raise StatsError("quantile discretization needs q >= 2")
    quantiles = [i / q for i in range(1, q)]
    edges = np.unique(np.quantile(xs, quantiles))
    edges = tuple(float(e) for e in edges if e < xs.max())
    bins = np.searchsorted(np.asarray(edges), xs, side="left").astype(np.int64)
    return DiscreteColumn(values=bins, arity=len(edges) + 1, bin_edges=edges or None)


@dataclass(frozen=True)
class FeatureRanking:
    """Features ordered by MI with the failure label, best first."""

    entries: tuple[tuple[str, float], ...]
    single_class: bool = False  # labels had one class; all MI is trivially 0

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def top(self, n: int) -> tuple[str, ...]:
        return self.names()[:n]


RANKING_QUANTILES = 4  # quartile bins for continuous features


def feature_column(
    desc: FeatureDescriptor, raw: np.ndarray
) -> DiscreteColumn:
    """Discrete view of one feature column, per its declared dtype.

    Binary and count features are already categorical; continuous features
    are discretized by quartiles. Tree splits use threshold search instead,
    so this binning only drives rankings.
    """
    if desc.dtype == "binary":
        return DiscreteColumn(raw.astype(np.int64), 2)
    if desc.dtype == "count":
        vals = raw.astype(np.int64)
        arity = int(vals.max()) + 1 if vals.size else 1
        return DiscreteColumn(vals, max(arity, 1))
    return discretize(raw, "quantile", RANKING_QUANTILES)


def rank_features(
    dataset: Dataset,
    view,
    instances: Sequence[Instance] | None = None,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> FeatureRanking:
    """Rank a view's features by MI with satisfaction over an instance subset.

    ``view`` is anything with ``view_kind`` and ``data_source`` attributes.
    Ties break lexicographically by feature name. If the subset has a single
    label class every MI is 0 and the ranking is flagged degenerate.
    """
    insts = tuple(dataset.instances if instances is None else instances)
    if not insts:
        raise StatsError("rank_features over an empty instance subset")
    features = [
        d for d in dataset.catalog.select(view.view_kind, view.data_source)
        if d.name not in exclude
    ]
    if not features:
        raise StatsError(
            f"no features for view ({view.view_kind}, {view.data_source})"
        )
    table = build_feature_table(dataset, features, insts)
    y = failure_indicator(insts)
    single_class = len(set(y.tolist())) < 2
    scored: list[tuple[str, float]] = []
    for j, desc in enumerate(features):
        if single_class:
            scored.append((desc.name, 0.0))
            continue
        column = feature_column(desc, table.values[:, j])
        scored.append((desc.name, mutual_information(column, y)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return FeatureRanking(tuple(scored), single_class=single_class)
