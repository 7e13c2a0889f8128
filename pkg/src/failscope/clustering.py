"""Topical clustering of evaluation instances.

Instances are represented as documents of content terms (binary presence
vectors over the term vocabulary) and grouped by agglomerative hierarchical
clustering with average linkage over Euclidean distances. The dendrogram is
kept so analysts can cut it at any k and merge sibling topics interactively.

Determinism contract: instances are canonically ordered by id, and distance
ties during merging break by the smallest (left id, right id) node pair.
Given the same matrix the merge sequence is identical on every run and at
any parallelism level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Dataset

_INF = np.inf


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class TermDocumentMatrix:
    """Binary term presence matrix; rows follow canonical instance order."""

    vocabulary: tuple[str, ...]
    rows: np.ndarray            # (n_instances, n_terms), values in {0, 1}
    instance_ids: tuple[str, ...]
    source: str

    def row_of(self, instance_id: str) -> np.ndarray:
        return self.rows[self.instance_ids.index(instance_id)]


def build_term_matrix(dataset: Dataset, source: str) -> TermDocumentMatrix:
    """Sorted-vocabulary presence matrix from each instance's term list."""
    vocab: set[str] = set()
    for inst in dataset.instances:
        terms = inst.terms(source)
        if terms is None:
            raise ClusteringError(
                f"instance {inst.id!r} has no content terms for source {source!r}"
            )
        vocab.update(terms)
    vocabulary = tuple(sorted(vocab))
    index = {t: j for j, t in enumerate(vocabulary)}
    rows = np.zeros((len(dataset.instances), len(vocabulary)), dtype=np.float64)
    for i, inst in enumerate(dataset.instances):
        for t in inst.terms(source) or ():
            rows[i, index[t]] = 1.0
    return TermDocumentMatrix(vocabulary, rows, tuple(i.id for i in dataset.instances), source)


@dataclass(frozen=True)
class Merge:
    left: int       # node id, always < right
    right: int
    distance: float
    size: int       # instances in the merged cluster


@dataclass(frozen=True)
class Dendrogram:
    """Merge list over node ids: leaves 0..n-1, merge s creates node n+s."""

    merges: tuple[Merge, ...]
    leaf_ids: tuple[str, ...]   # leaf index -> instance id

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)


def _pairwise_euclidean(rows: np.ndarray) -> np.ndarray:
    """Dense distance matrix via the Gram expansion; exact for integer grids."""
    sq = np.einsum("ij,ij->i", rows, rows)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (rows @ rows.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, _INF)
    return d


def agglomerate(matrix: TermDocumentMatrix) -> Dendrogram:
    """Average-linkage agglomerative clustering of the matrix rows.

    Greedy: each step merges the globally closest active pair, where the
    cluster distance is the mean over member pair distances, maintained
    with the Lance-Williams average update. Among equal-distance pairs the
    lexicographically smallest (left, right) node-id pair merges first.
    """
    return agglomerate_rows(matrix.rows, matrix.instance_ids)


def agglomerate_rows(rows: np.ndarray, instance_ids: Sequence[str]) -> Dendrogram:
    n = rows.shape[0]
    if n < 2:
        raise ClusteringError("clustering needs at least 2 instances")

    d = _pairwise_euclidean(rows)
    active = np.ones(n, dtype=bool)
    node_id = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.float64)
    # nn_dist[s] = min distance from slot s to any other active slot
    nn_dist = d.min(axis=1)

    merges: list[Merge] = []
    for step in range(n - 1):
        d_star = nn_dist[active].min()
        # smallest node id whose row attains the global minimum
        cand = np.flatnonzero(active & (nn_dist == d_star))
        a = cand[np.argmin(node_id[cand])]
        # smallest-id partner within that row
        row_hits = np.flatnonzero(active & (d[a] == d_star))
        b = row_hits[np.argmin(node_id[row_hits])]

        left, right = int(node_id[a]), int(node_id[b])
        new_size = size[a] + size[b]
        merges.append(Merge(left, right, float(d_star), int(new_size)))

        others = active.copy()
        others[a] = others[b] = False
        da_old = d[a].copy()
        db_old = d[b].copy()
        new_row = (size[a] * da_old + size[b] * db_old) / new_size

        # value-only nearest-distance maintenance; rescan only slots whose
        # minimum may have been held solely by a or b and strictly grew
        pair_min = np.minimum(da_old, db_old)
        decreased = others & (new_row < nn_dist)
        nn_dist[decreased] = new_row[decreased]
        rescan = others & (new_row > nn_dist) & (pair_min == nn_dist)

        d[a, :] = new_row
        d[:, a] = new_row
        d[a, a] = _INF
        d[b, :] = _INF
        d[:, b] = _INF
        active[b] = False
        node_id[a] = n + step
        size[a] = new_size

        scan = np.flatnonzero(rescan)
        if scan.size:
            sub = d[np.ix_(scan, active)]
            nn_dist[scan] = sub.min(axis=1) if sub.shape[1] else _INF
        nn_dist[a] = d[a, active].min() if active.sum() > 1 else _INF
        nn_dist[b] = _INF

    return Dendrogram(tuple(merges), tuple(instance_ids))


@dataclass(frozen=True)
class ClusterAssignment:
    """A cut of the dendrogram: total assignment of instances to k clusters."""

    assignment: Mapping[str, int]
    k: int
    labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = set(self.assignment.values())
        if len(ids) != self.k:
            raise ClusteringError(f"expected {self.k} clusters, found {len(ids)}")

    def cluster_ids(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.assignment.values())))

    def members(self, cluster_id: int) -> tuple[str, ...]:
        found = tuple(sorted(i for i, c in self.assignment.items() if c == cluster_id))
        if not found:
            raise ClusteringError(f"unknown cluster {cluster_id}")
        return found


def cut(dendrogram: Dendrogram, k: int) -> ClusterAssignment:
    """Undo the last k-1 merges; clusters numbered 0..k-1 by first member."""
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ClusteringError(f"k={k} out of range 1..{n}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, merge in enumerate(dendrogram.merges[: n - k]):
        new = n + step
        parent[find(merge.left)] = new
        parent[find(merge.right)] = new

    roots: dict[int, int] = {}
    assignment: dict[str, int] = {}
    for leaf in range(n):
        root = find(leaf)
        if root not in roots:
            roots[root] = len(roots)  # leaves visited in canonical order
        assignment[dendrogram.leaf_ids[leaf]] = roots[root]
    return ClusterAssignment(assignment, k)


def merge_clusters(assignment: ClusterAssignment, ids: Iterable[int]) -> ClusterAssignment:
    """Fuse the named clusters into one (id = smallest of the set)."""
    wanted = sorted(set(int(i) for i in ids))
    if not wanted:
        raise ClusteringError("merge needs at least one cluster id")
    present = set(assignment.assignment.values())
    for cid in wanted:
        if cid not in present:
            raise ClusteringError(f"unknown cluster {cid}")
    if len(wanted) == 1:
        return assignment
    target = wanted[0]
    fused = {
        inst: (target if cid in wanted else cid)
        for inst, cid in assignment.assignment.items()
    }
    labels = {
        cid: name for cid, name in assignment.labels.items()
        if cid not in wanted or cid == target
    }
    return ClusterAssignment(fused, assignment.k - (len(wanted) - 1), labels)


def top_terms(
    assignment: ClusterAssignment,
    matrix: TermDocumentMatrix,
    cluster_id: int,
    n: int = 5,
) -> tuple[str, ...]:
    """The n most frequent vocabulary terms in a cluster, ties lexicographic."""
    members = set(assignment.members(cluster_id))
    rows = [i for i, inst in enumerate(matrix.instance_ids) if inst in members]
    counts = matrix.rows[rows].sum(axis=0)
    order = sorted(range(len(matrix.vocabulary)), key=lambda j: (-counts[j], matrix.vocabulary[j]))
    return tuple(matrix.vocabulary[j] for j in order[:n])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def dendrogram_to_dict(dendrogram: Dendrogram) -> dict:
    return {
        "leaves": list(dendrogram.leaf_ids),
        "merges": [
            {"left": m.left, "right": m.right, "distance": m.distance, "size": m.size}
            for m in dendrogram.merges
        ],
    }


def dendrogram_from_dict(raw: dict) -> Dendrogram:
    merges = tuple(
        Merge(m["left"], m["right"], float(m["distance"]), int(m["size"]))
        for m in raw["merges"]
    )
    return Dendrogram(merges, tuple(raw["leaves"]))


def assignment_to_dict(assignment: ClusterAssignment) -> dict:
    return {
        "k": assignment.k,
        "assignment": {i: c for i, c in sorted(assignment.assignment.items())},
        "labels": {str(c): name for c, name in sorted(assignment.labels.items())},
    }
