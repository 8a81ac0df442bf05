"""Aggregation by clustering: group the members of one cube axis.

Members become feature vectors (their cell values across all coordinates of
the remaining axes, empty cells as 0), agglomerative hierarchical clustering
records a merge sequence, and any cut of the dendrogram is a candidate
aggregate level. A chosen partition bridges back into the rule engine via
:func:`partition_to_rules`, so rolling up over the created level reproduces
the cluster-level aggregates.

Distances are Euclidean over min-max-normalized features by default (the
flag makes raw features available). Cluster distances are computed from the
definitional formulas with order-independent compensated sums, so merge
heights are reproducible bit for bit:

* single     min pairwise distance
* complete   max pairwise distance
* average    mean pairwise distance
* ward       |A||B|/(|A|+|B|) * squared distance between centroids

Ties on the minimum distance break on the lowest lexicographic pair of
cluster representatives (a cluster is represented by its smallest member id).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .cube import Cube
from .errors import EngineError
from .evolution import ConditionTerm, DataRule, ID_ATTRIBUTE, RuleSet, StructureRule

LINKAGES = ("single", "complete", "average", "ward")


@dataclass(frozen=True, eq=False)  # ndarray field: compare features explicitly
class MemberVector:
    member_id: str
    features: np.ndarray
    descriptors: Mapping[str, str]


@dataclass(frozen=True)
class Merge:
    cluster_a: frozenset[str]
    cluster_b: frozenset[str]
    height: float


@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]  # exactly len(leaves) - 1 entries
    linkage: str

    def to_json(self) -> dict:
        """Nested children/height tree for the UI."""
        nodes: dict[frozenset[str], dict] = {
            frozenset({m}): {"member": m, "height": 0.0} for m in self.leaves
        }
        root: dict = nodes[frozenset({self.leaves[0]})] if self.leaves else {}
        for merge in self.merges:
            node = {
                "children": [nodes.pop(merge.cluster_a), nodes.pop(merge.cluster_b)],
                "height": merge.height,
            }
            nodes[merge.cluster_a | merge.cluster_b] = node
            root = node
        return root


@dataclass(frozen=True)
class Partition:
    clusters: tuple[frozenset[str], ...]  # ordered by smallest member id
    k: int


@dataclass(frozen=True)
class QualityReport:
    k: int
    within_inertia: float
    between_inertia: float
    total_inertia: float
    ratio: float  # between / total, 0 when total is 0

    def to_dict(self) -> dict:
        return {"k": self.k, "within": self.within_inertia,
                "between": self.between_inertia, "total": self.total_inertia,
                "ratio": self.ratio}


# ---------------------------------------------------------------------------
# Feature extraction


def extract_member_vectors(cube: Cube, dim_id: str, *,
                           include_descriptors: bool = False,
                           descriptor_weight: float = 1.0) -> list[MemberVector]:
    """One vector per member of the chosen axis.

    Feature j of member m is the cube's presentation value at (m, c_j), where
    c_1..c_n enumerate the coordinates of the other axes in row-major member
    order; empty cells contribute 0. With ``include_descriptors`` the member's
    categorical attribute values are appended as one-hot columns scaled by
    ``descriptor_weight`` (attributes sorted by name, values by content).
    """
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    others = [ax for i, ax in enumerate(cube.axes) if i != idx]
    other_coords = list(product(*(ax.member_order for ax in others))) if others else [()]

    warehouse = cube.provenance.warehouse
    level = warehouse.dimension_data[dim_id].level(axis.level_id)

    one_hot_columns: list[tuple[str, str]] = []
    if include_descriptors:
        attrs = sorted({a for m in axis.member_order
                        for a in level.instance(m).attribute_values})
        for attr in attrs:
            values = sorted({level.instance(m).attribute_values.get(attr, "")
                             for m in axis.member_order})
            one_hot_columns.extend((attr, v) for v in values)

    out: list[MemberVector] = []
    for m in axis.member_order:
        row = []
        for rest in other_coords:
            coord = rest[:idx] + (m,) + rest[idx:]
            value = cube.value_at(coord)
            row.append(0.0 if value is None else float(value))
        descriptors = dict(level.instance(m).attribute_values)
        for attr, v in one_hot_columns:
            row.append(descriptor_weight if descriptors.get(attr, "") == v else 0.0)
        out.append(MemberVector(member_id=m, features=np.asarray(row, dtype=float),
                                descriptors=descriptors))
    return out


def minmax_normalize(matrix: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns become all zeros."""
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    span = hi - lo
    out = np.zeros_like(matrix, dtype=float)
    nonconst = span > 0
    out[:, nonconst] = (matrix[:, nonconst] - lo[nonconst]) / span[nonconst]
    return out


# ---------------------------------------------------------------------------
# Agglomeration (definitional distances, compensated sums)


def _sq_euclidean(a: Sequence[float], b: Sequence[float]) -> float:
    return math.fsum((x - y) ** 2 for x, y in zip(a, b))


def _euclidean(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(_sq_euclidean(a, b))


def _centroid(rows: list[Sequence[float]]) -> list[float]:
    n = len(rows)
    return [math.fsum(r[j] for r in rows) / n for j in range(len(rows[0]))]


def _cluster_distance(linkage: str, a: frozenset[str], b: frozenset[str],
                      features: Mapping[str, Sequence[float]]) -> float:
    if linkage == "ward":
        ca = _centroid([features[m] for m in sorted(a)])
        cb = _centroid([features[m] for m in sorted(b)])
        return len(a) * len(b) / (len(a) + len(b)) * _sq_euclidean(ca, cb)
    pair_distances = [
        _euclidean(features[x], features[y]) for x in sorted(a) for y in sorted(b)
    ]
    if linkage == "single":
        return min(pair_distances)
    if linkage == "complete":
        return max(pair_distances)
    return math.fsum(pair_distances) / len(pair_distances)


def ahc_cluster(vectors: Sequence[MemberVector], linkage: str = "ward", *,
                normalize: bool = True) -> Dendrogram:
    """Agglomerative merge sequence over the member vectors.

    Deterministic: distance ties break on the lowest lexicographic pair of
    cluster representatives. Heights are non-decreasing for all four
    linkages.
    """
    if linkage not in LINKAGES:
        raise EngineError("unknown-linkage",
                          f"linkage {linkage!r} is not one of {LINKAGES}", where=linkage)
    if len(vectors) < 2:
        raise EngineError("too-few-vectors",
                          f"clustering needs at least 2 vectors, got {len(vectors)}")
    matrix = np.vstack([v.features for v in vectors])
    if normalize:
        matrix = minmax_normalize(matrix)
    features = {v.member_id: [float(x) for x in matrix[i]]
                for i, v in enumerate(vectors)}
    if len(features) != len(vectors):
        raise EngineError("duplicate-member", "member ids are not unique")

    leaves = tuple(v.member_id for v in vectors)
    clusters: list[frozenset[str]] = [frozenset({m}) for m in leaves]
    merges: list[Merge] = []
    while len(clusters) > 1:
        best: tuple[float, tuple[str, str], int, int] | None = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = _cluster_distance(linkage, clusters[i], clusters[j], features)
                reps = tuple(sorted((min(clusters[i]), min(clusters[j]))))
                key = (d, reps)
                if best is None or key < (best[0], best[1]):
                    best = (d, reps, i, j)
        d, _, i, j = best
        a, b = clusters[i], clusters[j]
        if min(b) < min(a):
            a, b = b, a
        merges.append(Merge(cluster_a=a, cluster_b=b, height=d))
        clusters = [c for idx, c in enumerate(clusters) if idx not in (i, j)]
        clusters.append(a | b)
    return Dendrogram(leaves=leaves, merges=tuple(merges), linkage=linkage)


def cut_partition(dendrogram: Dendrogram, k: int) -> Partition:
    """Undo the last k-1 merges: the k clusters the dendrogram holds at that depth."""
    n = len(dendrogram.leaves)
    if not 1 <= k <= n:
        raise EngineError("k-out-of-range", f"k={k} not in 1..{n}")
    clusters: list[frozenset[str]] = [frozenset({m}) for m in dendrogram.leaves]
    for merge in dendrogram.merges[:n - k]:
        clusters = [c for c in clusters if c not in (merge.cluster_a, merge.cluster_b)]
        clusters.append(merge.cluster_a | merge.cluster_b)
    clusters.sort(key=min)
    return Partition(clusters=tuple(clusters), k=k)


# ---------------------------------------------------------------------------
# Partition quality (inertia decomposition about centroids)


def partition_quality(partition: Partition, vectors: Sequence[MemberVector]) -> QualityReport:
    """Within/between inertia about centroids; within + between = total."""
    features = {v.member_id: [float(x) for x in v.features] for v in vectors}
    covered = set().union(*partition.clusters) if partition.clusters else set()
    if covered != set(features):
        raise EngineError("partition-mismatch",
                          "partition does not cover exactly the given vectors")
    rows = [features[m] for m in sorted(features)]
    global_centroid = _centroid(rows)
    total = math.fsum(_sq_euclidean(r, global_centroid) for r in rows)

    within = 0.0
    between = 0.0
    for cluster in partition.clusters:
        members = [features[m] for m in sorted(cluster)]
        c = _centroid(members)
        within += math.fsum(_sq_euclidean(r, c) for r in members)
        between += len(members) * _sq_euclidean(c, global_centroid)
    ratio = between / total if total > 0 else 0.0
    return QualityReport(k=partition.k, within_inertia=within,
                         between_inertia=between, total_inertia=total, ratio=ratio)


def quality_profile(dendrogram: Dendrogram,
                    vectors: Sequence[MemberVector]) -> tuple[QualityReport, ...]:
    """Quality report for every cut k = 1..n (feeds the UI slider)."""
    return tuple(
        partition_quality(cut_partition(dendrogram, k), vectors)
        for k in range(1, len(dendrogram.leaves) + 1)
    )


# ---------------------------------------------------------------------------
# Bridge into the rule engine


def partition_to_rules(partition: Partition, cube: Cube, dim_id: str,
                       target_level_id: str, cluster_names: Sequence[str],
                       target_attribute: str = "group-name") -> RuleSet:
    """Turn a partition into a ready-to-apply rule set.

    Data rules condition on member identity through the reserved ``id``
    attribute: one rule per cluster, ``id in {members...}``; cluster_names
    align with partition.clusters. Applying the rule set and rolling up over
    the created level reproduces the cluster-level aggregates.
    """
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    level = cube.provenance.warehouse.dimension_data[dim_id].level(axis.level_id)
    level_members = set(level.ids())
    covered = set().union(*partition.clusters) if partition.clusters else set()
    if covered != level_members:
        raise EngineError("partition-mismatch",
                          f"partition covers {sorted(covered)} but level "
                          f"{axis.level_id!r} holds {sorted(level_members)}")
    if len(cluster_names) != len(partition.clusters):
        raise EngineError("name-mismatch",
                          f"{len(partition.clusters)} clusters but "
                          f"{len(cluster_names)} names")
    if len(set(cluster_names)) != len(cluster_names):
        raise EngineError("duplicate-cluster-name", "cluster names must be distinct")

    structure = StructureRule(
        source_level_id=axis.level_id,
        condition_attributes=(ID_ATTRIBUTE,),
        target_level_id=target_level_id,
        target_attributes=(target_attribute,),
    )
    data = tuple(
        DataRule(
            condition=(ConditionTerm(attr=ID_ATTRIBUTE, op="in",
                                     values=tuple(sorted(cluster))),),
            target_instance={target_attribute: name},
        )
        for cluster, name in zip(partition.clusters, cluster_names)
    )
    return RuleSet(structure=structure, data=data, dim_id=dim_id)
