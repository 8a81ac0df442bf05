"""Clustering aggregation: extraction, agglomeration, quality, rule bridge."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from cubehouse.clustering import (
    MemberVector,
    ahc_cluster,
    cut_partition,
    extract_member_vectors,
    partition_quality,
    partition_to_rules,
    quality_profile,
)
from cubehouse.cube import build_cube, roll_up
from cubehouse.errors import EngineError
from cubehouse.evolution import apply_ruleset, parse_rules, validate_ruleset

from conftest import GROUPING_RULES, random_warehouse, sample_warehouse, tiny_warehouse
from oracles import oracle_ahc, oracle_inertia

LOC = ("time-d", "location-in-transcription")
SPK = ("speaker-d", "speaker")


def vecs(values: dict[str, list[float]]) -> list[MemberVector]:
    return [MemberVector(member_id=m, features=np.asarray(v, dtype=float),
                         descriptors={})
            for m, v in values.items()]


FOUR_POINTS = {"m00": [0.0], "m01": [1.0], "m10": [10.0], "m11": [11.0]}


class TestExtraction:
    def test_one_axis_gives_single_feature(self):
        cube = build_cube(tiny_warehouse(), [LOC], "frequency", "SUM")
        vectors = extract_member_vectors(cube, "time-d")
        assert [(v.member_id, list(v.features)) for v in vectors] == [
            ("begin", [5.0]), ("middle", [5.0]), ("end", [4.0])]
        assert vectors[0].descriptors == {"location": "begin"}

    def test_two_axes_give_feature_per_other_member(self):
        cube = build_cube(tiny_warehouse(), [LOC, SPK], "frequency", "SUM")
        vectors = extract_member_vectors(cube, "time-d")
        assert all(v.features.shape == (2,) for v in vectors)
        # spk2 column is all empty cells, encoded as zeros
        assert [list(v.features) for v in vectors] == [
            [5.0, 0.0], [5.0, 0.0], [4.0, 0.0]]

    def test_member_with_all_empty_cells_is_kept(self):
        w = tiny_warehouse(frequencies={("begin", "spk1"): 2.0})
        cube = build_cube(w, [LOC], "frequency", "SUM")
        vectors = extract_member_vectors(cube, "time-d")
        assert [list(v.features) for v in vectors] == [[2.0], [0.0], [0.0]]

    def test_descriptor_columns_are_optional(self):
        cube = build_cube(tiny_warehouse(), [LOC], "frequency", "SUM")
        plain = extract_member_vectors(cube, "time-d")
        hot = extract_member_vectors(cube, "time-d", include_descriptors=True,
                                     descriptor_weight=2.0)
        assert hot[0].features.shape[0] == plain[0].features.shape[0] + 3
        assert list(hot[0].features[1:]) == [2.0, 0.0, 0.0]  # begin < end < middle

    def test_missing_axis(self):
        cube = build_cube(tiny_warehouse(), [SPK], "frequency", "SUM")
        with pytest.raises(EngineError) as err:
            extract_member_vectors(cube, "time-d")
        assert err.value.code == "dimension-not-on-axis"


class TestAgglomeration:
    def test_two_pairs_geometry_single_linkage(self):
        dendro = ahc_cluster(vecs(FOUR_POINTS), "single", normalize=False)
        assert dendro.merges[0].cluster_a == frozenset({"m00"})
        assert dendro.merges[0].cluster_b == frozenset({"m01"})
        assert dendro.merges[0].height == 1.0
        assert dendro.merges[1].cluster_a | dendro.merges[1].cluster_b == \
            frozenset({"m10", "m11"})
        assert dendro.merges[1].height == 1.0
        assert dendro.merges[2].height == 9.0
        cut = cut_partition(dendro, 2)
        assert cut.clusters == (frozenset({"m00", "m01"}),
                                frozenset({"m10", "m11"}))

    def test_identical_vectors_merge_at_zero(self):
        dendro = ahc_cluster(vecs({"a": [3.0, 1.0], "b": [3.0, 1.0],
                                   "c": [9.0, 9.0]}), "complete")
        assert dendro.merges[0].cluster_a == frozenset({"a"})
        assert dendro.merges[0].height == 0.0

    def test_requires_two_vectors(self):
        with pytest.raises(EngineError) as err:
            ahc_cluster(vecs({"a": [1.0]}))
        assert err.value.code == "too-few-vectors"

    @pytest.mark.parametrize("linkage", ["single", "complete", "average", "ward"])
    def test_heights_are_monotone(self, linkage):
        rng = random.Random(hash(linkage) % 9999)
        for _ in range(20):
            rows = {f"m{i:02d}": [rng.uniform(-5, 5) for _ in range(3)]
                    for i in range(rng.randint(3, 10))}
            dendro = ahc_cluster(vecs(rows), linkage)
            heights = [m.height for m in dendro.merges]
            assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))

    @pytest.mark.parametrize("linkage", ["single", "complete", "average", "ward"])
    @pytest.mark.parametrize("normalize", [False, True])
    def test_matches_naive_reference(self, linkage, normalize):
        rng = random.Random(42 + hash((linkage, normalize)) % 1000)
        for case in range(30):
            n = rng.randint(2, 12)
            width = rng.randint(1, 4)
            if case % 3 == 0:  # integer grids provoke exact distance ties
                rows = {f"m{i:02d}": [float(rng.randint(0, 3)) for _ in range(width)]
                        for i in range(n)}
            else:
                rows = {f"m{i:02d}": [rng.uniform(-10, 10) for _ in range(width)]
                        for i in range(n)}
            dendro = ahc_cluster(vecs(rows), linkage, normalize=normalize)
            expected = oracle_ahc(rows, linkage, normalize)
            got = [(m.cluster_a, m.cluster_b, m.height) for m in dendro.merges]
            assert got == expected

    def test_cut_boundaries(self):
        dendro = ahc_cluster(vecs(FOUR_POINTS), "single", normalize=False)
        assert cut_partition(dendro, 1).clusters == (frozenset(FOUR_POINTS),)
        assert cut_partition(dendro, 4).clusters == tuple(
            frozenset({m}) for m in sorted(FOUR_POINTS))
        with pytest.raises(EngineError):
            cut_partition(dendro, 0)
        with pytest.raises(EngineError):
            cut_partition(dendro, 5)

    def test_dendrogram_json_nests_children(self):
        dendro = ahc_cluster(vecs(FOUR_POINTS), "single", normalize=False)
        tree = dendro.to_json()
        assert tree["height"] == 9.0
        assert len(tree["children"]) == 2


class TestPartitionQuality:
    def test_singletons_and_single_cluster(self):
        vectors = vecs(FOUR_POINTS)
        dendro = ahc_cluster(vectors, "ward", normalize=False)
        singles = partition_quality(cut_partition(dendro, 4), vectors)
        assert singles.within_inertia == 0.0
        assert singles.ratio == 1.0
        lumped = partition_quality(cut_partition(dendro, 1), vectors)
        assert lumped.between_inertia == pytest.approx(0.0, abs=1e-12)
        assert lumped.ratio == pytest.approx(0.0, abs=1e-12)

    def test_two_pairs_inertia_decomposition(self):
        # centroids 0.5 and 10.5; global centroid 5.5:
        # within  = (0.5^2 + 0.5^2) * 2 pairs                  = 1.0
        # between = 2*(5.5-0.5)^2... i.e. 2*25 + 2*25          = 100.0
        # total   = 30.25 + 20.25 + 20.25 + 30.25              = 101.0
        vectors = vecs(FOUR_POINTS)
        dendro = ahc_cluster(vectors, "single", normalize=False)
        report = partition_quality(cut_partition(dendro, 2), vectors)
        assert report.within_inertia == pytest.approx(1.0)
        assert report.between_inertia == pytest.approx(100.0)
        assert report.total_inertia == pytest.approx(101.0)
        assert report.ratio == pytest.approx(100.0 / 101.0)
        expected = oracle_inertia({m: v for m, v in FOUR_POINTS.items()},
                                  list(cut_partition(dendro, 2).clusters))
        assert (report.within_inertia, report.between_inertia,
                report.total_inertia) == pytest.approx(expected)

    def test_huygens_decomposition_random(self):
        rng = random.Random(88)
        for _ in range(40):
            n = rng.randint(2, 15)
            rows = {f"m{i:02d}": [rng.uniform(-4, 4) for _ in range(3)]
                    for i in range(n)}
            vectors = vecs(rows)
            dendro = ahc_cluster(vectors, "average")
            k = rng.randint(1, n)
            report = partition_quality(cut_partition(dendro, k), vectors)
            assert abs(report.within_inertia + report.between_inertia
                       - report.total_inertia) <= 1e-9

    def test_quality_profile_covers_every_k(self):
        vectors = vecs(FOUR_POINTS)
        dendro = ahc_cluster(vectors, "ward", normalize=False)
        profile = quality_profile(dendro, vectors)
        assert [q.k for q in profile] == [1, 2, 3, 4]
        ratios = [q.ratio for q in profile]
        assert ratios == sorted(ratios)  # more clusters never explain less


class TestRuleBridge:
    def test_partition_reproduces_grouping_rules(self):
        w = sample_warehouse()
        # per-speaker profiles: begin (5, 0), middle (0, 5), end (4, 0) —
        # begin and end are the similar pair
        cube = build_cube(w, [LOC, SPK], "frequency", "SUM")
        vectors = extract_member_vectors(cube, "time-d")
        partition = cut_partition(ahc_cluster(vectors, "ward"), 2)
        assert partition.clusters == (frozenset({"begin", "end"}),
                                      frozenset({"middle"}))
        rule_set = partition_to_rules(
            partition, cube, "time-d", "group-of-location-in-transcription",
            ["extreme", "middle"], target_attribute="location-group")
        assert validate_ruleset(rule_set, w).findings == ()
        via_clusters, _ = apply_ruleset(w, rule_set)
        via_text, _ = apply_ruleset(w, parse_rules(GROUPING_RULES))
        assert via_clusters.model == via_text.model
        assert via_clusters.dimension_data == via_text.dimension_data

    def test_round_trip_conserves_cluster_sums(self):
        rng = random.Random(55)
        for _ in range(10):
            w = random_warehouse(rng, max_dims=2, max_levels=1, max_facts=60)
            dim = w.model.dimensions[0]
            cube = build_cube(w, [(dim.id, dim.levels[0].id)], "m", "SUM")
            vectors = extract_member_vectors(cube, dim.id)
            if len(vectors) < 2:
                continue
            dendro = ahc_cluster(vectors, "ward")
            k = rng.randint(1, len(vectors))
            partition = cut_partition(dendro, k)
            names = [f"g{i}" for i in range(k)]
            rule_set = partition_to_rules(partition, cube, dim.id, "grouped", names)
            new, _ = apply_ruleset(w, rule_set)
            rebuilt = build_cube(new, [(dim.id, dim.levels[0].id)], "m", "SUM")
            rolled = roll_up(rebuilt, dim.id, "grouped")
            by_value = {v.member_id: math.fsum(v.features) for v in vectors}
            for cluster, name in zip(partition.clusters, names):
                expected = math.fsum(by_value[m] for m in sorted(cluster))
                got = rolled.cells.get((name,))
                if got is None:
                    assert expected == 0.0
                else:
                    assert got.value == pytest.approx(expected, rel=1e-9)

    def test_duplicate_names_rejected(self):
        cube = build_cube(tiny_warehouse(), [LOC], "frequency", "SUM")
        vectors = extract_member_vectors(cube, "time-d")
        partition = cut_partition(ahc_cluster(vectors, "ward"), 2)
        with pytest.raises(EngineError) as err:
            partition_to_rules(partition, cube, "time-d", "g", ["same", "same"])
        assert err.value.code == "duplicate-cluster-name"

    def test_partition_must_cover_level(self):
        cube = build_cube(tiny_warehouse(), [LOC], "frequency", "SUM")
        from cubehouse.clustering import Partition
        partial = Partition(clusters=(frozenset({"begin"}),), k=1)
        with pytest.raises(EngineError) as err:
            partition_to_rules(partial, cube, "time-d", "g", ["only"])
        assert err.value.code == "partition-mismatch"
