#!/usr/bin/env python3
# Aggregation by clustering: members become vectors of their cell values,
# agglomerative clustering proposes groupings, the quality profile guides
# the choice of k, and the chosen partition becomes an applicable rule set.

from cubehouse import (
    ahc_cluster,
    apply_ruleset,
    build_cube,
    cube_to_table,
    cut_partition,
    extract_member_vectors,
    fixture_warehouse,
    partition_quality,
    partition_to_rules,
    roll_up,
)
from cubehouse.clustering import quality_profile
from cubehouse.evolution import format_rules

w = fixture_warehouse("clapi-small", seed=1)
cube = build_cube(w, [("speaker-d", "speaker"), ("transcription-d", "token")],
                  "frequency", "SUM")

# cluster speakers by their token-usage profiles
vectors = extract_member_vectors(cube, "speaker-d")
for v in vectors:
    print(f"{v.member_id:10s} features={[round(float(x), 1) for x in v.features]} "
          f"descriptors={dict(v.descriptors)}")

dendrogram = ahc_cluster(vectors, "ward")
print("\nmerge sequence (ward, min-max normalized):")
for m in dendrogram.merges:
    print(f"  {sorted(m.cluster_a)} + {sorted(m.cluster_b)} "
          f"at height {m.height:.4f}")

print("\nquality per k (between/total inertia):")
for q in quality_profile(dendrogram, vectors):
    print(f"  k={q.k}: ratio={q.ratio:.4f} within={q.within_inertia:.2f}")

partition = cut_partition(dendrogram, 2)
print("\nchosen k=2:", [sorted(c) for c in partition.clusters])
print(partition_quality(partition, vectors).to_dict())

rules = partition_to_rules(partition, cube, "speaker-d", "speaker-group",
                           ["group-a", "group-b"])
print("\ngenerated rule set:")
print(format_rules(rules))

evolved, _ = apply_ruleset(w, rules)
regrouped = roll_up(
    build_cube(evolved, [("speaker-d", "speaker")], "frequency", "SUM"),
    "speaker-d", "speaker-group")
print("cluster-level aggregates after applying the rules:")
print(cube_to_table(regrouped))
