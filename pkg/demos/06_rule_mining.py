#!/usr/bin/env python3
# Association rules in cubes: a meta-rule fixes which dimension/level slots
# may appear on each side, support comes from COUNT or SUM aggregates, and
# lift/Loevinger rank what turns up. The demo data embeds one association:
# a greeting token at the end of transcriptions, used by female speakers.

from cubehouse import derive_rules, export_rules, fixture_warehouse, mine_frequent
from cubehouse.association import MetaRule

w = fixture_warehouse("rules-demo", seed=1)

meta = MetaRule(
    antecedent_slots=(("time-d", "location-in-transcription"),
                      ("transcription-d", "token")),
    consequent_slots=(("speaker-d", "sex-group"),),
    measure_id="frequency",
    support_aggregate="COUNT",
)

frequent = mine_frequent(w, meta, min_support=0.05)
print(f"{len(frequent)} frequent modality sets at min support 0.05; largest:")
for itemset, support in frequent[-5:]:
    names = " & ".join(f"{d}={m}" for d, _, m in sorted(itemset))
    print(f"  {names}  (support {support:.3f})")

rules = derive_rules(frequent, meta, min_confidence=0.5)
print(f"\n{len(rules)} rules at min confidence 0.5, ranked by Loevinger/lift:")
print(export_rules(rules, "table"))

print("same mining, SUM-weighted support:")
sum_meta = MetaRule(meta.antecedent_slots, meta.consequent_slots,
                    "frequency", "SUM")
sum_rules = derive_rules(mine_frequent(w, sum_meta, 0.05), sum_meta, 0.5)
print(export_rules(sum_rules, "table"))
