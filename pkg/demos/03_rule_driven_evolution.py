#!/usr/bin/env python3
# Hierarchy evolution from if-then rules: validate, inspect findings, apply,
# and analyze at the new granularity.

from cubehouse import build_cube, cube_to_table, fixture_warehouse, roll_up
from cubehouse.evolution import apply_ruleset, parse_rules, validate_ruleset
from cubehouse.xmlio import serialize_dimension

w = fixture_warehouse("clapi-small", seed=1)

RULES = """\
if ConditionOn(location-in-transcription, {location}) then Generate(location-group, {grp})
(1) if location in {'begin', 'end'} then grp={extreme}
(2) if location not in {'begin', 'end'} then grp={middle}
"""

incomplete = parse_rules("\n".join(RULES.splitlines()[:2]))
print("== validating an incomplete rule set")
for finding in validate_ruleset(incomplete, w).findings:
    print(f"{finding.severity}: [{finding.kind}] {finding.message}")

rules = parse_rules(RULES)
print("\n== full rule set validates clean:",
      validate_ruleset(rules, w).findings or "no findings")

evolved, summary = apply_ruleset(w, rules)
print("\n== groups created:", dict(summary.groups))
print("\n== rewritten dimension document")
print(serialize_dimension(evolved.dimension_data["time-d"]))

base = build_cube(evolved, [("time-d", "location-in-transcription")],
                  "frequency", "SUM")
print("== before:")
print(cube_to_table(base))
print("== after roll-up to the new level (totals conserved):")
print(cube_to_table(roll_up(base, "time-d", "location-group")))
