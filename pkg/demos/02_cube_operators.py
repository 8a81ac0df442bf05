#!/usr/bin/env python3
# The nine cube operators, end to end on the token-frequency demo data.

from cubehouse import (
    build_cube,
    cube_to_table,
    dice,
    drill_down,
    fixture_warehouse,
    pull,
    push,
    roll_up,
    rotate,
    slice_cube,
    switch,
)
from cubehouse.evolution import apply_ruleset, parse_rules

w = fixture_warehouse("clapi-small", seed=1)

# give the time dimension a second level so roll-up has somewhere to go
w, _ = apply_ruleset(w, parse_rules(
    "if ConditionOn(location-in-transcription, {location}) then "
    "Generate(location-group, {grp})\n"
    "(1) if location in {'begin', 'end'} then grp={extreme}\n"
    "(2) if location not in {'begin', 'end'} then grp={middle}\n"))

cube = build_cube(w, [("time-d", "location-in-transcription"),
                      ("speaker-d", "speaker")], "frequency", "SUM")
print("== cube: location x speaker, SUM(frequency)")
print(cube_to_table(cube))

print("== roll-up time-d to location-group (AVG stays exact: accumulators merge)")
print(cube_to_table(roll_up(cube, "time-d", "location-group")))

print("== drill-down recomputes from facts, slices intact")
sliced = slice_cube(cube, "speaker-d", "spk1")
up = roll_up(sliced, "time-d", "location-group")
print(cube_to_table(drill_down(up, "time-d", "location-in-transcription")))

print("== dice keeps chosen members; rotate/switch only re-present")
diced = dice(cube, {"time-d": ["begin", "end"]})
print(cube_to_table(rotate(diced, [1, 0])))
print(cube_to_table(switch(diced, "time-d", ["end", "begin"])))

print("== push folds an axis into cell content; pull is its inverse")
pushed = push(slice_cube(cube, "speaker-d", "spk1"), "time-d")
print(cube_to_table(pushed))
print(cube_to_table(pull(pushed)))
