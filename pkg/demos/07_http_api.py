#!/usr/bin/env python3
# The HTTP surface, driven in-process: load a warehouse, build a cube,
# apply operators, evolve the hierarchy, mine. The same flows work over the
# wire via `cubehouse serve DIR` (see README for the endpoint list).

import json
import tempfile

from fastapi.testclient import TestClient

from cubehouse.cli import main as cli
from cubehouse.service import Session, create_app

directory = tempfile.mkdtemp(prefix="cubehouse-demo-")
cli(["fixture", "clapi-small", "--seed", "1", "--out", directory])

api = TestClient(create_app(Session(directory)))

print("== GET /model")
model = api.get("/model").json()
print(json.dumps({d["id"]: [lv["id"] for lv in d["levels"]]
                  for d in model["dimensions"]}, indent=2))

print("\n== POST /cubes")
cube = api.post("/cubes", json={
    "axes": [{"dimension": "time-d", "level": "location-in-transcription"},
             {"dimension": "speaker-d", "level": "speaker"}],
    "measure": "frequency", "aggregate": "SUM"}).json()
print(f"cube {cube['id']}: {cube['cell_total']} non-empty cells")

print("\n== POST /rules/apply (dry run, then real)")
rules = {"text": (
    "if ConditionOn(location-in-transcription, {location}) then "
    "Generate(location-group, {grp})\n"
    "(1) if location in {'begin', 'end'} then grp={extreme}\n"
    "(2) if location not in {'begin', 'end'} then grp={middle}\n")}
print("dry:", api.post("/rules/apply?dry_run=true", json=rules).json()["applied"])
applied = api.post("/rules/apply", json=rules).json()
print("applied:", applied["applied"], "->", applied["change"]["groups"])

print("\n== stale flag on the pre-evolution cube:",
      api.get(f"/cubes/{cube['id']}").json()["stale"])

print("\n== POST /cubes/{id}/op roll-up on a fresh cube")
fresh = api.post("/cubes", json={
    "axes": [{"dimension": "time-d", "level": "location-in-transcription"}],
    "measure": "frequency", "aggregate": "SUM"}).json()
rolled = api.post(f"/cubes/{fresh['id']}/op", json={
    "op": "roll-up", "dimension": "time-d", "level": "location-group"}).json()
for cell in rolled["cells"]:
    print(f"  {cell['coordinate']} -> {cell['value']}")

print("\n== POST /mine/opac")
opac = api.post("/mine/opac", json={
    "cube": fresh["id"], "dimension": "time-d", "k": 2}).json()
print("partition:", opac["partition"])
print("quality:", [round(q["ratio"], 3) for q in opac["quality"]])

print("\n== GET /log")
print(json.dumps(api.get("/log").json()[0]["change"]["groups"]))
