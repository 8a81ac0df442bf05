#!/usr/bin/env python3
# The warehouse is a set of XML documents: one model document, one document
# per dimension, one fact document. This walk-through generates a small
# demo warehouse, prints the documents, and shows what validation catches.

from dataclasses import replace

from cubehouse import generate_fixture, parse_warehouse, validate_warehouse
from cubehouse.model import validate

documents = generate_fixture("clapi-small", seed=1)

print("=== dw-model.xml ===")
print(documents["dw-model.xml"])
print("=== dim-time.xml ===")
print(documents["dim-time.xml"])
print("=== facts.xml (first lines) ===")
print("\n".join(documents["facts.xml"].splitlines()[:9]), "\n...")

w = parse_warehouse(documents)
print(f"parsed: {len(w.model.dimensions)} dimensions, "
      f"{len(w.facts.rows)} facts")
print("validation findings:", validate(w).findings or "none")

# break one roll-up link and watch validation name the damage
trans = w.dimension_data["transcription-d"]
fine = trans.levels[0]
broken_fine = replace(fine, instances=(
    replace(fine.instances[0], roll_up="nowhere"),) + fine.instances[1:])
broken = {**w.dimension_data,
          "transcription-d": replace(trans, levels=(broken_fine,) + trans.levels[1:])}
report = validate_warehouse(w.model, broken, w.facts)
for finding in report.findings:
    print(f"{finding.severity}: [{finding.kind}] {finding.message}")
