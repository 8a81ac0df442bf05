"""Shared fixtures: sample documents, random warehouse generation, and the
independent brute-force oracles the property suites compare against.

Oracle code here deliberately re-derives everything from first principles
(explicit roll-up chain climbing, per-fact scans) instead of calling the
engine's helpers, so it stays an independent check of the production path.
"""

from __future__ import annotations

import math
import random

import pytest

from cubehouse.model import (
    AttributeSpec,
    DimensionData,
    DimensionSpec,
    FactRow,
    FactSpec,
    FactTable,
    Instance,
    LevelInstances,
    LevelSpec,
    MeasureSpec,
    Warehouse,
    WarehouseModel,
)

# ---------------------------------------------------------------------------
# Sample documents (token-frequency study: locations x speakers x tokens)

MODEL_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<DW-model>
  <dimension id="time-d" path="dim-time.xml">
    <Level id="location-in-transcription">
      <attribute name="location" type="string" />
    </Level>
  </dimension>
  <dimension id="speaker-d" path="dim-speaker.xml">
    <Level id="speaker">
      <attribute name="sex" type="boolean" />
    </Level>
  </dimension>
  <dimension id="transcription-d" path="dim-transcript.xml">
    <Level id="token">
      <attribute name="term" type="string" />
    </Level>
    <Level id="transcription">
      <attribute name="transcription-name" type="string" />
    </Level>
  </dimension>
  <FactDoc id="facts" path="facts.xml">
    <measure id="frequency" type="real" />
    <dimension idref="time-d" />
    <dimension idref="speaker-d" />
    <dimension idref="transcription-d" />
  </FactDoc>
</DW-model>
"""

# the same model after the location-grouping rules created a second level
EVOLVED_MODEL_DOC = MODEL_DOC.replace(
    """\
    <Level id="location-in-transcription">
      <attribute name="location" type="string" />
    </Level>
""",
    """\
    <Level id="location-in-transcription">
      <attribute name="location" type="string" />
    </Level>
    <Level id="group-of-location-in-transcription">
      <attribute name="location-group" type="string" />
    </Level>
""",
)

# grouped time dimension document: begin/end -> extreme, middle -> middle
EVOLVED_TIME_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<dimension dim-id="time-d">
  <Level id="location-in-transcription">
    <Instance id="begin" Roll-up="extreme">
      <attribute id="location" value="begin" />
    </Instance>
    <Instance id="middle" Roll-up="middle">
      <attribute id="location" value="middle" />
    </Instance>
    <Instance id="end" Roll-up="extreme">
      <attribute id="location" value="end" />
    </Instance>
  </Level>
  <Level id="group-of-location-in-transcription">
    <Instance id="extreme" Drill-Down="begin end">
      <attribute id="location-group" value="extreme" />
    </Instance>
    <Instance id="middle" Drill-Down="middle">
      <attribute id="location-group" value="middle" />
    </Instance>
  </Level>
</dimension>
"""

GROUPING_RULES = """\
if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location-in-transcription, {location-group})
(1) if location in {'begin', 'end'} then location-group={extreme}
(2) if location not in {'begin', 'end'} then location-group={middle}
"""

FLAT_TIME_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<dimension dim-id="time-d">
  <Level id="location-in-transcription">
    <Instance id="begin">
      <attribute id="location" value="begin" />
    </Instance>
    <Instance id="middle">
      <attribute id="location" value="middle" />
    </Instance>
    <Instance id="end">
      <attribute id="location" value="end" />
    </Instance>
  </Level>
</dimension>
"""

SPEAKER_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<dimension dim-id="speaker-d">
  <Level id="speaker">
    <Instance id="spk1">
      <attribute id="sex" value="true" />
    </Instance>
    <Instance id="spk2">
      <attribute id="sex" value="false" />
    </Instance>
  </Level>
</dimension>
"""

TRANSCRIPT_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<dimension dim-id="transcription-d">
  <Level id="token">
    <Instance id="tok1" Roll-up="tr1">
      <attribute id="term" value="h'llo" />
    </Instance>
    <Instance id="tok2" Roll-up="tr1">
      <attribute id="term" value="ok" />
    </Instance>
  </Level>
  <Level id="transcription">
    <Instance id="tr1" Drill-Down="tok1 tok2">
      <attribute id="transcription-name" value="classroom" />
    </Instance>
  </Level>
</dimension>
"""

SAMPLE_FACTS_DOC = """\
<?xml version="1.0" encoding="utf-8"?>
<FactDoc id="facts">
  <fact>
    <measure idref="frequency" value="2.0" />
    <dimension idref="time-d" instance="begin" />
    <dimension idref="speaker-d" instance="spk1" />
    <dimension idref="transcription-d" instance="tok1" />
  </fact>
  <fact>
    <measure idref="frequency" value="3.0" />
    <dimension idref="time-d" instance="begin" />
    <dimension idref="speaker-d" instance="spk1" />
    <dimension idref="transcription-d" instance="tok2" />
  </fact>
  <fact>
    <measure idref="frequency" value="5.0" />
    <dimension idref="time-d" instance="middle" />
    <dimension idref="speaker-d" instance="spk2" />
    <dimension idref="transcription-d" instance="tok1" />
  </fact>
  <fact>
    <measure idref="frequency" value="4.0" />
    <dimension idref="time-d" instance="end" />
    <dimension idref="speaker-d" instance="spk1" />
    <dimension idref="transcription-d" instance="tok2" />
  </fact>
</FactDoc>
"""

SAMPLE_DOCUMENTS = {
    "dw-model.xml": MODEL_DOC,
    "dim-time.xml": FLAT_TIME_DOC,
    "dim-speaker.xml": SPEAKER_DOC,
    "dim-transcript.xml": TRANSCRIPT_DOC,
    "facts.xml": SAMPLE_FACTS_DOC,
}


def sample_warehouse() -> Warehouse:
    from cubehouse.xmlio import parse_warehouse

    return parse_warehouse(dict(SAMPLE_DOCUMENTS))


def flat_time_dimension() -> tuple[DimensionSpec, DimensionData]:
    spec = DimensionSpec(
        id="time-d", path="dim-time.xml",
        levels=(LevelSpec(id="location-in-transcription",
                          attributes=(AttributeSpec("location", "string"),)),))
    data = DimensionData(dim_id="time-d", levels=(
        LevelInstances(level_id="location-in-transcription", instances=tuple(
            Instance(id=m, attribute_values={"location": m})
            for m in ("begin", "middle", "end"))),))
    return spec, data


def tiny_warehouse(frequencies: dict[tuple[str, str], float] | None = None) -> Warehouse:
    """Two flat dimensions (location, speaker), one real measure.

    Default facts: begin:{2,3}, middle:{5}, end:{4}, all on spk1.
    """
    time_spec, time_data = flat_time_dimension()
    speaker_spec = DimensionSpec(
        id="speaker-d", path="dim-speaker.xml",
        levels=(LevelSpec(id="speaker", attributes=(AttributeSpec("sex", "boolean"),)),))
    speaker_data = DimensionData(dim_id="speaker-d", levels=(
        LevelInstances(level_id="speaker", instances=(
            Instance(id="spk1", attribute_values={"sex": "true"}),
            Instance(id="spk2", attribute_values={"sex": "false"}),
        )),))
    model = WarehouseModel(
        dimensions=(time_spec, speaker_spec),
        facts=FactSpec(id="facts", path="facts.xml",
                       measures=(MeasureSpec("frequency", "real"),),
                       dimension_refs=("time-d", "speaker-d")))
    if frequencies is None:
        rows = [("begin", "spk1", 2.0), ("begin", "spk1", 3.0),
                ("middle", "spk1", 5.0), ("end", "spk1", 4.0)]
    else:
        rows = [(loc, spk, v) for (loc, spk), v in frequencies.items()]
    facts = FactTable(fact_spec_id="facts", rows=tuple(
        FactRow(measure_values={"frequency": v},
                dimension_members={"time-d": loc, "speaker-d": spk})
        for loc, spk, v in rows))
    return Warehouse(model=model,
                     dimension_data={"time-d": time_data, "speaker-d": speaker_data},
                     facts=facts)


@pytest.fixture
def sample_docs() -> dict[str, str]:
    return {"dw-model.xml": MODEL_DOC}


# ---------------------------------------------------------------------------
# Random warehouse generation (valid by construction)


def random_warehouse(rng: random.Random, max_dims: int = 3, max_levels: int = 3,
                     max_facts: int = 500, integer_measure: bool | None = None,
                     nonnegative: bool = False) -> Warehouse:
    n_dims = rng.randint(1, max_dims)
    dim_specs = []
    dim_data = {}
    for d in range(n_dims):
        dim_id = f"d{d}"
        n_levels = rng.randint(1, max_levels)
        sizes = [rng.randint(2, 6)]
        for _ in range(1, n_levels):
            sizes.append(max(1, rng.randint(1, sizes[-1])))
        level_specs = []
        level_members: list[list[str]] = []
        for li in range(n_levels):
            attrs = [AttributeSpec("name", "string")]
            if rng.random() < 0.4:
                attrs.append(AttributeSpec("rank", "integer"))
            level_specs.append(LevelSpec(id=f"d{d}l{li}", attributes=tuple(attrs)))
            level_members.append([f"d{d}l{li}m{i}" for i in range(sizes[li])])

        parents: list[dict[str, str]] = []
        for li in range(n_levels - 1):
            parents.append({m: rng.choice(level_members[li + 1])
                            for m in level_members[li]})

        levels = []
        for li in range(n_levels):
            instances = []
            for m in level_members[li]:
                values = {"name": f"{m}-name"}
                if len(level_specs[li].attributes) > 1:
                    values["rank"] = str(rng.randint(0, 9))
                roll = parents[li][m] if li < n_levels - 1 else None
                drill = None
                if li > 0:
                    drill = tuple(c for c in level_members[li - 1]
                                  if parents[li - 1][c] == m)
                instances.append(Instance(id=m, attribute_values=values,
                                          roll_up=roll, drill_down=drill))
            levels.append(LevelInstances(level_id=f"d{d}l{li}",
                                         instances=tuple(instances)))
        dim_specs.append(DimensionSpec(id=dim_id, path=f"dim-{dim_id}.xml",
                                       levels=tuple(level_specs)))
        dim_data[dim_id] = DimensionData(dim_id=dim_id, levels=tuple(levels))

    if integer_measure is None:
        integer_measure = rng.random() < 0.5
    mtype = "integer" if integer_measure else "real"
    spec = FactSpec(id="facts", path="facts.xml",
                    measures=(MeasureSpec("m", mtype),),
                    dimension_refs=tuple(ds.id for ds in dim_specs))
    rows = []
    for _ in range(rng.randint(0, max_facts)):
        if integer_measure:
            value = rng.randint(0 if nonnegative else -20, 20)
        else:
            lo = 0.0 if nonnegative else -10.0
            value = round(rng.uniform(lo, 10.0), 3)
        rows.append(FactRow(
            measure_values={"m": value},
            dimension_members={ds.id: rng.choice(
                [i.id for i in dim_data[ds.id].levels[0].instances])
                for ds in dim_specs}))
    model = WarehouseModel(dimensions=tuple(dim_specs), facts=spec)
    return Warehouse(model=model, dimension_data=dim_data,
                     facts=FactTable(fact_spec_id="facts", rows=tuple(rows)))


# ---------------------------------------------------------------------------
# Brute-force oracles


def climb(warehouse: Warehouse, dim_id: str, member: str, level_id: str) -> str:
    """Follow roll-up links one level at a time from the finest level."""
    data = warehouse.dimension_data[dim_id]
    li = 0
    current = member
    while data.levels[li].level_id != level_id:
        instance = data.levels[li].instance(current)
        current = instance.roll_up
        li += 1
    return current


def oracle_cells(warehouse: Warehouse, axis_specs, measure_id: str, aggregate: str,
                 filters=()) -> dict[tuple[str, ...], float]:
    """Aggregate by scanning every fact row; filters are (dim, level, set)."""
    groups: dict[tuple[str, ...], list[float]] = {}
    for row in warehouse.facts.rows:
        if any(climb(warehouse, dim, row.dimension_members[dim], level) not in members
               for dim, level, members in filters):
            continue
        coord = tuple(climb(warehouse, dim, row.dimension_members[dim], level)
                      for dim, level in axis_specs)
        groups.setdefault(coord, []).append(row.measure_values[measure_id])
    out = {}
    for coord, values in groups.items():
        if aggregate == "SUM":
            out[coord] = math.fsum(values)
        elif aggregate == "COUNT":
            out[coord] = len(values)
        elif aggregate == "AVG":
            out[coord] = math.fsum(values) / len(values)
        elif aggregate == "MIN":
            out[coord] = min(values)
        else:
            out[coord] = max(values)
    return out


def assert_cells_match(cube, expected: dict[tuple[str, ...], float],
                       integer_exact: bool) -> None:
    got = {coord: cell.value for coord, cell in cube.cells.items()}
    assert set(got) == set(expected)
    for coord, value in expected.items():
        if integer_exact and cube.aggregate != "AVG":
            assert got[coord] == value, coord
        else:
            assert got[coord] == pytest.approx(value, rel=1e-9, abs=1e-12), coord
