"""In-memory model of the three warehouse document kinds.

A warehouse is described by three kinds of documents:

* a model document (``dw-model.xml``) declaring dimensions, their levels and
  attributes, and the fact specification (measures + dimension references);
* one dimension document per dimension holding member instances per level,
  linked between adjacent levels by roll-up / drill-down references;
* a fact document holding rows of measure values plus one member reference
  per dimension, always at the dimension's finest level.

Levels are stored finest-first: position ``i`` rolls up to position ``i+1``.
All types are immutable after construction; evolution produces new values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

ATTRIBUTE_TYPES = ("string", "boolean", "integer", "real")
MEASURE_TYPES = ("integer", "real")


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    type: str  # one of ATTRIBUTE_TYPES


@dataclass(frozen=True)
class LevelSpec:
    id: str
    attributes: tuple[AttributeSpec, ...]

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)


@dataclass(frozen=True)
class DimensionSpec:
    id: str
    path: str  # relative file name of the dimension's data document
    levels: tuple[LevelSpec, ...]  # finest granularity first

    def level(self, level_id: str) -> LevelSpec | None:
        for lv in self.levels:
            if lv.id == level_id:
                return lv
        return None

    def level_index(self, level_id: str) -> int:
        for i, lv in enumerate(self.levels):
            if lv.id == level_id:
                return i
        raise KeyError(level_id)


@dataclass(frozen=True)
class MeasureSpec:
    id: str
    type: str  # one of MEASURE_TYPES


@dataclass(frozen=True)
class FactSpec:
    id: str
    path: str
    measures: tuple[MeasureSpec, ...]
    dimension_refs: tuple[str, ...]

    def measure(self, measure_id: str) -> MeasureSpec | None:
        for m in self.measures:
            if m.id == measure_id:
                return m
        return None


@dataclass(frozen=True)
class WarehouseModel:
    dimensions: tuple[DimensionSpec, ...]
    facts: FactSpec

    def dimension(self, dim_id: str) -> DimensionSpec | None:
        for d in self.dimensions:
            if d.id == dim_id:
                return d
        return None


@dataclass(frozen=True)
class Instance:
    """A member of one hierarchy level.

    ``roll_up`` names the parent in the next coarser level; ``drill_down``
    lists children in the next finer level (document order preserved,
    compared as a set). Attribute values are kept as raw document strings;
    instance ids are the join keys.
    """

    id: str
    attribute_values: Mapping[str, str] = field(default_factory=dict)
    roll_up: str | None = None
    drill_down: tuple[str, ...] | None = None


@dataclass(frozen=True)
class LevelInstances:
    level_id: str
    instances: tuple[Instance, ...]

    def instance(self, instance_id: str) -> Instance | None:
        for ins in self.instances:
            if ins.id == instance_id:
                return ins
        return None

    def ids(self) -> tuple[str, ...]:
        return tuple(ins.id for ins in self.instances)


@dataclass(frozen=True)
class DimensionData:
    dim_id: str
    levels: tuple[LevelInstances, ...]  # same ids/order as the owning spec

    def level(self, level_id: str) -> LevelInstances | None:
        for lv in self.levels:
            if lv.level_id == level_id:
                return lv
        return None


@dataclass(frozen=True)
class FactRow:
    measure_values: Mapping[str, float]
    dimension_members: Mapping[str, str]  # dim id -> finest-level instance id


@dataclass(frozen=True)
class FactTable:
    fact_spec_id: str
    rows: tuple[FactRow, ...]


@dataclass(frozen=True)
class Warehouse:
    """The full in-memory warehouse: model plus all data documents."""

    model: WarehouseModel
    dimension_data: Mapping[str, DimensionData]  # dim id -> data
    facts: FactTable

    def dimension_data_for(self, dim_id: str) -> DimensionData:
        return self.dimension_data[dim_id]


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    kind: str  # stable kebab-case identifier
    message: str
    where: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [
                {
                    "severity": f.severity,
                    "kind": f.kind,
                    "message": f.message,
                    "where": f.where,
                }
                for f in self.findings
            ],
        }


def _parse_typed(text: str, type_name: str) -> bool:
    """Whether a raw attribute string is a legal value of the declared type."""
    if type_name == "string":
        return True
    if type_name == "boolean":
        return text in ("true", "false")
    if type_name == "integer":
        try:
            int(text)
            return True
        except ValueError:
            return False
    if type_name == "real":
        try:
            float(text)
            return True
        except ValueError:
            return False
    return False


def _check_model(model: WarehouseModel, out: list[Finding]) -> None:
    seen_dims: set[str] = set()
    for dim in model.dimensions:
        where = f"dimension[{dim.id}]"
        if dim.id in seen_dims:
            out.append(Finding("error", "duplicate-dimension-id",
                               f"dimension id {dim.id!r} declared twice", where))
        seen_dims.add(dim.id)
        if not dim.path:
            out.append(Finding("error", "empty-dimension-path",
                               f"dimension {dim.id!r} has an empty path", where))
        if not dim.levels:
            out.append(Finding("error", "no-levels",
                               f"dimension {dim.id!r} declares no level", where))
        seen_levels: set[str] = set()
        for lv in dim.levels:
            lwhere = f"{where}/Level[{lv.id}]"
            if lv.id in seen_levels:
                out.append(Finding("error", "duplicate-level-id",
                                   f"level id {lv.id!r} declared twice in dimension {dim.id!r}",
                                   lwhere))
            seen_levels.add(lv.id)
            if not lv.attributes:
                out.append(Finding("error", "no-attributes",
                                   f"level {lv.id!r} declares no attribute", lwhere))
            seen_attrs: set[str] = set()
            for attr in lv.attributes:
                if attr.name in seen_attrs:
                    out.append(Finding("error", "duplicate-attribute-name",
                                       f"attribute {attr.name!r} declared twice in level {lv.id!r}",
                                       lwhere))
                seen_attrs.add(attr.name)

    facts = model.facts
    fwhere = f"FactDoc[{facts.id}]"
    if not facts.measures:
        out.append(Finding("error", "no-measures",
                           f"fact spec {facts.id!r} declares no measure", fwhere))
    if not facts.dimension_refs:
        out.append(Finding("error", "no-dimension-refs",
                           f"fact spec {facts.id!r} references no dimension", fwhere))
    seen_refs: set[str] = set()
    for ref in facts.dimension_refs:
        if ref in seen_refs:
            out.append(Finding("error", "duplicate-dimension-ref",
                               f"fact spec references dimension {ref!r} twice", fwhere))
        seen_refs.add(ref)
        if model.dimension(ref) is None:
            out.append(Finding("error", "unknown-fact-dimension-ref",
                               f"fact spec references undeclared dimension {ref!r}", fwhere))


def _check_dimension_data(spec: DimensionSpec, data: DimensionData,
                          out: list[Finding]) -> None:
    where = f"dimension-data[{data.dim_id}]"
    if data.dim_id != spec.id:
        out.append(Finding("error", "dimension-data-mismatch",
                           f"dimension data id {data.dim_id!r} does not match spec {spec.id!r}",
                           where))
        return
    if tuple(lv.level_id for lv in data.levels) != tuple(lv.id for lv in spec.levels):
        out.append(Finding("error", "dimension-data-mismatch",
                           f"level ids/order of dimension data {data.dim_id!r} "
                           f"differ from the declared levels", where))
        return

    n_levels = len(data.levels)
    for idx, lv in enumerate(data.levels):
        spec_level = spec.levels[idx]
        declared = set(spec_level.attribute_names())
        finer = data.levels[idx - 1] if idx > 0 else None
        coarser = data.levels[idx + 1] if idx + 1 < n_levels else None
        seen_ids: set[str] = set()
        for ins in lv.instances:
            iwhere = f"{where}/Level[{lv.level_id}]/Instance[{ins.id}]"
            if ins.id in seen_ids:
                out.append(Finding("error", "duplicate-instance-id",
                                   f"instance id {ins.id!r} appears twice in level {lv.level_id!r}",
                                   iwhere))
            seen_ids.add(ins.id)

            for name, value in ins.attribute_values.items():
                if name not in declared:
                    out.append(Finding("error", "undeclared-attribute",
                                       f"instance {ins.id!r} carries undeclared attribute {name!r}",
                                       iwhere))
                else:
                    atype = next(a.type for a in spec_level.attributes if a.name == name)
                    if not _parse_typed(value, atype):
                        out.append(Finding("error", "attribute-type-mismatch",
                                           f"value {value!r} of attribute {name!r} is not a valid {atype}",
                                           iwhere))
            for name in declared:
                if name not in ins.attribute_values:
                    out.append(Finding("error", "missing-attribute-value",
                                       f"instance {ins.id!r} does not bind attribute {name!r}",
                                       iwhere))

            # roll-up present iff a coarser level exists
            if coarser is None:
                if ins.roll_up is not None:
                    if ins.roll_up == ins.id:
                        out.append(Finding("warning", "coarsest-self-roll-up",
                                           f"coarsest-level instance {ins.id!r} names itself as roll-up; ignored",
                                           iwhere))
                    else:
                        out.append(Finding("error", "roll-up-at-coarsest-level",
                                           f"coarsest-level instance {ins.id!r} carries a roll-up reference",
                                           iwhere))
            else:
                if ins.roll_up is None:
                    out.append(Finding("error", "missing-roll-up",
                                       f"instance {ins.id!r} of non-coarsest level {lv.level_id!r} has no parent",
                                       iwhere))
                else:
                    parent = coarser.instance(ins.roll_up)
                    if parent is None:
                        out.append(Finding("error", "dangling-roll-up",
                                           f"instance {ins.id!r} rolls up to unknown {ins.roll_up!r}",
                                           iwhere))
                    elif parent.drill_down is None or ins.id not in parent.drill_down:
                        out.append(Finding("error", "asymmetric-hierarchy-link",
                                           f"instance {ins.id!r} rolls up to {ins.roll_up!r} "
                                           f"but is missing from its drill-down set",
                                           iwhere))

            # drill-down present iff a finer level exists
            if finer is None:
                if ins.drill_down is not None:
                    out.append(Finding("error", "drill-down-at-finest-level",
                                       f"finest-level instance {ins.id!r} carries a drill-down reference",
                                       iwhere))
            else:
                children = ins.drill_down or ()
                for child_id in children:
                    child = finer.instance(child_id)
                    if child is None:
                        out.append(Finding("error", "dangling-drill-down",
                                           f"instance {ins.id!r} drills down to unknown {child_id!r}",
                                           iwhere))
                    elif child.roll_up != ins.id:
                        out.append(Finding("error", "asymmetric-hierarchy-link",
                                           f"instance {ins.id!r} lists child {child_id!r} "
                                           f"whose roll-up names a different parent",
                                           iwhere))


def _check_facts(model: WarehouseModel, facts: FactTable,
                 dimension_data: Mapping[str, DimensionData],
                 out: list[Finding]) -> None:
    spec = model.facts
    where = f"fact-table[{facts.fact_spec_id}]"
    if facts.fact_spec_id != spec.id:
        out.append(Finding("error", "fact-spec-mismatch",
                           f"fact table id {facts.fact_spec_id!r} does not match spec {spec.id!r}",
                           where))
        return

    finest_ids: dict[str, set[str]] = {}
    for dim_id, data in dimension_data.items():
        if data.levels:
            finest_ids[dim_id] = set(data.levels[0].ids())

    measure_ids = [m.id for m in spec.measures]
    for i, row in enumerate(facts.rows):
        rwhere = f"{where}/fact[{i}]"
        for mid in measure_ids:
            if mid not in row.measure_values:
                out.append(Finding("error", "missing-measure-binding",
                                   f"fact {i} does not bind measure {mid!r}", rwhere))
        for mid in row.measure_values:
            if mid not in measure_ids:
                out.append(Finding("error", "unknown-measure-binding",
                                   f"fact {i} binds undeclared measure {mid!r}", rwhere))
        for dim_id in spec.dimension_refs:
            if dim_id not in row.dimension_members:
                out.append(Finding("error", "missing-dimension-binding",
                                   f"fact {i} does not bind dimension {dim_id!r}", rwhere))
                continue
            member = row.dimension_members[dim_id]
            if dim_id in finest_ids and member not in finest_ids[dim_id]:
                out.append(Finding("error", "dangling-fact-reference",
                                   f"fact {i} references unknown instance {member!r} "
                                   f"of dimension {dim_id!r}", rwhere))
        for dim_id in row.dimension_members:
            if dim_id not in spec.dimension_refs:
                out.append(Finding("error", "unknown-dimension-binding",
                                   f"fact {i} binds undeclared dimension {dim_id!r}", rwhere))


def validate_warehouse(model: WarehouseModel,
                       dimension_data: Mapping[str, DimensionData] | Iterable[DimensionData],
                       facts: FactTable) -> ValidationReport:
    """Check every structural invariant of the warehouse.

    Findings are data, not failures: the report lists zero error findings iff
    every invariant holds, including bidirectional roll-up/drill-down
    consistency and fact-to-instance referential integrity. A self-referential
    roll-up on a coarsest-level instance is reported as a warning only.
    """
    if not isinstance(dimension_data, Mapping):
        dimension_data = {d.dim_id: d for d in dimension_data}

    out: list[Finding] = []
    _check_model(model, out)

    for dim in model.dimensions:
        data = dimension_data.get(dim.id)
        if data is None:
            out.append(Finding("error", "missing-dimension-data",
                               f"no data document for dimension {dim.id!r}",
                               f"dimension[{dim.id}]"))
            continue
        _check_dimension_data(dim, data, out)
    for dim_id in dimension_data:
        if model.dimension(dim_id) is None:
            out.append(Finding("error", "unknown-dimension-data",
                               f"data document for undeclared dimension {dim_id!r}",
                               f"dimension-data[{dim_id}]"))

    _check_facts(model, facts, dimension_data, out)
    return ValidationReport(tuple(out))


def validate(warehouse: Warehouse) -> ValidationReport:
    return validate_warehouse(warehouse.model, warehouse.dimension_data, warehouse.facts)


# ---------------------------------------------------------------------------
# Hierarchy navigation helpers shared by the cube and mining modules


def ancestor_map(data: DimensionData, from_level: str, to_level: str) -> dict[str, str]:
    """Map each instance id of ``from_level`` to its ancestor at ``to_level``.

    ``to_level`` must be the same level or coarser. Raises KeyError on an
    unknown level and on a broken roll-up chain (validation catches those
    first in normal operation).
    """
    level_ids = [lv.level_id for lv in data.levels]
    i, j = level_ids.index(from_level), level_ids.index(to_level)
    if i > j:
        raise ValueError(f"{to_level!r} is finer than {from_level!r}")
    mapping = {ins.id: ins.id for ins in data.levels[i].instances}
    for k in range(i, j):
        step = {ins.id: ins.roll_up for ins in data.levels[k].instances}
        for base, current in mapping.items():
            parent = step.get(current)
            if parent is None:
                raise KeyError(f"instance {current!r} of level {level_ids[k]!r} has no parent")
            mapping[base] = parent
    return mapping
