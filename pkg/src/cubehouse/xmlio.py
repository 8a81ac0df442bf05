"""Parsing and serialization of the three warehouse document kinds.

Concrete syntax notes:

* ``Drill-Down`` is a whitespace-separated list of child instance ids in a
  single attribute, so every document stays well-formed XML.
* fact rows are ``<fact>`` elements with ``<measure idref=.. value=..>`` and
  ``<dimension idref=.. instance=..>`` children; the instance reference is
  always at the dimension's finest level.
* serialization is deterministic (fixed attribute order, two-space indent,
  UTF-8 prologue), so identical inputs produce byte-identical documents.

Parsing is intentionally lenient about referential integrity: a dangling
roll-up parses fine and surfaces later as a validation finding. Structural
problems (unknown elements, missing required attributes, duplicate ids,
non-numeric measures) are raised here with the offending location.
"""

from __future__ import annotations

import os
import xml.etree.ElementTree as ET
from xml.sax.saxutils import quoteattr

from .errors import EngineError
from .model import (
    AttributeSpec,
    ATTRIBUTE_TYPES,
    DimensionData,
    DimensionSpec,
    FactRow,
    FactSpec,
    FactTable,
    Instance,
    LevelInstances,
    LevelSpec,
    MeasureSpec,
    MEASURE_TYPES,
    Warehouse,
    WarehouseModel,
    validate_warehouse,
)

MODEL_FILE = "dw-model.xml"

_PROLOGUE = '<?xml version="1.0" encoding="utf-8"?>\n'


def _parse_xml(doc: str, expected_root: str) -> ET.Element:
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        line, col = exc.position
        raise EngineError("malformed-xml", str(exc), where=f"{line}:{col}") from exc
    if root.tag != expected_root:
        raise EngineError("unexpected-root",
                          f"expected root element {expected_root!r}, found {root.tag!r}",
                          where=root.tag)
    return root


def _require(elem: ET.Element, attr: str, where: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise EngineError("missing-attribute",
                          f"element {elem.tag!r} lacks required attribute {attr!r}",
                          where=where)
    return value


def _reject_unknown(elem: ET.Element, allowed: tuple[str, ...], where: str) -> None:
    for child in elem:
        if child.tag not in allowed:
            raise EngineError("unknown-element",
                              f"unexpected element {child.tag!r} (allowed: {', '.join(allowed)})",
                              where=where)


# ---------------------------------------------------------------------------
# Model document


def parse_model(doc: str) -> WarehouseModel:
    root = _parse_xml(doc, "DW-model")
    _reject_unknown(root, ("dimension", "FactDoc"), "DW-model")

    dimensions: list[DimensionSpec] = []
    fact_spec: FactSpec | None = None
    for child in root:
        if child.tag == "dimension":
            dim = _parse_dimension_spec(child)
            if any(d.id == dim.id for d in dimensions):
                raise EngineError("duplicate-id",
                                  f"dimension id {dim.id!r} declared twice",
                                  where=f"DW-model/dimension[{dim.id}]")
            dimensions.append(dim)
        else:
            if fact_spec is not None:
                raise EngineError("duplicate-fact-doc",
                                  "more than one FactDoc element",
                                  where="DW-model/FactDoc")
            fact_spec = _parse_fact_spec(child)
    if fact_spec is None:
        raise EngineError("missing-fact-doc", "no FactDoc element", where="DW-model")
    return WarehouseModel(dimensions=tuple(dimensions), facts=fact_spec)


def _parse_dimension_spec(elem: ET.Element) -> DimensionSpec:
    dim_id = _require(elem, "id", "DW-model/dimension")
    where = f"DW-model/dimension[{dim_id}]"
    path = _require(elem, "path", where)
    _reject_unknown(elem, ("Level",), where)

    levels: list[LevelSpec] = []
    for lvl in elem:
        level_id = _require(lvl, "id", where)
        lwhere = f"{where}/Level[{level_id}]"
        if any(lv.id == level_id for lv in levels):
            raise EngineError("duplicate-id",
                              f"level id {level_id!r} declared twice", where=lwhere)
        _reject_unknown(lvl, ("attribute",), lwhere)
        attrs: list[AttributeSpec] = []
        for a in lvl:
            name = _require(a, "name", lwhere)
            atype = _require(a, "type", f"{lwhere}/attribute[{name}]")
            if atype not in ATTRIBUTE_TYPES:
                raise EngineError("invalid-type",
                                  f"attribute type {atype!r} is not one of {ATTRIBUTE_TYPES}",
                                  where=f"{lwhere}/attribute[{name}]")
            if any(x.name == name for x in attrs):
                raise EngineError("duplicate-id",
                                  f"attribute {name!r} declared twice", where=lwhere)
            attrs.append(AttributeSpec(name=name, type=atype))
        levels.append(LevelSpec(id=level_id, attributes=tuple(attrs)))
    return DimensionSpec(id=dim_id, path=path, levels=tuple(levels))


def _parse_fact_spec(elem: ET.Element) -> FactSpec:
    fact_id = _require(elem, "id", "DW-model/FactDoc")
    where = f"DW-model/FactDoc[{fact_id}]"
    path = _require(elem, "path", where)
    _reject_unknown(elem, ("measure", "dimension"), where)

    measures: list[MeasureSpec] = []
    refs: list[str] = []
    for child in elem:
        if child.tag == "measure":
            mid = _require(child, "id", where)
            mtype = _require(child, "type", f"{where}/measure[{mid}]")
            if mtype not in MEASURE_TYPES:
                raise EngineError("invalid-type",
                                  f"measure type {mtype!r} is not one of {MEASURE_TYPES}",
                                  where=f"{where}/measure[{mid}]")
            if any(m.id == mid for m in measures):
                raise EngineError("duplicate-id",
                                  f"measure id {mid!r} declared twice", where=where)
            measures.append(MeasureSpec(id=mid, type=mtype))
        else:
            ref = _require(child, "idref", where)
            if ref in refs:
                raise EngineError("duplicate-id",
                                  f"dimension reference {ref!r} declared twice", where=where)
            refs.append(ref)
    return FactSpec(id=fact_id, path=path, measures=tuple(measures),
                    dimension_refs=tuple(refs))


# ---------------------------------------------------------------------------
# Dimension document


def parse_dimension(doc: str, spec: DimensionSpec) -> DimensionData:
    root = _parse_xml(doc, "dimension")
    dim_id = _require(root, "dim-id", "dimension")
    if dim_id != spec.id:
        raise EngineError("dim-id-mismatch",
                          f"document is for dimension {dim_id!r}, expected {spec.id!r}",
                          where=f"dimension[{dim_id}]")
    where = f"dimension[{dim_id}]"
    _reject_unknown(root, ("Level",), where)

    finest_id = spec.levels[0].id if spec.levels else None
    levels: list[LevelInstances] = []
    for lvl in root:
        level_id = _require(lvl, "id", where)
        lwhere = f"{where}/Level[{level_id}]"
        spec_level = spec.level(level_id)
        if spec_level is None:
            raise EngineError("undeclared-level",
                              f"level {level_id!r} is not declared for dimension {spec.id!r}",
                              where=lwhere)
        declared = set(spec_level.attribute_names())
        _reject_unknown(lvl, ("Instance",), lwhere)

        instances: list[Instance] = []
        for ins in lvl:
            ins_id = _require(ins, "id", lwhere)
            iwhere = f"{lwhere}/Instance[{ins_id}]"
            _reject_unknown(ins, ("attribute",), iwhere)
            values: dict[str, str] = {}
            for a in ins:
                name = _require(a, "id", iwhere)
                if name not in declared:
                    raise EngineError("undeclared-attribute",
                                      f"attribute {name!r} is not declared for level {level_id!r}",
                                      where=iwhere)
                values[name] = _require(a, "value", iwhere)
            roll_up = ins.get("Roll-up")
            dd_raw = ins.get("Drill-Down")
            if dd_raw is not None:
                drill_down: tuple[str, ...] | None = tuple(dd_raw.split())
            elif level_id != finest_id:
                drill_down = ()
            else:
                drill_down = None
            instances.append(Instance(id=ins_id, attribute_values=values,
                                      roll_up=roll_up, drill_down=drill_down))
        levels.append(LevelInstances(level_id=level_id, instances=tuple(instances)))
    return DimensionData(dim_id=dim_id, levels=tuple(levels))


# ---------------------------------------------------------------------------
# Fact document


def parse_facts(doc: str, spec: FactSpec) -> FactTable:
    root = _parse_xml(doc, "FactDoc")
    doc_id = root.get("id")
    if doc_id is not None and doc_id != spec.id:
        raise EngineError("fact-spec-mismatch",
                          f"document is for fact spec {doc_id!r}, expected {spec.id!r}",
                          where=f"FactDoc[{doc_id}]")
    where = f"FactDoc[{spec.id}]"
    _reject_unknown(root, ("fact",), where)

    measure_types = {m.id: m.type for m in spec.measures}
    rows: list[FactRow] = []
    for i, fact in enumerate(root):
        fwhere = f"{where}/fact[{i}]"
        _reject_unknown(fact, ("measure", "dimension"), fwhere)
        measures: dict[str, float] = {}
        members: dict[str, str] = {}
        for child in fact:
            if child.tag == "measure":
                mid = _require(child, "idref", fwhere)
                if mid not in measure_types:
                    raise EngineError("unknown-measure",
                                      f"fact {i} binds undeclared measure {mid!r}", where=fwhere)
                raw = _require(child, "value", fwhere)
                try:
                    value = int(raw) if measure_types[mid] == "integer" else float(raw)
                except ValueError:
                    raise EngineError("non-numeric-measure",
                                      f"measure {mid!r} value {raw!r} is not numeric",
                                      where=fwhere) from None
                measures[mid] = value
            else:
                dim_id = _require(child, "idref", fwhere)
                if dim_id not in spec.dimension_refs:
                    raise EngineError("unknown-dimension",
                                      f"fact {i} binds undeclared dimension {dim_id!r}",
                                      where=fwhere)
                members[dim_id] = _require(child, "instance", fwhere)
        for mid in measure_types:
            if mid not in measures:
                raise EngineError("missing-measure-binding",
                                  f"fact {i} does not bind measure {mid!r}", where=fwhere)
        for dim_id in spec.dimension_refs:
            if dim_id not in members:
                raise EngineError("missing-dimension-binding",
                                  f"fact {i} does not bind dimension {dim_id!r}", where=fwhere)
        rows.append(FactRow(measure_values=measures, dimension_members=members))
    return FactTable(fact_spec_id=spec.id, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Serialization


def _attr(name: str, value: str) -> str:
    return f" {name}={quoteattr(value)}"


def serialize_model(model: WarehouseModel) -> str:
    lines = [_PROLOGUE + "<DW-model>"]
    for dim in model.dimensions:
        lines.append(f"  <dimension{_attr('id', dim.id)}{_attr('path', dim.path)}>")
        for lv in dim.levels:
            lines.append(f"    <Level{_attr('id', lv.id)}>")
            for a in lv.attributes:
                lines.append(f"      <attribute{_attr('name', a.name)}{_attr('type', a.type)} />")
            lines.append("    </Level>")
        lines.append("  </dimension>")
    facts = model.facts
    lines.append(f"  <FactDoc{_attr('id', facts.id)}{_attr('path', facts.path)}>")
    for m in facts.measures:
        lines.append(f"    <measure{_attr('id', m.id)}{_attr('type', m.type)} />")
    for ref in facts.dimension_refs:
        lines.append(f"    <dimension{_attr('idref', ref)} />")
    lines.append("  </FactDoc>")
    lines.append("</DW-model>")
    return "\n".join(lines) + "\n"


def serialize_dimension(data: DimensionData) -> str:
    lines = [_PROLOGUE + f"<dimension{_attr('dim-id', data.dim_id)}>"]
    for lv in data.levels:
        lines.append(f"  <Level{_attr('id', lv.level_id)}>")
        for ins in lv.instances:
            parts = _attr("id", ins.id)
            if ins.roll_up is not None:
                parts += _attr("Roll-up", ins.roll_up)
            if ins.drill_down:
                parts += _attr("Drill-Down", " ".join(ins.drill_down))
            lines.append(f"    <Instance{parts}>")
            for name in ins.attribute_values:
                value = ins.attribute_values[name]
                lines.append(f"      <attribute{_attr('id', name)}{_attr('value', value)} />")
            lines.append("    </Instance>")
        lines.append("  </Level>")
    lines.append("</dimension>")
    return "\n".join(lines) + "\n"


def _format_measure(value: float) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(value)


def serialize_facts(facts: FactTable, spec: FactSpec) -> str:
    if not facts.rows:
        return _PROLOGUE + f"<FactDoc{_attr('id', facts.fact_spec_id)} />\n"
    lines = [_PROLOGUE + f"<FactDoc{_attr('id', facts.fact_spec_id)}>"]
    for row in facts.rows:
        lines.append("  <fact>")
        for m in spec.measures:
            value = _format_measure(row.measure_values[m.id])
            lines.append(f"    <measure{_attr('idref', m.id)}{_attr('value', value)} />")
        for dim_id in spec.dimension_refs:
            member = row.dimension_members[dim_id]
            lines.append(f"    <dimension{_attr('idref', dim_id)}{_attr('instance', member)} />")
        lines.append("  </fact>")
    lines.append("</FactDoc>")
    return "\n".join(lines) + "\n"


def serialize_warehouse(warehouse: Warehouse) -> tuple[tuple[str, str], ...]:
    """Render the warehouse as its document set: (file name, XML text) pairs.

    Requires a warehouse that validates with zero error findings;
    parse(serialize(w)) is structurally identical to w.
    """
    report = validate_warehouse(warehouse.model, warehouse.dimension_data, warehouse.facts)
    if not report.ok:
        first = report.errors[0]
        raise EngineError("invalid-warehouse",
                          f"refusing to serialize: {first.message}", where=first.where)
    docs: list[tuple[str, str]] = [(MODEL_FILE, serialize_model(warehouse.model))]
    for dim in warehouse.model.dimensions:
        docs.append((dim.path, serialize_dimension(warehouse.dimension_data[dim.id])))
    docs.append((warehouse.model.facts.path,
                 serialize_facts(warehouse.facts, warehouse.model.facts)))
    return tuple(docs)


# ---------------------------------------------------------------------------
# Whole-warehouse load


def parse_warehouse(documents: dict[str, str]) -> Warehouse:
    """Assemble a warehouse from an in-memory document set keyed by file name."""
    if MODEL_FILE not in documents:
        raise EngineError("missing-document", f"no {MODEL_FILE} document", where=MODEL_FILE)
    model = parse_model(documents[MODEL_FILE])
    data: dict[str, DimensionData] = {}
    for dim in model.dimensions:
        if dim.path not in documents:
            raise EngineError("missing-document",
                              f"dimension document {dim.path!r} is missing", where=dim.path)
        data[dim.id] = parse_dimension(documents[dim.path], dim)
    if model.facts.path not in documents:
        raise EngineError("missing-document",
                          f"fact document {model.facts.path!r} is missing",
                          where=model.facts.path)
    facts = parse_facts(documents[model.facts.path], model.facts)
    return Warehouse(model=model, dimension_data=data, facts=facts)


def load_warehouse(directory: str) -> Warehouse:
    """Load a warehouse from disk; document paths resolve relative to dw-model.xml."""
    model_path = os.path.join(directory, MODEL_FILE)
    documents: dict[str, str] = {}
    try:
        with open(model_path, encoding="utf-8") as fh:
            documents[MODEL_FILE] = fh.read()
    except OSError as exc:
        raise EngineError("missing-document", f"cannot read {model_path}: {exc}",
                          where=model_path) from exc
    model = parse_model(documents[MODEL_FILE])
    for path in [d.path for d in model.dimensions] + [model.facts.path]:
        full = os.path.join(directory, path)
        try:
            with open(full, encoding="utf-8") as fh:
                documents[path] = fh.read()
        except OSError as exc:
            raise EngineError("missing-document", f"cannot read {full}: {exc}",
                              where=full) from exc
    return parse_warehouse(documents)


def write_warehouse(warehouse: Warehouse, directory: str) -> None:
    """Serialize and write all documents (non-atomic; see service for commits)."""
    os.makedirs(directory, exist_ok=True)
    for name, text in serialize_warehouse(warehouse):
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(text)
