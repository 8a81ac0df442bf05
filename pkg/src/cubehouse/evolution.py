"""If-then aggregation rules that grow a dimension hierarchy by one level.

A rule set is one structure rule plus data rules:

    if ConditionOn(location-in-transcription, {location}) then Generate(group-of-location, {group-location})
    (1) if location in {'begin', 'end'} then group-location={extreme}
    (2) if location not in {'begin', 'end'} then group-location={middle}

The structure rule names the source level, the attributes conditions may
reference, the level to create and its attributes. Each data rule creates
one instance of the new level and captures the source instances matching
its condition. Conditions evaluate against source-level attribute values
(exact, case-sensitive string comparison); the reserved attribute name
``id`` refers to the instance id when the level declares no attribute of
that name.

The grammar (EBNF, also in the README):

    ruleset    = structure , { data } ;
    structure  = "if" "ConditionOn" "(" name "," names ")"
                 "then" "Generate" "(" name "," names ")" ;
    data       = [ "(" integer ")" ] "if" condition "then" assignment { "and" assignment } ;
    condition  = term { "and" term } ;
    term       = name "in" values | name "not" "in" values | name "=" string ;
    names      = "{" name { "," name } "}" ;
    values     = "{" string { "," string } "}" ;
    assignment = name "=" "{" raw "}" ;
    string     = "'" chars "'" ;

Applying a rule set is a pure document rewrite: it returns a new model and
new dimension data, leaving facts untouched. Re-aggregation then happens by
rolling cubes up to the created level.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import EngineError
from .model import (
    AttributeSpec,
    DimensionData,
    DimensionSpec,
    Finding,
    Instance,
    LevelInstances,
    LevelSpec,
    ValidationReport,
    Warehouse,
    WarehouseModel,
)

ID_ATTRIBUTE = "id"  # reserved condition attribute bound to the instance id


@dataclass(frozen=True)
class ConditionTerm:
    attr: str
    op: str  # "in" | "not-in" | "="
    values: tuple[str, ...]

    def matches(self, attribute_values: Mapping[str, str]) -> bool:
        value = attribute_values.get(self.attr)
        if value is None:
            return False
        if self.op == "in":
            return value in self.values
        if self.op == "not-in":
            return value not in self.values
        return value == self.values[0]


@dataclass(frozen=True)
class DataRule:
    condition: tuple[ConditionTerm, ...]  # conjunction
    target_instance: Mapping[str, str]  # target attribute name -> value

    def matches(self, attribute_values: Mapping[str, str]) -> bool:
        return all(term.matches(attribute_values) for term in self.condition)

    def condition_attributes(self) -> set[str]:
        return {term.attr for term in self.condition}


@dataclass(frozen=True)
class StructureRule:
    source_level_id: str
    condition_attributes: tuple[str, ...]
    target_level_id: str
    target_attributes: tuple[str, ...]


@dataclass(frozen=True)
class RuleSet:
    structure: StructureRule
    data: tuple[DataRule, ...]
    dim_id: str | None = None  # resolved from the source level when absent


# ---------------------------------------------------------------------------
# Text grammar


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<string>'[^']*')|(?P<name>[A-Za-z_][A-Za-z0-9_.\-]*)"
    r"|(?P<num>\d+)|(?P<punct>[(){},=]))"
)


class _Tokens:
    def __init__(self, text: str, line_no: int):
        self.line_no = line_no
        self.items: list[tuple[str, str, int]] = []  # (kind, value, column)
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip():
                    raise EngineError("rule-syntax",
                                      f"cannot tokenize {text[pos:].strip()[:20]!r}",
                                      where=f"{line_no}:{pos + 1}")
                break
            kind = m.lastgroup
            value = m.group(kind)
            col = m.start(kind) + 1
            if kind == "string":
                value = value[1:-1]
            self.items.append((kind, value, col))
            pos = m.end()
        self.i = 0

    def _fail(self, expected: str):
        if self.i < len(self.items):
            kind, value, col = self.items[self.i]
            raise EngineError("rule-syntax", f"expected {expected}, found {value!r}",
                              where=f"{self.line_no}:{col}")
        raise EngineError("rule-syntax", f"expected {expected}, found end of line",
                          where=f"{self.line_no}:end")

    def peek(self) -> tuple[str, str] | None:
        if self.i < len(self.items):
            kind, value, _ = self.items[self.i]
            return kind, value
        return None

    def take_name(self, expected: str = "a name") -> str:
        nxt = self.peek()
        if nxt and nxt[0] == "name":
            self.i += 1
            return nxt[1]
        self._fail(expected)

    def take_keyword(self, word: str) -> None:
        nxt = self.peek()
        if nxt and nxt[0] == "name" and nxt[1] == word:
            self.i += 1
            return
        self._fail(f"keyword {word!r}")

    def take_punct(self, char: str) -> None:
        nxt = self.peek()
        if nxt and nxt[0] == "punct" and nxt[1] == char:
            self.i += 1
            return
        self._fail(f"{char!r}")

    def take_string(self) -> str:
        nxt = self.peek()
        if nxt and nxt[0] == "string":
            self.i += 1
            return nxt[1]
        self._fail("a quoted value")

    def try_punct(self, char: str) -> bool:
        nxt = self.peek()
        if nxt and nxt == ("punct", char):
            self.i += 1
            return True
        return False

    def try_keyword(self, word: str) -> bool:
        nxt = self.peek()
        if nxt and nxt == ("name", word):
            self.i += 1
            return True
        return False

    def expect_end(self) -> None:
        if self.i < len(self.items):
            self._fail("end of line")


def _parse_name_set(toks: _Tokens) -> tuple[str, ...]:
    toks.take_punct("{")
    names = [toks.take_name()]
    while toks.try_punct(","):
        names.append(toks.take_name())
    toks.take_punct("}")
    return tuple(names)


def _parse_structure_rule(toks: _Tokens) -> StructureRule:
    toks.take_keyword("if")
    toks.take_keyword("ConditionOn")
    toks.take_punct("(")
    source = toks.take_name("the source level id")
    toks.take_punct(",")
    cond_attrs = _parse_name_set(toks)
    toks.take_punct(")")
    toks.take_keyword("then")
    toks.take_keyword("Generate")
    toks.take_punct("(")
    target = toks.take_name("the target level id")
    toks.take_punct(",")
    target_attrs = _parse_name_set(toks)
    toks.take_punct(")")
    toks.expect_end()
    return StructureRule(source_level_id=source, condition_attributes=cond_attrs,
                         target_level_id=target, target_attributes=target_attrs)


def _parse_term(toks: _Tokens) -> ConditionTerm:
    attr = toks.take_name("a condition attribute")
    if toks.try_keyword("in"):
        op = "in"
    elif toks.try_keyword("not"):
        toks.take_keyword("in")
        op = "not-in"
    else:
        toks.take_punct("=")
        return ConditionTerm(attr=attr, op="=", values=(toks.take_string(),))
    toks.take_punct("{")
    values = [toks.take_string()]
    while toks.try_punct(","):
        values.append(toks.take_string())
    toks.take_punct("}")
    return ConditionTerm(attr=attr, op=op, values=tuple(values))


def _parse_assignment(toks: _Tokens) -> tuple[str, str]:
    attr = toks.take_name("a target attribute")
    toks.take_punct("=")
    toks.take_punct("{")
    nxt = toks.peek()
    if nxt is None:
        toks._fail("a value")
    kind, value = nxt
    if kind not in ("name", "string", "num"):
        toks._fail("a value")
    toks.i += 1
    toks.take_punct("}")
    return attr, value


def _parse_data_rule(toks: _Tokens) -> DataRule:
    if toks.try_punct("("):  # optional (n) numbering
        nxt = toks.peek()
        if nxt is None or nxt[0] != "num":
            toks._fail("a rule number")
        toks.i += 1
        toks.take_punct(")")
    toks.take_keyword("if")
    terms = [_parse_term(toks)]
    while toks.try_keyword("and"):
        terms.append(_parse_term(toks))
    toks.take_keyword("then")
    assignments = [_parse_assignment(toks)]
    while toks.try_keyword("and"):
        assignments.append(_parse_assignment(toks))
    toks.expect_end()
    target: dict[str, str] = {}
    for attr, value in assignments:
        if attr in target:
            raise EngineError("rule-syntax",
                              f"target attribute {attr!r} assigned twice",
                              where=f"{toks.line_no}:1")
        target[attr] = value
    return DataRule(condition=tuple(terms), target_instance=target)


def parse_rules(text: str) -> RuleSet:
    """Parse a rule set from text. Syntax errors carry line:column."""
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise EngineError("rule-syntax", "empty rule text", where="1:1")
    structure = _parse_structure_rule(_Tokens(lines[0][1], lines[0][0]))
    data = tuple(_parse_data_rule(_Tokens(ln, no)) for no, ln in lines[1:])
    if not data:
        raise EngineError("rule-syntax", "a rule set needs at least one data rule",
                          where=f"{lines[0][0] + 1}:1")
    return RuleSet(structure=structure, data=data)


def format_rules(rule_set: RuleSet) -> str:
    """Render a rule set back to the text grammar."""
    s = rule_set.structure
    lines = [
        f"if ConditionOn({s.source_level_id}, {{{', '.join(s.condition_attributes)}}}) "
        f"then Generate({s.target_level_id}, {{{', '.join(s.target_attributes)}}})"
    ]
    for i, rule in enumerate(rule_set.data, start=1):
        terms = []
        for t in rule.condition:
            if t.op == "=":
                terms.append(f"{t.attr} = '{t.values[0]}'")
            else:
                op = "in" if t.op == "in" else "not in"
                terms.append(f"{t.attr} {op} {{{', '.join(repr(v) for v in t.values)}}}")
        assigns = " and ".join(f"{a}={{{v}}}" for a, v in rule.target_instance.items())
        lines.append(f"({i}) if {' and '.join(terms)} then {assigns}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Structured (JSON) form — identical semantics to the text grammar

_JSON_OPS = {"in": "in", "not-in": "not-in", "=": "="}


def rules_from_json(doc: Mapping) -> RuleSet:
    try:
        s = doc["structure"]
        structure = StructureRule(
            source_level_id=s["source_level"],
            condition_attributes=tuple(s["condition_attributes"]),
            target_level_id=s["target_level"],
            target_attributes=tuple(s["target_attributes"]),
        )
        data = []
        for entry in doc["data"]:
            terms = []
            for term in entry["condition"]:
                op = _JSON_OPS.get(term["op"])
                if op is None:
                    raise EngineError("rule-syntax",
                                      f"unknown condition operator {term['op']!r}",
                                      where="condition")
                values = (term["value"],) if op == "=" else tuple(term["values"])
                terms.append(ConditionTerm(attr=term["attr"], op=op, values=values))
            data.append(DataRule(condition=tuple(terms),
                                 target_instance=dict(entry["target"])))
    except (KeyError, TypeError) as exc:
        raise EngineError("rule-syntax", f"malformed rule document: {exc}") from exc
    if not data:
        raise EngineError("rule-syntax", "a rule set needs at least one data rule")
    return RuleSet(structure=structure, data=tuple(data), dim_id=doc.get("dimension"))


def rules_to_json(rule_set: RuleSet) -> dict:
    s = rule_set.structure
    doc: dict = {
        "structure": {
            "source_level": s.source_level_id,
            "condition_attributes": list(s.condition_attributes),
            "target_level": s.target_level_id,
            "target_attributes": list(s.target_attributes),
        },
        "data": [
            {
                "condition": [
                    {"attr": t.attr, "op": t.op,
                     **({"value": t.values[0]} if t.op == "=" else {"values": list(t.values)})}
                    for t in rule.condition
                ],
                "target": dict(rule.target_instance),
            }
            for rule in rule_set.data
        ],
    }
    if rule_set.dim_id is not None:
        doc["dimension"] = rule_set.dim_id
    return doc


# ---------------------------------------------------------------------------
# Validation


def _instance_values(ins: Instance) -> dict[str, str]:
    values = dict(ins.attribute_values)
    values.setdefault(ID_ATTRIBUTE, ins.id)
    return values


def resolve_dimension(rule_set: RuleSet, model: WarehouseModel) -> DimensionSpec | None:
    """The dimension the rule set operates on, or None when unresolvable."""
    if rule_set.dim_id is not None:
        return model.dimension(rule_set.dim_id)
    hits = [d for d in model.dimensions
            if d.level(rule_set.structure.source_level_id) is not None]
    return hits[0] if len(hits) == 1 else None


def validate_ruleset(rule_set: RuleSet, warehouse: Warehouse) -> ValidationReport:
    """Check a rule set against the warehouse without applying it.

    Flags a missing source level, an already existing target level,
    undeclared condition attributes, unbound target attributes, and source
    instances matched by zero ("incomplete") or several ("ambiguous") data
    rules. Findings are data; apply refuses on any error finding.
    """
    out: list[Finding] = []
    s = rule_set.structure
    model = warehouse.model

    dim = resolve_dimension(rule_set, model)
    if dim is None:
        hits = [d for d in model.dimensions if d.level(s.source_level_id) is not None]
        if rule_set.dim_id is not None and model.dimension(rule_set.dim_id) is None:
            out.append(Finding("error", "source-level-missing",
                               f"dimension {rule_set.dim_id!r} does not exist",
                               f"rules[{s.source_level_id}]"))
        elif len(hits) > 1:
            out.append(Finding("error", "ambiguous-source-level",
                               f"level {s.source_level_id!r} exists in several dimensions "
                               f"({', '.join(d.id for d in hits)}); name one",
                               f"rules[{s.source_level_id}]"))
        else:
            out.append(Finding("error", "source-level-missing",
                               f"no dimension declares level {s.source_level_id!r}",
                               f"rules[{s.source_level_id}]"))
        return ValidationReport(tuple(out))

    source_level = dim.level(s.source_level_id)
    if source_level is None:
        out.append(Finding("error", "source-level-missing",
                           f"dimension {dim.id!r} has no level {s.source_level_id!r}",
                           f"rules[{s.source_level_id}]"))
        return ValidationReport(tuple(out))

    if dim.level(s.target_level_id) is not None:
        out.append(Finding("error", "target-level-exists",
                           f"dimension {dim.id!r} already has a level {s.target_level_id!r}",
                           f"rules[{s.target_level_id}]"))

    declared = set(source_level.attribute_names()) | {ID_ATTRIBUTE}
    for attr in s.condition_attributes:
        if attr not in declared:
            out.append(Finding("error", "undeclared-condition-attribute",
                               f"condition attribute {attr!r} is not declared on level "
                               f"{s.source_level_id!r}", f"rules[{s.source_level_id}]"))

    allowed = set(s.condition_attributes)
    target_attrs = set(s.target_attributes)
    for i, rule in enumerate(rule_set.data, start=1):
        rwhere = f"rules/data[{i}]"
        for attr in sorted(rule.condition_attributes() - allowed):
            out.append(Finding("error", "condition-attribute-not-allowed",
                               f"data rule {i} conditions on {attr!r}, which the structure "
                               f"rule does not list", rwhere))
        for attr in sorted(target_attrs - set(rule.target_instance)):
            out.append(Finding("error", "unbound-target-attribute",
                               f"data rule {i} does not bind target attribute {attr!r}",
                               rwhere))
        for attr in sorted(set(rule.target_instance) - target_attrs):
            out.append(Finding("error", "unknown-target-attribute",
                               f"data rule {i} binds {attr!r}, which the structure rule "
                               f"does not generate", rwhere))

    # coverage over actual source instances
    data = warehouse.dimension_data.get(dim.id)
    level_data = data.level(s.source_level_id) if data is not None else None
    if level_data is not None:
        for ins in level_data.instances:
            values = _instance_values(ins)
            hits = [i for i, rule in enumerate(rule_set.data, start=1)
                    if rule.matches(values)]
            where = f"rules[{s.source_level_id}]/{ins.id}"
            if not hits:
                out.append(Finding("error", "incomplete",
                                   f"incomplete: source instance {ins.id!r} is matched by "
                                   f"no data rule", where))
            elif len(hits) > 1:
                out.append(Finding("error", "ambiguous",
                                   f"ambiguous: source instance {ins.id!r} is matched by "
                                   f"data rules {hits}", where))
        matched_any = {i for ins in level_data.instances
                       for i, rule in enumerate(rule_set.data, start=1)
                       if rule.matches(_instance_values(ins))}
        for i in range(1, len(rule_set.data) + 1):
            if i not in matched_any:
                out.append(Finding("warning", "empty-rule",
                                   f"data rule {i} matches no source instance",
                                   f"rules/data[{i}]"))

    # derived instance ids must not collide
    ids = [derive_instance_id(rule, s) for rule in rule_set.data]
    seen: set[str] = set()
    for i, new_id in enumerate(ids, start=1):
        if new_id in seen:
            out.append(Finding("error", "duplicate-target-instance",
                               f"data rules derive instance id {new_id!r} more than once",
                               f"rules/data[{i}]"))
        seen.add(new_id)
    return ValidationReport(tuple(out))


_NAME_START = re.compile(r"[A-Za-z_]")
_NAME_CHAR = re.compile(r"[A-Za-z0-9_.\-]")


def sanitize_name(value: str) -> str:
    """Coerce an arbitrary value into an XML name token."""
    chars = [c if _NAME_CHAR.match(c) else "-" for c in value]
    out = "".join(chars) or "_"
    if not _NAME_START.match(out[0]):
        out = "_" + out
    return out


def derive_instance_id(rule: DataRule, structure: StructureRule) -> str:
    """New instance id = the rule's value for the alphabetically first
    target attribute, sanitized to an XML name token."""
    first_attr = sorted(structure.target_attributes)[0]
    return sanitize_name(rule.target_instance[first_attr])


# ---------------------------------------------------------------------------
# Application


@dataclass(frozen=True)
class ChangeSummary:
    dim_id: str
    source_level_id: str
    new_level_id: str
    groups: Mapping[str, tuple[str, ...]]  # new instance id -> children
    rules: RuleSet

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim_id,
            "source_level": self.source_level_id,
            "new_level": self.new_level_id,
            "groups": {k: list(v) for k, v in self.groups.items()},
            "rules": rules_to_json(self.rules),
        }


def apply_ruleset(warehouse: Warehouse, rule_set: RuleSet) -> tuple[Warehouse, ChangeSummary]:
    """Rewrite the warehouse documents to create the new level.

    The dimension gains a level immediately after the source level; one new
    instance per data rule groups the matching source instances (drill-down
    down, roll-up back up). If a coarser level already sat above the source
    level, each new instance inherits the parent its children shared;
    children with different parents make the regrouping impossible in a
    strict hierarchy and raise ``non-homogeneous-parent``. Facts are never
    touched. Pure function: returns a new warehouse plus a change summary.
    """
    report = validate_ruleset(rule_set, warehouse)
    if not report.ok:
        first = report.errors[0]
        raise EngineError("rule-validation-failed", first.message, where=first.where)

    model = warehouse.model
    s = rule_set.structure
    dim = resolve_dimension(rule_set, model)
    data = warehouse.dimension_data[dim.id]
    src_idx = dim.level_index(s.source_level_id)
    has_parent_level = src_idx + 1 < len(dim.levels)

    new_level_spec = LevelSpec(
        id=s.target_level_id,
        attributes=tuple(AttributeSpec(name=a, type="string") for a in s.target_attributes),
    )
    new_levels = dim.levels[:src_idx + 1] + (new_level_spec,) + dim.levels[src_idx + 1:]
    new_dim_spec = replace(dim, levels=new_levels)
    new_model = WarehouseModel(
        dimensions=tuple(new_dim_spec if d.id == dim.id else d for d in model.dimensions),
        facts=model.facts,
    )

    source_level = data.levels[src_idx]
    rule_of_source: dict[str, int] = {}
    for ins in source_level.instances:
        values = _instance_values(ins)
        for i, rule in enumerate(rule_set.data):
            if rule.matches(values):
                rule_of_source[ins.id] = i
                break

    new_ids = [derive_instance_id(rule, s) for rule in rule_set.data]
    children: list[list[str]] = [[] for _ in rule_set.data]
    for ins in source_level.instances:  # source document order
        children[rule_of_source[ins.id]].append(ins.id)

    new_instances: list[Instance] = []
    for i, rule in enumerate(rule_set.data):
        roll_up = None
        if has_parent_level:
            parents = {source_level.instance(c).roll_up for c in children[i]}
            if len(parents) != 1 or None in parents:
                raise EngineError(
                    "non-homogeneous-parent",
                    f"children of new instance {new_ids[i]!r} roll up to different "
                    f"parents ({sorted(p or '<none>' for p in parents)}); a strict "
                    f"hierarchy cannot host this grouping",
                    where=f"rules/data[{i + 1}]")
            roll_up = parents.pop()
        new_instances.append(Instance(
            id=new_ids[i],
            attribute_values=dict(rule.target_instance),
            roll_up=roll_up,
            drill_down=tuple(children[i]),
        ))

    new_source_instances = tuple(
        replace(ins, roll_up=new_ids[rule_of_source[ins.id]])
        for ins in source_level.instances
    )

    data_levels = list(data.levels)
    data_levels[src_idx] = replace(source_level, instances=new_source_instances)
    data_levels.insert(src_idx + 1, LevelInstances(
        level_id=s.target_level_id, instances=tuple(new_instances)))
    if has_parent_level:
        parent_level = data_levels[src_idx + 2]
        rewritten = tuple(
            replace(p, drill_down=tuple(n.id for n in new_instances if n.roll_up == p.id))
            for p in parent_level.instances
        )
        data_levels[src_idx + 2] = replace(parent_level, instances=rewritten)

    new_data = DimensionData(dim_id=dim.id, levels=tuple(data_levels))
    new_warehouse = Warehouse(
        model=new_model,
        dimension_data={**warehouse.dimension_data, dim.id: new_data},
        facts=warehouse.facts,
    )
    summary = ChangeSummary(
        dim_id=dim.id,
        source_level_id=s.source_level_id,
        new_level_id=s.target_level_id,
        groups={new_ids[i]: tuple(children[i]) for i in range(len(rule_set.data))},
        rules=replace(rule_set, dim_id=dim.id),
    )
    return new_warehouse, summary
