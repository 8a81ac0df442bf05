"""Association rules over cube modalities, guided by inter-dimensional
meta-rules.

A meta-rule fixes which (dimension, level) slots may appear in rule
antecedents and consequents (each dimension in at most one slot), plus an
optional context predicate narrowing the mined fact population. Support is
an aggregate ratio: COUNT of matching facts, or SUM of a nonnegative measure
over them, divided by the same aggregate over the whole context; the SUM
restriction keeps support anti-monotone. A levelwise bottom-up search with
the classical candidate prune enumerates the frequent modality sets, facts
mapping to slot members through their roll-up chains.

Rules are ranked by lift (confidence / consequent support) and the Loevinger
index ((confidence - consequent support) / (1 - consequent support), absent
when the consequent is universal).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

from .cube import Filter
from .errors import EngineError
from .model import Warehouse, ancestor_map

Item = tuple[str, str, str]  # (dimension id, level id, member id)
Itemset = frozenset[Item]

SUPPORT_AGGREGATES = ("SUM", "COUNT")


@dataclass(frozen=True)
class MetaRule:
    antecedent_slots: tuple[tuple[str, str], ...]  # (dimension, level)
    consequent_slots: tuple[tuple[str, str], ...]
    measure_id: str
    support_aggregate: str  # SUM | COUNT
    context: tuple[Filter, ...] = ()


@dataclass(frozen=True)
class AssociationRule:
    antecedent: Itemset
    consequent: Itemset
    support: float
    confidence: float
    lift: float
    loevinger: float | None


def check_meta_rule(meta: MetaRule, warehouse: Warehouse) -> None:
    if meta.support_aggregate not in SUPPORT_AGGREGATES:
        raise EngineError("unknown-aggregate",
                          f"support aggregate {meta.support_aggregate!r} is not one of "
                          f"{SUPPORT_AGGREGATES}")
    if warehouse.model.facts.measure(meta.measure_id) is None:
        raise EngineError("unknown-measure", f"unknown measure {meta.measure_id!r}")
    if not meta.antecedent_slots or not meta.consequent_slots:
        raise EngineError("empty-slots",
                          "a meta-rule needs at least one slot on each side")
    dims_seen: set[str] = set()
    for dim_id, level_id in meta.antecedent_slots + meta.consequent_slots:
        if dim_id in dims_seen:
            raise EngineError("intra-dimensional-slots",
                              f"dimension {dim_id!r} appears in two slots; slots must "
                              f"reference distinct dimensions", where=dim_id)
        dims_seen.add(dim_id)
        data = warehouse.dimension_data.get(dim_id)
        if data is None or data.level(level_id) is None:
            raise EngineError("unknown-level",
                              f"no level {level_id!r} in dimension {dim_id!r}",
                              where=f"{dim_id}:{level_id}")


def _context_rows(warehouse: Warehouse, meta: MetaRule) -> list[int]:
    ups: dict[tuple[str, str], dict[str, str]] = {}
    for flt in meta.context:
        data = warehouse.dimension_data[flt.dim_id]
        ups[(flt.dim_id, flt.level_id)] = ancestor_map(
            data, data.levels[0].level_id, flt.level_id)
    rows = []
    for i, row in enumerate(warehouse.facts.rows):
        ok = True
        for flt in meta.context:
            member = ups[(flt.dim_id, flt.level_id)].get(
                row.dimension_members[flt.dim_id])
            if member not in flt.members:
                ok = False
                break
        if ok:
            rows.append(i)
    return rows


def mine_frequent(warehouse: Warehouse, meta: MetaRule,
                  min_support: float) -> list[tuple[Itemset, float]]:
    """All modality sets with support >= min_support, levelwise.

    Size-1 candidates come from the slot levels' member lists; larger
    candidates join frequent sets sharing all but one dimension, pruned when
    any subset is infrequent. Output is in (size, item) order and includes
    the exact support of every returned set.
    """
    if not 0 < min_support <= 1:
        raise EngineError("invalid-min-support",
                          f"min support must be in (0, 1], got {min_support}")
    check_meta_rule(meta, warehouse)

    slots = tuple(sorted(meta.antecedent_slots + meta.consequent_slots))
    rows = _context_rows(warehouse, meta)
    if not rows:
        raise EngineError("empty-context", "no fact matches the meta-rule context")

    facts = warehouse.facts.rows
    if meta.support_aggregate == "COUNT":
        weights = {i: 1.0 for i in rows}
    else:
        weights = {}
        for i in rows:
            v = float(facts[i].measure_values[meta.measure_id])
            if v < 0:
                raise EngineError("negative-measure",
                                  f"fact {i} has negative measure {v}; SUM-based support "
                                  f"needs nonnegative measures", where=f"fact[{i}]")
            weights[i] = v
    denominator = sum(weights.values())
    if denominator == 0:
        raise EngineError("empty-context",
                          "the context's total aggregate is zero; support is undefined")

    # fact -> member per slot, through the roll-up chain
    ups = {}
    for dim_id, level_id in slots:
        data = warehouse.dimension_data[dim_id]
        ups[(dim_id, level_id)] = ancestor_map(data, data.levels[0].level_id, level_id)
    fact_items: dict[int, dict[tuple[str, str], Item]] = {}
    for i in rows:
        members = facts[i].dimension_members
        fact_items[i] = {
            (dim_id, level_id): (dim_id, level_id, ups[(dim_id, level_id)][members[dim_id]])
            for dim_id, level_id in slots
        }

    def support_of(itemset: Itemset) -> float:
        total = 0.0
        for i in rows:
            lookup = fact_items[i]
            if all(lookup[item[:2]] == item for item in itemset):
                total += weights[i]
        return total / denominator

    # level 1
    frequent: dict[Itemset, float] = {}
    level: list[Itemset] = []
    for dim_id, level_id in slots:
        data = warehouse.dimension_data[dim_id]
        for member in data.level(level_id).ids():
            itemset: Itemset = frozenset({(dim_id, level_id, member)})
            s = support_of(itemset)
            if s >= min_support:
                frequent[itemset] = s
                level.append(itemset)

    # levelwise joins with the subset prune
    while level:
        candidates: set[Itemset] = set()
        for a, b in combinations(level, 2):
            union = a | b
            if len(union) != len(a) + 1:
                continue
            if len({item[0] for item in union}) != len(union):
                continue  # two items on one dimension
            if any(frozenset(sub) not in frequent
                   for sub in combinations(union, len(union) - 1)):
                continue
            candidates.add(union)
        level = []
        for cand in sorted(candidates, key=lambda s: sorted(s)):
            s = support_of(cand)
            if s >= min_support:
                frequent[cand] = s
                level.append(cand)

    return sorted(frequent.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))


def derive_rules(frequent: Sequence[tuple[Itemset, float]], meta: MetaRule,
                 min_confidence: float) -> list[AssociationRule]:
    """Split each frequent set into its antecedent/consequent slot items and
    keep the rules at or above the confidence threshold."""
    if not 0 < min_confidence <= 1:
        raise EngineError("invalid-min-confidence",
                          f"min confidence must be in (0, 1], got {min_confidence}")
    supports = dict(frequent)
    antecedent_dims = {dim_id for dim_id, _ in meta.antecedent_slots}

    rules: list[AssociationRule] = []
    for itemset, support in supports.items():
        x = frozenset(item for item in itemset if item[0] in antecedent_dims)
        y = itemset - x
        if not x or not y:
            continue
        confidence = support / supports[x]
        if confidence < min_confidence:
            continue
        support_y = supports[y]
        lift = confidence / support_y
        loevinger = None if support_y == 1 else (confidence - support_y) / (1 - support_y)
        rules.append(AssociationRule(antecedent=x, consequent=y, support=support,
                                     confidence=confidence, lift=lift,
                                     loevinger=loevinger))
    return sort_rules(rules)


def _itemset_text(itemset: Itemset) -> str:
    return " & ".join(f"{d}:{lv}={m}" for d, lv, m in sorted(itemset))


def sort_rules(rules: Sequence[AssociationRule]) -> list[AssociationRule]:
    """Loevinger desc (absent last), then lift desc, then lexicographic."""
    return sorted(rules, key=lambda r: (
        r.loevinger is None,
        -(r.loevinger if r.loevinger is not None else 0.0),
        -r.lift,
        _itemset_text(r.antecedent),
        _itemset_text(r.consequent),
    ))


def rule_to_dict(rule: AssociationRule) -> dict:
    return {
        "antecedent": [list(item) for item in sorted(rule.antecedent)],
        "consequent": [list(item) for item in sorted(rule.consequent)],
        "support": rule.support,
        "confidence": rule.confidence,
        "lift": rule.lift,
        "loevinger": rule.loevinger,
    }


def export_rules(rules: Sequence[AssociationRule], format: str = "table") -> str:
    """Deterministic text export; ties fall back to lexicographic order."""
    ordered = sort_rules(rules)
    if format == "json":
        return json.dumps([rule_to_dict(r) for r in ordered], indent=2) + "\n"
    if format != "table":
        raise EngineError("unknown-format", f"format {format!r} is not table or json")
    lines = ["antecedent\tconsequent\tsupport\tconfidence\tlift\tloevinger"]
    for r in ordered:
        loev = "-" if r.loevinger is None else repr(r.loevinger)
        lines.append("\t".join([
            _itemset_text(r.antecedent), _itemset_text(r.consequent),
            repr(r.support), repr(r.confidence), repr(r.lift), loev,
        ]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON form for the HTTP API and CLI


def meta_rule_from_json(doc: Mapping) -> MetaRule:
    try:
        return MetaRule(
            antecedent_slots=tuple((s["dimension"], s["level"])
                                   for s in doc["antecedent"]),
            consequent_slots=tuple((s["dimension"], s["level"])
                                   for s in doc["consequent"]),
            measure_id=doc["measure"],
            support_aggregate=doc.get("aggregate", "COUNT"),
            context=tuple(
                Filter(f["dimension"], f["level"], frozenset(f["members"]))
                for f in doc.get("context", ())
            ),
        )
    except (KeyError, TypeError) as exc:
        raise EngineError("invalid-meta-rule", f"malformed meta-rule: {exc}") from exc
