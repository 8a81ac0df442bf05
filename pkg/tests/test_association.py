"""Meta-rule guided mining: frequent modality sets and derived rules."""

from __future__ import annotations

import json
import random

import pytest

from cubehouse.association import (
    AssociationRule,
    MetaRule,
    derive_rules,
    export_rules,
    meta_rule_from_json,
    mine_frequent,
)
from cubehouse.cube import Filter
from cubehouse.errors import EngineError
from cubehouse.ingestion import fixture_warehouse
from cubehouse.model import Warehouse

from conftest import climb, random_warehouse, sample_warehouse
from oracles import classical_apriori, enumerate_itemsets

LOC_SLOT = ("time-d", "location-in-transcription")
SEX_SLOT = ("speaker-d", "sex-group")
TOKEN_SLOT = ("transcription-d", "token")


def demo_meta(aggregate: str = "COUNT", context=()) -> MetaRule:
    return MetaRule(antecedent_slots=(LOC_SLOT, TOKEN_SLOT),
                    consequent_slots=(SEX_SLOT,),
                    measure_id="frequency", support_aggregate=aggregate,
                    context=tuple(context))


def oracle_frequent(warehouse: Warehouse, meta: MetaRule, min_support: float):
    slots = sorted(meta.antecedent_slots + meta.consequent_slots)
    slot_members = {
        (d, lv): list(warehouse.dimension_data[d].level(lv).ids())
        for d, lv in slots}
    rows = []
    weights = []
    for row in warehouse.facts.rows:
        if any(climb(warehouse, d, row.dimension_members[d], lv) not in members
               for d, lv, members in
               [(f.dim_id, f.level_id, f.members) for f in meta.context]):
            continue
        rows.append({(d, lv): climb(warehouse, d, row.dimension_members[d], lv)
                     for d, lv in slots})
        weights.append(1.0 if meta.support_aggregate == "COUNT"
                       else float(row.measure_values[meta.measure_id]))
    return enumerate_itemsets(slot_members, rows, weights, min_support)


class TestSupport:
    def test_count_support_is_a_share_of_facts(self):
        w = sample_warehouse()  # 4 facts, 2 at begin
        meta = MetaRule(antecedent_slots=(LOC_SLOT,),
                        consequent_slots=(("speaker-d", "speaker"),),
                        measure_id="frequency", support_aggregate="COUNT")
        frequent = dict(mine_frequent(w, meta, 0.5))
        begin = frozenset({("time-d", "location-in-transcription", "begin")})
        assert frequent[begin] == 0.5

    def test_min_support_one_keeps_only_universal_items(self):
        w = sample_warehouse()
        meta = MetaRule(antecedent_slots=(LOC_SLOT,),
                        consequent_slots=(("transcription-d", "transcription"),),
                        measure_id="frequency", support_aggregate="COUNT")
        frequent = dict(mine_frequent(w, meta, 1.0))
        assert set(frequent) == {
            frozenset({("transcription-d", "transcription", "tr1")})}
        assert frequent[frozenset({("transcription-d", "transcription", "tr1")})] == 1.0

    def test_sum_support_weights_by_measure(self):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta("SUM")
        frequent = dict(mine_frequent(w, meta, 0.05))
        expected = oracle_frequent(w, meta, 0.05)
        assert frequent == pytest.approx(expected)

    def test_negative_measure_under_sum_rejected(self):
        w = sample_warehouse()
        bad = Warehouse(
            model=w.model, dimension_data=w.dimension_data,
            facts=w.facts.__class__(
                fact_spec_id="facts",
                rows=w.facts.rows[:1] + (
                    w.facts.rows[1].__class__(
                        measure_values={"frequency": -1.0},
                        dimension_members=w.facts.rows[1].dimension_members),)))
        meta = MetaRule(antecedent_slots=(LOC_SLOT,),
                        consequent_slots=(("speaker-d", "speaker"),),
                        measure_id="frequency", support_aggregate="SUM")
        with pytest.raises(EngineError) as err:
            mine_frequent(bad, meta, 0.2)
        assert err.value.code == "negative-measure"

    def test_context_narrows_the_population(self):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta(context=[Filter("time-d", "location-in-transcription",
                                         frozenset({"end"}))])
        frequent = dict(mine_frequent(w, meta, 0.05))
        expected = oracle_frequent(w, meta, 0.05)
        assert frequent == pytest.approx(expected)
        # the denominator is the context, so the kept location is universal
        end = frozenset({("time-d", "location-in-transcription", "end")})
        assert frequent[end] == 1.0

    def test_empty_context_rejected(self):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta()
        empty = MetaRule(antecedent_slots=meta.antecedent_slots,
                         consequent_slots=meta.consequent_slots,
                         measure_id=meta.measure_id, support_aggregate="COUNT",
                         context=(Filter("speaker-d", "sex-group",
                                         frozenset({"nonexistent"})),))
        with pytest.raises(EngineError) as err:
            mine_frequent(w, empty, 0.2)
        assert err.value.code == "empty-context"

    def test_intra_dimensional_slots_rejected(self):
        w = sample_warehouse()
        meta = MetaRule(antecedent_slots=(LOC_SLOT,),
                        consequent_slots=(LOC_SLOT,),
                        measure_id="frequency", support_aggregate="COUNT")
        with pytest.raises(EngineError) as err:
            mine_frequent(w, meta, 0.2)
        assert err.value.code == "intra-dimensional-slots"


class TestOracleEquivalence:
    @pytest.mark.parametrize("aggregate", ["COUNT", "SUM"])
    @pytest.mark.parametrize("min_support", [0.05, 0.15, 0.4])
    def test_rules_demo_matches_enumeration(self, aggregate, min_support):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta(aggregate)
        got = dict(mine_frequent(w, meta, min_support))
        expected = oracle_frequent(w, meta, min_support)
        assert set(got) == set(expected)
        for itemset, support in expected.items():
            assert got[itemset] == pytest.approx(support, abs=1e-12)

    def test_seeded_random_fixtures_match_enumeration(self):
        rng = random.Random(2024)
        done = 0
        while done < 12:
            w = random_warehouse(rng, max_dims=3, max_facts=100,
                                 integer_measure=True, nonnegative=True)
            if len(w.model.dimensions) < 2 or not w.facts.rows:
                continue
            dims = list(w.model.dimensions)
            rng.shuffle(dims)
            n_ante = rng.randint(1, len(dims) - 1)
            slots = [(d.id, rng.choice(d.levels).id) for d in dims]
            meta = MetaRule(antecedent_slots=tuple(slots[:n_ante]),
                            consequent_slots=tuple(slots[n_ante:]),
                            measure_id="m",
                            support_aggregate=rng.choice(["COUNT", "SUM"]))
            min_support = rng.choice([0.1, 0.2, 0.35])
            try:
                got = dict(mine_frequent(w, meta, min_support))
            except EngineError as err:
                assert err.code == "empty-context"  # all-zero SUM context
                continue
            expected = oracle_frequent(w, meta, min_support)
            assert set(got) == set(expected)
            for itemset, support in expected.items():
                assert got[itemset] == pytest.approx(support, abs=1e-12)
            done += 1

    def test_count_mode_equals_classical_apriori(self):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta("COUNT")
        slots = sorted(meta.antecedent_slots + meta.consequent_slots)
        transactions = [
            frozenset((d, lv, climb(w, d, row.dimension_members[d], lv))
                      for d, lv in slots)
            for row in w.facts.rows]
        for min_support in (0.1, 0.25, 0.5):
            classical = classical_apriori(transactions, min_support)
            got = dict(mine_frequent(w, meta, min_support))
            assert got == pytest.approx(classical)

    def test_anti_monotonicity(self):
        w = fixture_warehouse("rules-demo", seed=1)
        for aggregate in ("COUNT", "SUM"):
            frequent = dict(mine_frequent(w, demo_meta(aggregate), 0.02))
            for itemset, support in frequent.items():
                for item in itemset:
                    subset = itemset - {item}
                    if subset:
                        assert frequent[subset] >= support - 1e-12


class TestDeriveRules:
    def test_formula_arithmetic(self):
        # confidence 0.8 with consequent support 0.5: lift 1.6, loevinger 0.6
        frequent = [
            (frozenset({("a", "l", "x")}), 0.5),
            (frozenset({("b", "l", "y")}), 0.5),
            (frozenset({("a", "l", "x"), ("b", "l", "y")}), 0.4),
        ]
        meta = MetaRule(antecedent_slots=(("a", "l"),),
                        consequent_slots=(("b", "l"),),
                        measure_id="m", support_aggregate="COUNT")
        rules = derive_rules(frequent, meta, 0.5)
        assert len(rules) == 1
        rule = rules[0]
        assert rule.confidence == pytest.approx(0.8)
        assert rule.lift == pytest.approx(1.6)
        assert rule.loevinger == pytest.approx(0.6)

    def test_independent_items_have_unit_lift(self):
        frequent = [
            (frozenset({("a", "l", "x")}), 0.5),
            (frozenset({("b", "l", "y")}), 0.4),
            (frozenset({("a", "l", "x"), ("b", "l", "y")}), 0.2),
        ]
        meta = MetaRule(antecedent_slots=(("a", "l"),),
                        consequent_slots=(("b", "l"),),
                        measure_id="m", support_aggregate="COUNT")
        rule = derive_rules(frequent, meta, 0.1)[0]
        assert rule.lift == pytest.approx(1.0)
        assert rule.loevinger == pytest.approx(0.0)

    def test_universal_consequent_has_no_loevinger(self):
        frequent = [
            (frozenset({("a", "l", "x")}), 0.5),
            (frozenset({("b", "l", "y")}), 1.0),
            (frozenset({("a", "l", "x"), ("b", "l", "y")}), 0.5),
        ]
        meta = MetaRule(antecedent_slots=(("a", "l"),),
                        consequent_slots=(("b", "l"),),
                        measure_id="m", support_aggregate="COUNT")
        rule = derive_rules(frequent, meta, 0.5)[0]
        assert rule.loevinger is None
        assert rule.confidence == pytest.approx(1.0)

    def test_confidence_recomputed_independently(self):
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta("COUNT")
        frequent = mine_frequent(w, meta, 0.02)
        supports = dict(frequent)
        rules = derive_rules(frequent, meta, 0.3)
        assert rules
        antecedent_dims = {d for d, _ in meta.antecedent_slots}
        for rule in rules:
            z = rule.antecedent | rule.consequent
            assert rule.support == pytest.approx(supports[z])
            assert rule.confidence == pytest.approx(
                supports[z] / supports[rule.antecedent])
            assert rule.lift == pytest.approx(
                rule.confidence / supports[rule.consequent])
            assert all(item[0] in antecedent_dims for item in rule.antecedent)
            assert not any(item[0] in antecedent_dims for item in rule.consequent)

    def test_embedded_association_is_found(self):
        # the demo data concentrates t-hello at the end of transcriptions on
        # female speakers: that rule must beat its independence baseline
        w = fixture_warehouse("rules-demo", seed=1)
        meta = demo_meta("COUNT")
        frequent = mine_frequent(w, meta, 0.05)
        supports = dict(frequent)
        rules = derive_rules(frequent, meta, 0.5)
        target_antecedent = frozenset({
            ("time-d", "location-in-transcription", "end"),
            ("transcription-d", "token", "t-hello")})
        target_consequent = frozenset({("speaker-d", "sex-group", "f")})
        hits = [r for r in rules if r.antecedent == target_antecedent
                and r.consequent == target_consequent]
        assert len(hits) == 1
        assert hits[0].confidence > supports[target_consequent]
        assert hits[0].lift > 1.0
        assert hits[0].loevinger > 0.0


class TestExport:
    def rules(self) -> list[AssociationRule]:
        return [
            AssociationRule(frozenset({("a", "l", "x")}),
                            frozenset({("b", "l", "y")}),
                            support=0.4, confidence=0.8, lift=1.6, loevinger=0.6),
            AssociationRule(frozenset({("a", "l", "w")}),
                            frozenset({("b", "l", "y")}),
                            support=0.2, confidence=0.9, lift=1.6, loevinger=0.6),
            AssociationRule(frozenset({("a", "l", "z")}),
                            frozenset({("b", "l", "y")}),
                            support=0.2, confidence=0.5, lift=1.0, loevinger=None),
        ]

    def test_empty_export_is_header_only(self):
        assert export_rules([], "table") == \
            "antecedent\tconsequent\tsupport\tconfidence\tlift\tloevinger\n"
        assert json.loads(export_rules([], "json")) == []

    def test_single_rule_row(self):
        text = export_rules(self.rules()[:1], "table")
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("a:l=x\tb:l=y\t0.4\t0.8\t1.6\t0.6")

    def test_tie_breaks_are_lexicographic_and_stable(self):
        ordered = export_rules(self.rules(), "table")
        assert ordered == export_rules(list(reversed(self.rules())), "table")
        lines = ordered.splitlines()[1:]
        # equal loevinger/lift: w before x; absent loevinger sorts last
        assert [ln.split("\t")[0] for ln in lines] == ["a:l=w", "a:l=x", "a:l=z"]

    def test_meta_rule_json_round_trip(self):
        doc = {
            "antecedent": [{"dimension": "time-d",
                            "level": "location-in-transcription"},
                           {"dimension": "transcription-d", "level": "token"}],
            "consequent": [{"dimension": "speaker-d", "level": "sex-group"}],
            "measure": "frequency",
            "aggregate": "SUM",
            "context": [{"dimension": "time-d",
                         "level": "location-in-transcription",
                         "members": ["end", "middle"]}],
        }
        meta = meta_rule_from_json(doc)
        assert meta.antecedent_slots == (LOC_SLOT, TOKEN_SLOT)
        assert meta.consequent_slots == (SEX_SLOT,)
        assert meta.support_aggregate == "SUM"
        assert meta.context[0].members == frozenset({"end", "middle"})
