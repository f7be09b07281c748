"""End-to-end glue: ingested cycles into the store and back out as records."""

from __future__ import annotations

from conftest import at, exam, panel, profile, visit

from ivf_advisor.core.types import Block, Decision, DecisionKind
from ivf_advisor.ingest.batch import IngestedCycle, IngestedVisit
from ivf_advisor.pipeline import (
    rebuild_state,
    record_from_stored,
    records_from_ingested,
    records_from_store,
    write_cycles_to_store,
)
from ivf_advisor.replay import generate_cohort, replay_cycles
from ivf_advisor.rules import AdvisoryEngine
from ivf_advisor.store import CycleStore, StoredTreatment


def ingested_from_record(record):
    return IngestedCycle(
        patient_id=record.profile.patient_id,
        cycle_number=record.cycle_number,
        age_years=record.profile.age_years,
        contraindicated=record.profile.medication_contraindicated,
        visits=tuple(
            IngestedVisit(visit=v.visit, decision_kind=v.kind) for v in record.visits
        ),
        retrieved_oocytes=record.retrieved_oocytes,
    )


def last_kind_per_day(record):
    merged: dict = {}
    order = []
    for item in record.visits:
        key = item.visit.visit_at.date()
        if key not in merged:
            order.append(key)
            merged[key] = None
        if item.kind is not None:
            merged[key] = item.kind
    return [merged[key] for key in order]


def test_store_round_trip_preserves_daily_decisions():
    records = generate_cohort(12, seed=2)
    store = CycleStore(":memory:")
    engine = AdvisoryEngine()
    warnings = write_cycles_to_store(engine, store, map(ingested_from_record, records))
    assert warnings == []
    stored = records_from_store(store)
    assert len(stored) == len(records)
    for orig, back in zip(records, stored):
        assert back.profile == orig.profile
        assert back.retrieved_oocytes == orig.retrieved_oocytes
        # Same-day rows collapse into one visit carrying the day's last decision.
        assert [v.kind for v in back.visits] == last_kind_per_day(orig)


def test_round_trip_replay_disagrees_only_at_merged_retrievals():
    records = generate_cohort(12, seed=2)
    store = CycleStore(":memory:")
    engine = AdvisoryEngine()
    write_cycles_to_store(engine, store, map(ingested_from_record, records))
    stored = records_from_store(store)

    finished = sum(1 for r in records if r.retrieved_oocytes is not None)
    merged = sum(1 for r, b in zip(records, stored) if len(b.visits) < len(r.visits))
    assert merged > 0

    report = replay_cycles(engine, stored)
    assert report.skipped == []
    # Collapsing the follow-up into the retrieval day is the only source
    # of disagreement, and it lands in the post-trigger rows.
    assert report.intra["B3"].correct == finished - merged
    assert report.intra["B3"].wrong == merged
    for name in ("B1", "B2", "B4"):
        assert report.intra[name].wrong == 0
    row = report.transitions["B3-B4"]
    assert (row.correct, row.wrong_early, row.wrong_late, row.wrong_mismatch) == (
        finished - merged,
        0,
        0,
        merged,
    )
    assert report.transitions["B2-B3"].wrong == 0
    assert report.early_trigger_histogram == {0: finished}


def test_rebuild_state_from_stored_history():
    records = generate_cohort(4, seed=2)
    store = CycleStore(":memory:")
    engine = AdvisoryEngine()
    write_cycles_to_store(engine, store, map(ingested_from_record, records))
    target = records[0]
    stored = store.load_cycle(target.profile.patient_id, target.cycle_number)
    state = rebuild_state(engine, target.profile, target.cycle_number, stored)
    assert state.block is Block.DONE
    assert state.retrieval_done


def test_rebuild_state_without_history_is_fresh():
    engine = AdvisoryEngine()
    who = profile(age=33)
    state = rebuild_state(engine, who, 1, None)
    assert state == engine.new_cycle(who, 1)


def test_rebuild_state_folds_observation_only_visits():
    engine = AdvisoryEngine()
    who = profile(age=33, patient_id="p900")
    store = CycleStore(":memory:")
    store.put_patient(who)
    store.put_visit("p900", 1, visit(1, hormones=panel(20.0, 4.0, 30.0, 0.5, at(1))))
    stored = store.load_cycle("p900", 1)
    assert stored is not None
    assert stored.visits[0].treatment is None
    state = rebuild_state(engine, who, 1, stored)
    assert state.block is Block.PREPARATION
    assert state.last_visit_at == at(1)
    assert state.last_exam is None


def test_record_from_stored_keeps_observation_visits():
    engine = AdvisoryEngine()
    who = profile(age=33, patient_id="p901")
    store = CycleStore(":memory:")
    store.put_patient(who)
    store.put_visit("p901", 1, visit(1, hormones=panel(20.0, 4.0, 30.0, 0.5, at(1))))
    treatment = StoredTreatment(
        decided_at=at(2),
        decision=Decision(kind=DecisionKind.CONTINUE_OCP),
        prescription=None,
        explanation=(),
        alerts=(),
        config_hash=engine.config_hash,
        source="doctor",
    )
    store.put_visit("p901", 1, visit(2, bins={6: 10}))
    store.put_treatment("p901", 1, treatment)
    record = record_from_stored(store.load_cycle("p901", 1))
    assert [v.kind for v in record.visits] == [None, DecisionKind.CONTINUE_OCP]
    assert record.visits[0].visit.hormones is not None
    assert record.visits[1].visit.exam is not None


def test_records_from_ingested_defaults_missing_age():
    cycles = [
        IngestedCycle(
            patient_id="p777",
            cycle_number=1,
            age_years=None,
            contraindicated=False,
            visits=(
                IngestedVisit(
                    visit=visit(1, hormones=panel(5.0, 4.0, 30.0, 0.5, at(1))),
                    decision_kind=DecisionKind.START_STIMULATION,
                ),
            ),
            retrieved_oocytes=None,
        )
    ]
    records, warnings = records_from_ingested(cycles, default_age_years=41)
    assert records[0].profile.age_years == 41
    assert warnings == ["p777: no age on file, assuming 41"]
    assert records[0].visits[0].kind is DecisionKind.START_STIMULATION

    records, warnings = records_from_ingested(cycles)
    assert records[0].profile.age_years == 35


def test_broken_decision_sequence_keeps_observations():
    engine = AdvisoryEngine()
    store = CycleStore(":memory:")
    cycles = [
        IngestedCycle(
            patient_id="p778",
            cycle_number=1,
            age_years=30,
            contraindicated=False,
            visits=(
                IngestedVisit(
                    visit=visit(1, hormones=panel(5.0, 4.0, 30.0, 0.5, at(1))),
                    decision_kind=DecisionKind.CYCLE_COMPLETE,
                ),
                IngestedVisit(
                    visit=visit(2, bins={6: 10}),
                    decision_kind=DecisionKind.CONTINUE_OCP,
                ),
            ),
            retrieved_oocytes=None,
        )
    ]
    warnings = write_cycles_to_store(engine, store, cycles)
    assert len(warnings) == 1
    assert "remaining decisions not stored" in warnings[0]
    stored = store.load_cycle("p778", 1)
    assert len(stored.visits) == 2
    assert all(item.treatment is None for item in stored.visits)


def test_duplicate_visit_rows_warn_and_drop_later_decisions():
    engine = AdvisoryEngine()
    store = CycleStore(":memory:")
    same = visit(1, hormones=panel(20.0, 4.0, 30.0, 0.5, at(1)))
    cycles = [
        IngestedCycle(
            patient_id="p779",
            cycle_number=1,
            age_years=30,
            contraindicated=False,
            visits=(
                IngestedVisit(visit=same, decision_kind=DecisionKind.CONTINUE_OCP),
                IngestedVisit(visit=same, decision_kind=None),
            ),
            retrieved_oocytes=None,
        )
    ]
    warnings = write_cycles_to_store(engine, store, cycles)
    # The repeated timestamp trips both the uniqueness check and the
    # chronology check; the decision taken before the break survives.
    assert len(warnings) == 2
    assert "already recorded" in warnings[0]
    assert "remaining decisions not stored" in warnings[1]
    stored = store.load_cycle("p779", 1)
    assert len(stored.visits) == 1
    assert stored.visits[0].treatment is not None
