"""Glue between ingestion, the store, the engine, and replay.

Everything here folds recorded care through ``apply_decision`` or
``observe``, so the same transition rules govern live advice, batch
loading, and retrospective evaluation.
"""

from __future__ import annotations

import logging
from typing import Iterable

from .core.types import CycleState, DecisionKind, PatientProfile
from .core.validation import AdvisorError
from .ingest.batch import IngestedCycle
from .replay.replayer import CycleRecord, RecordedVisit, resolve_actual
from .rules.engine import AdvisoryEngine
from .store.db import CycleStore, DuplicateRowError, StoredCycle, StoredTreatment

logger = logging.getLogger(__name__)


def rebuild_state(
    engine: AdvisoryEngine,
    profile: PatientProfile,
    cycle_number: int,
    stored: StoredCycle | None,
) -> CycleState:
    """Fold a stored cycle back into the engine state it implies.

    Visits with a treatment row re-apply that decision; visits without
    one update the observation trackers only.  Raises ``AdvisorError``
    subclasses when the stored history itself breaks the protocol.
    """
    state = engine.new_cycle(profile, cycle_number)
    if stored is None:
        return state
    for item in stored.visits:
        if item.treatment is None:
            state = engine.observe(state, item.visit)
        else:
            state = engine.apply_decision(
                state, item.visit, item.treatment.decision, item.treatment.prescription
            )
    return state


def record_from_stored(stored: StoredCycle) -> CycleRecord:
    """Convert a stored cycle into a replayable record.

    Treatment rows supply the ground-truth kinds; visits without one are
    kept as observation-only entries.
    """
    visits = []
    for item in stored.visits:
        if item.treatment is None:
            visits.append(RecordedVisit(visit=item.visit))
        else:
            visits.append(
                RecordedVisit(
                    visit=item.visit,
                    kind=item.treatment.decision.kind,
                    scheme=item.treatment.decision.scheme,
                    trigger_plan=item.treatment.decision.trigger_plan,
                    prescription=item.treatment.prescription,
                )
            )
    return CycleRecord(
        profile=stored.patient,
        cycle_number=stored.cycle_number,
        visits=tuple(visits),
        retrieved_oocytes=stored.retrieved_oocytes,
    )


def records_from_store(store: CycleStore) -> list[CycleRecord]:
    records = []
    for profile in store.list_patients():
        for cycle_number in store.list_cycles(profile.patient_id):
            stored = store.load_cycle(profile.patient_id, cycle_number)
            if stored is not None:
                records.append(record_from_stored(stored))
    return records


def records_from_ingested(
    cycles: Iterable[IngestedCycle], default_age_years: int = 35
) -> tuple[list[CycleRecord], list[str]]:
    """Convert ingested cycles into replayable records.

    Decisions stay as bare kinds; the replayer resolves payloads when it
    forces the transitions.  Cycles without an age on file get a default
    so the record stays usable, with a warning.
    """
    records: list[CycleRecord] = []
    warnings: list[str] = []
    for cycle in cycles:
        age = cycle.age_years
        if age is None:
            age = default_age_years
            warnings.append(
                f"{cycle.patient_id}: no age on file, assuming {default_age_years}"
            )
        profile = PatientProfile(
            patient_id=cycle.patient_id,
            age_years=age,
            medication_contraindicated=cycle.contraindicated,
        )
        records.append(
            CycleRecord(
                profile=profile,
                cycle_number=cycle.cycle_number,
                visits=tuple(
                    RecordedVisit(visit=item.visit, kind=item.decision_kind)
                    for item in cycle.visits
                ),
                retrieved_oocytes=cycle.retrieved_oocytes,
            )
        )
    return records, warnings


def write_cycles_to_store(
    engine: AdvisoryEngine,
    store: CycleStore,
    cycles: Iterable[IngestedCycle],
    default_age_years: int = 35,
) -> list[str]:
    """Persist ingested cycles; returns human-readable warnings.

    Recorded decisions are folded through the engine so payloads the
    source data never carried (scheme, trigger plan) are filled in and
    transition legality is checked.  A cycle whose recorded sequence
    breaks the protocol keeps its observations; the remaining decisions
    are dropped with a warning.
    """
    warnings: list[str] = []
    for cycle in cycles:
        patient_id = cycle.patient_id
        age = cycle.age_years
        if age is None:
            age = default_age_years
            warnings.append(
                f"{patient_id}: no age on file, assuming {default_age_years}"
            )
        profile = PatientProfile(
            patient_id=patient_id,
            age_years=age,
            medication_contraindicated=cycle.contraindicated,
        )
        try:
            store.put_patient(profile)
        except DuplicateRowError:
            pass
        state = engine.new_cycle(profile, cycle.cycle_number)
        fold_broken = False
        for item in cycle.visits:
            try:
                store.put_visit(patient_id, cycle.cycle_number, item.visit)
            except DuplicateRowError as exc:
                warnings.append(f"{patient_id}/{cycle.cycle_number}: {exc}")
            if item.decision_kind is None or fold_broken:
                if not fold_broken:
                    try:
                        state = engine.observe(state, item.visit)
                    except AdvisorError as exc:
                        fold_broken = True
                        warnings.append(
                            f"{patient_id}/{cycle.cycle_number}: {exc}; "
                            "remaining decisions not stored"
                        )
                continue
            recorded = RecordedVisit(visit=item.visit, kind=item.decision_kind)
            try:
                decision = resolve_actual(engine, state, recorded)
                next_state = engine.apply_decision(state, item.visit, decision)
            except AdvisorError as exc:
                fold_broken = True
                warnings.append(
                    f"{patient_id}/{cycle.cycle_number}: {exc}; "
                    "remaining decisions not stored"
                )
                continue
            oocytes = None
            if (
                decision.kind is DecisionKind.OOCYTE_RETRIEVAL
                and cycle.retrieved_oocytes is not None
            ):
                oocytes = cycle.retrieved_oocytes
            treatment = StoredTreatment(
                decided_at=item.visit.visit_at,
                decision=decision,
                prescription=next_state.prescription,
                explanation=(),
                alerts=(),
                config_hash=engine.config_hash,
                source="doctor",
            )
            try:
                store.put_treatment(
                    patient_id, cycle.cycle_number, treatment, retrieved_oocytes=oocytes
                )
            except DuplicateRowError as exc:
                warnings.append(f"{patient_id}/{cycle.cycle_number}: {exc}")
            state = next_state
    return warnings
