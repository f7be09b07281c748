"""Replay recorded cycles against the engine, visit by visit.

Protocol: for every visit the engine predicts a decision from the state
it has built so far, the prediction is compared to what the care team
actually decided, and then the state is corrected to follow the actual
decision.  The engine therefore never drifts onto its own branch; every
prediction is made from the ground truth history.

Decisions match when their kinds match.  Payload details (exact doses,
trigger regimen composition) are compared by the explanation tooling,
not here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Mapping

from ..core.types import (
    Block,
    Decision,
    DecisionKind,
    PatientProfile,
    Prescription,
    Scheme,
    TriggerPlan,
    VisitRecord,
)
from ..core.validation import AdvisorError
from ..rules.block1 import select_scheme
from ..rules.block3 import plan_trigger
from ..rules.engine import AdvisoryEngine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecordedVisit:
    """One visit with the decision the care team actually took.

    The decision is stored as loose fields rather than a ``Decision`` so
    records from exports that only name the kind stay representable; the
    replayer fills in payloads when it has to force a transition.  A
    visit with no recorded decision (kind None) carries observations
    only: it updates the replayed state but is never scored.
    """

    visit: VisitRecord
    kind: DecisionKind | None = None
    scheme: Scheme | None = None
    trigger_plan: TriggerPlan | None = None
    prescription: Prescription | None = None

    def to_dict(self) -> dict:
        out: dict = {"visit": self.visit.to_dict()}
        if self.kind is not None:
            out["kind"] = self.kind.value
        if self.scheme is not None:
            out["scheme"] = self.scheme.value
        if self.trigger_plan is not None:
            out["trigger_plan"] = self.trigger_plan.to_dict()
        if self.prescription is not None:
            out["prescription"] = self.prescription.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RecordedVisit":
        return cls(
            visit=VisitRecord.from_dict(data["visit"]),
            kind=DecisionKind(data["kind"]) if data.get("kind") else None,
            scheme=Scheme(data["scheme"]) if data.get("scheme") else None,
            trigger_plan=TriggerPlan.from_dict(data["trigger_plan"])
            if data.get("trigger_plan")
            else None,
            prescription=Prescription.from_dict(data["prescription"])
            if data.get("prescription")
            else None,
        )


@dataclass(frozen=True)
class CycleRecord:
    """A complete recorded cycle: the replay unit."""

    profile: PatientProfile
    cycle_number: int
    visits: tuple[RecordedVisit, ...]
    # None means the cycle ended without a retrieval.
    retrieved_oocytes: int | None = None

    def cycle_id(self) -> str:
        return f"{self.profile.patient_id}/{self.cycle_number}"

    def to_dict(self) -> dict:
        out: dict = {
            "profile": self.profile.to_dict(),
            "cycle_number": self.cycle_number,
            "visits": [rv.to_dict() for rv in self.visits],
        }
        if self.retrieved_oocytes is not None:
            out["retrieved_oocytes"] = self.retrieved_oocytes
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CycleRecord":
        return cls(
            profile=PatientProfile.from_dict(data["profile"]),
            cycle_number=int(data.get("cycle_number", 1)),
            visits=tuple(RecordedVisit.from_dict(v) for v in data["visits"]),
            retrieved_oocytes=data.get("retrieved_oocytes"),
        )


@dataclass(frozen=True)
class VisitOutcome:
    visit_date: date
    block_before: Block
    predicted_kind: DecisionKind
    actual_kind: DecisionKind
    predicted_block: Block
    actual_block: Block

    @property
    def match(self) -> bool:
        return self.predicted_kind is self.actual_kind


@dataclass
class CycleOutcome:
    cycle_id: str
    outcomes: list[VisitOutcome] = field(default_factory=list)
    predicted_md_talks: int = 0
    predicted_trigger_date: date | None = None
    actual_trigger_date: date | None = None
    retrieved_oocytes: int | None = None
    cancelled: bool = False
    skipped_reason: str | None = None


def resolve_actual(
    engine: AdvisoryEngine, state: Any, recorded: RecordedVisit
) -> Decision:
    """Build the concrete decision for the recorded kind, filling payloads
    the export did not carry."""
    kind = recorded.kind
    if kind is DecisionKind.TRIGGER:
        plan = recorded.trigger_plan
        if plan is None:
            plan, _, _ = plan_trigger(state, recorded.visit, engine.config)
        return Decision(kind, trigger_plan=plan)
    if kind is DecisionKind.START_STIMULATION:
        scheme = recorded.scheme
        if scheme is None:
            count = recorded.visit.exam.total() if recorded.visit.exam is not None else 0
            scheme, _ = select_scheme(state, count, engine.config)
        return Decision(kind, scheme=scheme)
    if kind is DecisionKind.CHANGE_SCHEME:
        scheme = recorded.scheme
        if scheme is None:
            scheme = Scheme.ULTRA_MINI if state.scheme is Scheme.MINI else state.scheme
        return Decision(kind, scheme=scheme)
    return Decision(kind)


def replay_cycle(engine: AdvisoryEngine, record: CycleRecord) -> CycleOutcome:
    """Replay one cycle from a fresh state; never raises on bad records."""
    outcome = CycleOutcome(
        cycle_id=record.cycle_id(), retrieved_oocytes=record.retrieved_oocytes
    )
    state = engine.new_cycle(record.profile, record.cycle_number)
    if not record.visits:
        outcome.skipped_reason = "no visits"
        return outcome
    for position, recorded in enumerate(record.visits):
        if state.is_terminal():
            outcome.skipped_reason = f"visit {position} after terminal state"
            break
        if recorded.kind is None:
            try:
                state = engine.observe(state, recorded.visit)
            except AdvisorError as exc:
                outcome.skipped_reason = f"visit {position}: {exc}"
                break
            continue
        try:
            advice = engine.advise(state, recorded.visit)
            actual = resolve_actual(engine, state, recorded)
            predicted_state = engine.apply_decision(
                state, recorded.visit, advice.decision, advice.prescription
            )
            next_state = engine.apply_decision(
                state, recorded.visit, actual, recorded.prescription
            )
        except AdvisorError as exc:
            outcome.skipped_reason = f"visit {position}: {exc}"
            break
        outcome.outcomes.append(
            VisitOutcome(
                visit_date=recorded.visit.visit_at.date(),
                block_before=state.block,
                predicted_kind=advice.decision.kind,
                actual_kind=actual.kind,
                predicted_block=predicted_state.block,
                actual_block=next_state.block,
            )
        )
        if advice.decision.kind is DecisionKind.MD_TALK:
            outcome.predicted_md_talks += 1
        if (
            advice.decision.kind is DecisionKind.TRIGGER
            and outcome.predicted_trigger_date is None
        ):
            outcome.predicted_trigger_date = recorded.visit.visit_at.date()
        if actual.kind is DecisionKind.TRIGGER and outcome.actual_trigger_date is None:
            outcome.actual_trigger_date = recorded.visit.visit_at.date()
        if next_state.block is Block.CANCELLED:
            outcome.cancelled = True
        state = next_state
    return outcome
