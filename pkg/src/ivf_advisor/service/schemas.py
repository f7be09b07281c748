"""Request and response bodies for the HTTP service.

These models mirror the canonical ``to_dict`` serialization of the core
types one-to-one, so a response can be fed back through ``from_dict``
and reconstruct the same objects.  Conversion helpers translate between
the two worlds and surface core validation messages as request errors.
"""

from __future__ import annotations

from datetime import datetime
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..core.types import (
    DetectionFlag,
    FollicleHistogram,
    HormonePanel,
    PatientProfile,
    VisitRecord,
)


class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PatientIn(_Body):
    patient_id: str = Field(min_length=1, max_length=64)
    age_years: int
    medication_contraindicated: bool = False

    def to_profile(self) -> PatientProfile:
        return PatientProfile(
            patient_id=self.patient_id,
            age_years=self.age_years,
            medication_contraindicated=self.medication_contraindicated,
        )


class HormonePanelIn(_Body):
    fsh: float | None = None
    lh: float | None = None
    e2: float | None = None
    p4: float | None = None
    flags: dict[str, str] = Field(default_factory=dict)
    drawn_at: datetime | None = None

    def to_panel(self) -> HormonePanel:
        return HormonePanel(
            fsh=self.fsh,
            lh=self.lh,
            e2=self.e2,
            p4=self.p4,
            flags={k: DetectionFlag(v) for k, v in self.flags.items()},
            drawn_at=self.drawn_at,
        )


class ExamIn(_Body):
    bins: dict[int, int] = Field(default_factory=dict)
    measured_at: datetime | None = None

    def to_histogram(self) -> FollicleHistogram:
        return FollicleHistogram(bins=self.bins, measured_at=self.measured_at)


class VisitBody(_Body):
    visit_at: datetime
    hormones: HormonePanelIn | None = None
    exam: ExamIn | None = None

    def to_visit(self) -> VisitRecord:
        return VisitRecord(
            visit_at=self.visit_at,
            hormones=self.hormones.to_panel() if self.hormones else None,
            exam=self.exam.to_histogram() if self.exam else None,
        )


class VisitIn(VisitBody):
    patient_id: str = Field(min_length=1, max_length=64)
    cycle_number: int = Field(default=1, ge=1)


class SyntheticSpec(_Body):
    patients: int = Field(ge=1, le=20000)
    seed: int = 0
    trigger_delay_days: int | list[int] = 0


class ReplayIn(_Body):
    source: Literal["synthetic", "dataset", "store"]
    synthetic: SyntheticSpec | None = None
    records: list[dict] | None = None


# -- responses -------------------------------------------------------


class PatientOut(BaseModel):
    patient_id: str
    age_years: int
    medication_contraindicated: bool = False


class CitationOut(BaseModel):
    rule_id: str
    observed: str
    threshold: str
    passed: bool
    detail: str | None = None


class AlertOut(BaseModel):
    kind: str
    reason: str
    rule_id: str


class TriggerMedOut(BaseModel):
    agent: str
    dose: int


class TriggerPlanOut(BaseModel):
    triggered_at: datetime
    duration_hours: int
    medications: list[TriggerMedOut]
    scheduled_retrieval: datetime


class DecisionOut(BaseModel):
    kind: str
    scheme: str | None = None
    trigger_plan: TriggerPlanOut | None = None


class PrescriptionOut(BaseModel):
    gonadotropin_iu: int
    agent: str | None = None
    clomid_mg: float
    letrozole_mg: float
    trigger_meds: list[TriggerMedOut] = Field(default_factory=list)


class AdviceOut(BaseModel):
    decision: DecisionOut
    explanation: list[CitationOut]
    alerts: list[AlertOut]
    prescription: PrescriptionOut | None = None
    next_visit_in_days: int | None = None
    config_hash: str


class StateOut(BaseModel):
    block: str
    scheme: str | None = None
    stim_visit_index: int
    slow_growth_streak: int
    md_talk_count: int
    ocp_streak: int
    lps_round: bool
    retrieval_done: bool
    last_visit_at: datetime | None = None


class HormonePanelOut(BaseModel):
    fsh: float | None = None
    lh: float | None = None
    e2: float | None = None
    p4: float | None = None
    flags: dict[str, str] = Field(default_factory=dict)
    drawn_at: datetime | None = None


class ExamOut(BaseModel):
    bins: dict[str, int] = Field(default_factory=dict)
    measured_at: datetime | None = None


class VisitOut(BaseModel):
    visit_at: datetime
    hormones: HormonePanelOut | None = None
    exam: ExamOut | None = None


class AdviceResponse(BaseModel):
    patient: PatientOut
    cycle_number: int
    visit: VisitOut
    advice: AdviceOut
    state: StateOut
    config_hash: str
    dry_run: bool
    persisted: bool


class CreatedOut(BaseModel):
    id: str


class TreatmentOut(BaseModel):
    decided_at: datetime
    decision: DecisionOut
    prescription: PrescriptionOut | None = None
    explanation: list[CitationOut] = Field(default_factory=list)
    alerts: list[AlertOut] = Field(default_factory=list)
    config_hash: str
    source: str


class CycleVisitOut(BaseModel):
    visit: VisitOut
    treatment: TreatmentOut | None = None


class CycleOut(BaseModel):
    patient: PatientOut
    cycle_number: int
    visits: list[CycleVisitOut]
    retrieved_oocytes: int | None = None
    retrieved_at: datetime | None = None


class ReplayOut(BaseModel):
    report: dict
    text: str


class ConfigOut(BaseModel):
    config: dict
    config_hash: str


class ErrorOut(BaseModel):
    code: str
    message: str
    details: list[dict] = Field(default_factory=list)
