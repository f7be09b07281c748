"""Domain types for minimal-stimulation IVF cycle management.

Everything downstream (rules, ingestion, storage, replay, the HTTP
service) speaks in terms of these types.  They are deliberately dumb:
frozen dataclasses with validation of structural invariants only.
Clinical logic lives in :mod:`ivf_advisor.rules`.

Serialization convention: every dataclass has ``to_dict`` / ``from_dict``
producing plain JSON-compatible dicts.  Optional fields that are ``None``
are omitted from the dict.  Datetimes are ISO 8601 strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Mapping

MIN_FOLLICLE_MM = 2
MAX_FOLLICLE_MM = 30

GONADOTROPIN_STEP_IU = 75
GONADOTROPIN_MIN_IU = 75
GONADOTROPIN_MAX_IU = 450
CLOMID_DOSE_MG = 50.0
LETROZOLE_DOSE_MG = 2.5

MAX_TRIGGER_HOURS = 48
MIN_TRIGGER_HOURS = 24


class Scheme(str, Enum):
    """Stimulation scheme for one cycle."""

    MINI = "mini"
    ULTRA_MINI = "ultra_mini"
    NATURAL = "natural"


class Block(str, Enum):
    """Phase of the treatment cycle.

    PREPARATION  hormone suppression on oral contraceptives
    STIMULATION  daily medication, follicles grown to maturity
    TRIGGER      ovulation trigger administered, retrieval pending
    POST_TRIGGER retrieval window, ends in retrieval or escalation
    LPS          luteal phase stimulation, a second stimulation round
    """

    PREPARATION = "preparation"
    STIMULATION = "stimulation"
    TRIGGER = "trigger"
    POST_TRIGGER = "post_trigger"
    LPS = "lps"
    DONE = "done"
    CANCELLED = "cancelled"


TERMINAL_BLOCKS = frozenset({Block.DONE, Block.CANCELLED})

# Legal block transitions, including self loops.  apply_decision enforces
# these; the safety property tests hammer them.
ALLOWED_BLOCK_EDGES: dict[Block, frozenset[Block]] = {
    Block.PREPARATION: frozenset({Block.PREPARATION, Block.STIMULATION, Block.CANCELLED}),
    Block.STIMULATION: frozenset({Block.STIMULATION, Block.TRIGGER, Block.CANCELLED}),
    Block.TRIGGER: frozenset({Block.POST_TRIGGER, Block.CANCELLED}),
    Block.POST_TRIGGER: frozenset({Block.POST_TRIGGER, Block.LPS, Block.DONE, Block.CANCELLED}),
    Block.LPS: frozenset({Block.LPS, Block.TRIGGER, Block.CANCELLED}),
    Block.DONE: frozenset(),
    Block.CANCELLED: frozenset(),
}


class DecisionKind(str, Enum):
    CONTINUE_OCP = "continue_ocp"
    START_STIMULATION = "start_stimulation"
    CONTINUE_STIMULATION = "continue_stimulation"
    ADJUST_MEDICATION = "adjust_medication"
    CHANGE_SCHEME = "change_scheme"
    TRIGGER = "trigger"
    FOLLOW_PLAN = "follow_plan"
    OOCYTE_RETRIEVAL = "oocyte_retrieval"
    START_LPS = "start_lps"
    CYCLE_COMPLETE = "cycle_complete"
    MD_TALK = "md_talk"


class AlertKind(str, Enum):
    POOR_RESPONSE = "poor_response"
    OVULATION_RISK = "ovulation_risk"
    NO_TRIGGER = "no_trigger"
    CYCLE_CANCELLED = "cycle_cancelled"


class DetectionFlag(str, Enum):
    """Assay reported the value at a detection limit rather than exactly."""

    BELOW_LIMIT = "below_limit"
    ABOVE_LIMIT = "above_limit"


class GonadotropinAgent(str, Enum):
    FOLLISTIM = "follistim"
    GONAL_F = "gonal_f"


class TriggerAgent(str, Enum):
    LUPRON = "lupron"
    OVIDREL = "ovidrel"


ANALYTES = ("fsh", "lh", "e2", "p4")


def parse_iso_datetime(raw: str) -> datetime:
    """Parse an ISO 8601 datetime, tolerating a trailing Z."""
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    return datetime.fromisoformat(raw)


def canonical_json(payload: Any) -> str:
    """Deterministic JSON used for hashing and export diffing."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class PatientProfile:
    """Static facts about a patient that the rules consult."""

    patient_id: str
    age_years: int
    # True when stimulation medication is ruled out for this patient, which
    # forces the natural scheme regardless of reserve.
    medication_contraindicated: bool = False

    def __post_init__(self) -> None:
        if not self.patient_id:
            raise ValueError("patient_id must be non-empty")
        if not 18 <= self.age_years <= 60:
            raise ValueError(f"age_years out of supported range: {self.age_years}")

    def to_dict(self) -> dict:
        out: dict = {"patient_id": self.patient_id, "age_years": self.age_years}
        if self.medication_contraindicated:
            out["medication_contraindicated"] = True
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatientProfile":
        return cls(
            patient_id=data["patient_id"],
            age_years=int(data["age_years"]),
            medication_contraindicated=bool(data.get("medication_contraindicated", False)),
        )


@dataclass(frozen=True)
class HormonePanel:
    """Serum values from one blood draw, already in canonical units.

    Canonical units: FSH and LH in IU/L, estradiol in pg/mL, progesterone
    in ng/mL.  ``flags`` records analytes the assay could only bound, keyed
    by analyte name; the numeric field then holds the detection limit.
    """

    fsh: float | None = None
    lh: float | None = None
    e2: float | None = None
    p4: float | None = None
    flags: Mapping[str, DetectionFlag] = field(default_factory=dict)
    drawn_at: datetime | None = None

    def __post_init__(self) -> None:
        for name in ANALYTES:
            value = getattr(self, name)
            if value is not None and (value != value or value < 0 or value == float("inf")):
                raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
        for name in self.flags:
            if name not in ANALYTES:
                raise ValueError(f"flag for unknown analyte {name!r}")

    def value(self, analyte: str) -> float | None:
        if analyte not in ANALYTES:
            raise KeyError(analyte)
        return getattr(self, analyte)

    def missing(self) -> tuple[str, ...]:
        return tuple(name for name in ANALYTES if getattr(self, name) is None)

    def to_dict(self) -> dict:
        out: dict = {}
        for name in ANALYTES:
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.flags:
            out["flags"] = {k: v.value for k, v in sorted(self.flags.items())}
        if self.drawn_at is not None:
            out["drawn_at"] = self.drawn_at.isoformat()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HormonePanel":
        return cls(
            fsh=data.get("fsh"),
            lh=data.get("lh"),
            e2=data.get("e2"),
            p4=data.get("p4"),
            flags={k: DetectionFlag(v) for k, v in data.get("flags", {}).items()},
            drawn_at=parse_iso_datetime(data["drawn_at"]) if "drawn_at" in data else None,
        )


@dataclass(frozen=True)
class FollicleHistogram:
    """Ultrasound follicle measurements bucketed by diameter in mm.

    Keys are integer diameters within [2, 30]; values are follicle counts.
    Zero-count bins are dropped at construction so equal observations
    compare equal.
    """

    bins: Mapping[int, int] = field(default_factory=dict)
    measured_at: datetime | None = None

    def __post_init__(self) -> None:
        cleaned: dict[int, int] = {}
        for size, count in self.bins.items():
            if not isinstance(size, int) or isinstance(size, bool):
                raise ValueError(f"bin size must be int, got {size!r}")
            if not MIN_FOLLICLE_MM <= size <= MAX_FOLLICLE_MM:
                raise ValueError(f"bin size {size} outside [{MIN_FOLLICLE_MM}, {MAX_FOLLICLE_MM}]")
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise ValueError(f"count for bin {size} must be a non-negative int, got {count!r}")
            if count > 0:
                cleaned[size] = count
        object.__setattr__(self, "bins", cleaned)

    def total(self) -> int:
        return sum(self.bins.values())

    def is_empty(self) -> bool:
        return not self.bins

    def to_dict(self) -> dict:
        out: dict = {"bins": {str(size): count for size, count in sorted(self.bins.items())}}
        if self.measured_at is not None:
            out["measured_at"] = self.measured_at.isoformat()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FollicleHistogram":
        return cls(
            bins={int(size): int(count) for size, count in data.get("bins", {}).items()},
            measured_at=parse_iso_datetime(data["measured_at"]) if "measured_at" in data else None,
        )


@dataclass(frozen=True)
class VisitRecord:
    """One clinic visit: what was observed, not what was decided."""

    visit_at: datetime
    hormones: HormonePanel | None = None
    exam: FollicleHistogram | None = None

    def to_dict(self) -> dict:
        out: dict = {"visit_at": self.visit_at.isoformat()}
        if self.hormones is not None:
            out["hormones"] = self.hormones.to_dict()
        if self.exam is not None:
            out["exam"] = self.exam.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "VisitRecord":
        return cls(
            visit_at=parse_iso_datetime(data["visit_at"]),
            hormones=HormonePanel.from_dict(data["hormones"]) if "hormones" in data else None,
            exam=FollicleHistogram.from_dict(data["exam"]) if "exam" in data else None,
        )


@dataclass(frozen=True)
class TriggerMed:
    agent: TriggerAgent
    dose: int = 1

    def __post_init__(self) -> None:
        if self.dose < 1:
            raise ValueError(f"trigger dose must be positive, got {self.dose}")

    def to_dict(self) -> dict:
        return {"agent": self.agent.value, "dose": self.dose}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TriggerMed":
        return cls(agent=TriggerAgent(data["agent"]), dose=int(data.get("dose", 1)))


@dataclass(frozen=True)
class TriggerPlan:
    """Trigger shot plus the retrieval appointment derived from it.

    ``medications`` is empty when an endogenous LH surge is already under
    way and no shot should be given.  ``duration_hours`` is the planned
    trigger-to-retrieval interval and must stay strictly under 48 hours;
    past that the cohort is presumed ovulated.
    """

    triggered_at: datetime
    duration_hours: int
    medications: tuple[TriggerMed, ...] = ()
    scheduled_retrieval: datetime = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not MIN_TRIGGER_HOURS <= self.duration_hours < MAX_TRIGGER_HOURS:
            raise ValueError(
                f"duration_hours must be in [{MIN_TRIGGER_HOURS}, {MAX_TRIGGER_HOURS}), "
                f"got {self.duration_hours}"
            )
        if self.scheduled_retrieval is None:
            from datetime import timedelta

            object.__setattr__(
                self, "scheduled_retrieval", self.triggered_at + timedelta(hours=self.duration_hours)
            )

    def to_dict(self) -> dict:
        return {
            "triggered_at": self.triggered_at.isoformat(),
            "duration_hours": self.duration_hours,
            "medications": [med.to_dict() for med in self.medications],
            "scheduled_retrieval": self.scheduled_retrieval.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TriggerPlan":
        return cls(
            triggered_at=parse_iso_datetime(data["triggered_at"]),
            duration_hours=int(data["duration_hours"]),
            medications=tuple(TriggerMed.from_dict(m) for m in data.get("medications", [])),
            scheduled_retrieval=parse_iso_datetime(data["scheduled_retrieval"])
            if "scheduled_retrieval" in data
            else None,
        )


def _validate_gonadotropin_iu(iu: int) -> None:
    if iu == 0:
        return
    if not GONADOTROPIN_MIN_IU <= iu <= GONADOTROPIN_MAX_IU or iu % GONADOTROPIN_STEP_IU != 0:
        raise ValueError(
            f"gonadotropin dose must be 0 or a multiple of {GONADOTROPIN_STEP_IU} within "
            f"[{GONADOTROPIN_MIN_IU}, {GONADOTROPIN_MAX_IU}], got {iu}"
        )


@dataclass(frozen=True)
class Prescription:
    """Daily medication order standing until the next visit."""

    gonadotropin_iu: int = 0
    agent: GonadotropinAgent | None = None
    clomid_mg: float = 0.0
    letrozole_mg: float = 0.0
    trigger_meds: tuple[TriggerMed, ...] = ()

    def __post_init__(self) -> None:
        _validate_gonadotropin_iu(self.gonadotropin_iu)
        if self.gonadotropin_iu > 0 and self.agent is None:
            raise ValueError("agent required when gonadotropin dose is non-zero")
        if self.gonadotropin_iu == 0 and self.agent is not None:
            raise ValueError("agent given without a gonadotropin dose")
        if self.clomid_mg not in (0.0, CLOMID_DOSE_MG):
            raise ValueError(f"clomid_mg must be 0 or {CLOMID_DOSE_MG}, got {self.clomid_mg}")
        if self.letrozole_mg not in (0.0, LETROZOLE_DOSE_MG):
            raise ValueError(f"letrozole_mg must be 0 or {LETROZOLE_DOSE_MG}, got {self.letrozole_mg}")

    def is_medicated(self) -> bool:
        return bool(self.gonadotropin_iu or self.clomid_mg or self.letrozole_mg or self.trigger_meds)

    def to_dict(self) -> dict:
        out: dict = {
            "gonadotropin_iu": self.gonadotropin_iu,
            "clomid_mg": self.clomid_mg,
            "letrozole_mg": self.letrozole_mg,
        }
        if self.agent is not None:
            out["agent"] = self.agent.value
        if self.trigger_meds:
            out["trigger_meds"] = [med.to_dict() for med in self.trigger_meds]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Prescription":
        return cls(
            gonadotropin_iu=int(data.get("gonadotropin_iu", 0)),
            agent=GonadotropinAgent(data["agent"]) if data.get("agent") else None,
            clomid_mg=float(data.get("clomid_mg", 0.0)),
            letrozole_mg=float(data.get("letrozole_mg", 0.0)),
            trigger_meds=tuple(TriggerMed.from_dict(m) for m in data.get("trigger_meds", [])),
        )


@dataclass(frozen=True)
class Decision:
    """What should happen next.  Payload fields depend on the kind:

    START_STIMULATION and CHANGE_SCHEME carry ``scheme``;
    TRIGGER carries ``trigger_plan``; everything else is bare.
    """

    kind: DecisionKind
    scheme: Scheme | None = None
    trigger_plan: TriggerPlan | None = None

    def __post_init__(self) -> None:
        needs_scheme = self.kind in (DecisionKind.START_STIMULATION, DecisionKind.CHANGE_SCHEME)
        if needs_scheme and self.scheme is None:
            raise ValueError(f"{self.kind.value} requires a scheme")
        if self.kind is DecisionKind.TRIGGER and self.trigger_plan is None:
            raise ValueError("trigger decision requires a trigger_plan")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.scheme is not None:
            out["scheme"] = self.scheme.value
        if self.trigger_plan is not None:
            out["trigger_plan"] = self.trigger_plan.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Decision":
        return cls(
            kind=DecisionKind(data["kind"]),
            scheme=Scheme(data["scheme"]) if data.get("scheme") else None,
            trigger_plan=TriggerPlan.from_dict(data["trigger_plan"])
            if data.get("trigger_plan")
            else None,
        )


@dataclass(frozen=True)
class CycleState:
    """Everything the engine needs to advise on the next visit.

    The state is a pure value: the engine never mutates it, and
    ``apply_decision`` returns a fresh one.  ``last_exam`` and ``last_lh``
    carry the one-visit lookback the growth and surge rules need, so a
    state plus a new visit is always sufficient context.
    """

    profile: PatientProfile
    cycle_number: int
    block: Block = Block.PREPARATION
    scheme: Scheme | None = None
    prescription: Prescription | None = None
    trigger_plan: TriggerPlan | None = None
    stim_visit_index: int = 0
    slow_growth_streak: int = 0
    md_talk_count: int = 0
    ocp_streak: int = 0
    lps_round: bool = False
    retrieval_done: bool = False
    last_visit_at: datetime | None = None
    last_exam: FollicleHistogram | None = None
    last_exam_at: datetime | None = None
    last_lh: float | None = None

    def __post_init__(self) -> None:
        if self.cycle_number < 1:
            raise ValueError(f"cycle_number must be positive, got {self.cycle_number}")
        for counter in ("stim_visit_index", "slow_growth_streak", "md_talk_count", "ocp_streak"):
            if getattr(self, counter) < 0:
                raise ValueError(f"{counter} must be non-negative")

    def is_terminal(self) -> bool:
        return self.block in TERMINAL_BLOCKS

    def to_dict(self) -> dict:
        out: dict = {
            "profile": self.profile.to_dict(),
            "cycle_number": self.cycle_number,
            "block": self.block.value,
            "stim_visit_index": self.stim_visit_index,
            "slow_growth_streak": self.slow_growth_streak,
            "md_talk_count": self.md_talk_count,
            "ocp_streak": self.ocp_streak,
            "lps_round": self.lps_round,
            "retrieval_done": self.retrieval_done,
        }
        if self.scheme is not None:
            out["scheme"] = self.scheme.value
        if self.prescription is not None:
            out["prescription"] = self.prescription.to_dict()
        if self.trigger_plan is not None:
            out["trigger_plan"] = self.trigger_plan.to_dict()
        if self.last_visit_at is not None:
            out["last_visit_at"] = self.last_visit_at.isoformat()
        if self.last_exam is not None:
            out["last_exam"] = self.last_exam.to_dict()
        if self.last_exam_at is not None:
            out["last_exam_at"] = self.last_exam_at.isoformat()
        if self.last_lh is not None:
            out["last_lh"] = self.last_lh
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CycleState":
        return cls(
            profile=PatientProfile.from_dict(data["profile"]),
            cycle_number=int(data["cycle_number"]),
            block=Block(data.get("block", Block.PREPARATION.value)),
            scheme=Scheme(data["scheme"]) if data.get("scheme") else None,
            prescription=Prescription.from_dict(data["prescription"])
            if data.get("prescription")
            else None,
            trigger_plan=TriggerPlan.from_dict(data["trigger_plan"])
            if data.get("trigger_plan")
            else None,
            stim_visit_index=int(data.get("stim_visit_index", 0)),
            slow_growth_streak=int(data.get("slow_growth_streak", 0)),
            md_talk_count=int(data.get("md_talk_count", 0)),
            ocp_streak=int(data.get("ocp_streak", 0)),
            lps_round=bool(data.get("lps_round", False)),
            retrieval_done=bool(data.get("retrieval_done", False)),
            last_visit_at=parse_iso_datetime(data["last_visit_at"])
            if "last_visit_at" in data
            else None,
            last_exam=FollicleHistogram.from_dict(data["last_exam"])
            if "last_exam" in data
            else None,
            last_exam_at=parse_iso_datetime(data["last_exam_at"])
            if "last_exam_at" in data
            else None,
            last_lh=data.get("last_lh"),
        )
