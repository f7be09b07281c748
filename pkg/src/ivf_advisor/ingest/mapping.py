"""Column mapping and row typing for exported clinic records.

Exports arrive as flat rows (CSV or JSON lines) with inconsistent
headers.  A ``ColumnMapping`` translates whatever headers an export uses
into canonical field names; ``DEFAULT_MAPPING`` knows the common aliases.
Row kind is taken from an explicit type column when present and inferred
from the populated fields otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Mapping

from ..core.types import DecisionKind, parse_iso_datetime

CANONICAL_FIELDS = (
    "patient_id",
    "cycle_number",
    "date",
    "row_type",
    "age_years",
    "contraindicated",
    "fsh",
    "lh",
    "e2",
    "p4",
    "follicles",
    "decision",
    "oocytes",
)

_DEFAULT_ALIASES: dict[str, tuple[str, ...]] = {
    "patient_id": ("patient_id", "patient", "pid", "mrn", "patientid", "id"),
    "cycle_number": ("cycle_number", "cycle", "cycle_no", "cycleid", "cycle_id"),
    "date": ("date", "visit_date", "drawn_at", "collected", "datetime", "timestamp"),
    "row_type": ("row_type", "type", "record_type", "kind", "category"),
    "age_years": ("age_years", "age", "patient_age"),
    "contraindicated": ("contraindicated", "medication_contraindicated", "no_stimulation"),
    "fsh": ("fsh", "fsh_value", "fsh_level"),
    "lh": ("lh", "lh_value", "lh_level"),
    "e2": ("e2", "estradiol", "oestradiol", "e2_value"),
    "p4": ("p4", "progesterone", "prog", "p4_value"),
    "follicles": ("follicles", "follicle_map", "follicle_sizes", "ultrasound", "afc_map"),
    "decision": ("decision", "treatment", "action", "plan"),
    "oocytes": ("oocytes", "retrieved_oocytes", "eggs", "oocyte_count"),
}

ROW_TYPES = ("patient", "blood", "ultrasound", "treatment", "retrieval")

_ROW_TYPE_ALIASES: dict[str, str] = {
    "patient": "patient",
    "demographics": "patient",
    "blood": "blood",
    "bloods": "blood",
    "blood_test": "blood",
    "lab": "blood",
    "labs": "blood",
    "hormones": "blood",
    "ultrasound": "ultrasound",
    "ultrasound_test": "ultrasound",
    "us": "ultrasound",
    "scan": "ultrasound",
    "treatment": "treatment",
    "decision": "treatment",
    "order": "treatment",
    "retrieval": "retrieval",
    "egg_retrieval": "retrieval",
    "opu": "retrieval",
}

_DECISION_ALIASES: dict[str, DecisionKind] = {
    "continue_ocp": DecisionKind.CONTINUE_OCP,
    "ocp": DecisionKind.CONTINUE_OCP,
    "start_stimulation": DecisionKind.START_STIMULATION,
    "start_stim": DecisionKind.START_STIMULATION,
    "start": DecisionKind.START_STIMULATION,
    "continue_stimulation": DecisionKind.CONTINUE_STIMULATION,
    "continue_stim": DecisionKind.CONTINUE_STIMULATION,
    "continue": DecisionKind.CONTINUE_STIMULATION,
    "adjust_medication": DecisionKind.ADJUST_MEDICATION,
    "adjust": DecisionKind.ADJUST_MEDICATION,
    "dose_change": DecisionKind.ADJUST_MEDICATION,
    "change_scheme": DecisionKind.CHANGE_SCHEME,
    "switch_scheme": DecisionKind.CHANGE_SCHEME,
    "trigger": DecisionKind.TRIGGER,
    "follow_plan": DecisionKind.FOLLOW_PLAN,
    "follow": DecisionKind.FOLLOW_PLAN,
    "oocyte_retrieval": DecisionKind.OOCYTE_RETRIEVAL,
    "retrieval": DecisionKind.OOCYTE_RETRIEVAL,
    "opu": DecisionKind.OOCYTE_RETRIEVAL,
    "start_lps": DecisionKind.START_LPS,
    "lps": DecisionKind.START_LPS,
    "luteal": DecisionKind.START_LPS,
    "cycle_complete": DecisionKind.CYCLE_COMPLETE,
    "complete": DecisionKind.CYCLE_COMPLETE,
    "done": DecisionKind.CYCLE_COMPLETE,
    "md_talk": DecisionKind.MD_TALK,
    "md": DecisionKind.MD_TALK,
    "consult": DecisionKind.MD_TALK,
    "escalate": DecisionKind.MD_TALK,
}

_DATE_FORMATS = ("%Y/%m/%d", "%m/%d/%Y", "%Y%m%d")
# Date-only records get the morning draw convention.
DEFAULT_VISIT_HOUR = 9


class MappingError(ValueError):
    """Row cannot be mapped to canonical fields."""


def _normalize_header(name: Any) -> str:
    # "Follicle Sizes" and "follicle-sizes" both mean follicle_sizes.
    return re.sub(r"[\s\-]+", "_", str(name).strip().lower())


@dataclass(frozen=True)
class ColumnMapping:
    """Header aliases per canonical field, matched case-insensitively."""

    aliases: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(_DEFAULT_ALIASES)
    )

    def __post_init__(self) -> None:
        for name in self.aliases:
            if name not in CANONICAL_FIELDS:
                raise ValueError(f"unknown canonical field {name!r}")

    @classmethod
    def with_extras(cls, extras: Mapping[str, Any]) -> "ColumnMapping":
        """Default aliases plus caller-supplied ones, tried first.

        Values may be a single name or a list of names.
        """
        merged: dict[str, tuple[str, ...]] = dict(_DEFAULT_ALIASES)
        for canonical, names in extras.items():
            if isinstance(names, str):
                names = [names]
            extra = tuple(_normalize_header(name) for name in names)
            merged[canonical] = extra + tuple(
                alias for alias in merged.get(canonical, ()) if alias not in extra
            )
        return cls(merged)

    def remap(self, row: Mapping[str, Any]) -> dict[str, Any]:
        """Translate one raw row; unmapped columns are dropped."""
        lowered: dict[str, Any] = {}
        for key, value in row.items():
            if key is None:
                continue
            lowered.setdefault(_normalize_header(key), value)
        out: dict[str, Any] = {}
        for canonical, names in self.aliases.items():
            for name in names:
                if name in lowered and lowered[name] is not None and str(lowered[name]).strip() != "":
                    out[canonical] = lowered[name]
                    break
        return out


DEFAULT_MAPPING = ColumnMapping()


def detect_row_type(fields: Mapping[str, Any]) -> str:
    """Explicit type column wins; otherwise infer from populated fields."""
    raw = fields.get("row_type")
    if raw is not None:
        normalized = str(raw).strip().lower()
        row_type = _ROW_TYPE_ALIASES.get(normalized)
        if row_type is None:
            raise MappingError(f"unknown row type {raw!r}")
        return row_type
    if any(fields.get(a) is not None for a in ("fsh", "lh", "e2", "p4")):
        return "blood"
    if fields.get("follicles") is not None:
        return "ultrasound"
    if fields.get("decision") is not None:
        return "treatment"
    if fields.get("oocytes") is not None:
        return "retrieval"
    if fields.get("age_years") is not None:
        return "patient"
    raise MappingError("row has no recognizable payload")


def parse_decision_kind(raw: str) -> DecisionKind:
    normalized = str(raw).strip().lower().replace("-", "_").replace(" ", "_")
    kind = _DECISION_ALIASES.get(normalized)
    if kind is None:
        raise MappingError(f"unknown decision {raw!r}")
    return kind


def parse_visit_datetime(raw: Any) -> datetime:
    """Accept ISO dates and datetimes plus a few legacy formats."""
    if isinstance(raw, datetime):
        return raw
    text = str(raw).strip()
    if not text:
        raise MappingError("empty date")
    try:
        parsed = parse_iso_datetime(text)
    except ValueError:
        parsed = None
    if parsed is None:
        for fmt in _DATE_FORMATS:
            try:
                parsed = datetime.strptime(text, fmt)
                break
            except ValueError:
                continue
    if parsed is None:
        raise MappingError(f"unparseable date {raw!r}")
    if parsed.hour == 0 and parsed.minute == 0 and parsed.second == 0 and "T" not in text and ":" not in text:
        parsed = parsed.replace(hour=DEFAULT_VISIT_HOUR)
    return parsed
