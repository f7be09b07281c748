"""Batch normalization: raw export rows to visits grouped per cycle.

Accounting is exact: every input row lands in ``accepted`` or
``rejected``, never both, never neither.  Rejections carry the row index
and a reason.  Recoverable oddities (clamped sizes, assumed cycle
numbers, cross-day pairing) become warnings on the result instead.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..core.types import (
    ANALYTES,
    DecisionKind,
    DetectionFlag,
    FollicleHistogram,
    HormonePanel,
    VisitRecord,
)
from .follicle_map import FollicleParseError, parse_follicle_map
from .mapping import (
    DEFAULT_MAPPING,
    ColumnMapping,
    MappingError,
    detect_row_type,
    parse_decision_kind,
    parse_visit_datetime,
)
from .values import HormoneParseError, parse_hormone_value

logger = logging.getLogger(__name__)

_TRUE_WORDS = frozenset({"1", "true", "yes", "y"})
_FALSE_WORDS = frozenset({"0", "false", "no", "n", ""})


@dataclass(frozen=True)
class NormalizedRow:
    index: int
    row_type: str
    patient_id: str
    cycle_number: int | None = None
    at: datetime | None = None
    age_years: int | None = None
    contraindicated: bool = False
    panel: HormonePanel | None = None
    exam: FollicleHistogram | None = None
    decision_kind: DecisionKind | None = None
    oocytes: int | None = None


@dataclass(frozen=True)
class RejectedRow:
    index: int
    reason: str
    raw: dict


@dataclass
class IngestResult:
    accepted: list[NormalizedRow] = field(default_factory=list)
    rejected: list[RejectedRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def total(self) -> int:
        return len(self.accepted) + len(self.rejected)


@dataclass(frozen=True)
class IngestedVisit:
    visit: VisitRecord
    decision_kind: DecisionKind | None = None


@dataclass(frozen=True)
class IngestedCycle:
    patient_id: str
    cycle_number: int
    age_years: int | None
    contraindicated: bool
    visits: tuple[IngestedVisit, ...]
    retrieved_oocytes: int | None


def read_rows(path: str | Path) -> list[dict]:
    """Load export rows from .csv, .json (array), or .jsonl files."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        with path.open(newline="", encoding="utf-8-sig") as fh:
            return [dict(row) for row in csv.DictReader(fh)]
    if suffix == ".jsonl":
        rows = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
        return rows
    if suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError("JSON export must be an array of rows")
        return data
    raise ValueError(f"unsupported export format {suffix!r}")


def _parse_int(raw: Any, what: str) -> int:
    text = str(raw).strip()
    try:
        value = float(text)
    except ValueError as exc:
        raise MappingError(f"bad {what} {raw!r}") from exc
    if value != int(value):
        raise MappingError(f"bad {what} {raw!r}")
    return int(value)


def _parse_bool(raw: Any, what: str) -> bool:
    text = str(raw).strip().lower()
    if text in _TRUE_WORDS:
        return True
    if text in _FALSE_WORDS:
        return False
    raise MappingError(f"bad {what} {raw!r}")


def _normalize_one(
    index: int, row_type: str, fields: Mapping[str, Any], warnings: list[str]
) -> NormalizedRow:
    patient_id = str(fields.get("patient_id") or "").strip()
    if not patient_id:
        raise MappingError("missing patient_id")

    if row_type == "patient":
        if "age_years" not in fields:
            raise MappingError("patient row without age")
        age = _parse_int(fields["age_years"], "age")
        contraindicated = (
            _parse_bool(fields["contraindicated"], "contraindicated flag")
            if "contraindicated" in fields
            else False
        )
        return NormalizedRow(
            index, "patient", patient_id, age_years=age, contraindicated=contraindicated
        )

    if "cycle_number" in fields:
        cycle = _parse_int(fields["cycle_number"], "cycle number")
        if cycle < 1:
            raise MappingError(f"bad cycle number {fields['cycle_number']!r}")
    else:
        warnings.append(f"row {index}: missing cycle number, assumed 1")
        cycle = 1
    if "date" not in fields:
        raise MappingError("missing date")
    at = parse_visit_datetime(fields["date"])

    if row_type == "blood":
        values: dict[str, float] = {}
        flags: dict[str, DetectionFlag] = {}
        for analyte in ANALYTES:
            raw_value = fields.get(analyte)
            if raw_value is None:
                continue
            value, flag = parse_hormone_value(str(raw_value), analyte)
            values[analyte] = value
            if flag is not None:
                flags[analyte] = flag
        if not values:
            raise MappingError("blood row without any analyte")
        panel = HormonePanel(drawn_at=at, flags=flags, **values)
        return NormalizedRow(index, "blood", patient_id, cycle, at, panel=panel)

    if row_type == "ultrasound":
        exam, clamp_warnings = parse_follicle_map(str(fields.get("follicles") or ""))
        warnings.extend(f"row {index}: {w}" for w in clamp_warnings)
        exam = FollicleHistogram(dict(exam.bins), measured_at=at)
        return NormalizedRow(index, "ultrasound", patient_id, cycle, at, exam=exam)

    if row_type == "treatment":
        if "decision" not in fields:
            raise MappingError("treatment row without decision")
        kind = parse_decision_kind(str(fields["decision"]))
        return NormalizedRow(index, "treatment", patient_id, cycle, at, decision_kind=kind)

    if row_type == "retrieval":
        if "oocytes" not in fields:
            raise MappingError("retrieval row without oocyte count")
        oocytes = _parse_int(fields["oocytes"], "oocyte count")
        if oocytes < 0:
            raise MappingError(f"bad oocyte count {fields['oocytes']!r}")
        return NormalizedRow(index, "retrieval", patient_id, cycle, at, oocytes=oocytes)

    raise MappingError(f"unsupported row type {row_type!r}")  # pragma: no cover


def normalize_rows(
    rows: Iterable[Mapping[str, Any]], mapping: ColumnMapping = DEFAULT_MAPPING
) -> IngestResult:
    """Map, type, and parse every row; exact accept/reject accounting."""
    result = IngestResult()
    for index, raw in enumerate(rows):
        try:
            fields = mapping.remap(raw)
            row_type = detect_row_type(fields)
            normalized = _normalize_one(index, row_type, fields, result.warnings)
        except (MappingError, HormoneParseError, FollicleParseError, ValueError) as exc:
            reason = str(exc) or type(exc).__name__
            result.rejected.append(RejectedRow(index, reason, dict(raw)))
            continue
        result.accepted.append(normalized)
    logger.info(
        "normalized %d rows: %d accepted, %d rejected",
        result.total(),
        len(result.accepted),
        len(result.rejected),
    )
    return result


class _DayBucket:
    __slots__ = ("at", "panel", "exam", "decision")

    def __init__(self, at: datetime):
        self.at = at
        self.panel: HormonePanel | None = None
        self.exam: FollicleHistogram | None = None
        self.decision: DecisionKind | None = None


def build_cycles(result: IngestResult, pair_window_days: int = 1) -> list[IngestedCycle]:
    """Pair observations into visits and group them per patient cycle.

    Blood and ultrasound on the same calendar day form one visit; an
    unpaired ultrasound may attach to a neighboring day's blood draw
    within the window.  Everything else stands alone, with a warning.
    """
    ages: dict[str, int] = {}
    contraindicated: dict[str, bool] = {}
    groups: dict[tuple[str, int], dict[date, _DayBucket]] = {}
    oocytes: dict[tuple[str, int], int] = {}
    retrieval_days: dict[tuple[str, int], date] = {}

    def bucket_for(row: NormalizedRow) -> _DayBucket:
        key = (row.patient_id, row.cycle_number)
        days = groups.setdefault(key, {})
        day = row.at.date()
        bucket = days.get(day)
        if bucket is None:
            bucket = _DayBucket(row.at)
            days[day] = bucket
        elif row.at < bucket.at:
            bucket.at = row.at
        return bucket

    ordered = sorted(
        result.accepted, key=lambda r: (r.patient_id, r.cycle_number or 0, r.at or datetime.min, r.index)
    )
    for row in ordered:
        if row.row_type == "patient":
            if row.patient_id in ages and ages[row.patient_id] != row.age_years:
                result.warnings.append(
                    f"row {row.index}: conflicting age for {row.patient_id}, keeping latest"
                )
            ages[row.patient_id] = row.age_years
            contraindicated[row.patient_id] = row.contraindicated
            continue
        key = (row.patient_id, row.cycle_number)
        if row.row_type == "blood":
            bucket = bucket_for(row)
            if bucket.panel is not None:
                result.warnings.append(
                    f"row {row.index}: duplicate blood draw on {row.at.date()}, keeping first"
                )
                continue
            bucket.panel = row.panel
        elif row.row_type == "ultrasound":
            bucket = bucket_for(row)
            if bucket.exam is not None:
                result.warnings.append(
                    f"row {row.index}: duplicate ultrasound on {row.at.date()}, keeping first"
                )
                continue
            bucket.exam = row.exam
        elif row.row_type == "treatment":
            bucket = bucket_for(row)
            if bucket.decision is not None:
                result.warnings.append(
                    f"row {row.index}: duplicate decision on {row.at.date()}, keeping first"
                )
                continue
            bucket.decision = row.decision_kind
        elif row.row_type == "retrieval":
            if key in oocytes:
                result.warnings.append(
                    f"row {row.index}: duplicate retrieval for cycle, keeping latest count"
                )
            oocytes[key] = row.oocytes
            retrieval_days[key] = row.at.date()
            bucket_for(row)

    # Attach exam-only days to a neighboring blood draw within the window.
    for key, days in groups.items():
        for day in sorted(days):
            bucket = days[day]
            if bucket.exam is None or bucket.panel is not None or bucket.decision is not None:
                continue
            for delta in sorted(range(-pair_window_days, pair_window_days + 1), key=lambda d: (abs(d), d)):
                if delta == 0:
                    continue
                neighbor = days.get(date.fromordinal(day.toordinal() + delta))
                if neighbor is not None and neighbor.panel is not None and neighbor.exam is None:
                    neighbor.exam = bucket.exam
                    del days[day]
                    result.warnings.append(
                        f"{key[0]} cycle {key[1]}: ultrasound on {day} paired with blood draw "
                        f"{delta:+d} day(s) away"
                    )
                    break

    # A retrieval row doubles as the day's decision when none was given.
    for key, day in retrieval_days.items():
        bucket = groups.get(key, {}).get(day)
        if bucket is not None and bucket.decision is None:
            bucket.decision = DecisionKind.OOCYTE_RETRIEVAL

    cycles: list[IngestedCycle] = []
    for key in sorted(groups):
        patient_id, cycle_number = key
        days = groups[key]
        visits = []
        for day in sorted(days):
            bucket = days[day]
            if bucket.panel is None and bucket.exam is None and bucket.decision is not None:
                result.warnings.append(
                    f"{patient_id} cycle {cycle_number}: decision on {day} without observations"
                )
            visits.append(
                IngestedVisit(
                    visit=VisitRecord(visit_at=bucket.at, hormones=bucket.panel, exam=bucket.exam),
                    decision_kind=bucket.decision,
                )
            )
        if patient_id not in ages:
            result.warnings.append(f"{patient_id}: no patient row, age unknown")
        cycles.append(
            IngestedCycle(
                patient_id=patient_id,
                cycle_number=cycle_number,
                age_years=ages.get(patient_id),
                contraindicated=contraindicated.get(patient_id, False),
                visits=tuple(visits),
                retrieved_oocytes=oocytes.get(key),
            )
        )
    return cycles
