"""SQLite persistence for patients, observations, treatments, retrievals.

The schema mirrors how clinics export records: separate tables for blood
tests, ultrasound exams, treatments, and egg retrievals, joined by
patient and cycle.  Visits are not a table; they are reconstructed by
day, the same convention batch ingestion uses, so data that arrived
through either path reads back identically.

All writes happen inside transactions and the store is safe to share
across threads.
"""

from __future__ import annotations

import json
import logging
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any

from ..core.types import (
    Decision,
    DetectionFlag,
    FollicleHistogram,
    HormonePanel,
    PatientProfile,
    Prescription,
    VisitRecord,
    canonical_json,
    parse_iso_datetime,
)
from ..rules.advice import Advice, Alert, RuleCitation

logger = logging.getLogger(__name__)


class StoreError(Exception):
    code = "store_error"


class MissingPatientError(StoreError):
    code = "missing_patient"


class DuplicateRowError(StoreError):
    code = "duplicate_row"


_SCHEMA = """
CREATE TABLE IF NOT EXISTS patient (
    patient_id TEXT PRIMARY KEY,
    age_years INTEGER NOT NULL,
    medication_contraindicated INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS blood_test (
    id INTEGER PRIMARY KEY,
    patient_id TEXT NOT NULL REFERENCES patient(patient_id),
    cycle_number INTEGER NOT NULL,
    drawn_at TEXT NOT NULL,
    fsh REAL, lh REAL, e2 REAL, p4 REAL,
    flags TEXT NOT NULL DEFAULT '{}',
    UNIQUE(patient_id, cycle_number, drawn_at)
);
CREATE TABLE IF NOT EXISTS ultrasound_test (
    id INTEGER PRIMARY KEY,
    patient_id TEXT NOT NULL REFERENCES patient(patient_id),
    cycle_number INTEGER NOT NULL,
    measured_at TEXT NOT NULL,
    bins TEXT NOT NULL,
    UNIQUE(patient_id, cycle_number, measured_at)
);
CREATE TABLE IF NOT EXISTS treatment (
    id INTEGER PRIMARY KEY,
    patient_id TEXT NOT NULL REFERENCES patient(patient_id),
    cycle_number INTEGER NOT NULL,
    decided_at TEXT NOT NULL,
    decision TEXT NOT NULL,
    prescription TEXT,
    explanation TEXT NOT NULL DEFAULT '[]',
    alerts TEXT NOT NULL DEFAULT '[]',
    config_hash TEXT NOT NULL DEFAULT '',
    source TEXT NOT NULL DEFAULT 'engine',
    UNIQUE(patient_id, cycle_number, decided_at)
);
CREATE TABLE IF NOT EXISTS egg_retrieval (
    id INTEGER PRIMARY KEY,
    patient_id TEXT NOT NULL REFERENCES patient(patient_id),
    cycle_number INTEGER NOT NULL,
    retrieved_at TEXT NOT NULL,
    oocytes INTEGER NOT NULL,
    UNIQUE(patient_id, cycle_number, retrieved_at)
);
"""


@dataclass(frozen=True)
class StoredTreatment:
    decided_at: datetime
    decision: Decision
    prescription: Prescription | None
    explanation: tuple[RuleCitation, ...]
    alerts: tuple[Alert, ...]
    config_hash: str
    source: str

    @classmethod
    def from_advice(cls, decided_at: datetime, advice: Advice, source: str = "engine") -> "StoredTreatment":
        return cls(
            decided_at=decided_at,
            decision=advice.decision,
            prescription=advice.prescription,
            explanation=advice.explanation,
            alerts=advice.alerts,
            config_hash=advice.config_hash,
            source=source,
        )


@dataclass(frozen=True)
class StoredVisit:
    visit: VisitRecord
    treatment: StoredTreatment | None


@dataclass(frozen=True)
class StoredCycle:
    patient: PatientProfile
    cycle_number: int
    visits: tuple[StoredVisit, ...]
    retrieved_oocytes: int | None
    retrieved_at: datetime | None


class CycleStore:
    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        self._lock = threading.RLock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "CycleStore":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    # -- patients ----------------------------------------------------

    def put_patient(self, profile: PatientProfile) -> None:
        with self._lock:
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO patient (patient_id, age_years, medication_contraindicated) "
                        "VALUES (?, ?, ?)",
                        (profile.patient_id, profile.age_years, int(profile.medication_contraindicated)),
                    )
            except sqlite3.IntegrityError as exc:
                raise DuplicateRowError(f"patient {profile.patient_id} already exists") from exc

    def get_patient(self, patient_id: str) -> PatientProfile:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM patient WHERE patient_id = ?", (patient_id,)
            ).fetchone()
        if row is None:
            raise MissingPatientError(f"unknown patient {patient_id}")
        return PatientProfile(
            patient_id=row["patient_id"],
            age_years=row["age_years"],
            medication_contraindicated=bool(row["medication_contraindicated"]),
        )

    def list_patients(self) -> list[PatientProfile]:
        with self._lock:
            rows = self._conn.execute("SELECT patient_id FROM patient ORDER BY patient_id").fetchall()
        return [self.get_patient(row["patient_id"]) for row in rows]

    # -- observations ------------------------------------------------

    def _write_visit_rows(self, patient_id: str, cycle_number: int, visit: VisitRecord) -> None:
        # Caller holds the lock and an open transaction.
        if visit.hormones is not None:
            panel = visit.hormones
            drawn_at = panel.drawn_at or visit.visit_at
            self._conn.execute(
                "INSERT INTO blood_test (patient_id, cycle_number, drawn_at, "
                "fsh, lh, e2, p4, flags) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    patient_id,
                    cycle_number,
                    drawn_at.isoformat(),
                    panel.fsh,
                    panel.lh,
                    panel.e2,
                    panel.p4,
                    canonical_json({k: v.value for k, v in panel.flags.items()}),
                ),
            )
        if visit.exam is not None:
            measured_at = visit.exam.measured_at or visit.visit_at
            self._conn.execute(
                "INSERT INTO ultrasound_test (patient_id, cycle_number, measured_at, bins) "
                "VALUES (?, ?, ?, ?)",
                (
                    patient_id,
                    cycle_number,
                    measured_at.isoformat(),
                    canonical_json({str(k): v for k, v in visit.exam.bins.items()}),
                ),
            )

    def put_visit(self, patient_id: str, cycle_number: int, visit: VisitRecord) -> None:
        """Write a visit's observations atomically."""
        self.get_patient(patient_id)
        if visit.hormones is None and visit.exam is None:
            return
        with self._lock:
            try:
                with self._conn:
                    self._write_visit_rows(patient_id, cycle_number, visit)
            except sqlite3.IntegrityError as exc:
                raise DuplicateRowError(
                    f"observation already recorded for {patient_id} cycle {cycle_number} "
                    f"at {visit.visit_at.isoformat()}"
                ) from exc

    def _write_treatment_rows(
        self,
        patient_id: str,
        cycle_number: int,
        treatment: StoredTreatment,
        retrieved_oocytes: int | None,
    ) -> None:
        # Caller holds the lock and an open transaction.
        self._conn.execute(
            "INSERT INTO treatment (patient_id, cycle_number, decided_at, decision, "
            "prescription, explanation, alerts, config_hash, source) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                patient_id,
                cycle_number,
                treatment.decided_at.isoformat(),
                canonical_json(treatment.decision.to_dict()),
                canonical_json(treatment.prescription.to_dict())
                if treatment.prescription is not None
                else None,
                canonical_json([c.to_dict() for c in treatment.explanation]),
                canonical_json([a.to_dict() for a in treatment.alerts]),
                treatment.config_hash,
                treatment.source,
            ),
        )
        if retrieved_oocytes is not None:
            self._conn.execute(
                "INSERT INTO egg_retrieval (patient_id, cycle_number, retrieved_at, oocytes) "
                "VALUES (?, ?, ?, ?)",
                (
                    patient_id,
                    cycle_number,
                    treatment.decided_at.isoformat(),
                    retrieved_oocytes,
                ),
            )

    def put_treatment(
        self,
        patient_id: str,
        cycle_number: int,
        treatment: StoredTreatment,
        retrieved_oocytes: int | None = None,
    ) -> None:
        self.get_patient(patient_id)
        with self._lock:
            try:
                with self._conn:
                    self._write_treatment_rows(
                        patient_id, cycle_number, treatment, retrieved_oocytes
                    )
            except sqlite3.IntegrityError as exc:
                raise DuplicateRowError(
                    f"treatment already recorded for {patient_id} cycle {cycle_number} "
                    f"at {treatment.decided_at.isoformat()}"
                ) from exc

    def put_advised_visit(
        self,
        patient_id: str,
        cycle_number: int,
        visit: VisitRecord,
        treatment: StoredTreatment,
        retrieved_oocytes: int | None = None,
    ) -> None:
        """Write a visit's observations and its treatment in one transaction."""
        self.get_patient(patient_id)
        with self._lock:
            try:
                with self._conn:
                    self._write_visit_rows(patient_id, cycle_number, visit)
                    self._write_treatment_rows(
                        patient_id, cycle_number, treatment, retrieved_oocytes
                    )
            except sqlite3.IntegrityError as exc:
                raise DuplicateRowError(
                    f"visit already recorded for {patient_id} cycle {cycle_number} "
                    f"at {visit.visit_at.isoformat()}"
                ) from exc

    def put_retrieval(
        self, patient_id: str, cycle_number: int, retrieved_at: datetime, oocytes: int
    ) -> None:
        self.get_patient(patient_id)
        with self._lock:
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO egg_retrieval (patient_id, cycle_number, retrieved_at, oocytes) "
                        "VALUES (?, ?, ?, ?)",
                        (patient_id, cycle_number, retrieved_at.isoformat(), oocytes),
                    )
            except sqlite3.IntegrityError as exc:
                raise DuplicateRowError(
                    f"retrieval already recorded for {patient_id} cycle {cycle_number}"
                ) from exc

    # -- reads -------------------------------------------------------

    def list_cycles(self, patient_id: str) -> list[int]:
        self.get_patient(patient_id)
        with self._lock:
            rows = self._conn.execute(
                "SELECT cycle_number FROM blood_test WHERE patient_id = ? "
                "UNION SELECT cycle_number FROM ultrasound_test WHERE patient_id = ? "
                "UNION SELECT cycle_number FROM treatment WHERE patient_id = ? "
                "UNION SELECT cycle_number FROM egg_retrieval WHERE patient_id = ? "
                "ORDER BY cycle_number",
                (patient_id, patient_id, patient_id, patient_id),
            ).fetchall()
        return [row["cycle_number"] for row in rows]

    def load_cycle(self, patient_id: str, cycle_number: int) -> StoredCycle | None:
        """Reconstruct the cycle's visits, ascending by time.

        Observations and the treatment decided on the same calendar day
        form one visit, timestamped at the earliest of its rows.
        """
        patient = self.get_patient(patient_id)
        with self._lock:
            blood = self._conn.execute(
                "SELECT * FROM blood_test WHERE patient_id = ? AND cycle_number = ?",
                (patient_id, cycle_number),
            ).fetchall()
            scans = self._conn.execute(
                "SELECT * FROM ultrasound_test WHERE patient_id = ? AND cycle_number = ?",
                (patient_id, cycle_number),
            ).fetchall()
            treatments = self._conn.execute(
                "SELECT * FROM treatment WHERE patient_id = ? AND cycle_number = ?",
                (patient_id, cycle_number),
            ).fetchall()
            retrievals = self._conn.execute(
                "SELECT * FROM egg_retrieval WHERE patient_id = ? AND cycle_number = ? "
                "ORDER BY retrieved_at",
                (patient_id, cycle_number),
            ).fetchall()
        if not blood and not scans and not treatments and not retrievals:
            return None

        days: dict[str, dict[str, Any]] = {}

        def bucket(at: datetime) -> dict[str, Any]:
            key = at.date().isoformat()
            entry = days.get(key)
            if entry is None:
                entry = {"at": at, "panel": None, "exam": None, "treatment": None}
                days[key] = entry
            elif at < entry["at"]:
                entry["at"] = at
            return entry

        for row in blood:
            at = parse_iso_datetime(row["drawn_at"])
            entry = bucket(at)
            entry["panel"] = HormonePanel(
                fsh=row["fsh"],
                lh=row["lh"],
                e2=row["e2"],
                p4=row["p4"],
                flags={k: DetectionFlag(v) for k, v in json.loads(row["flags"]).items()},
                drawn_at=at,
            )
        for row in scans:
            at = parse_iso_datetime(row["measured_at"])
            entry = bucket(at)
            entry["exam"] = FollicleHistogram(
                bins={int(k): int(v) for k, v in json.loads(row["bins"]).items()},
                measured_at=at,
            )
        for row in treatments:
            at = parse_iso_datetime(row["decided_at"])
            entry = bucket(at)
            entry["treatment"] = StoredTreatment(
                decided_at=at,
                decision=Decision.from_dict(json.loads(row["decision"])),
                prescription=Prescription.from_dict(json.loads(row["prescription"]))
                if row["prescription"]
                else None,
                explanation=tuple(
                    RuleCitation.from_dict(c) for c in json.loads(row["explanation"])
                ),
                alerts=tuple(Alert.from_dict(a) for a in json.loads(row["alerts"])),
                config_hash=row["config_hash"],
                source=row["source"],
            )

        visits = []
        for key in sorted(days):
            entry = days[key]
            visits.append(
                StoredVisit(
                    visit=VisitRecord(
                        visit_at=entry["at"], hormones=entry["panel"], exam=entry["exam"]
                    ),
                    treatment=entry["treatment"],
                )
            )
        last_retrieval = retrievals[-1] if retrievals else None
        return StoredCycle(
            patient=patient,
            cycle_number=cycle_number,
            visits=tuple(visits),
            retrieved_oocytes=last_retrieval["oocytes"] if last_retrieval else None,
            retrieved_at=parse_iso_datetime(last_retrieval["retrieved_at"])
            if last_retrieval
            else None,
        )

    # -- export ------------------------------------------------------

    def export(self) -> dict:
        """Canonical snapshot of every table, for diffing and backup."""
        with self._lock:
            patients = self._conn.execute(
                "SELECT patient_id, age_years, medication_contraindicated FROM patient "
                "ORDER BY patient_id"
            ).fetchall()
            blood = self._conn.execute(
                "SELECT patient_id, cycle_number, drawn_at, fsh, lh, e2, p4, flags "
                "FROM blood_test ORDER BY patient_id, cycle_number, drawn_at"
            ).fetchall()
            scans = self._conn.execute(
                "SELECT patient_id, cycle_number, measured_at, bins "
                "FROM ultrasound_test ORDER BY patient_id, cycle_number, measured_at"
            ).fetchall()
            treatments = self._conn.execute(
                "SELECT patient_id, cycle_number, decided_at, decision, prescription, "
                "explanation, alerts, config_hash, source "
                "FROM treatment ORDER BY patient_id, cycle_number, decided_at"
            ).fetchall()
            retrievals = self._conn.execute(
                "SELECT patient_id, cycle_number, retrieved_at, oocytes "
                "FROM egg_retrieval ORDER BY patient_id, cycle_number, retrieved_at"
            ).fetchall()
        return {
            "patients": [dict(r) for r in patients],
            "blood_tests": [dict(r) for r in blood],
            "ultrasound_tests": [dict(r) for r in scans],
            "treatments": [dict(r) for r in treatments],
            "egg_retrievals": [dict(r) for r in retrievals],
        }

    def export_json(self) -> str:
        return canonical_json(self.export())
