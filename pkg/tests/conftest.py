"""Shared builders for the test suite.

Tests construct states and visits by hand; these helpers keep the noise
down without hiding anything that matters to an assertion.
"""

from __future__ import annotations

from datetime import datetime

import pytest

from ivf_advisor.core import (
    CycleState,
    FollicleHistogram,
    HormonePanel,
    PatientProfile,
    VisitRecord,
)
from ivf_advisor.rules import AdvisoryEngine


def at(day: int, hour: int = 9, minute: int = 0, month: int = 3) -> datetime:
    """A timestamp inside one fixed test month."""
    return datetime(2024, month, day, hour, minute)


def panel(
    fsh: float | None = None,
    lh: float | None = None,
    e2: float | None = None,
    p4: float | None = None,
    drawn_at: datetime | None = None,
) -> HormonePanel:
    return HormonePanel(fsh=fsh, lh=lh, e2=e2, p4=p4, drawn_at=drawn_at)


def exam(bins: dict[int, int], measured_at: datetime | None = None) -> FollicleHistogram:
    return FollicleHistogram(bins=bins, measured_at=measured_at)


def profile(age: int = 33, contraindicated: bool = False, patient_id: str = "p001") -> PatientProfile:
    return PatientProfile(
        patient_id=patient_id,
        age_years=age,
        medication_contraindicated=contraindicated,
    )


def visit(
    day: int,
    hour: int = 9,
    hormones: HormonePanel | None = None,
    bins: dict[int, int] | None = None,
    month: int = 3,
) -> VisitRecord:
    return VisitRecord(
        visit_at=at(day, hour, month=month),
        hormones=hormones,
        exam=exam(bins) if bins is not None else None,
    )


def fresh_state(age: int = 33, contraindicated: bool = False, **overrides) -> CycleState:
    from dataclasses import replace

    state = CycleState(profile=profile(age=age, contraindicated=contraindicated), cycle_number=1)
    return replace(state, **overrides) if overrides else state


@pytest.fixture
def engine() -> AdvisoryEngine:
    return AdvisoryEngine()
