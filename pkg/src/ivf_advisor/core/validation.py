"""Structural checks on visits and the error types the engine raises.

``validate_visit`` produces human-readable violation strings.  These are
warnings rather than hard failures: the rules degrade gracefully when an
observation is incomplete, so callers decide how strict to be.
"""

from __future__ import annotations

from datetime import datetime

from .types import VisitRecord


class AdvisorError(Exception):
    """Base class for engine-level failures."""

    code = "advisor_error"


class StaleVisitError(AdvisorError):
    """Visit is not strictly newer than the last one seen for the cycle."""

    code = "stale_visit"


class TerminalCycleError(AdvisorError):
    """Cycle already finished or was cancelled; no further advice exists."""

    code = "terminal_cycle"


class InvalidStateError(AdvisorError):
    """Cycle state violates an invariant, e.g. trigger block with no plan."""

    code = "invalid_state"


class IllegalTransitionError(AdvisorError):
    """A decision would move the cycle along a forbidden block edge."""

    code = "illegal_transition"


def validate_visit(visit: VisitRecord, prev_visit_at: datetime | None = None) -> list[str]:
    """Return violation strings for an incoming visit, empty when clean."""
    violations: list[str] = []
    if prev_visit_at is not None and visit.visit_at <= prev_visit_at:
        violations.append(
            f"stale-visit({visit.visit_at.isoformat()}<={prev_visit_at.isoformat()})"
        )
    if visit.hormones is None:
        violations.append("missing-hormones")
    else:
        for name in visit.hormones.missing():
            violations.append(f"missing-analyte({name})")
        if (
            visit.hormones.drawn_at is not None
            and visit.hormones.drawn_at.date() != visit.visit_at.date()
        ):
            violations.append("draw-date-mismatch")
    if visit.exam is None:
        violations.append("missing-exam")
    else:
        if visit.exam.is_empty():
            violations.append("empty-exam")
        if (
            visit.exam.measured_at is not None
            and visit.exam.measured_at.date() != visit.visit_at.date()
        ):
            violations.append("exam-date-mismatch")
    return violations
