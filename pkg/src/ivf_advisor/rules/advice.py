"""Advice envelope: a decision plus the evidence trail behind it.

Every comparison a rule makes becomes a ``RuleCitation``; every safety
concern becomes an ``Alert`` that names the citation backing it.  The
explanation is part of the product, not debug output, so its rendering
is deterministic and covered by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..core.types import AlertKind, Decision, Prescription


def fmt_num(value: float | int | None) -> str:
    """Render a number the same way everywhere: trailing zeros dropped."""
    if value is None:
        return "missing"
    return f"{value:g}"


@dataclass(frozen=True)
class RuleCitation:
    """One rule evaluation: what was observed against what bound."""

    rule_id: str
    observed: str
    threshold: str
    passed: bool
    detail: str | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "rule_id": self.rule_id,
            "observed": self.observed,
            "threshold": self.threshold,
            "passed": self.passed,
        }
        if self.detail is not None:
            out["detail"] = self.detail
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RuleCitation":
        return cls(
            rule_id=data["rule_id"],
            observed=data["observed"],
            threshold=data["threshold"],
            passed=bool(data["passed"]),
            detail=data.get("detail"),
        )


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    reason: str
    # The citation that fired this alert, so the UI can link them.
    rule_id: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "reason": self.reason, "rule_id": self.rule_id}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Alert":
        return cls(kind=AlertKind(data["kind"]), reason=data["reason"], rule_id=data["rule_id"])


@dataclass(frozen=True)
class Advice:
    """The engine's answer for one visit."""

    decision: Decision
    explanation: tuple[RuleCitation, ...] = ()
    prescription: Prescription | None = None
    alerts: tuple[Alert, ...] = ()
    next_visit_in_days: int | None = None
    config_hash: str = ""

    def citation(self, rule_id: str) -> RuleCitation | None:
        for cit in self.explanation:
            if cit.rule_id == rule_id:
                return cit
        return None

    def has_alert(self, kind: AlertKind) -> bool:
        return any(alert.kind is kind for alert in self.alerts)

    def to_dict(self) -> dict:
        out: dict = {
            "decision": self.decision.to_dict(),
            "explanation": [cit.to_dict() for cit in self.explanation],
            "alerts": [alert.to_dict() for alert in self.alerts],
            "config_hash": self.config_hash,
        }
        if self.prescription is not None:
            out["prescription"] = self.prescription.to_dict()
        if self.next_visit_in_days is not None:
            out["next_visit_in_days"] = self.next_visit_in_days
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Advice":
        return cls(
            decision=Decision.from_dict(data["decision"]),
            explanation=tuple(RuleCitation.from_dict(c) for c in data.get("explanation", [])),
            prescription=Prescription.from_dict(data["prescription"])
            if data.get("prescription")
            else None,
            alerts=tuple(Alert.from_dict(a) for a in data.get("alerts", [])),
            next_visit_in_days=data.get("next_visit_in_days"),
            config_hash=data.get("config_hash", ""),
        )
