"""Post-trigger block: retrieval window, safety bound, luteal restart.

Once triggered, the cycle has a hard deadline: follicles rupture on
their own around 48 hours after the shot.  Reaching that bound without
a retrieval is an ovulation-risk escalation, not a routine visit.

After a completed retrieval, older patients with enough immature
follicles left can start one luteal phase stimulation round; everyone
else is done.
"""

from __future__ import annotations

import math

from ..core.follicles import count_at_least
from ..core.types import (
    AlertKind,
    CycleState,
    Decision,
    DecisionKind,
    Prescription,
    VisitRecord,
)
from .advice import Advice, Alert, RuleCitation
from .block1 import initial_prescription
from .config import RulesConfig, next_stim_interval


def lps_eligibility(
    state: CycleState, visit: VisitRecord, config: RulesConfig
) -> tuple[bool, list[RuleCitation]]:
    """Luteal restart: old enough, and enough immature follicles remain."""
    age = state.profile.age_years
    age_ok = age >= config.lps_age_min
    citations = [
        RuleCitation("B4-LPS-AGE", str(age), f">={config.lps_age_min}", age_ok),
    ]
    if visit.exam is None:
        citations.append(
            RuleCitation(
                "B4-LPS-REMAINING",
                "missing",
                f">{config.lps_remaining_over} under {config.lps_mature_mm}mm",
                False,
                "no ultrasound",
            )
        )
        return False, citations
    remaining = visit.exam.total() - count_at_least(visit.exam, config.lps_mature_mm)
    remaining_ok = remaining > config.lps_remaining_over
    citations.append(
        RuleCitation(
            "B4-LPS-REMAINING",
            str(remaining),
            f">{config.lps_remaining_over} under {config.lps_mature_mm}mm",
            remaining_ok,
        )
    )
    return age_ok and remaining_ok, citations


def advise_post_trigger(state: CycleState, visit: VisitRecord, config: RulesConfig) -> Advice:
    plan = state.trigger_plan
    assert plan is not None, "post-trigger advice requires a trigger plan"

    if state.retrieval_done:
        if not state.lps_round:
            eligible, citations = lps_eligibility(state, visit, config)
            if eligible:
                assert state.scheme is not None
                return Advice(
                    decision=Decision(DecisionKind.START_LPS),
                    explanation=tuple(citations),
                    prescription=initial_prescription(state.scheme, config),
                    next_visit_in_days=next_stim_interval(config, 0),
                )
        else:
            citations = [
                RuleCitation(
                    "B4-LPS-ROUND",
                    "luteal round already done",
                    "one luteal round per cycle",
                    False,
                )
            ]
        citations.append(
            RuleCitation("B4-COMPLETE", "retrieval done", "cycle finished", True)
        )
        return Advice(
            decision=Decision(DecisionKind.CYCLE_COMPLETE),
            explanation=tuple(citations),
        )

    hours_since = (visit.visit_at - plan.triggered_at).total_seconds() / 3600.0
    if hours_since >= config.ovulation_risk_hours:
        citation = RuleCitation(
            "B4-OVULATION-RISK",
            f"{hours_since:.1f}h",
            f"<{config.ovulation_risk_hours}h",
            False,
            "retrieval window missed, presumed ovulation",
        )
        return Advice(
            decision=Decision(DecisionKind.MD_TALK),
            explanation=(citation,),
            alerts=(
                Alert(
                    AlertKind.OVULATION_RISK,
                    f"{hours_since:.1f}h since trigger without retrieval",
                    "B4-OVULATION-RISK",
                ),
            ),
        )

    if visit.visit_at >= plan.scheduled_retrieval:
        citation = RuleCitation(
            "B4-RETRIEVAL",
            visit.visit_at.isoformat(),
            f"scheduled {plan.scheduled_retrieval.isoformat()}",
            True,
            "retrieve now",
        )
        return Advice(
            decision=Decision(DecisionKind.OOCYTE_RETRIEVAL),
            explanation=(citation,),
            prescription=Prescription(),
            next_visit_in_days=1,
        )

    remaining_days = (plan.scheduled_retrieval - visit.visit_at).total_seconds() / 86400.0
    citation = RuleCitation(
        "B4-FOLLOW",
        visit.visit_at.isoformat(),
        f"retrieval at {plan.scheduled_retrieval.isoformat()}",
        True,
        "keep the retrieval appointment",
    )
    return Advice(
        decision=Decision(DecisionKind.FOLLOW_PLAN),
        explanation=(citation,),
        prescription=Prescription(),
        next_visit_in_days=max(0, math.ceil(remaining_days)),
    )
