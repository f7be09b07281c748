"""Trigger block: when the cohort is mature, plan the trigger shot.

Timing first: an LH surge already under way means no shot at all and an
urgent retrieval; a doubling LH shortens the interval; otherwise the
interval depends on age.  Medication choice then depends on estradiol
and on how many large follicles are present.  Where two regimens are
clinically equivalent the first is recommended and the alternative is
cited, never silently dropped.
"""

from __future__ import annotations

from ..core.follicles import count_at_least
from ..core.types import (
    AlertKind,
    CycleState,
    TriggerAgent,
    TriggerMed,
    TriggerPlan,
    VisitRecord,
)
from .advice import Alert, RuleCitation, fmt_num
from .config import RulesConfig


def render_meds(meds: tuple[TriggerMed, ...]) -> str:
    if not meds:
        return "none"
    return ", ".join(f"{med.agent.value} x{med.dose}" for med in meds)


def choose_trigger_meds(
    state: CycleState, visit: VisitRecord, config: RulesConfig
) -> tuple[tuple[TriggerMed, ...], list[RuleCitation]]:
    """Pick the trigger regimen; alternatives are cited under B3-ALT."""
    e2 = visit.hormones.e2 if visit.hormones else None
    citations: list[RuleCitation] = []

    if e2 is None or e2 < config.trigger_e2_high:
        meds = (TriggerMed(TriggerAgent.LUPRON, 1),)
        citations.append(
            RuleCitation(
                "B3-MED-E2",
                fmt_num(e2),
                f"<{fmt_num(config.trigger_e2_high)}",
                True,
                f"regimen: {render_meds(meds)}",
            )
        )
        return meds, citations

    citations.append(
        RuleCitation("B3-MED-E2", fmt_num(e2), f"<{fmt_num(config.trigger_e2_high)}", False)
    )
    big = count_at_least(visit.exam, config.trigger_big_follicle_mm) if visit.exam else 0
    over = big >= config.trigger_big_count
    if over:
        meds = (TriggerMed(TriggerAgent.LUPRON, 2),)
        alternative = (TriggerMed(TriggerAgent.LUPRON, 1), TriggerMed(TriggerAgent.OVIDREL, 1))
    else:
        meds = (TriggerMed(TriggerAgent.LUPRON, 1),)
        alternative = (TriggerMed(TriggerAgent.OVIDREL, 1),)
    citations.append(
        RuleCitation(
            "B3-MED-BIG",
            str(big),
            f">={config.trigger_big_count} over {config.trigger_big_follicle_mm - 1}mm",
            over,
            f"regimen: {render_meds(meds)}",
        )
    )
    citations.append(
        RuleCitation(
            "B3-ALT",
            render_meds(meds),
            "equivalent regimen",
            True,
            f"alternative: {render_meds(alternative)}",
        )
    )
    return meds, citations


def plan_trigger(
    state: CycleState, visit: VisitRecord, config: RulesConfig
) -> tuple[TriggerPlan, list[RuleCitation], list[Alert]]:
    lh = visit.hormones.lh if visit.hormones else None
    age = state.profile.age_years
    citations: list[RuleCitation] = []
    alerts: list[Alert] = []

    surging = lh is not None and lh > config.trigger_lh_surge
    if lh is not None:
        citations.append(
            RuleCitation(
                "B3-NO-TRIGGER",
                fmt_num(lh),
                f">{fmt_num(config.trigger_lh_surge)}",
                surging,
                "endogenous surge, withhold trigger shot" if surging else None,
            )
        )
    if surging:
        alerts.append(
            Alert(
                AlertKind.NO_TRIGGER,
                "LH surge already under way; no trigger shot, urgent retrieval",
                "B3-NO-TRIGGER",
            )
        )
        plan = TriggerPlan(
            triggered_at=visit.visit_at,
            duration_hours=config.trigger_surge_hours,
            medications=(),
        )
        return plan, citations, alerts

    doubled = (
        lh is not None
        and state.last_lh is not None
        and state.last_lh > 0
        and lh / state.last_lh >= config.trigger_lh_ratio
    )
    if state.last_lh is not None and lh is not None:
        citations.append(
            RuleCitation(
                "B3-SURGE-RATIO",
                f"{fmt_num(lh)}/{fmt_num(state.last_lh)}",
                f">={fmt_num(config.trigger_lh_ratio)}x",
                doubled,
                "surge onset, shortened interval" if doubled else None,
            )
        )

    if doubled:
        duration = config.trigger_ratio_hours
    else:
        young = age < config.trigger_age_split
        duration = config.trigger_hours_young if young else config.trigger_hours_advanced
        citations.append(
            RuleCitation(
                "B3-DURATION-AGE",
                f"age {age}",
                f"<{config.trigger_age_split}",
                young,
                f"retrieval in {duration}h",
            )
        )

    meds, med_citations = choose_trigger_meds(state, visit, config)
    citations.extend(med_citations)
    plan = TriggerPlan(triggered_at=visit.visit_at, duration_hours=duration, medications=meds)
    return plan, citations, alerts
