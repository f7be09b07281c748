"""Stimulation block: monitor the cohort, steer the dose, call maturity.

Evaluation order is fixed and matters clinically:

1. maturity: a mature cohort triggers now, whatever else is going on
2. progesterone past its ceiling: premature luteinization, MD decides
3. two consecutive poor-growth visits: scheme escalation or MD
4. hormone window violations: dose correction, or MD on natural
5. one poor-growth visit: dose bump, shrinkage also alerts
6. growing but estradiol overshooting: coast the dose down
7. otherwise continue as prescribed

The same logic serves the luteal stimulation round; only the calling
block differs.
"""

from __future__ import annotations

import math

from ..core.follicles import GrowthRate, classify_growth, fraction_at_least
from ..core.types import (
    GONADOTROPIN_MAX_IU,
    GONADOTROPIN_MIN_IU,
    GONADOTROPIN_STEP_IU,
    AlertKind,
    CycleState,
    Decision,
    DecisionKind,
    Prescription,
    Scheme,
    VisitRecord,
)
from .advice import Advice, Alert, RuleCitation, fmt_num
from .block1 import initial_prescription
from .block3 import plan_trigger
from .config import RulesConfig, next_stim_interval

# (min, max) per analyte; None means the window has no bound on that side.
# Progesterone is handled separately because breaching it escalates.
_MED_WINDOW = {
    "fsh": ("b2_med_fsh_min", "b2_med_fsh_max"),
    "lh": (None, "b2_med_lh_max"),
    "e2": ("b2_med_e2_min", None),
}
_NAT_WINDOW = {
    "fsh": ("b2_nat_fsh_min", "b2_nat_fsh_max"),
    "lh": ("b2_nat_lh_min", "b2_nat_lh_max"),
    "e2": ("b2_nat_e2_min", None),
}


def p4_ceiling(scheme: Scheme, config: RulesConfig) -> float:
    return config.b2_nat_p4_max if scheme is Scheme.NATURAL else config.b2_med_p4_max


def check_maturity(visit: VisitRecord, config: RulesConfig) -> tuple[bool, list[RuleCitation]]:
    """A cohort is mature when either size fraction is reached.

    Range bounds are inclusive at the exact fraction.  No exam, or an exam
    showing nothing, reads as not mature.
    """
    if visit.exam is None or visit.exam.is_empty():
        return False, []
    frac_lo = fraction_at_least(visit.exam, config.maturity_size_lo_mm)
    frac_hi = fraction_at_least(visit.exam, config.maturity_size_hi_mm)
    lo_ok = frac_lo >= config.maturity_frac_lo
    hi_ok = frac_hi >= config.maturity_frac_hi
    citations = [
        RuleCitation(
            "B2-MATURITY-15",
            fmt_num(frac_lo),
            f">={fmt_num(config.maturity_frac_lo)} at {config.maturity_size_lo_mm}mm",
            lo_ok,
        ),
        RuleCitation(
            "B2-MATURITY-18",
            fmt_num(frac_hi),
            f">={fmt_num(config.maturity_frac_hi)} at {config.maturity_size_hi_mm}mm",
            hi_ok,
        ),
    ]
    return lo_ok or hi_ok, citations


def check_window(
    scheme: Scheme, visit: VisitRecord, config: RulesConfig
) -> tuple[list[str], list[str], list[RuleCitation]]:
    """Check FSH, LH and E2 against the scheme's window.

    Returns (under-response analytes, over-response analytes, citations).
    A missing value is cited but never treated as a violation.
    """
    spec = _NAT_WINDOW if scheme is Scheme.NATURAL else _MED_WINDOW
    under: list[str] = []
    over: list[str] = []
    citations: list[RuleCitation] = []
    for analyte, (lo_name, hi_name) in spec.items():
        lo = getattr(config, lo_name) if lo_name else None
        hi = getattr(config, hi_name) if hi_name else None
        value = visit.hormones.value(analyte) if visit.hormones else None
        rule_id = f"B2-{analyte.upper()}"
        if lo is not None and hi is not None:
            threshold = f"{fmt_num(lo)}~{fmt_num(hi)}"
        elif hi is not None:
            threshold = f"<{fmt_num(hi)}"
        else:
            threshold = f">{fmt_num(lo)}"
        if value is None:
            citations.append(
                RuleCitation(rule_id, "missing", threshold, True, "value not reported")
            )
            continue
        too_low = (lo is not None and hi is not None and value < lo) or (
            lo is not None and hi is None and value <= lo
        )
        too_high = (hi is not None and lo is not None and value > hi) or (
            hi is not None and lo is None and value >= hi
        )
        if too_low:
            under.append(analyte)
        if too_high:
            over.append(analyte)
        citations.append(RuleCitation(rule_id, fmt_num(value), threshold, not (too_low or too_high)))
    return under, over, citations


def current_prescription(state: CycleState, config: RulesConfig) -> Prescription:
    if state.prescription is not None:
        return state.prescription
    assert state.scheme is not None
    return initial_prescription(state.scheme, config)


def adjusted_prescription(
    state: CycleState, delta_iu: int, config: RulesConfig
) -> tuple[Prescription, str | None]:
    """Step the gonadotropin dose, clamped to the allowed range."""
    rx = current_prescription(state, config)
    target = rx.gonadotropin_iu + delta_iu
    clamped = min(max(target, GONADOTROPIN_MIN_IU), GONADOTROPIN_MAX_IU)
    note = None
    if clamped != target:
        note = "dose already at maximum" if target > GONADOTROPIN_MAX_IU else "dose already at minimum"
    return (
        Prescription(
            gonadotropin_iu=clamped,
            agent=rx.agent or config.default_agent,
            clomid_mg=rx.clomid_mg,
            letrozole_mg=rx.letrozole_mg,
        ),
        note,
    )


def advise_stimulation(state: CycleState, visit: VisitRecord, config: RulesConfig) -> Advice:
    assert state.scheme is not None, "stimulation advice requires a selected scheme"
    scheme = state.scheme
    citations: list[RuleCitation] = []
    next_gap = next_stim_interval(config, state.stim_visit_index + 1)

    mature, maturity_citations = check_maturity(visit, config)
    citations.extend(maturity_citations)
    if mature:
        plan, trigger_citations, alerts = plan_trigger(state, visit, config)
        citations.extend(trigger_citations)
        return Advice(
            decision=Decision(DecisionKind.TRIGGER, trigger_plan=plan),
            explanation=tuple(citations),
            prescription=Prescription(trigger_meds=plan.medications),
            alerts=tuple(alerts),
            next_visit_in_days=math.ceil(plan.duration_hours / 24),
        )

    p4 = visit.hormones.p4 if visit.hormones else None
    ceiling = p4_ceiling(scheme, config)
    if p4 is not None:
        breached = p4 >= ceiling
        citations.append(
            RuleCitation(
                "B2-P4",
                fmt_num(p4),
                f"<{fmt_num(ceiling)}",
                not breached,
                "premature luteinization risk" if breached else None,
            )
        )
        if breached:
            return Advice(
                decision=Decision(DecisionKind.MD_TALK),
                explanation=tuple(citations),
            )
    else:
        citations.append(
            RuleCitation("B2-P4", "missing", f"<{fmt_num(ceiling)}", True, "value not reported")
        )

    growth = classify_growth(
        state.last_exam,
        state.last_exam_at,
        visit.exam,
        visit.visit_at,
        config.growth_lead_count,
        config.growth_mm_per_day,
    ) if visit.exam is not None else GrowthRate.UNKNOWN
    poor = growth in (GrowthRate.SLOW, GrowthRate.SHRINKING)
    streak = state.slow_growth_streak + 1 if poor else 0
    citations.append(
        RuleCitation(
            "B2-GROWTH",
            growth.value,
            f">={fmt_num(config.growth_mm_per_day)}mm/day",
            growth is GrowthRate.GROWING,
            f"poor growth streak {streak}" if poor else None,
        )
    )

    if poor and streak >= config.slow_streak_limit:
        if scheme is Scheme.MINI:
            citations.append(
                RuleCitation(
                    "B2-ESC-SCHEME",
                    str(streak),
                    f">={config.slow_streak_limit} poor visits",
                    False,
                    "switch to ultra-mini scheme",
                )
            )
            return Advice(
                decision=Decision(DecisionKind.CHANGE_SCHEME, scheme=Scheme.ULTRA_MINI),
                explanation=tuple(citations),
                prescription=initial_prescription(Scheme.ULTRA_MINI, config),
                next_visit_in_days=next_gap,
            )
        citations.append(
            RuleCitation(
                "B2-ESC-MD",
                str(streak),
                f">={config.slow_streak_limit} poor visits",
                False,
                "no further scheme to try",
            )
        )
        return Advice(
            decision=Decision(DecisionKind.MD_TALK),
            explanation=tuple(citations),
        )

    under, over, window_citations = check_window(scheme, visit, config)
    citations.extend(window_citations)
    if under or over:
        if scheme is Scheme.NATURAL:
            citations.append(
                RuleCitation(
                    "B2-NAT-LIMIT",
                    ", ".join(under + over),
                    "no medication to adjust",
                    False,
                    "physician consult",
                )
            )
            return Advice(
                decision=Decision(DecisionKind.MD_TALK),
                explanation=tuple(citations),
            )
        delta = GONADOTROPIN_STEP_IU if under else -GONADOTROPIN_STEP_IU
        rx, note = adjusted_prescription(state, delta, config)
        rule_id = "B2-ADJ-UP" if under else "B2-ADJ-DOWN"
        citations.append(
            RuleCitation(
                rule_id,
                ", ".join(under if under else over),
                "hormone window",
                False,
                note or f"gonadotropin {'+' if delta > 0 else ''}{delta} IU",
            )
        )
        return Advice(
            decision=Decision(DecisionKind.ADJUST_MEDICATION),
            explanation=tuple(citations),
            prescription=rx,
            next_visit_in_days=next_gap,
        )

    if poor:
        if scheme is Scheme.NATURAL:
            citations.append(
                RuleCitation(
                    "B2-NAT-LIMIT",
                    growth.value,
                    "no medication to adjust",
                    True,
                    "watch and revisit",
                )
            )
            alerts = (
                (
                    Alert(
                        AlertKind.POOR_RESPONSE,
                        "cohort shrinking on the natural scheme",
                        "B2-GROWTH",
                    ),
                )
                if growth is GrowthRate.SHRINKING
                else ()
            )
            return Advice(
                decision=Decision(DecisionKind.CONTINUE_STIMULATION),
                explanation=tuple(citations),
                prescription=current_prescription(state, config),
                alerts=alerts,
                next_visit_in_days=next_gap,
            )
        rx, note = adjusted_prescription(state, GONADOTROPIN_STEP_IU, config)
        citations.append(
            RuleCitation(
                "B2-ADJ-UP",
                growth.value,
                "cohort growth",
                False,
                note or f"gonadotropin +{GONADOTROPIN_STEP_IU} IU",
            )
        )
        alerts = ()
        if growth is GrowthRate.SHRINKING:
            alerts = (
                Alert(
                    AlertKind.POOR_RESPONSE,
                    "cohort shrinking under stimulation",
                    "B2-GROWTH",
                ),
            )
        return Advice(
            decision=Decision(DecisionKind.ADJUST_MEDICATION),
            explanation=tuple(citations),
            prescription=rx,
            alerts=alerts,
            next_visit_in_days=next_gap,
        )

    e2 = visit.hormones.e2 if visit.hormones else None
    if (
        growth is GrowthRate.GROWING
        and scheme is not Scheme.NATURAL
        and e2 is not None
        and e2 > config.e2_overshoot
    ):
        rx, note = adjusted_prescription(state, -GONADOTROPIN_STEP_IU, config)
        citations.append(
            RuleCitation(
                "B2-ADJ-COAST",
                fmt_num(e2),
                f"<={fmt_num(config.e2_overshoot)}",
                False,
                note or f"gonadotropin -{GONADOTROPIN_STEP_IU} IU",
            )
        )
        return Advice(
            decision=Decision(DecisionKind.ADJUST_MEDICATION),
            explanation=tuple(citations),
            prescription=rx,
            next_visit_in_days=next_gap,
        )

    return Advice(
        decision=Decision(DecisionKind.CONTINUE_STIMULATION),
        explanation=tuple(citations),
        prescription=current_prescription(state, config),
        next_visit_in_days=next_gap,
    )
