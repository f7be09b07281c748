"""Preparation block: baseline suppression check and scheme selection.

A cycle starts on oral contraceptives.  Each visit the panel and antral
exam are checked against the band for the patient's age; only a fully
suppressed, quiet baseline releases the patient into stimulation.
"""

from __future__ import annotations

from ..core.follicles import max_size
from ..core.types import (
    CLOMID_DOSE_MG,
    Decision,
    DecisionKind,
    LETROZOLE_DOSE_MG,
    CycleState,
    Prescription,
    Scheme,
    VisitRecord,
)
from .advice import Advice, RuleCitation, fmt_num
from .config import RulesConfig, next_stim_interval


def is_young_band(age_years: int, config: RulesConfig) -> bool:
    return age_years < config.b1_age_split


def hormone_limits(age_years: int, config: RulesConfig) -> dict[str, float]:
    """Strict upper bounds on the baseline panel for this age band."""
    if is_young_band(age_years, config):
        return {
            "fsh": config.b1_fsh_max,
            "lh": config.b1_lh_max_young,
            "e2": config.b1_e2_max_young,
            "p4": config.b1_p4_max,
        }
    return {
        "fsh": config.b1_fsh_max,
        "lh": config.b1_lh_max_advanced,
        "e2": config.b1_e2_max_advanced,
        "p4": config.b1_p4_max,
    }


def required_antral_count(age_years: int, config: RulesConfig) -> int:
    """Minimum antral count for the young band."""
    return config.b1_reserve_base - age_years


def evaluate_suppression(
    state: CycleState, visit: VisitRecord, config: RulesConfig
) -> tuple[bool, list[RuleCitation], bool]:
    """Check the baseline panel and exam.

    Returns (all checks passed, citations, any hormone near its limit).
    A missing value fails its check: suppression cannot be confirmed
    from absent data.
    """
    age = state.profile.age_years
    limits = hormone_limits(age, config)
    citations: list[RuleCitation] = []
    near = False

    for analyte, limit in limits.items():
        value = visit.hormones.value(analyte) if visit.hormones else None
        rule_id = f"B1-{analyte.upper()}"
        if value is None:
            citations.append(
                RuleCitation(rule_id, "missing", f"<{fmt_num(limit)}", False, "value not reported")
            )
            continue
        citations.append(RuleCitation(rule_id, fmt_num(value), f"<{fmt_num(limit)}", value < limit))
        if abs(value - limit) <= config.b1_near_threshold_fraction * limit:
            near = True

    if visit.exam is None:
        citations.append(RuleCitation("B1-COUNT", "missing", "antral count", False, "no ultrasound"))
        citations.append(
            RuleCitation("B1-SIZE", "missing", f"<={config.b1_size_max_mm}", False, "no ultrasound")
        )
    else:
        total = visit.exam.total()
        if is_young_band(age, config):
            need = required_antral_count(age, config)
            citations.append(RuleCitation("B1-COUNT", str(total), f">={need}", total >= need))
        else:
            lo, hi = config.b1_count_min_advanced, config.b1_count_max_advanced
            citations.append(RuleCitation("B1-COUNT", str(total), f"{lo}~{hi}", lo <= total <= hi))
        biggest = max_size(visit.exam)
        citations.append(
            RuleCitation(
                "B1-SIZE",
                "none" if biggest is None else str(biggest),
                f"<={config.b1_size_max_mm}",
                biggest is None or biggest <= config.b1_size_max_mm,
            )
        )

    return all(c.passed for c in citations), citations, near


def select_scheme(state: CycleState, antral_count: int, config: RulesConfig) -> tuple[Scheme, RuleCitation]:
    """Pick the stimulation scheme once the baseline is accepted."""
    age = state.profile.age_years
    if state.profile.medication_contraindicated:
        return Scheme.NATURAL, RuleCitation(
            "B1-SCHEME",
            "stimulation medication contraindicated",
            "natural scheme",
            True,
        )
    need = required_antral_count(age, config)
    if is_young_band(age, config) and antral_count >= need:
        return Scheme.MINI, RuleCitation(
            "B1-SCHEME",
            f"age {age}, antral count {antral_count}",
            f"age<{config.b1_age_split} and count>={need}",
            True,
            "mini scheme",
        )
    return Scheme.ULTRA_MINI, RuleCitation(
        "B1-SCHEME",
        f"age {age}, antral count {antral_count}",
        "reduced reserve",
        True,
        "ultra-mini scheme",
    )


def initial_prescription(scheme: Scheme, config: RulesConfig) -> Prescription:
    if scheme is Scheme.NATURAL:
        return Prescription()
    if scheme is Scheme.MINI:
        iu = config.mini_gonadotropin_iu
    else:
        iu = config.ultra_mini_gonadotropin_iu
    return Prescription(
        gonadotropin_iu=iu,
        agent=config.default_agent,
        clomid_mg=CLOMID_DOSE_MG,
        letrozole_mg=LETROZOLE_DOSE_MG,
    )


def advise_preparation(state: CycleState, visit: VisitRecord, config: RulesConfig) -> Advice:
    passed, citations, near = evaluate_suppression(state, visit, config)

    if passed:
        antral_count = visit.exam.total() if visit.exam is not None else 0
        scheme, scheme_citation = select_scheme(state, antral_count, config)
        citations.append(scheme_citation)
        return Advice(
            decision=Decision(DecisionKind.START_STIMULATION, scheme=scheme),
            explanation=tuple(citations),
            prescription=initial_prescription(scheme, config),
            next_visit_in_days=next_stim_interval(config, 0),
        )

    if state.ocp_streak + 1 >= config.b1_max_ocp_visits:
        citations.append(
            RuleCitation(
                "B1-ESC",
                str(state.ocp_streak + 1),
                f">={config.b1_max_ocp_visits} failed baselines",
                False,
                "suppression not reached, physician consult",
            )
        )
        return Advice(
            decision=Decision(DecisionKind.MD_TALK),
            explanation=tuple(citations),
        )

    revisit = config.b1_revisit_days
    if near:
        revisit = config.b1_revisit_min_days
        citations.append(
            RuleCitation(
                "B1-NEAR",
                "hormone near its limit",
                f"within {fmt_num(config.b1_near_threshold_fraction * 100)}%",
                True,
                "recheck sooner",
            )
        )
    revisit = min(max(revisit, config.b1_revisit_min_days), config.b1_revisit_max_days)
    return Advice(
        decision=Decision(DecisionKind.CONTINUE_OCP),
        explanation=tuple(citations),
        next_visit_in_days=revisit,
    )
