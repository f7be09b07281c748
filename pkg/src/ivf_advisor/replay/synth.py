"""Synthetic cycle cohorts for exercising the replay evaluator.

Each synthetic cycle is generated by folding the engine itself: visits
are constructed to steer it down a scripted scenario, and the recorded
care-team decision at each visit is the engine's own advice, except for
deliberate deviations.  With no deviations a replay must therefore score
1.0 in every populated cell; with a trigger delay of d days the engine
re-predicts the trigger daily while the recorded care team waits, so
replay must report early-trigger offsets of exactly d and nothing else.

Scenario axes, drawn per cycle from a patient-seeded RNG:

- age band, reserve, and medication contraindication, which pick the
  scheme through the engine's own selection rule
- zero to two failed suppression baselines before the passing one
- which monitoring visit reaches maturity, and whether the cohort
  matures through the 15mm fraction or the 18mm fraction
- progesterone-spike severity 0..3; each spike forces one consult, and
  severity 3 cancels the cycle at the third
- trigger-day LH behavior: quiet, endogenous surge, or doubled
- an optional extra monitoring visit between trigger and retrieval
- a luteal stimulation round for eligible patients
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

from ..core.types import (
    Decision,
    DecisionKind,
    FollicleHistogram,
    HormonePanel,
    PatientProfile,
    Prescription,
    Scheme,
    VisitRecord,
)
from ..rules.config import RulesConfig
from ..rules.engine import AdvisoryEngine
from .replayer import CycleRecord, RecordedVisit

_MAX_VISITS = 60

# Lead follicle size per monitoring visit, ending at the maturity visit.
# Pre-maturity leads stay under 15mm so maturity lands exactly where
# scripted.
_LADDERS = {
    2: (11, 16),
    3: (10, 13, 16),
    4: (10, 13, 14, 16),
    5: (9, 12, 13, 14, 16),
}


@dataclass
class _Scenario:
    age: int
    contraindicated: bool
    total_follicles: int
    lead_follicles: int
    ladder: tuple[int, ...]
    severity: int
    lh_mode: str
    e2_trigger: float
    lps_intended: bool
    follow_visit: bool
    prelude_fails: int
    start: date


def _draw_scenario(rng: random.Random, config: RulesConfig) -> _Scenario:
    advanced = rng.random() < 0.30
    age = rng.randint(config.b1_age_split, 45) if advanced else rng.randint(25, config.b1_age_split - 1)
    contraindicated = rng.random() < 0.05
    if advanced:
        total = rng.randint(config.b1_count_min_advanced + 1, config.b1_count_max_advanced)
    else:
        total = config.b1_reserve_base - age + rng.randint(0, 4)
    severity = rng.choices((0, 1, 2, 3), weights=(55, 25, 15, 5))[0]
    maturity_visit = 2 if severity > 0 else rng.choices((2, 3, 4, 5), weights=(30, 30, 25, 15))[0]
    ladder = list(_LADDERS[maturity_visit])
    use_18 = rng.random() < 0.20
    if use_18:
        ladder[-1] = 18
        lead = max(1, math.ceil(config.maturity_frac_hi * total))
    else:
        lead = max(1, math.ceil(config.maturity_frac_lo * total))
    return _Scenario(
        age=age,
        contraindicated=contraindicated,
        total_follicles=total,
        lead_follicles=lead,
        ladder=tuple(ladder),
        severity=severity,
        lh_mode=rng.choices(("normal", "surge", "ratio"), weights=(75, 10, 15))[0],
        e2_trigger=rng.uniform(2500.0, 6500.0),
        lps_intended=age >= config.lps_age_min and severity < 3 and rng.random() < 0.60,
        follow_visit=rng.random() < 0.40,
        prelude_fails=rng.choices((0, 1, 2), weights=(70, 20, 10))[0],
        start=date(2024, 1 + rng.randint(0, 11), 1 + rng.randint(0, 27)),
    )


def _baseline_panel(rng: random.Random, age: int, config: RulesConfig, fail: bool, at: datetime) -> HormonePanel:
    young = age < config.b1_age_split
    e2_limit = config.b1_e2_max_young if young else config.b1_e2_max_advanced
    lh_high = 6.5 if young else 5.0
    e2 = rng.uniform(20.0, 0.85 * e2_limit)
    if fail:
        e2 = rng.uniform(e2_limit + 3.0, e2_limit + 30.0)
    return HormonePanel(
        fsh=round(rng.uniform(4.0, 9.0), 1),
        lh=round(rng.uniform(2.0, lh_high), 1),
        e2=round(e2, 1),
        p4=round(rng.uniform(0.2, 0.8), 2),
        drawn_at=at,
    )


def _stim_panel(
    rng: random.Random,
    scheme: Scheme,
    at: datetime,
    e2: float,
    lh: float | None = None,
    p4_spike: bool = False,
) -> HormonePanel:
    if scheme is Scheme.NATURAL:
        fsh = rng.uniform(8.0, 20.0)
        lh_value = lh if lh is not None else rng.uniform(4.0, 9.0)
        p4 = 1.3 if p4_spike else rng.uniform(0.3, 0.8)
    else:
        fsh = rng.uniform(16.0, 22.0)
        lh_value = lh if lh is not None else rng.uniform(5.0, 9.0)
        p4 = 1.5 if p4_spike else rng.uniform(0.4, 0.9)
    return HormonePanel(
        fsh=round(fsh, 1),
        lh=round(lh_value, 1),
        e2=round(e2, 0),
        p4=round(p4, 2),
        drawn_at=at,
    )


def _cohort_exam(lead_mm: int, lead_count: int, total: int, at: datetime, lag_gap: int = 3) -> FollicleHistogram:
    lead_count = min(lead_count, total)
    bins = {lead_mm: lead_count}
    laggards = total - lead_count
    if laggards > 0:
        lag_mm = max(2, lead_mm - lag_gap)
        if lag_mm == lead_mm:
            bins[lead_mm] += laggards
        else:
            bins[lag_mm] = laggards
    return FollicleHistogram(bins, measured_at=at)


class _CycleBuilder:
    def __init__(self, engine: AdvisoryEngine, profile: PatientProfile):
        self.engine = engine
        self.state = engine.new_cycle(profile)
        self.visits: list[RecordedVisit] = []

    def step(self, visit: VisitRecord, expect: DecisionKind | None = None):
        """Advise, record the engine's own decision, and advance."""
        advice = self.engine.advise(self.state, visit)
        if expect is not None and advice.decision.kind is not expect:
            raise RuntimeError(
                f"scenario expected {expect.value}, engine said {advice.decision.kind.value}"
            )
        self.visits.append(
            RecordedVisit(
                visit=visit,
                kind=advice.decision.kind,
                scheme=advice.decision.scheme,
                trigger_plan=advice.decision.trigger_plan,
                prescription=advice.prescription,
            )
        )
        self.state = self.engine.apply_decision(
            self.state, visit, advice.decision, advice.prescription
        )
        if len(self.visits) > _MAX_VISITS:
            raise RuntimeError("synthetic cycle exceeded the visit budget")
        return advice

    def deviate(self, visit: VisitRecord, kind: DecisionKind):
        """Record a care-team decision that differs from the advice."""
        decision = Decision(kind)
        self.visits.append(
            RecordedVisit(visit=visit, kind=kind, prescription=self.state.prescription)
        )
        self.state = self.engine.apply_decision(self.state, visit, decision, None)


def generate_cycle(
    rng: random.Random,
    patient_id: str,
    trigger_delay_days: int = 0,
    config: RulesConfig | None = None,
) -> CycleRecord:
    config = config or RulesConfig()
    engine = AdvisoryEngine(config)
    scenario = _draw_scenario(rng, config)
    profile = PatientProfile(
        patient_id=patient_id,
        age_years=scenario.age,
        medication_contraindicated=scenario.contraindicated,
    )
    builder = _CycleBuilder(engine, profile)
    at = datetime(scenario.start.year, scenario.start.month, scenario.start.day, 9, 0)
    baseline_mm = rng.randint(4, 6)

    def advance(days: int | None) -> None:
        nonlocal at
        at += timedelta(days=days if days and days > 0 else 1)

    # Preparation: scripted failures, then the passing baseline.
    for _ in range(scenario.prelude_fails):
        visit = VisitRecord(
            at,
            _baseline_panel(rng, scenario.age, config, True, at),
            _cohort_exam(baseline_mm, scenario.total_follicles, scenario.total_follicles, at),
        )
        advance(builder.step(visit, DecisionKind.CONTINUE_OCP).next_visit_in_days)
    visit = VisitRecord(
        at,
        _baseline_panel(rng, scenario.age, config, False, at),
        _cohort_exam(baseline_mm, scenario.total_follicles, scenario.total_follicles, at),
    )
    advance(builder.step(visit, DecisionKind.START_STIMULATION).next_visit_in_days)
    scheme = builder.state.scheme
    assert scheme is not None

    # Stimulation: walk the lead-size ladder; inject progesterone spikes
    # right after the first monitoring visit.
    ratio_base_lh = 8.0
    maturity_lead = scenario.ladder[-1]
    pre_leads = scenario.ladder[:-1]
    ramp_e2 = 150.0
    for position, lead in enumerate(pre_leads):
        ramp_e2 = 150.0 + 250.0 * (position + 1)
        lh = ratio_base_lh if scenario.lh_mode == "ratio" else None
        visit = VisitRecord(
            at,
            _stim_panel(rng, scheme, at, ramp_e2, lh=lh),
            _cohort_exam(lead, scenario.lead_follicles, scenario.total_follicles, at),
        )
        advance(builder.step(visit).next_visit_in_days)
        if position == 0:
            for spike_index in range(scenario.severity):
                lead += 1
                visit = VisitRecord(
                    at,
                    _stim_panel(rng, scheme, at, ramp_e2, p4_spike=True),
                    _cohort_exam(lead, scenario.lead_follicles, scenario.total_follicles, at),
                )
                advance(builder.step(visit, DecisionKind.MD_TALK).next_visit_in_days)
                if builder.state.is_terminal():
                    return CycleRecord(
                        profile=profile,
                        cycle_number=1,
                        visits=tuple(builder.visits),
                        retrieved_oocytes=None,
                    )

    # Maturity visit, with an optional scripted care-team delay.
    if scenario.lh_mode == "surge":
        trigger_lh: float | None = rng.uniform(27.0, 33.0)
    elif scenario.lh_mode == "ratio":
        trigger_lh = ratio_base_lh * rng.uniform(2.1, 2.4)
    else:
        trigger_lh = None
    e2 = scenario.e2_trigger
    lead = maturity_lead
    for _ in range(trigger_delay_days):
        visit = VisitRecord(
            at,
            _stim_panel(rng, scheme, at, e2, lh=trigger_lh),
            _cohort_exam(lead, scenario.lead_follicles, scenario.total_follicles, at, lag_gap=4),
        )
        advice = builder.engine.advise(builder.state, visit)
        if advice.decision.kind is not DecisionKind.TRIGGER:
            raise RuntimeError("scenario expected a trigger call during the delay window")
        builder.deviate(visit, DecisionKind.CONTINUE_STIMULATION)
        lead += 1
        e2 += 150.0
        at += timedelta(days=1)
    visit = VisitRecord(
        at,
        _stim_panel(rng, scheme, at, e2, lh=trigger_lh),
        _cohort_exam(lead, scenario.lead_follicles, scenario.total_follicles, at, lag_gap=4),
    )
    advice = builder.step(visit, DecisionKind.TRIGGER)
    plan = advice.decision.trigger_plan
    assert plan is not None

    # Post-trigger: optional check-in, then retrieval on schedule.
    if scenario.follow_visit and plan.duration_hours >= 30:
        follow_at = plan.triggered_at + timedelta(hours=24)
        builder.step(VisitRecord(follow_at), DecisionKind.FOLLOW_PLAN)
    builder.step(VisitRecord(plan.scheduled_retrieval), DecisionKind.OOCYTE_RETRIEVAL)
    if scenario.age < config.b1_age_split:
        oocytes = rng.randint(9, 15)
    else:
        oocytes = rng.randint(3, 8)
    oocytes = max(1, oocytes - 3 * scenario.severity)

    # Day-after check decides between closing out and a luteal round.
    check_at = (plan.scheduled_retrieval + timedelta(days=1)).replace(hour=9, minute=0, second=0)
    if scenario.lps_intended:
        remaining = rng.randint(config.lps_remaining_over + 1, 9)
        exam = _cohort_exam(11, remaining, remaining, check_at)
        advice = builder.step(VisitRecord(check_at, exam=exam), DecisionKind.START_LPS)
        at = check_at + timedelta(days=advice.next_visit_in_days or 5)
        lead_count = max(1, math.ceil(config.maturity_frac_lo * remaining))
        visit = VisitRecord(
            at,
            _stim_panel(rng, scheme, at, rng.uniform(1500.0, 3500.0)),
            _cohort_exam(16, lead_count, remaining, at, lag_gap=4),
        )
        advice = builder.step(visit, DecisionKind.TRIGGER)
        lps_plan = advice.decision.trigger_plan
        assert lps_plan is not None
        builder.step(VisitRecord(lps_plan.scheduled_retrieval), DecisionKind.OOCYTE_RETRIEVAL)
        oocytes += rng.randint(1, 3)
        final_at = (lps_plan.scheduled_retrieval + timedelta(days=1)).replace(hour=9, minute=0)
        leftover = rng.randint(0, 3)
        final_exam = _cohort_exam(10, leftover, leftover, final_at)
        builder.step(VisitRecord(final_at, exam=final_exam), DecisionKind.CYCLE_COMPLETE)
    else:
        leftover = rng.randint(0, config.lps_remaining_over)
        exam = _cohort_exam(10, leftover, leftover, check_at)
        builder.step(VisitRecord(check_at, exam=exam), DecisionKind.CYCLE_COMPLETE)

    return CycleRecord(
        profile=profile,
        cycle_number=1,
        visits=tuple(builder.visits),
        retrieved_oocytes=oocytes,
    )


def generate_cohort(
    count: int,
    seed: int = 0,
    trigger_delay_days: int | tuple[int, ...] = 0,
    config: RulesConfig | None = None,
) -> list[CycleRecord]:
    """Deterministic cohort: patient i depends only on (seed, i)."""
    records = []
    for i in range(count):
        rng = random.Random(f"{seed}/{i}")
        if isinstance(trigger_delay_days, tuple):
            delay = rng.choice(trigger_delay_days)
        else:
            delay = trigger_delay_days
        records.append(generate_cycle(rng, f"p{i:05d}", delay, config))
    return records


def save_records(records: list[CycleRecord], path: str | Path) -> None:
    import json

    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def load_records(path: str | Path) -> list[CycleRecord]:
    import json

    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(CycleRecord.from_dict(json.loads(line)))
    return records
