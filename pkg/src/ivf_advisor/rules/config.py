"""Tunable thresholds for the advisory rules.

Every clinical constant the rules consult lives here, so a deployment can
pin or adjust them without touching rule code, and every piece of advice
can be stamped with a hash of the exact configuration that produced it.

Comparator conventions, fixed in code rather than configurable:
hormone suppression bounds are strict upper bounds; stimulation window
ranges are inclusive on both ends; maturity fractions are inclusive;
the post-trigger ovulation bound is inclusive (at 48 hours it is too
late); the luteal eligibility count is a strict lower bound.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from typing import Any, Mapping

from ..core.types import GonadotropinAgent, canonical_json


@dataclass(frozen=True)
class RulesConfig:
    # Preparation block: baseline suppression limits. The age split puts a
    # patient into the young band strictly below it. LH and E2 limits
    # differ per band; the required antral count is reserve_base - age for
    # the young band and an inclusive range for the advanced band.
    b1_age_split: int = 42
    b1_fsh_max: float = 15.0
    b1_lh_max_young: float = 8.5
    b1_lh_max_advanced: float = 6.0
    b1_e2_max_young: float = 50.0
    b1_e2_max_advanced: float = 65.0
    b1_p4_max: float = 1.5
    b1_reserve_base: int = 45
    b1_count_min_advanced: int = 1
    b1_count_max_advanced: int = 6
    b1_size_max_mm: int = 8
    b1_revisit_days: int = 7
    b1_revisit_min_days: int = 5
    b1_revisit_max_days: int = 9
    # A hormone this close to its limit (relative) shortens the recheck.
    b1_near_threshold_fraction: float = 0.10
    # Consecutive failed suppression checks before escalating to the MD.
    b1_max_ocp_visits: int = 4

    # Stimulation windows. Mini and ultra-mini share the medicated window.
    b2_med_fsh_min: float = 15.0
    b2_med_fsh_max: float = 25.0
    b2_med_lh_max: float = 15.0
    b2_med_e2_min: float = 50.0
    b2_med_p4_max: float = 1.2
    b2_nat_fsh_min: float = 5.0
    b2_nat_fsh_max: float = 25.0
    b2_nat_lh_min: float = 2.0
    b2_nat_lh_max: float = 15.0
    b2_nat_e2_min: float = 80.0
    b2_nat_p4_max: float = 1.0

    # Cohort maturity: either fraction qualifies.
    maturity_size_lo_mm: int = 15
    maturity_frac_lo: float = 0.60
    maturity_size_hi_mm: int = 18
    maturity_frac_hi: float = 0.30

    # Growth classification over the lead cohort.
    growth_lead_count: int = 6
    growth_mm_per_day: float = 1.0
    slow_streak_limit: int = 2

    # Dose response: growing fine but estradiol past this means back off.
    e2_overshoot: float = 4000.0

    # Initial daily prescriptions.
    mini_gonadotropin_iu: int = 150
    ultra_mini_gonadotropin_iu: int = 75
    default_agent: GonadotropinAgent = GonadotropinAgent.FOLLISTIM

    # Days between stimulation visits; the tail repeats once the pattern
    # is exhausted.
    stim_intervals: tuple[int, ...] = (5, 3, 1, 1, 1)
    stim_interval_tail: int = 1

    # Trigger timing.
    trigger_lh_surge: float = 25.0
    trigger_surge_hours: int = 24
    trigger_lh_ratio: float = 2.0
    trigger_ratio_hours: int = 30
    trigger_age_split: int = 40
    trigger_hours_young: int = 36
    trigger_hours_advanced: int = 34

    # Trigger medication choice.
    trigger_e2_high: float = 4000.0
    trigger_big_follicle_mm: int = 16
    trigger_big_count: int = 6

    # Post-trigger safety bound.
    ovulation_risk_hours: int = 48

    # Luteal phase stimulation eligibility.
    lps_age_min: int = 40
    lps_mature_mm: int = 18
    lps_remaining_over: int = 4

    # Escalation: this many MD consultations cancels the cycle.
    md_talk_cancel_count: int = 3

    def to_dict(self) -> dict:
        out: dict = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, GonadotropinAgent):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RulesConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs: dict = {}
        for name, value in data.items():
            if name not in known:
                raise ValueError(f"unknown rules config field {name!r}")
            if name == "default_agent":
                value = GonadotropinAgent(value)
            elif name == "stim_intervals":
                value = tuple(int(v) for v in value)
            kwargs[name] = value
        return cls(**kwargs)


def config_hash(config: RulesConfig) -> str:
    """Stable identifier for a rules configuration."""
    return hashlib.sha256(canonical_json(config.to_dict()).encode("utf-8")).hexdigest()


def next_stim_interval(config: RulesConfig, gap_index: int) -> int:
    """Days until the next stimulation visit, given how many gaps elapsed."""
    if gap_index < len(config.stim_intervals):
        return config.stim_intervals[gap_index]
    return config.stim_interval_tail


DEFAULT_CONFIG = RulesConfig()
