"""A single hand-traced cycle used to pin replay arithmetic.

Every expected counter below was computed on paper from the rule set,
then frozen here. The replayer must reproduce them exactly; nothing in
this module calls the engine to derive an expected value.

Timeline (age 30, mini scheme, March 2024):

  V1  day 1   FSH 20 fails suppression        predicted ContinueOcp,  doctor agrees
  V2  day 8   baseline passes, 16 antral      predicted StartStim,    doctor agrees
  V3  day 13  lead 6->10 in 5d (slow)         predicted Adjust +75,   doctor agrees
  V4  day 16  lead 10->14 in 3d (growing)     predicted Continue,     doctor agrees
  V5  day 17  7/10 follicles >= 15mm (mature) predicted Trigger,      doctor CONTINUES
  V6  day 18  still mature                    predicted Trigger,      doctor agrees
  V7  day 19 10:00  before retrieval window   predicted FollowPlan,   doctor agrees
  V8  day 19 22:00  37h post-trigger          predicted Retrieval,    doctor agrees (12 oocytes)
  V9  day 20  retrieval done, age < 40        predicted Complete,     doctor asks an MD talk
  V10 day 21  unchanged                       predicted Complete,     doctor agrees
"""

from __future__ import annotations

from ivf_advisor.core import DecisionKind
from ivf_advisor.replay import CycleRecord, RecordedVisit

from conftest import panel, profile, visit


def hand_record() -> CycleRecord:
    visits = (
        RecordedVisit(
            visit=visit(1, hormones=panel(fsh=20, lh=4, e2=30, p4=0.5), bins={6: 16}),
            kind=DecisionKind.CONTINUE_OCP,
        ),
        RecordedVisit(
            visit=visit(8, hormones=panel(fsh=5, lh=4, e2=30, p4=0.5), bins={6: 16}),
            kind=DecisionKind.START_STIMULATION,
        ),
        RecordedVisit(
            visit=visit(13, hormones=panel(fsh=18, lh=5, e2=300, p4=0.5), bins={10: 10, 7: 6}),
            kind=DecisionKind.ADJUST_MEDICATION,
        ),
        RecordedVisit(
            visit=visit(16, hormones=panel(fsh=16, lh=5, e2=800, p4=0.5), bins={14: 7, 10: 3}),
            kind=DecisionKind.CONTINUE_STIMULATION,
        ),
        RecordedVisit(
            visit=visit(17, hormones=panel(fsh=16, lh=5, e2=900, p4=0.5), bins={16: 7, 10: 3}),
            kind=DecisionKind.CONTINUE_STIMULATION,
        ),
        RecordedVisit(
            visit=visit(18, hormones=panel(fsh=16, lh=5, e2=950, p4=0.5), bins={17: 7, 10: 3}),
            kind=DecisionKind.TRIGGER,
        ),
        RecordedVisit(visit=visit(19, hour=10), kind=DecisionKind.FOLLOW_PLAN),
        RecordedVisit(visit=visit(19, hour=22), kind=DecisionKind.OOCYTE_RETRIEVAL),
        RecordedVisit(visit=visit(20), kind=DecisionKind.MD_TALK),
        RecordedVisit(visit=visit(21), kind=DecisionKind.CYCLE_COMPLETE),
    )
    return CycleRecord(
        profile=profile(age=30, patient_id="fix01"),
        cycle_number=1,
        visits=visits,
        retrieved_oocytes=12,
    )


# (correct, wrong) per intra-block row.
EXPECTED_INTRA = {
    "B1": (2, 0),
    "B2": (3, 1),
    "B3": (1, 0),
    "B4": (2, 1),
}

# (correct, wrong_early, wrong_late, wrong_mismatch) per transition row.
EXPECTED_TRANSITIONS = {
    "B1-B2": (1, 0, 0, 0),
    "B2-B3": (1, 1, 0, 0),
    "B3-B4": (1, 0, 0, 0),
    "B4-LPS": (0, 0, 0, 0),
}

# Doctor triggered one day after the first predicted trigger date.
EXPECTED_HISTOGRAM = {1: 1}

# Zero predicted consults; one cycle with 12 oocytes, not cancelled.
EXPECTED_CONSULTS = {0: {"cycles": 1, "cancelled": 0, "mean": 12.0, "max": 12}}

EXPECTED_B2_ACCURACY = 0.75
