"""Retrospective replay: re-run recorded cycles and score agreement."""

from .replayer import CycleOutcome, CycleRecord, RecordedVisit, VisitOutcome, replay_cycle
from .report import (
    INTRA_ROWS,
    TRANSITION_ROWS,
    ConsultRow,
    IntraRow,
    ReplayReport,
    TransitionRow,
    replay_cycles,
)
from .synth import generate_cohort, generate_cycle, load_records, save_records

__all__ = [
    "CycleOutcome",
    "CycleRecord",
    "RecordedVisit",
    "VisitOutcome",
    "replay_cycle",
    "INTRA_ROWS",
    "TRANSITION_ROWS",
    "ConsultRow",
    "IntraRow",
    "ReplayReport",
    "TransitionRow",
    "replay_cycles",
    "generate_cohort",
    "generate_cycle",
    "load_records",
    "save_records",
]
