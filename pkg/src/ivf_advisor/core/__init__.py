"""Domain types, follicle math, and visit validation."""

from .follicles import (
    GrowthRate,
    classify_growth,
    count_at_least,
    fraction_at_least,
    largest_sizes,
    lead_mean,
    max_size,
)
from .types import (
    ALLOWED_BLOCK_EDGES,
    ANALYTES,
    AlertKind,
    Block,
    CycleState,
    Decision,
    DecisionKind,
    DetectionFlag,
    FollicleHistogram,
    GonadotropinAgent,
    HormonePanel,
    PatientProfile,
    Prescription,
    Scheme,
    TERMINAL_BLOCKS,
    TriggerAgent,
    TriggerMed,
    TriggerPlan,
    VisitRecord,
    canonical_json,
    parse_iso_datetime,
)
from .validation import (
    AdvisorError,
    IllegalTransitionError,
    InvalidStateError,
    StaleVisitError,
    TerminalCycleError,
    validate_visit,
)

__all__ = [
    "ALLOWED_BLOCK_EDGES",
    "ANALYTES",
    "AdvisorError",
    "AlertKind",
    "Block",
    "CycleState",
    "Decision",
    "DecisionKind",
    "DetectionFlag",
    "FollicleHistogram",
    "GonadotropinAgent",
    "GrowthRate",
    "HormonePanel",
    "IllegalTransitionError",
    "InvalidStateError",
    "PatientProfile",
    "Prescription",
    "Scheme",
    "StaleVisitError",
    "TERMINAL_BLOCKS",
    "TerminalCycleError",
    "TriggerAgent",
    "TriggerMed",
    "TriggerPlan",
    "VisitRecord",
    "canonical_json",
    "classify_growth",
    "count_at_least",
    "fraction_at_least",
    "largest_sizes",
    "lead_mean",
    "max_size",
    "parse_iso_datetime",
    "validate_visit",
]
