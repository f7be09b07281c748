"""Decision support for minimal-stimulation IVF treatment cycles.

The package is organized around a pure rules engine:

- :mod:`ivf_advisor.core` holds the domain types
- :mod:`ivf_advisor.rules` evaluates visits and advances cycle state
- :mod:`ivf_advisor.ingest` normalizes messy exported clinic records
- :mod:`ivf_advisor.store` persists patients, visits, and treatments
- :mod:`ivf_advisor.replay` scores the engine against recorded care
- :mod:`ivf_advisor.service` exposes everything over HTTP
"""

from .core import (
    Block,
    CycleState,
    Decision,
    DecisionKind,
    FollicleHistogram,
    HormonePanel,
    PatientProfile,
    Prescription,
    Scheme,
    TriggerPlan,
    VisitRecord,
)
from .rules import Advice, AdvisoryEngine, RulesConfig

__version__ = "0.1.0"

__all__ = [
    "Advice",
    "AdvisoryEngine",
    "Block",
    "CycleState",
    "Decision",
    "DecisionKind",
    "FollicleHistogram",
    "HormonePanel",
    "PatientProfile",
    "Prescription",
    "RulesConfig",
    "Scheme",
    "TriggerPlan",
    "VisitRecord",
    "__version__",
]
