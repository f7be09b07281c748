"""Persistence of patients, observations, and treatments."""

from .db import (
    CycleStore,
    DuplicateRowError,
    MissingPatientError,
    StoreError,
    StoredCycle,
    StoredTreatment,
    StoredVisit,
)

__all__ = [
    "CycleStore",
    "DuplicateRowError",
    "MissingPatientError",
    "StoreError",
    "StoredCycle",
    "StoredTreatment",
    "StoredVisit",
]
