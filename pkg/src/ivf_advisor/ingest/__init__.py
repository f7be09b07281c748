"""Normalization of exported clinic records into domain types."""

from .batch import (
    IngestResult,
    IngestedCycle,
    IngestedVisit,
    NormalizedRow,
    RejectedRow,
    build_cycles,
    normalize_rows,
    read_rows,
)
from .follicle_map import FollicleParseError, parse_follicle_map
from .mapping import (
    DEFAULT_MAPPING,
    ColumnMapping,
    MappingError,
    detect_row_type,
    parse_decision_kind,
    parse_visit_datetime,
)
from .values import (
    HormoneParseError,
    convert_to_canonical,
    parse_hormone_value,
    tokenize_value,
)

__all__ = [
    "ColumnMapping",
    "DEFAULT_MAPPING",
    "FollicleParseError",
    "HormoneParseError",
    "IngestResult",
    "IngestedCycle",
    "IngestedVisit",
    "MappingError",
    "NormalizedRow",
    "RejectedRow",
    "build_cycles",
    "convert_to_canonical",
    "detect_row_type",
    "normalize_rows",
    "parse_decision_kind",
    "parse_follicle_map",
    "parse_hormone_value",
    "parse_visit_datetime",
    "read_rows",
    "tokenize_value",
]
