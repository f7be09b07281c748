"""Parsing of hormone values as they appear in exported clinic records.

Lab exports are messy: decimal commas, thousands separators, embedded
units, detection-limit markers.  This module turns one raw string into a
number in canonical units plus an optional detection flag, or raises
``HormoneParseError`` with a reason.  It never guesses: an unrecognized
unit is a rejection, not a silent pass-through.

Canonical units: FSH and LH in IU/L, estradiol in pg/mL, progesterone in
ng/mL.  mIU/mL is numerically identical to IU/L.  Molar-to-mass factors:
estradiol 3.671 pmol/L per pg/mL, progesterone 3.18 nmol/L per ng/mL.
"""

from __future__ import annotations

import math
import re

from ..core.types import ANALYTES, DetectionFlag

E2_PMOL_PER_PG = 3.671
P4_NMOL_PER_NG = 3.18

# Factor multiplying the raw number to reach canonical units.
UNIT_FACTORS: dict[str, dict[str, float]] = {
    "fsh": {"iu/l": 1.0, "miu/ml": 1.0, "u/l": 1.0},
    "lh": {"iu/l": 1.0, "miu/ml": 1.0, "u/l": 1.0},
    "e2": {"pg/ml": 1.0, "pmol/l": 1.0 / E2_PMOL_PER_PG},
    "p4": {"ng/ml": 1.0, "nmol/l": 1.0 / P4_NMOL_PER_NG},
}

_FLAG_PREFIXES: tuple[tuple[str, DetectionFlag], ...] = (
    ("<=", DetectionFlag.BELOW_LIMIT),
    ("≤", DetectionFlag.BELOW_LIMIT),
    ("<", DetectionFlag.BELOW_LIMIT),
    (">=", DetectionFlag.ABOVE_LIMIT),
    ("≥", DetectionFlag.ABOVE_LIMIT),
    (">", DetectionFlag.ABOVE_LIMIT),
)

_NUMBER_RE = re.compile(r"^([0-9][0-9 .,]*)(.*)$")


class HormoneParseError(ValueError):
    """Raw hormone string could not be understood."""


def _parse_number(text: str) -> float:
    """Digits plus separators to float; handles comma decimals and
    thousands grouping."""
    s = text.replace(" ", "")
    if not s:
        raise HormoneParseError("empty number")
    if "." in s and "," in s:
        # Rightmost separator is the decimal mark, the rest group digits.
        if s.rfind(".") > s.rfind(","):
            s = s.replace(",", "")
        else:
            s = s.replace(".", "").replace(",", ".")
    elif "," in s:
        parts = s.split(",")
        if len(parts) == 2 and len(parts[1]) != 3:
            s = s.replace(",", ".")
        else:
            # 1,234 style grouping; require proper 3-digit groups.
            if any(len(p) != 3 for p in parts[1:]) or not parts[0]:
                raise HormoneParseError(f"ambiguous separators in {text!r}")
            s = s.replace(",", "")
    elif s.count(".") > 1:
        parts = s.split(".")
        if any(len(p) != 3 for p in parts[1:]) or not parts[0]:
            raise HormoneParseError(f"ambiguous separators in {text!r}")
        s = s.replace(".", "")
    try:
        value = float(s)
    except ValueError as exc:
        raise HormoneParseError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise HormoneParseError(f"not finite: {text!r}")
    return value


def tokenize_value(raw: str) -> tuple[float, DetectionFlag | None, str | None]:
    """Split a raw string into (number, detection flag, unit token)."""
    s = raw.strip()
    flag: DetectionFlag | None = None
    for prefix, prefix_flag in _FLAG_PREFIXES:
        if s.startswith(prefix):
            flag = prefix_flag
            s = s[len(prefix):].strip()
            break
    match = _NUMBER_RE.match(s)
    if match is None:
        raise HormoneParseError(f"no numeric value in {raw!r}")
    value = _parse_number(match.group(1).strip(" .,"))
    unit = match.group(2).strip().lower() or None
    return value, flag, unit


def convert_to_canonical(analyte: str, value: float, unit: str | None) -> float:
    """Apply the unit factor; a unit we do not know is an error."""
    if analyte not in ANALYTES:
        raise KeyError(analyte)
    if unit is None:
        return value
    normalized = unit.replace(" ", "").rstrip(".")
    factor = UNIT_FACTORS[analyte].get(normalized)
    if factor is None:
        raise HormoneParseError(f"unknown unit {unit!r} for {analyte}")
    return value * factor


def parse_hormone_value(raw: str, analyte: str) -> tuple[float, DetectionFlag | None]:
    """Raw lab string to (canonical value, optional detection flag)."""
    value, flag, unit = tokenize_value(raw)
    canonical = convert_to_canonical(analyte, value, unit)
    if canonical < 0:
        raise HormoneParseError(f"negative value {raw!r}")
    return canonical, flag
