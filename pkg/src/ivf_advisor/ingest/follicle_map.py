"""Parsing of follicle measurements from ultrasound report exports.

Accepted shapes, all producing a size histogram in whole millimeters:

- JSON object: ``{"15": 3, "12": 2}``
- pair list:   ``15x3, 12x2`` (also ``15:3``, ``15 x 3``, semicolons)
- size list:   ``18, 17, 15`` (each entry one follicle)

Sizes round half-up to integers and are clamped into the supported
[2, 30] mm range; a clamp is reported as a warning, not an error.
Negative or malformed entries raise ``FollicleParseError``.
"""

from __future__ import annotations

import json
import math
import re

from ..core.types import MAX_FOLLICLE_MM, MIN_FOLLICLE_MM, FollicleHistogram

_PAIR_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(?:mm)?\s*[x:\u00d7]\s*([0-9]+)\s*$", re.IGNORECASE)
_SINGLE_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(?:mm)?\s*$", re.IGNORECASE)


class FollicleParseError(ValueError):
    """Raw follicle string could not be understood."""


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _clamp_size(size_mm: float, warnings: list[str]) -> int:
    size = _round_half_up(size_mm)
    if size < MIN_FOLLICLE_MM:
        warnings.append(f"follicle size {size_mm:g}mm below {MIN_FOLLICLE_MM}mm, clamped")
        return MIN_FOLLICLE_MM
    if size > MAX_FOLLICLE_MM:
        warnings.append(f"follicle size {size_mm:g}mm above {MAX_FOLLICLE_MM}mm, clamped")
        return MAX_FOLLICLE_MM
    return size


def _from_mapping(data: dict, warnings: list[str]) -> dict[int, int]:
    bins: dict[int, int] = {}
    for raw_size, raw_count in data.items():
        try:
            size_mm = float(raw_size)
        except (TypeError, ValueError) as exc:
            raise FollicleParseError(f"bad size key {raw_size!r}") from exc
        if isinstance(raw_count, bool) or not isinstance(raw_count, (int, float)):
            raise FollicleParseError(f"bad count {raw_count!r} for size {raw_size!r}")
        if raw_count != int(raw_count):
            raise FollicleParseError(f"fractional count {raw_count!r} for size {raw_size!r}")
        count = int(raw_count)
        if count < 0:
            raise FollicleParseError(f"negative count for size {raw_size!r}")
        if count == 0:
            warnings.append(f"zero count for size {raw_size!r} dropped")
            continue
        if not math.isfinite(size_mm) or size_mm < 0:
            raise FollicleParseError(f"bad size key {raw_size!r}")
        size = _clamp_size(size_mm, warnings)
        bins[size] = bins.get(size, 0) + count
    return bins


def parse_follicle_map(raw: str) -> tuple[FollicleHistogram, list[str]]:
    """Parse one export field into a histogram plus clamp warnings."""
    warnings: list[str] = []
    text = raw.strip()
    if not text:
        return FollicleHistogram({}), warnings

    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FollicleParseError(f"bad JSON follicle map: {exc}") from exc
        if not isinstance(data, dict):
            raise FollicleParseError("JSON follicle map must be an object")
        return FollicleHistogram(_from_mapping(data, warnings)), warnings

    bins: dict[int, int] = {}
    for piece in re.split(r"[;,]", text):
        if not piece.strip():
            continue
        pair = _PAIR_RE.match(piece)
        if pair is not None:
            size = _clamp_size(float(pair.group(1)), warnings)
            count = int(pair.group(2))
            if count == 0:
                warnings.append(f"zero count in {piece.strip()!r} dropped")
                continue
            bins[size] = bins.get(size, 0) + count
            continue
        single = _SINGLE_RE.match(piece)
        if single is not None:
            size = _clamp_size(float(single.group(1)), warnings)
            bins[size] = bins.get(size, 0) + 1
            continue
        raise FollicleParseError(f"unrecognized follicle entry {piece.strip()!r}")
    return FollicleHistogram(bins), warnings
