"""Pure computations over follicle histograms.

The rules express themselves in terms of these helpers; keeping them here
means the comparisons are implemented exactly once.
"""

from __future__ import annotations

from datetime import datetime
from enum import Enum

from .types import FollicleHistogram

DEFAULT_LEAD_COUNT = 6


class GrowthRate(str, Enum):
    GROWING = "growing"
    SLOW = "slow"
    SHRINKING = "shrinking"
    # No previous exam to compare against, or one of the exams is empty.
    UNKNOWN = "unknown"


def count_at_least(hist: FollicleHistogram, mm: int) -> int:
    """Number of follicles with diameter >= mm."""
    return sum(count for size, count in hist.bins.items() if size >= mm)


def fraction_at_least(hist: FollicleHistogram, mm: int) -> float:
    """Fraction of follicles with diameter >= mm; 0.0 for an empty exam."""
    total = hist.total()
    if total == 0:
        return 0.0
    return count_at_least(hist, mm) / total


def max_size(hist: FollicleHistogram) -> int | None:
    if hist.is_empty():
        return None
    return max(hist.bins)


def largest_sizes(hist: FollicleHistogram, n: int) -> list[int]:
    """The n largest diameters, with multiplicity, descending."""
    sizes: list[int] = []
    for size in sorted(hist.bins, reverse=True):
        remaining = n - len(sizes)
        if remaining <= 0:
            break
        sizes.extend([size] * min(hist.bins[size], remaining))
    return sizes

def lead_mean(hist: FollicleHistogram, n: int = DEFAULT_LEAD_COUNT) -> float | None:
    """Mean diameter of the lead cohort, the up-to-n largest follicles."""
    sizes = largest_sizes(hist, n)
    if not sizes:
        return None
    return sum(sizes) / len(sizes)


def classify_growth(
    prev: FollicleHistogram | None,
    prev_at: datetime | None,
    curr: FollicleHistogram,
    curr_at: datetime,
    lead_count: int = DEFAULT_LEAD_COUNT,
    growing_mm_per_day: float = 1.0,
) -> GrowthRate:
    """Classify cohort growth between two exams.

    The rate is the change in lead-cohort mean diameter per day.  At or
    above ``growing_mm_per_day`` counts as growing, zero or negative as
    shrinking, anything in between as slow.  Without a usable previous
    exam, or with non-positive elapsed time, the rate is unknown.
    """
    if prev is None or prev_at is None or prev.is_empty() or curr.is_empty():
        return GrowthRate.UNKNOWN
    elapsed_days = (curr_at - prev_at).total_seconds() / 86400.0
    if elapsed_days <= 0:
        return GrowthRate.UNKNOWN
    before = lead_mean(prev, lead_count)
    after = lead_mean(curr, lead_count)
    assert before is not None and after is not None
    rate = (after - before) / elapsed_days
    if rate >= growing_mm_per_day:
        return GrowthRate.GROWING
    if rate <= 0.0:
        return GrowthRate.SHRINKING
    return GrowthRate.SLOW
