"""Aggregation of replay outcomes into the evaluation report.

Two views over the same visits, mirroring how cycle care is audited:

- intra-block rows: every visit counts once, keyed by the block the
  cycle was in when the decision was made (luteal stimulation folds into
  the stimulation row);
- transition rows: visits where either the engine or the care team moved
  the cycle along one of the four tracked edges, with disagreements
  split into early (engine moved first), late (engine lagged), and
  mismatch (both moved, different decisions).

Plus the early-trigger offset histogram (calendar days between the
engine's first trigger call and the actual one, per cycle) and the
consults-versus-oocytes table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..core.types import Block
from ..rules.engine import AdvisoryEngine
from .replayer import CycleOutcome, CycleRecord, replay_cycle

INTRA_ROWS = ("B1", "B2", "B3", "B4")
TRANSITION_ROWS = ("B1-B2", "B2-B3", "B3-B4", "B4-LPS")

_BLOCK_LABEL = {
    Block.PREPARATION: "B1",
    Block.STIMULATION: "B2",
    Block.LPS: "B2",
    Block.TRIGGER: "B3",
    Block.POST_TRIGGER: "B4",
}

# Tracked edge out of each block and the row it reports under.
_EDGE_TARGET = {
    Block.PREPARATION: (Block.STIMULATION, "B1-B2"),
    Block.STIMULATION: (Block.TRIGGER, "B2-B3"),
    Block.LPS: (Block.TRIGGER, "B2-B3"),
    Block.TRIGGER: (Block.POST_TRIGGER, "B3-B4"),
    Block.POST_TRIGGER: (Block.LPS, "B4-LPS"),
}


@dataclass
class IntraRow:
    correct: int = 0
    wrong: int = 0

    @property
    def total(self) -> int:
        return self.correct + self.wrong

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None

    def to_dict(self) -> dict:
        return {
            "correct": self.correct,
            "wrong": self.wrong,
            "total": self.total,
            "accuracy": self.accuracy,
        }


@dataclass
class TransitionRow:
    correct: int = 0
    wrong_early: int = 0
    wrong_late: int = 0
    wrong_mismatch: int = 0

    @property
    def total(self) -> int:
        return self.correct + self.wrong_early + self.wrong_late + self.wrong_mismatch

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None

    @property
    def wrong(self) -> int:
        return self.wrong_early + self.wrong_late + self.wrong_mismatch

    def to_dict(self) -> dict:
        return {
            "correct": self.correct,
            "wrong": self.wrong,
            "wrong_early": self.wrong_early,
            "wrong_late": self.wrong_late,
            "wrong_mismatch": self.wrong_mismatch,
            "total": self.total,
            "accuracy": self.accuracy,
        }


@dataclass
class ConsultRow:
    cycles: int = 0
    cancelled: int = 0
    oocytes_sum: int = 0
    oocytes_cycles: int = 0
    oocytes_max: int | None = None

    @property
    def mean_oocytes(self) -> float | None:
        return self.oocytes_sum / self.oocytes_cycles if self.oocytes_cycles else None

    @property
    def cancellation_rate(self) -> float:
        return self.cancelled / self.cycles if self.cycles else 0.0

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "cancelled": self.cancelled,
            "mean_oocytes": self.mean_oocytes,
            "max_oocytes": self.oocytes_max,
            "cancellation_rate": self.cancellation_rate,
        }


@dataclass
class ReplayReport:
    intra: dict[str, IntraRow] = field(
        default_factory=lambda: {row: IntraRow() for row in INTRA_ROWS}
    )
    transitions: dict[str, TransitionRow] = field(
        default_factory=lambda: {row: TransitionRow() for row in TRANSITION_ROWS}
    )
    early_trigger_histogram: dict[int, int] = field(default_factory=dict)
    consults_vs_oocytes: dict[int, ConsultRow] = field(default_factory=dict)
    cycles_total: int = 0
    cycles_replayed: int = 0
    visits_total: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "intra": {k: v.to_dict() for k, v in self.intra.items()},
            "transitions": {k: v.to_dict() for k, v in self.transitions.items()},
            "early_trigger_histogram": {
                str(k): self.early_trigger_histogram[k]
                for k in sorted(self.early_trigger_histogram)
            },
            "consults_vs_oocytes": {
                str(k): self.consults_vs_oocytes[k].to_dict()
                for k in sorted(self.consults_vs_oocytes)
            },
            "cycles_total": self.cycles_total,
            "cycles_replayed": self.cycles_replayed,
            "visits_total": self.visits_total,
            "skipped": [{"cycle": c, "reason": r} for c, r in self.skipped],
        }

    def render_text(self) -> str:
        def pct(value: float | None) -> str:
            return "n/a" if value is None else f"{value * 100:6.2f}%"

        lines = []
        lines.append(
            f"Replayed {self.cycles_replayed}/{self.cycles_total} cycles, "
            f"{self.visits_total} visits"
        )
        lines.append("")
        lines.append("Intra-block prediction accuracy")
        lines.append(f"{'Block':<7}{'Correct':>9}{'Wrong':>8}{'Total':>8}  Accuracy")
        for name in INTRA_ROWS:
            row = self.intra[name]
            lines.append(
                f"{name:<7}{row.correct:>9}{row.wrong:>8}{row.total:>8}  {pct(row.accuracy)}"
            )
        lines.append("")
        lines.append("Transition prediction accuracy")
        lines.append(
            f"{'Edge':<7}{'Correct':>9}{'Early':>8}{'Late':>8}{'Mismatch':>10}{'Total':>8}  Accuracy"
        )
        for name in TRANSITION_ROWS:
            row = self.transitions[name]
            lines.append(
                f"{name:<7}{row.correct:>9}{row.wrong_early:>8}{row.wrong_late:>8}"
                f"{row.wrong_mismatch:>10}{row.total:>8}  {pct(row.accuracy)}"
            )
        lines.append("")
        lines.append("Early trigger offset, days between engine call and actual")
        if self.early_trigger_histogram:
            for offset in sorted(self.early_trigger_histogram):
                lines.append(f"  {offset:+d} days: {self.early_trigger_histogram[offset]} cycles")
        else:
            lines.append("  no cycles with both trigger calls")
        lines.append("")
        lines.append("Predicted physician consults vs retrieval outcome")
        lines.append(
            f"{'Consults':<10}{'Cycles':>8}{'Cancelled':>11}{'Mean':>8}{'Max':>6}"
        )
        for count in sorted(self.consults_vs_oocytes):
            row = self.consults_vs_oocytes[count]
            mean = "n/a" if row.mean_oocytes is None else f"{row.mean_oocytes:.2f}"
            peak = "n/a" if row.oocytes_max is None else str(row.oocytes_max)
            lines.append(
                f"{count:<10}{row.cycles:>8}{row.cancelled:>11}{mean:>8}{peak:>6}"
            )
        if self.skipped:
            lines.append("")
            lines.append(f"Skipped or truncated cycles: {len(self.skipped)}")
            for cycle_id, reason in self.skipped[:20]:
                lines.append(f"  {cycle_id}: {reason}")
            if len(self.skipped) > 20:
                lines.append(f"  ... and {len(self.skipped) - 20} more")
        return "\n".join(lines)


def _fold_outcome(report: ReplayReport, outcome: CycleOutcome) -> None:
    if outcome.skipped_reason is not None:
        report.skipped.append((outcome.cycle_id, outcome.skipped_reason))
    if not outcome.outcomes:
        return
    report.cycles_replayed += 1
    for visit in outcome.outcomes:
        report.visits_total += 1
        intra = report.intra[_BLOCK_LABEL[visit.block_before]]
        if visit.match:
            intra.correct += 1
        else:
            intra.wrong += 1

        target, row_name = _EDGE_TARGET[visit.block_before]
        engine_moved = visit.predicted_block is target
        actual_moved = visit.actual_block is target
        if engine_moved or actual_moved:
            row = report.transitions[row_name]
            if engine_moved and actual_moved:
                if visit.match:
                    row.correct += 1
                else:
                    row.wrong_mismatch += 1
            elif engine_moved:
                row.wrong_early += 1
            else:
                row.wrong_late += 1

    if outcome.predicted_trigger_date is not None and outcome.actual_trigger_date is not None:
        offset = (outcome.actual_trigger_date - outcome.predicted_trigger_date).days
        report.early_trigger_histogram[offset] = (
            report.early_trigger_histogram.get(offset, 0) + 1
        )

    consult_row = report.consults_vs_oocytes.setdefault(
        outcome.predicted_md_talks, ConsultRow()
    )
    consult_row.cycles += 1
    if outcome.cancelled or outcome.retrieved_oocytes is None:
        consult_row.cancelled += 1
    if outcome.retrieved_oocytes is not None:
        consult_row.oocytes_sum += outcome.retrieved_oocytes
        consult_row.oocytes_cycles += 1
        if consult_row.oocytes_max is None or outcome.retrieved_oocytes > consult_row.oocytes_max:
            consult_row.oocytes_max = outcome.retrieved_oocytes


def replay_cycles(engine: AdvisoryEngine, records: Iterable[CycleRecord]) -> ReplayReport:
    """Replay every record from a fresh per-cycle state and aggregate."""
    report = ReplayReport()
    for record in records:
        report.cycles_total += 1
        outcome = replay_cycle(engine, record)
        _fold_outcome(report, outcome)
    return report
