"""The advisory engine: block dispatch and the cycle transition function.

``advise`` is pure: state plus visit in, advice out.  ``apply_decision``
is the single place cycle state moves forward; the service, the replay
evaluator, and the tests all go through it, so a transition that is
possible anywhere is possible everywhere.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from ..core.follicles import GrowthRate, classify_growth
from ..core.types import (
    Block,
    CycleState,
    Decision,
    DecisionKind,
    PatientProfile,
    Prescription,
    VisitRecord,
    ALLOWED_BLOCK_EDGES,
)
from ..core.validation import (
    IllegalTransitionError,
    InvalidStateError,
    StaleVisitError,
    TerminalCycleError,
)
from .advice import Advice, Alert, RuleCitation
from .block1 import advise_preparation, initial_prescription
from .block2 import advise_stimulation
from .block4 import advise_post_trigger
from .config import DEFAULT_CONFIG, RulesConfig, config_hash
from ..core.types import AlertKind

logger = logging.getLogger(__name__)

_STIM_BLOCKS = (Block.STIMULATION, Block.LPS)


class AdvisoryEngine:
    def __init__(self, config: RulesConfig | None = None):
        self.config = config if config is not None else DEFAULT_CONFIG
        self.config_hash = config_hash(self.config)

    def new_cycle(self, profile: PatientProfile, cycle_number: int = 1) -> CycleState:
        return CycleState(profile=profile, cycle_number=cycle_number)

    def _check_visit(self, state: CycleState, visit: VisitRecord) -> None:
        if state.is_terminal():
            raise TerminalCycleError(
                f"cycle is {state.block.value}; no further advice can be given"
            )
        if state.last_visit_at is not None and visit.visit_at <= state.last_visit_at:
            raise StaleVisitError(
                f"visit at {visit.visit_at.isoformat()} is not after "
                f"{state.last_visit_at.isoformat()}"
            )
        if state.block in (Block.TRIGGER, Block.POST_TRIGGER) and state.trigger_plan is None:
            raise InvalidStateError("post-trigger state without a trigger plan")
        if state.block in _STIM_BLOCKS and state.scheme is None:
            raise InvalidStateError("stimulation state without a scheme")

    def observe(self, state: CycleState, visit: VisitRecord) -> CycleState:
        """Fold a visit that carries observations but no decision.

        The block, scheme, and counters stay put; only the last-seen
        trackers move, so a later ``advise`` compares against the most
        recent data on file.
        """
        self._check_visit(state, visit)
        last_exam = state.last_exam
        last_exam_at = state.last_exam_at
        if visit.exam is not None:
            last_exam = visit.exam
            last_exam_at = visit.visit_at
        last_lh = state.last_lh
        if visit.hormones is not None and visit.hormones.lh is not None:
            last_lh = visit.hormones.lh
        return replace(
            state,
            last_visit_at=visit.visit_at,
            last_exam=last_exam,
            last_exam_at=last_exam_at,
            last_lh=last_lh,
        )

    def advise(self, state: CycleState, visit: VisitRecord) -> Advice:
        self._check_visit(state, visit)
        if state.block is Block.PREPARATION:
            advice = advise_preparation(state, visit, self.config)
        elif state.block in _STIM_BLOCKS:
            advice = advise_stimulation(state, visit, self.config)
        else:
            advice = advise_post_trigger(state, visit, self.config)

        if (
            advice.decision.kind is DecisionKind.MD_TALK
            and state.md_talk_count + 1 >= self.config.md_talk_cancel_count
        ):
            cancel_citation = RuleCitation(
                "MD-CANCEL",
                str(state.md_talk_count + 1),
                f">={self.config.md_talk_cancel_count} consults",
                False,
                "cycle cancelled",
            )
            advice = replace(
                advice,
                explanation=advice.explanation + (cancel_citation,),
                alerts=advice.alerts
                + (
                    Alert(
                        AlertKind.CYCLE_CANCELLED,
                        f"{state.md_talk_count + 1} physician consults this cycle",
                        "MD-CANCEL",
                    ),
                ),
            )
        return replace(advice, config_hash=self.config_hash)

    def apply_decision(
        self,
        state: CycleState,
        visit: VisitRecord,
        decision: Decision,
        prescription: Prescription | None = None,
    ) -> CycleState:
        self._check_visit(state, visit)
        kind = decision.kind
        block = state.block

        scheme = state.scheme
        trigger_plan = state.trigger_plan
        rx = prescription if prescription is not None else state.prescription
        stim_visit_index = state.stim_visit_index
        slow_streak = state.slow_growth_streak
        md_talk_count = state.md_talk_count
        ocp_streak = state.ocp_streak
        lps_round = state.lps_round
        retrieval_done = state.retrieval_done

        if kind is DecisionKind.CONTINUE_OCP:
            new_block = Block.PREPARATION
            ocp_streak += 1
        elif kind is DecisionKind.START_STIMULATION:
            if block is not Block.PREPARATION:
                raise IllegalTransitionError(f"{kind.value} outside the preparation block")
            new_block = Block.STIMULATION
            scheme = decision.scheme
            ocp_streak = 0
            stim_visit_index = 0
            slow_streak = 0
            if prescription is None:
                rx = initial_prescription(scheme, self.config)
        elif kind in (DecisionKind.CONTINUE_STIMULATION, DecisionKind.ADJUST_MEDICATION):
            if block not in _STIM_BLOCKS:
                raise IllegalTransitionError(f"{kind.value} outside a stimulation block")
            new_block = block
        elif kind is DecisionKind.CHANGE_SCHEME:
            if block not in _STIM_BLOCKS:
                raise IllegalTransitionError(f"{kind.value} outside a stimulation block")
            new_block = block
            scheme = decision.scheme
            slow_streak = 0
            if prescription is None:
                rx = initial_prescription(scheme, self.config)
        elif kind is DecisionKind.TRIGGER:
            new_block = Block.TRIGGER
            trigger_plan = decision.trigger_plan
            if prescription is None:
                rx = Prescription(trigger_meds=trigger_plan.medications)
        elif kind in (DecisionKind.FOLLOW_PLAN, DecisionKind.OOCYTE_RETRIEVAL):
            new_block = Block.POST_TRIGGER
            if kind is DecisionKind.OOCYTE_RETRIEVAL:
                retrieval_done = True
        elif kind is DecisionKind.START_LPS:
            new_block = Block.LPS
            lps_round = True
            retrieval_done = False
            trigger_plan = None
            stim_visit_index = 0
            slow_streak = 0
            if prescription is None:
                assert scheme is not None
                rx = initial_prescription(scheme, self.config)
        elif kind is DecisionKind.CYCLE_COMPLETE:
            new_block = Block.DONE
        elif kind is DecisionKind.MD_TALK:
            md_talk_count += 1
            if md_talk_count >= self.config.md_talk_cancel_count:
                new_block = Block.CANCELLED
            elif block is Block.TRIGGER:
                new_block = Block.POST_TRIGGER
            else:
                new_block = block
        else:  # pragma: no cover
            raise IllegalTransitionError(f"unknown decision kind {kind!r}")

        if new_block not in ALLOWED_BLOCK_EDGES[block]:
            raise IllegalTransitionError(
                f"{kind.value} would move {block.value} to {new_block.value}"
            )

        # Poor-growth streak tracks exam-to-exam change, independent of
        # which decision was taken, except that a scheme change restarts it.
        if (
            block in _STIM_BLOCKS
            and kind is not DecisionKind.CHANGE_SCHEME
            and kind is not DecisionKind.START_LPS
            and visit.exam is not None
        ):
            growth = classify_growth(
                state.last_exam,
                state.last_exam_at,
                visit.exam,
                visit.visit_at,
                self.config.growth_lead_count,
                self.config.growth_mm_per_day,
            )
            if growth is GrowthRate.GROWING:
                slow_streak = 0
            elif growth in (GrowthRate.SLOW, GrowthRate.SHRINKING):
                slow_streak = state.slow_growth_streak + 1

        if block in _STIM_BLOCKS and new_block is block:
            stim_visit_index = state.stim_visit_index + 1

        last_exam = state.last_exam
        last_exam_at = state.last_exam_at
        if visit.exam is not None:
            last_exam = visit.exam
            last_exam_at = visit.visit_at
        last_lh = state.last_lh
        if visit.hormones is not None and visit.hormones.lh is not None:
            last_lh = visit.hormones.lh

        return CycleState(
            profile=state.profile,
            cycle_number=state.cycle_number,
            block=new_block,
            scheme=scheme,
            prescription=rx,
            trigger_plan=trigger_plan,
            stim_visit_index=stim_visit_index,
            slow_growth_streak=slow_streak,
            md_talk_count=md_talk_count,
            ocp_streak=ocp_streak,
            lps_round=lps_round,
            retrieval_done=retrieval_done,
            last_visit_at=visit.visit_at,
            last_exam=last_exam,
            last_exam_at=last_exam_at,
            last_lh=last_lh,
        )

    def step(self, state: CycleState, visit: VisitRecord) -> tuple[Advice, CycleState]:
        advice = self.advise(state, visit)
        next_state = self.apply_decision(state, visit, advice.decision, advice.prescription)
        return advice, next_state
