"""Engine dispatch, transition legality, and the MD-talk cascade."""

from __future__ import annotations

import pytest

from ivf_advisor.core import (
    AlertKind,
    Block,
    Decision,
    DecisionKind,
    Scheme,
    TriggerPlan,
)
from ivf_advisor.core.validation import (
    IllegalTransitionError,
    InvalidStateError,
    StaleVisitError,
    TerminalCycleError,
)
from ivf_advisor.rules import AdvisoryEngine
from ivf_advisor.rules.config import config_hash

from conftest import at, exam, fresh_state, panel, profile, visit

PASS_PANEL = dict(fsh=5.0, lh=4.0, e2=30.0, p4=0.5)
OK_MED = dict(fsh=20.0, lh=5.0, e2=300.0, p4=0.5)


def test_full_cycle_happy_path(engine):
    state = engine.new_cycle(profile(age=30))
    assert state.block is Block.PREPARATION

    advice, state = engine.step(state, visit(1, hormones=panel(**dict(PASS_PANEL, fsh=20.0)), bins={6: 16}))
    assert advice.decision.kind is DecisionKind.CONTINUE_OCP
    assert state.block is Block.PREPARATION and state.ocp_streak == 1

    advice, state = engine.step(state, visit(8, hormones=panel(**PASS_PANEL), bins={6: 16}))
    assert advice.decision.kind is DecisionKind.START_STIMULATION
    assert state.block is Block.STIMULATION
    assert state.scheme is Scheme.MINI
    assert state.ocp_streak == 0
    assert state.prescription.gonadotropin_iu == 150

    advice, state = engine.step(state, visit(13, hormones=panel(**OK_MED), bins={10: 10}))
    assert state.block is Block.STIMULATION and state.stim_visit_index == 1

    advice, state = engine.step(state, visit(16, hormones=panel(**OK_MED), bins={16: 7, 10: 3}))
    assert advice.decision.kind is DecisionKind.TRIGGER
    assert state.block is Block.TRIGGER
    assert state.trigger_plan is not None and state.trigger_plan.duration_hours == 36
    assert state.prescription.trigger_meds == state.trigger_plan.medications

    advice, state = engine.step(state, visit(17, hour=10))
    assert advice.decision.kind is DecisionKind.FOLLOW_PLAN
    assert state.block is Block.POST_TRIGGER

    advice, state = engine.step(state, visit(17, hour=21))
    assert advice.decision.kind is DecisionKind.OOCYTE_RETRIEVAL
    assert state.retrieval_done

    advice, state = engine.step(state, visit(18))
    assert advice.decision.kind is DecisionKind.CYCLE_COMPLETE
    assert state.block is Block.DONE and state.is_terminal()


def test_advice_carries_config_hash(engine):
    advice = engine.advise(fresh_state(), visit(1, hormones=panel(**PASS_PANEL), bins={6: 16}))
    assert advice.config_hash == config_hash(engine.config)
    assert len(advice.config_hash) == 64


def test_start_stimulation_only_from_preparation(engine):
    state = fresh_state(block=Block.STIMULATION, scheme=Scheme.MINI)
    with pytest.raises(IllegalTransitionError):
        engine.apply_decision(
            state, visit(9), Decision(DecisionKind.START_STIMULATION, scheme=Scheme.MINI)
        )


def test_continue_stimulation_only_in_stim_blocks(engine):
    with pytest.raises(IllegalTransitionError):
        engine.apply_decision(fresh_state(), visit(1), Decision(DecisionKind.CONTINUE_STIMULATION))


def test_trigger_not_allowed_after_trigger(engine):
    plan = TriggerPlan(triggered_at=at(16), duration_hours=36)
    state = fresh_state(block=Block.POST_TRIGGER, scheme=Scheme.MINI, trigger_plan=plan)
    with pytest.raises(IllegalTransitionError):
        engine.apply_decision(state, visit(17), Decision(DecisionKind.TRIGGER, trigger_plan=plan))


def test_complete_not_allowed_from_preparation(engine):
    with pytest.raises(IllegalTransitionError):
        engine.apply_decision(fresh_state(), visit(1), Decision(DecisionKind.CYCLE_COMPLETE))


def test_lps_not_allowed_from_stimulation(engine):
    state = fresh_state(block=Block.STIMULATION, scheme=Scheme.MINI)
    with pytest.raises(IllegalTransitionError):
        engine.apply_decision(state, visit(9), Decision(DecisionKind.START_LPS))


def test_stale_visit_rejected(engine):
    state = fresh_state(last_visit_at=at(5))
    with pytest.raises(StaleVisitError):
        engine.advise(state, visit(5))
    with pytest.raises(StaleVisitError):
        engine.advise(state, visit(4))


def test_terminal_state_rejects_everything(engine):
    state = fresh_state(block=Block.DONE)
    with pytest.raises(TerminalCycleError):
        engine.advise(state, visit(9))
    with pytest.raises(TerminalCycleError):
        engine.apply_decision(state, visit(9), Decision(DecisionKind.MD_TALK))


def test_inconsistent_states_rejected(engine):
    with pytest.raises(InvalidStateError):
        engine.advise(fresh_state(block=Block.POST_TRIGGER), visit(9))
    with pytest.raises(InvalidStateError):
        engine.advise(fresh_state(block=Block.STIMULATION), visit(9))


def test_md_talk_cascade_cancels_on_third_consult(engine):
    state = fresh_state(block=Block.STIMULATION, scheme=Scheme.MINI, md_talk_count=2)
    v = visit(14, hormones=panel(**dict(OK_MED, p4=2.0)), bins={10: 6})
    advice = engine.advise(state, v)
    assert advice.decision.kind is DecisionKind.MD_TALK
    assert advice.has_alert(AlertKind.CYCLE_CANCELLED)
    assert advice.citation("MD-CANCEL") is not None

    state = engine.apply_decision(state, v, advice.decision)
    assert state.block is Block.CANCELLED and state.is_terminal()


def test_md_talk_below_limit_keeps_block(engine):
    state = fresh_state(block=Block.STIMULATION, scheme=Scheme.MINI, md_talk_count=0)
    v = visit(14, hormones=panel(**dict(OK_MED, p4=2.0)), bins={10: 6})
    advice = engine.advise(state, v)
    assert advice.decision.kind is DecisionKind.MD_TALK
    assert not advice.has_alert(AlertKind.CYCLE_CANCELLED)

    state = engine.apply_decision(state, v, advice.decision)
    assert state.block is Block.STIMULATION and state.md_talk_count == 1


def test_md_talk_from_trigger_block_advances(engine):
    plan = TriggerPlan(triggered_at=at(16), duration_hours=36)
    state = fresh_state(block=Block.TRIGGER, scheme=Scheme.MINI, trigger_plan=plan)
    state = engine.apply_decision(state, visit(17), Decision(DecisionKind.MD_TALK))
    assert state.block is Block.POST_TRIGGER and state.md_talk_count == 1


def test_observe_moves_trackers_only(engine):
    state = fresh_state(block=Block.STIMULATION, scheme=Scheme.MINI, stim_visit_index=2)
    v = visit(14, hormones=panel(lh=7.0), bins={12: 4})
    observed = engine.observe(state, v)
    assert observed.block is Block.STIMULATION
    assert observed.stim_visit_index == 2
    assert observed.last_visit_at == v.visit_at
    assert observed.last_exam == v.exam
    assert observed.last_lh == 7.0

    # A visit with neither panel nor exam keeps the previous trackers.
    later = engine.observe(observed, visit(15))
    assert later.last_exam == v.exam and later.last_lh == 7.0
    assert later.last_visit_at == at(15)


def test_start_lps_resets_stimulation_tracking(engine):
    plan = TriggerPlan(triggered_at=at(18), duration_hours=36)
    state = fresh_state(
        age=40,
        block=Block.POST_TRIGGER,
        scheme=Scheme.MINI,
        trigger_plan=plan,
        retrieval_done=True,
        stim_visit_index=5,
        slow_growth_streak=1,
    )
    v = visit(20, bins={10: 5, 18: 2})
    advice = engine.advise(state, v)
    assert advice.decision.kind is DecisionKind.START_LPS

    state = engine.apply_decision(state, v, advice.decision, advice.prescription)
    assert state.block is Block.LPS
    assert state.lps_round and not state.retrieval_done
    assert state.trigger_plan is None
    assert state.stim_visit_index == 0 and state.slow_growth_streak == 0

    # The luteal round reaches a second trigger through the same rules.
    advice, state = engine.step(state, visit(25, hormones=panel(**OK_MED), bins={16: 7, 10: 3}))
    assert advice.decision.kind is DecisionKind.TRIGGER
    assert state.block is Block.TRIGGER


def test_change_scheme_resets_streak_and_prescription(engine):
    state = fresh_state(
        block=Block.STIMULATION,
        scheme=Scheme.MINI,
        slow_growth_streak=1,
        last_exam=exam({10: 6}),
        last_exam_at=at(13),
        last_visit_at=at(13),
    )
    v = visit(14, hormones=panel(**OK_MED), bins={9: 6})
    advice = engine.advise(state, v)
    assert advice.decision.kind is DecisionKind.CHANGE_SCHEME

    state = engine.apply_decision(state, v, advice.decision, advice.prescription)
    assert state.scheme is Scheme.ULTRA_MINI
    assert state.slow_growth_streak == 0
    assert state.prescription.gonadotropin_iu == 75


def test_streak_recomputed_from_exams(engine):
    state = fresh_state(
        block=Block.STIMULATION,
        scheme=Scheme.MINI,
        last_exam=exam({10: 6}),
        last_exam_at=at(13),
        last_visit_at=at(13),
    )
    v = visit(15, hormones=panel(**OK_MED), bins={11: 6})  # 0.5mm/day, slow
    advice = engine.advise(state, v)
    state = engine.apply_decision(state, v, advice.decision, advice.prescription)
    assert state.slow_growth_streak == 1

    v = visit(16, hormones=panel(**OK_MED), bins={13: 6})  # growing
    advice = engine.advise(state, v)
    state = engine.apply_decision(state, v, advice.decision, advice.prescription)
    assert state.slow_growth_streak == 0
