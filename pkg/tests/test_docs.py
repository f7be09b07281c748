"""The shipped schema and API documents stay true to the code."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from jsonschema import Draft202012Validator

from conftest import at, exam, fresh_state, panel, visit

from ivf_advisor.core import Block, Scheme
from ivf_advisor.replay import generate_cohort, replay_cycles
from ivf_advisor.rules import AdvisoryEngine, RulesConfig
from ivf_advisor.service import create_app

DOCS = Path(__file__).parent.parent / "docs"
SCHEMA = json.loads((DOCS / "schema.json").read_text())


@pytest.fixture(scope="module")
def validator() -> Draft202012Validator:
    Draft202012Validator.check_schema(SCHEMA)
    return Draft202012Validator(SCHEMA)


def _check(validator, instance, ref: str) -> None:
    errors = list(validator.evolve(schema={"$ref": ref, "$defs": SCHEMA["$defs"]}).iter_errors(instance))
    assert not errors, f"{ref}: {errors[0].message}"


def test_dataset_records_validate_against_schema(validator):
    for record in generate_cohort(20, seed=6, trigger_delay_days=(0, 1)):
        _check(validator, record.to_dict(), "#/$defs/CycleRecord")


def test_advice_and_state_validate_against_schema(validator):
    engine = AdvisoryEngine()
    state = fresh_state(age=30)
    v = visit(1, hormones=panel(20.0, 4.0, 30.0, 0.5, at(1)), bins={6: 16})
    advice = engine.advise(state, v)
    _check(validator, advice.to_dict(), "#/$defs/Advice")
    after = engine.apply_decision(state, v, advice.decision, advice.prescription)
    _check(validator, after.to_dict(), "#/$defs/CycleState")

    mature = fresh_state(
        age=30, block=Block.STIMULATION, scheme=Scheme.MINI,
        prescription=advice.prescription or None, stim_visit_index=2,
        last_exam=exam({11: 10}, at(12)), last_exam_at=at(12), last_visit_at=at(12),
    )
    trigger = engine.advise(mature, visit(13, hormones=panel(20.0, 5.0, 2000.0, 0.5, at(13)), bins={16: 8, 15: 2}))
    _check(validator, trigger.to_dict(), "#/$defs/Advice")
    _check(validator, trigger.decision.to_dict(), "#/$defs/Decision")
    _check(validator, trigger.decision.trigger_plan.to_dict(), "#/$defs/TriggerPlan")


def test_replay_report_validates_against_schema(validator):
    report = replay_cycles(AdvisoryEngine(), generate_cohort(10, seed=4, trigger_delay_days=(0, 2)))
    _check(validator, report.to_dict(), "#/$defs/ReplayReport")


def test_store_export_validates_against_schema(validator):
    with TestClient(create_app()) as client:
        assert client.post("/patients", json={"patient_id": "p1", "age_years": 30}).status_code == 201
        body = {
            "visit_at": "2024-03-01T09:00:00",
            "hormones": {"fsh": 20.0, "lh": 4.0, "e2": 30.0, "p4": 0.5,
                         "drawn_at": "2024-03-01T09:00:00"},
            "exam": {"bins": {"6": 16}, "measured_at": "2024-03-01T09:00:00"},
        }
        assert client.post("/patients/p1/cycles/1/advice", json=body).status_code == 200
        export = json.loads(client.app.state.store.export_json())
    _check(validator, export, "#/$defs/StoreExport")


def test_schema_rejects_malformed_records(validator):
    good = generate_cohort(1, seed=6)[0].to_dict()
    bad_bins = json.loads(json.dumps(good))
    bad_bins["visits"][0]["visit"]["exam"] = {"bins": {"big": 3}}
    bad_kind = json.loads(json.dumps(good))
    bad_kind["visits"][0]["kind"] = "shrug"
    extra = json.loads(json.dumps(good))
    extra["surprise"] = 1
    for broken in (bad_bins, bad_kind, extra):
        errors = list(validator.iter_errors(broken))
        assert errors, "malformed record passed the schema"


def test_openapi_document_is_current():
    published = json.loads((DOCS / "openapi.json").read_text())
    assert published == create_app().openapi()


def test_default_config_document_is_current():
    published = json.loads((DOCS / "default-rules-config.json").read_text())
    assert published["config"] == RulesConfig().to_dict()
    assert published["config_hash"] == AdvisoryEngine().config_hash
