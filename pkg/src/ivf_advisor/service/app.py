"""HTTP facade over the advisory engine and the cycle store.

One process owns one store and one rules configuration.  Advice
computation and persistence are atomic per cycle: concurrent requests
for the same (patient, cycle) serialize on a lock; different cycles
proceed in parallel.  All bodies and responses use the same canonical
serialization the rest of the package speaks.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..core.types import VisitRecord
from ..core.validation import (
    AdvisorError,
    StaleVisitError,
    TerminalCycleError,
)
from ..pipeline import rebuild_state, records_from_store
from ..replay.replayer import CycleRecord
from ..replay.report import replay_cycles
from ..replay.synth import generate_cohort
from ..rules.config import RulesConfig
from ..rules.engine import AdvisoryEngine
from ..store.db import (
    CycleStore,
    DuplicateRowError,
    MissingPatientError,
    StoredCycle,
    StoredTreatment,
)
from .schemas import (
    AdviceResponse,
    ConfigOut,
    CreatedOut,
    CycleOut,
    ErrorOut,
    PatientIn,
    ReplayIn,
    ReplayOut,
    VisitBody,
    VisitIn,
)

logger = logging.getLogger(__name__)

STORE_ENV = "IVF_ADVISOR_STORE"
CONFIG_ENV = "IVF_ADVISOR_CONFIG"
TOKEN_ENV = "IVF_ADVISOR_TOKEN"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: list | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or []


_ERROR_RESPONSES = {
    400: {"model": ErrorOut},
    401: {"model": ErrorOut},
    404: {"model": ErrorOut},
    409: {"model": ErrorOut},
    410: {"model": ErrorOut},
}


def load_rules_config(path: str | Path | None) -> RulesConfig:
    if path is None:
        return RulesConfig()
    with Path(path).open(encoding="utf-8") as fh:
        return RulesConfig.from_dict(json.load(fh))


def create_app(
    store_path: str | Path | None = None,
    config: RulesConfig | None = None,
    token: str | None = None,
) -> FastAPI:
    store_path = store_path or os.environ.get(STORE_ENV) or ":memory:"
    if config is None:
        config = load_rules_config(os.environ.get(CONFIG_ENV))
    if token is None:
        token = os.environ.get(TOKEN_ENV) or None

    engine = AdvisoryEngine(config)
    store = CycleStore(store_path)
    cycle_locks: dict[tuple[str, int], threading.Lock] = {}
    locks_guard = threading.Lock()

    def cycle_lock(patient_id: str, cycle_number: int) -> threading.Lock:
        with locks_guard:
            return cycle_locks.setdefault((patient_id, cycle_number), threading.Lock())

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        store.close()

    async def require_token(request: Request) -> None:
        if token is None:
            return
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {token}":
            raise ApiError(401, "unauthorized", "missing or invalid bearer token")

    app = FastAPI(
        title="ivf-advisor",
        version="0.1.0",
        lifespan=lifespan,
        dependencies=[Depends(require_token)],
    )
    app.state.engine = engine
    app.state.store = store

    @app.exception_handler(ApiError)
    async def on_api_error(_: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(_: Request, exc: RequestValidationError) -> JSONResponse:
        details = [
            {
                "where": ".".join(str(part) for part in err.get("loc", ())),
                "problem": err.get("msg", ""),
            }
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=400,
            content={"code": "validation", "message": "request body failed validation", "details": details},
        )

    def load_cycle_or_none(patient_id: str, cycle_number: int) -> StoredCycle | None:
        try:
            return store.load_cycle(patient_id, cycle_number)
        except MissingPatientError as exc:
            raise ApiError(404, "missing_patient", str(exc)) from exc

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.get("/config", response_model=ConfigOut)
    async def get_config() -> ConfigOut:
        return ConfigOut(config=engine.config.to_dict(), config_hash=engine.config_hash)

    @app.post(
        "/patients",
        status_code=201,
        response_model=CreatedOut,
        responses=_ERROR_RESPONSES,
    )
    async def post_patient(body: PatientIn) -> CreatedOut:
        try:
            profile = body.to_profile()
        except ValueError as exc:
            raise ApiError(400, "invalid_value", str(exc)) from exc
        try:
            store.put_patient(profile)
        except DuplicateRowError as exc:
            raise ApiError(409, "duplicate_row", str(exc)) from exc
        return CreatedOut(id=profile.patient_id)

    @app.get("/patients/{patient_id}", responses=_ERROR_RESPONSES)
    async def get_patient(patient_id: str) -> dict:
        try:
            profile = store.get_patient(patient_id)
        except MissingPatientError as exc:
            raise ApiError(404, "missing_patient", str(exc)) from exc
        return {"patient": profile.to_dict(), "cycles": store.list_cycles(patient_id)}

    @app.post(
        "/visits",
        status_code=201,
        response_model=CreatedOut,
        responses=_ERROR_RESPONSES,
    )
    async def post_visit(body: VisitIn) -> CreatedOut:
        try:
            visit = body.to_visit()
        except ValueError as exc:
            raise ApiError(400, "invalid_value", str(exc)) from exc
        try:
            store.put_visit(body.patient_id, body.cycle_number, visit)
        except MissingPatientError as exc:
            raise ApiError(404, "missing_patient", str(exc)) from exc
        except DuplicateRowError as exc:
            raise ApiError(409, "duplicate_row", str(exc)) from exc
        return CreatedOut(
            id=f"{body.patient_id}/{body.cycle_number}/{visit.visit_at.isoformat()}"
        )

    def advise_against_history(
        patient_id: str, cycle_number: int, visit: VisitRecord, dry_run: bool
    ) -> AdviceResponse:
        try:
            profile = store.get_patient(patient_id)
        except MissingPatientError as exc:
            raise ApiError(404, "missing_patient", str(exc)) from exc
        stored = load_cycle_or_none(patient_id, cycle_number)
        try:
            state = rebuild_state(engine, profile, cycle_number, stored)
        except TerminalCycleError as exc:
            raise ApiError(410, exc.code, str(exc)) from exc
        except AdvisorError as exc:
            raise ApiError(409, exc.code, f"stored history is inconsistent: {exc}") from exc
        try:
            advice = engine.advise(state, visit)
            next_state = engine.apply_decision(
                state, visit, advice.decision, advice.prescription
            )
        except TerminalCycleError as exc:
            raise ApiError(410, exc.code, str(exc)) from exc
        except StaleVisitError as exc:
            raise ApiError(409, exc.code, str(exc)) from exc
        except AdvisorError as exc:
            raise ApiError(409, exc.code, str(exc)) from exc
        persisted = False
        if not dry_run:
            treatment = StoredTreatment.from_advice(visit.visit_at, advice, source="engine")
            try:
                store.put_advised_visit(patient_id, cycle_number, visit, treatment)
            except DuplicateRowError as exc:
                raise ApiError(409, "duplicate_row", str(exc)) from exc
            persisted = True
        return AdviceResponse(
            patient=profile.to_dict(),
            cycle_number=cycle_number,
            visit=visit.to_dict(),
            advice=advice.to_dict(),
            state={
                "block": next_state.block.value,
                "scheme": next_state.scheme.value if next_state.scheme else None,
                "stim_visit_index": next_state.stim_visit_index,
                "slow_growth_streak": next_state.slow_growth_streak,
                "md_talk_count": next_state.md_talk_count,
                "ocp_streak": next_state.ocp_streak,
                "lps_round": next_state.lps_round,
                "retrieval_done": next_state.retrieval_done,
                "last_visit_at": next_state.last_visit_at,
            },
            config_hash=advice.config_hash,
            dry_run=dry_run,
            persisted=persisted,
        )

    @app.post(
        "/patients/{patient_id}/cycles/{cycle_number}/advice",
        response_model=AdviceResponse,
        response_model_exclude_none=True,
        responses=_ERROR_RESPONSES,
    )
    async def post_advice(
        patient_id: str,
        cycle_number: int,
        body: VisitBody,
        dry_run: bool = Query(default=False),
    ) -> AdviceResponse:
        try:
            visit = body.to_visit()
        except ValueError as exc:
            raise ApiError(400, "invalid_value", str(exc)) from exc
        with cycle_lock(patient_id, cycle_number):
            return advise_against_history(patient_id, cycle_number, visit, dry_run)

    @app.get(
        "/patients/{patient_id}/cycles/{cycle_number}",
        response_model=CycleOut,
        response_model_exclude_none=True,
        responses=_ERROR_RESPONSES,
    )
    async def get_cycle(patient_id: str, cycle_number: int) -> CycleOut:
        stored = load_cycle_or_none(patient_id, cycle_number)
        if stored is None:
            raise ApiError(
                404,
                "missing_cycle",
                f"no records for {patient_id} cycle {cycle_number}",
            )
        return CycleOut(
            patient=stored.patient.to_dict(),
            cycle_number=stored.cycle_number,
            visits=[
                {
                    "visit": item.visit.to_dict(),
                    "treatment": {
                        "decided_at": item.treatment.decided_at,
                        "decision": item.treatment.decision.to_dict(),
                        "prescription": item.treatment.prescription.to_dict()
                        if item.treatment.prescription
                        else None,
                        "explanation": [c.to_dict() for c in item.treatment.explanation],
                        "alerts": [a.to_dict() for a in item.treatment.alerts],
                        "config_hash": item.treatment.config_hash,
                        "source": item.treatment.source,
                    }
                    if item.treatment
                    else None,
                }
                for item in stored.visits
            ],
            retrieved_oocytes=stored.retrieved_oocytes,
            retrieved_at=stored.retrieved_at,
        )

    @app.post("/replay", response_model=ReplayOut, responses=_ERROR_RESPONSES)
    async def post_replay(body: ReplayIn) -> ReplayOut:
        if body.source == "synthetic":
            if body.synthetic is None:
                raise ApiError(400, "invalid_replay_config", "synthetic source needs a synthetic block")
            delay = body.synthetic.trigger_delay_days
            if isinstance(delay, list):
                if not delay or any(d < 0 for d in delay):
                    raise ApiError(
                        400, "invalid_replay_config", "trigger_delay_days must be non-negative"
                    )
                delay = tuple(delay)
            elif delay < 0:
                raise ApiError(
                    400, "invalid_replay_config", "trigger_delay_days must be non-negative"
                )
            records = generate_cohort(
                body.synthetic.patients,
                seed=body.synthetic.seed,
                trigger_delay_days=delay,
                config=engine.config,
            )
        elif body.source == "dataset":
            if not body.records:
                raise ApiError(400, "invalid_replay_config", "dataset source needs records")
            try:
                records = [CycleRecord.from_dict(item) for item in body.records]
            except (KeyError, ValueError, TypeError) as exc:
                raise ApiError(400, "invalid_replay_config", f"bad record: {exc}") from exc
        else:
            records = records_from_store(store)
        report = replay_cycles(engine, records)
        return ReplayOut(report=report.to_dict(), text=report.render_text())

    return app
