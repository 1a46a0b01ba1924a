"""HTTP API serving the patient and clinician UIs. All JSON.

Unauthenticated by design at desk scale; when the ADHERE_TOKEN environment
variable is set, every request must carry it in the X-Adhere-Token header
(the reserved shared-token hook). Admin clock/close endpoints exist only
when the service was built with a manual clock (simulated sessions).
"""

from __future__ import annotations

import os
from datetime import date, timedelta

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .core import (
    AdherenceError,
    DoseSchedule,
    IntakeKind,
    Organ,
    Patient,
    local_day,
)
from .scheduler import NotificationPrefs
from .service import AdherenceService, DayClosedError, ManualClock
from .store import NotFoundError, PatientRecord

DEFAULT_WINDOW_DAYS = 30


class PatientIn(BaseModel):
    patient_id: str
    transplant_date: date
    organ: str
    timezone: str = "UTC"
    arm: str | None = None
    schedule: dict | None = None
    prefs: dict | None = None


class IntakeIn(BaseModel):
    slot_id: str
    ts: str
    kind: str = "taken"


class CloseDayIn(BaseModel):
    date: date
    patient_id: str | None = None


class ClockAdvanceIn(BaseModel):
    hours: float = 0.0
    days: int = 0
    set: str | None = Field(default=None, description="RFC3339 instant to jump to")


def parse_window(window: str | None, today: date) -> tuple[date, date]:
    """Parse FROM..TO; default to the trailing month ending today."""
    if not window:
        return today - timedelta(days=DEFAULT_WINDOW_DAYS - 1), today
    try:
        frm, to = window.split("..")
        return date.fromisoformat(frm), date.fromisoformat(to)
    except ValueError as exc:
        raise HTTPException(422, f"window must be YYYY-MM-DD..YYYY-MM-DD, got {window!r}") from exc


def create_app(service: AdherenceService) -> FastAPI:
    app = FastAPI(title="adhere", version="0.1.0")
    token = os.environ.get("ADHERE_TOKEN")

    @app.middleware("http")
    async def shared_token_hook(request: Request, call_next):
        if token and request.headers.get("X-Adhere-Token") != token:
            return JSONResponse({"detail": "missing or bad token"}, status_code=401)
        return await call_next(request)

    @app.exception_handler(NotFoundError)
    async def not_found(_, exc: NotFoundError):
        return JSONResponse({"detail": str(exc)}, status_code=404)

    @app.exception_handler(DayClosedError)
    async def day_closed(_, exc: DayClosedError):
        return JSONResponse({"detail": str(exc)}, status_code=409)

    @app.exception_handler(AdherenceError)
    async def domain_error(_, exc: AdherenceError):
        return JSONResponse({"detail": str(exc)}, status_code=422)

    @app.get("/health")
    def health():
        return {"status": "ok", "now": service.now().isoformat()}

    @app.post("/patients", status_code=201)
    def create_patient(body: PatientIn):
        try:
            organ = Organ(body.organ)
        except ValueError:
            raise HTTPException(
                422, f"organ must be one of {[o.value for o in Organ]}, got {body.organ!r}"
            )
        patient = Patient(
            patient_id=body.patient_id,
            transplant_date=body.transplant_date,
            organ=organ,
            timezone=body.timezone,
        )
        prefs = (
            NotificationPrefs.from_dict({"patient_id": body.patient_id, **body.prefs})
            if body.prefs
            else None
        )
        schedule = (
            DoseSchedule.from_dict({"patient_id": body.patient_id, **body.schedule})
            if body.schedule
            else None
        )
        service.create_patient(
            PatientRecord(patient=patient, arm=body.arm, prefs=prefs), schedule=schedule
        )
        return {"patient_id": body.patient_id, "created": True}

    @app.get("/patients/{patient_id}/today")
    def today(patient_id: str):
        return service.today_view(patient_id)

    @app.post("/patients/{patient_id}/intakes")
    def record_intake(patient_id: str, body: IntakeIn):
        try:
            kind = IntakeKind(body.kind)
        except ValueError:
            raise HTTPException(422, f"kind must be taken or skipped, got {body.kind!r}")
        ack = service.record_intake(patient_id, body.slot_id, body.ts, kind)
        return {
            "ack": True,
            "duplicate": ack.duplicate,
            "seq": ack.record.seq if ack.record else None,
            "awards": [a.to_dict() for a in ack.awards],
        }

    @app.get("/patients/{patient_id}/game")
    def game(patient_id: str):
        from .game import level

        ledger = service.game_view(patient_id)
        return {**ledger.to_dict(), "level": level(ledger)}

    @app.get("/patients/{patient_id}/dashboard")
    def dashboard(patient_id: str, window: str | None = None):
        record = service.store.get_patient(patient_id)
        today_local = local_day(service.now(), record.patient.timezone)
        start, end = parse_window(window, today_local)
        return service.dashboard(patient_id, start, end)

    @app.post("/labs/import")
    async def import_labs(request: Request):
        body = (await request.body()).decode("utf-8")
        accepted, rejected = service.ingest_labs(body)
        return {
            "accepted": accepted,
            "rejected": [{"line": line, "reason": reason} for line, reason in rejected],
        }

    @app.get("/cohort/report")
    def cohort(window: str | None = None, app_arm: str = "app", format: str = "json"):
        today_local = service.now().date()
        start, end = parse_window(window, today_local)
        report = service.cohort_view(start, end, app_arm=app_arm)
        if format == "text":
            from .report import render_text

            return PlainTextResponse(render_text(report))
        return report.to_dict()

    if isinstance(service.now_fn, ManualClock):

        @app.post("/admin/clock")
        def clock(body: ClockAdvanceIn):
            assert isinstance(service.now_fn, ManualClock)
            if body.set:
                now = service.now_fn.set(body.set)
            else:
                now = service.now_fn.advance(hours=body.hours, days=body.days)
            return {"now": now.isoformat()}

        @app.post("/admin/close-day")
        def close_day(body: CloseDayIn):
            results = service.close_day(body.date, patient_id=body.patient_id)
            return {
                "closed_through": body.date.isoformat(),
                "awards": {
                    pid: [a.to_dict() for a in awards] for pid, awards in results.items()
                },
            }

    ui_dir = os.environ.get("ADHERE_UI_DIR")
    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
