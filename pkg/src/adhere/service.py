"""Application service: commands and queries over the event store.

All writes for one patient serialize on that patient's lock; reads compute
from a single pass over the committed log, so every response is a pure
function of log position. Day-close is an explicit step (clock tick, CLI,
or admin call), with one exception: an intake that lands in the post-midnight
grace window and resolves its day fully adherent closes that day immediately,
so the award rides back on the same acknowledgement.
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone

from .core import (
    AdherenceError,
    DataError,
    DoseSchedule,
    IntakeEvent,
    IntakeKind,
    LabResult,
    day_end,
    local_day,
    parse_instant,
    validate_schedule,
)
from .game import Award, GameLedger, apply_day
from .ledger import DayOutcome, close_instant, day_outcome, summarize
from .report import CohortPatient, CohortReport, cohort_report
from .scheduler import (
    EventIndex,
    NotificationPrefs,
    ReminderPlan,
    SlotStatus,
    classify_slot,
    due_slots,
    reminder_plan,
)
from .stats import CvResult, InsufficientDataError, LabSeries, coefficient_of_variation
from .store import (
    EventRecord,
    EventStore,
    NotFoundError,
    PatientRecord,
    RecordType,
    Snapshot,
)


class DayClosedError(AdherenceError):
    """The event's day is frozen; retroactive logging is over."""


class ManualClock:
    """Settable clock for simulated sessions and tests."""

    def __init__(self, start: datetime):
        self._now = parse_instant(start)
        self._lock = threading.Lock()

    def __call__(self) -> datetime:
        with self._lock:
            return self._now

    def advance(self, hours: float = 0.0, days: int = 0) -> datetime:
        with self._lock:
            self._now += timedelta(hours=hours, days=days)
            return self._now

    def set(self, instant: datetime | str) -> datetime:
        with self._lock:
            self._now = parse_instant(instant)
            return self._now


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class IntakeAck:
    record: EventRecord | None
    duplicate: bool
    awards: tuple[Award, ...]


class AdherenceService:
    def __init__(self, store: EventStore, now_fn=None):
        self.store = store
        self.now_fn = now_fn or utc_now

    def now(self) -> datetime:
        return self.now_fn()

    # -- commands ---------------------------------------------------------

    def create_patient(
        self,
        record: PatientRecord,
        schedule: DoseSchedule | None = None,
    ) -> None:
        self.store.register_patient(record)
        if schedule is not None:
            self.set_schedule(record.patient.patient_id, schedule)

    def set_schedule(self, patient_id: str, schedule: DoseSchedule) -> None:
        if schedule.patient_id != patient_id:
            raise DataError("schedule patient_id mismatch")
        violations = validate_schedule(schedule)
        if violations:
            raise DataError("; ".join(str(v) for v in violations))
        self.store.get_patient(patient_id)
        self.store.append(
            patient_id, RecordType.SCHEDULE_CHANGE, schedule.to_dict(), self.now()
        )

    def record_intake(
        self,
        patient_id: str,
        slot_id: str,
        timestamp: datetime | str,
        kind: IntakeKind | str,
    ) -> IntakeAck:
        ts = parse_instant(timestamp)
        kind = IntakeKind(kind)
        record = self.store.get_patient(patient_id)
        tz = record.patient.timezone
        with self.store.patient_lock(patient_id):
            records = self.store.read_records(patient_id)
            schedules = _schedules(records)
            day = local_day(ts, tz)
            schedule = _schedule_for(schedules, day)
            if schedule is None or slot_id not in schedule.slot_ids():
                raise NotFoundError(
                    f"no slot {slot_id!r} scheduled for {patient_id} on {day}"
                )
            now = self.now()
            snapshot = self.store.read_snapshot(patient_id)
            applied_through = snapshot.ledger.last_applied_day if snapshot else None
            if applied_through is not None and day <= applied_through:
                raise DayClosedError(f"day {day} is already closed")
            if now >= close_instant(schedule, day, tz):
                raise DayClosedError(f"day {day} froze at end of day + grace")

            intakes = _intakes(records)
            for existing in intakes:
                if (
                    existing.slot_id == slot_id
                    and existing.kind == kind
                    and local_day(existing.timestamp, tz) == day
                ):
                    return IntakeAck(record=None, duplicate=True, awards=())

            event = IntakeEvent(
                patient_id=patient_id, slot_id=slot_id, timestamp=ts, kind=kind
            )
            appended = self.store.append(
                patient_id, RecordType.INTAKE, event.to_dict(), now
            )

            awards: tuple[Award, ...] = ()
            if now >= day_end(day, tz):
                # Grace-window logging: if this intake leaves the day fully
                # resolved and adherent, close it now so the patient sees the
                # award immediately instead of after the freeze.
                outcome = day_outcome(schedule, intakes + [event], day, now, tz)
                if (
                    outcome.scheduled > 0
                    and outcome.pending == 0
                    and outcome.missed == 0
                    and outcome.skipped == 0
                ):
                    final = replace(outcome, closed=True, adherent=True)
                    awards = tuple(
                        self._close_patient_locked(patient_id, day, override={day: final})
                    )
            return IntakeAck(record=appended, duplicate=False, awards=awards)

    def ingest_labs(self, stream_text: str) -> tuple[int, list[tuple[int, str]]]:
        """Append valid CSV rows as lab records; report rejects per row."""
        try:
            reader = csv.DictReader(io.StringIO(stream_text))
            header = reader.fieldnames
        except csv.Error as exc:
            raise DataError(f"unreadable CSV stream: {exc}") from exc
        required = ["patient_id", "draw_date", "analyte", "value_ng_ml"]
        if header is None or [h.strip() for h in header] != required:
            raise DataError(f"labs CSV must have header {','.join(required)}")

        accepted = 0
        rejected: list[tuple[int, str]] = []
        seen: set[tuple[str, str, str]] = set()
        existing_cache: dict[str, set[tuple[str, str]]] = {}
        for line_no, row in enumerate(reader, start=2):
            patient_id = (row.get("patient_id") or "").strip()
            draw_date = (row.get("draw_date") or "").strip()
            analyte = (row.get("analyte") or "").strip()
            raw_value = (row.get("value_ng_ml") or "").strip()
            try:
                if not self.store.has_patient(patient_id):
                    raise NotFoundError(f"unknown patient {patient_id!r}")
                value = float(raw_value)
                if value <= 0:
                    raise DataError("nonpositive value")
                result = LabResult(
                    patient_id=patient_id,
                    draw_date=date.fromisoformat(draw_date),
                    value=value,
                )
                if analyte != result.analyte.value:
                    raise DataError(f"unsupported analyte {analyte!r}")
                key = (patient_id, draw_date, analyte)
                if patient_id not in existing_cache:
                    existing_cache[patient_id] = {
                        (lab.draw_date.isoformat(), lab.analyte.value)
                        for lab in _labs(self.store.read_records(patient_id))
                    }
                if key in seen or (draw_date, analyte) in existing_cache[patient_id]:
                    raise DataError("duplicate (patient, date, analyte)")
                seen.add(key)
            except (AdherenceError, ValueError) as exc:
                rejected.append((line_no, str(exc)))
                continue
            self.store.append(patient_id, RecordType.LAB, result.to_dict(), self.now())
            accepted += 1
        return accepted, rejected

    def close_day(
        self, through_day: date, patient_id: str | None = None
    ) -> dict[str, list[Award]]:
        """Fold every definitively-over day up to through_day into the game
        ledger, appending award events and refreshing snapshots."""
        ids = [patient_id] if patient_id else self.store.list_patient_ids()
        results: dict[str, list[Award]] = {}
        for pid in ids:
            with self.store.patient_lock(pid):
                results[pid] = self._close_patient_locked(pid, through_day)
        return results

    def _close_patient_locked(
        self,
        patient_id: str,
        through_day: date,
        override: dict[date, DayOutcome] | None = None,
    ) -> list[Award]:
        record = self.store.get_patient(patient_id)
        tz = record.patient.timezone
        records = self.store.read_records(patient_id)
        schedules = _schedules(records)
        if not schedules:
            return []
        events = EventIndex(_intakes(records), tz)
        snapshot = self.store.read_snapshot(patient_id)
        ledger = snapshot.ledger if snapshot else GameLedger(patient_id=patient_id)
        start = (
            ledger.last_applied_day + timedelta(days=1)
            if ledger.last_applied_day
            else min(s.effective_from for s in schedules)
        )
        now = self.now()
        emitted: list[Award] = []
        day = start
        while day <= through_day:
            schedule = _schedule_for(schedules, day)
            if override and day in override:
                outcome = override[day]
            elif schedule is None:
                break
            else:
                outcome = day_outcome(schedule, events, day, now, tz)
            if not outcome.closed:
                break
            ledger, awards = apply_day(ledger, outcome)
            for award in awards:
                self.store.append(patient_id, RecordType.AWARD, award.to_dict(), now)
            emitted.extend(awards)
            day += timedelta(days=1)
        summary = None
        if ledger.last_applied_day is not None:
            first = min(s.effective_from for s in schedules)
            outcomes = self._outcomes_through(
                schedules, events, first, ledger.last_applied_day, now, tz
            )
            summary = summarize(outcomes, first, ledger.last_applied_day)
        self.store.write_snapshot(
            Snapshot(
                patient_id=patient_id,
                as_of_seq=self.store.last_seq(patient_id),
                ledger=ledger,
                summary=summary,
            )
        )
        return emitted

    # -- queries ------------------------------------------------------------

    def replay_ledger(
        self, patient_id: str, through_day: date | None = None
    ) -> tuple[GameLedger, list[DayOutcome]]:
        """Rebuild game state from the log alone (no snapshot), folding every
        definitively-closed day up to through_day (default: all of them)."""
        record = self.store.get_patient(patient_id)
        tz = record.patient.timezone
        records = self.store.read_records(patient_id)
        schedules = _schedules(records)
        ledger = GameLedger(patient_id=patient_id)
        if not schedules:
            return ledger, []
        events = EventIndex(_intakes(records), tz)
        now = self.now()
        outcomes: list[DayOutcome] = []
        day = min(s.effective_from for s in schedules)
        while through_day is None or day <= through_day:
            schedule = _schedule_for(schedules, day)
            if schedule is None:
                break
            outcome = day_outcome(schedule, events, day, now, tz)
            if not outcome.closed:
                break
            outcomes.append(outcome)
            ledger, _ = apply_day(ledger, outcome)
            day += timedelta(days=1)
        return ledger, outcomes

    def game_view(self, patient_id: str) -> GameLedger:
        self.store.get_patient(patient_id)
        snapshot = self.store.read_snapshot(patient_id)
        if snapshot is not None:
            return snapshot.ledger
        return GameLedger(patient_id=patient_id)

    def _today_section(
        self, record: PatientRecord, records: list[EventRecord], ledger: GameLedger
    ) -> dict:
        patient_id = record.patient.patient_id
        tz = record.patient.timezone
        now = self.now()
        today = local_day(now, tz)
        schedule = _schedule_for(_schedules(records), today)
        events = _intakes(records)
        slots = []
        logged: set[str] = set()
        if schedule is not None:
            for slot in due_slots(schedule, today, tz):
                status = classify_slot(slot, events, now, tz)
                if status != SlotStatus.PENDING:
                    logged.add(slot.slot_id)
                slots.append({**slot.to_dict(), "status": status.value})
        prefs = record.prefs or NotificationPrefs(patient_id=patient_id)
        plan: ReminderPlan | None = None
        if schedule is not None:
            plan = reminder_plan(schedule, prefs, today, logged, tz)
        return {
            "patient_id": patient_id,
            "day": today.isoformat(),
            "now": now.isoformat(),
            "slots": slots,
            "reminders": plan.to_dict() if plan else None,
            "streak_days": ledger.current_streak_days,
            "points": ledger.total_points,
        }

    def today_view(self, patient_id: str) -> dict:
        record = self.store.get_patient(patient_id)
        with self.store.patient_lock(patient_id):
            records = self.store.read_records(patient_id)
            snapshot = self.store.read_snapshot(patient_id)
        ledger = snapshot.ledger if snapshot else GameLedger(patient_id=patient_id)
        return self._today_section(record, records, ledger)

    def dashboard(self, patient_id: str, window_start: date, window_end: date) -> dict:
        """Composite view for the UI, all parts computed from one log read.

        The game section mirrors /game: the awarded snapshot state, not a
        speculative replay of days the close step has not folded yet.
        """
        record = self.store.get_patient(patient_id)
        tz = record.patient.timezone
        now = self.now()
        with self.store.patient_lock(patient_id):
            records = self.store.read_records(patient_id)
            snapshot = self.store.read_snapshot(patient_id)
        ledger = snapshot.ledger if snapshot else GameLedger(patient_id=patient_id)
        schedules = _schedules(records)
        events = EventIndex(_intakes(records), tz)
        outcomes: list[DayOutcome] = []
        if schedules:
            day = min(s.effective_from for s in schedules)
            while True:
                schedule = _schedule_for(schedules, day)
                if schedule is None:
                    break
                outcome = day_outcome(schedule, events, day, now, tz)
                if not outcome.closed:
                    break
                outcomes.append(outcome)
                day += timedelta(days=1)
        summary = summarize(outcomes, window_start, window_end)
        labs = LabSeries(patient_id=patient_id, observations=tuple(_labs(records)))
        in_window = [
            lab for lab in labs.observations if window_start <= lab.draw_date <= window_end
        ]
        cv: CvResult | None = None
        cv_unavailable: str | None = None
        try:
            cv = coefficient_of_variation(labs, window_start, window_end)
        except InsufficientDataError as exc:
            cv_unavailable = str(exc)
        return {
            "patient_id": patient_id,
            "window": {"start": window_start.isoformat(), "end": window_end.isoformat()},
            "today": self._today_section(record, records, ledger),
            "game": ledger.to_dict(),
            "summary": summary.to_dict(),
            "cv": cv.to_dict() if cv else None,
            "cv_unavailable": cv_unavailable,
            "labs": [lab.to_dict() for lab in in_window],
        }

    def cohort_view(
        self, window_start: date, window_end: date, app_arm: str = "app"
    ) -> CohortReport:
        patients: list[CohortPatient] = []
        for pid in self.store.list_patient_ids():
            record = self.store.get_patient(pid)
            if record.arm is None:
                continue
            ledger, outcomes = self.replay_ledger(pid)
            with self.store.patient_lock(pid):
                records = self.store.read_records(pid)
            labs = LabSeries(patient_id=pid, observations=tuple(_labs(records)))
            summary = summarize(outcomes, window_start, window_end)
            patients.append(
                CohortPatient(
                    patient_id=pid,
                    arm=record.arm,
                    labs=labs,
                    summary=summary,
                    ledger=ledger,
                )
            )
        return cohort_report(patients, window_start, window_end, app_arm=app_arm)

    def verify_snapshot(self, patient_id: str) -> bool:
        """Replay-from-zero must reproduce the stored snapshot ledger."""
        snapshot = self.store.read_snapshot(patient_id)
        if snapshot is None:
            return True
        ledger, _ = self.replay_ledger(
            patient_id, through_day=snapshot.ledger.last_applied_day
        )
        return ledger == snapshot.ledger

    # -- internal helpers ---------------------------------------------------

    def _outcomes_through(
        self,
        schedules: list[DoseSchedule],
        events: "EventIndex | list[IntakeEvent]",
        first: date,
        last: date,
        now: datetime,
        tz: str,
    ) -> list[DayOutcome]:
        outcomes = []
        day = first
        while day <= last:
            schedule = _schedule_for(schedules, day)
            if schedule is None:
                break
            outcomes.append(day_outcome(schedule, events, day, now, tz))
            day += timedelta(days=1)
        return outcomes


def _schedules(records: list[EventRecord]) -> list[DoseSchedule]:
    schedules = [
        DoseSchedule.from_dict(r.payload)
        for r in records
        if r.record_type == RecordType.SCHEDULE_CHANGE
    ]
    schedules.sort(key=lambda s: s.effective_from)
    return schedules


def _schedule_for(schedules: list[DoseSchedule], day: date) -> DoseSchedule | None:
    current = None
    for schedule in schedules:
        if schedule.effective_from <= day:
            current = schedule
        else:
            break
    return current


def _intakes(records: list[EventRecord]) -> list[IntakeEvent]:
    return [
        IntakeEvent.from_dict(r.payload)
        for r in records
        if r.record_type == RecordType.INTAKE
    ]


def _labs(records: list[EventRecord]) -> list[LabResult]:
    labs = [
        LabResult.from_dict(r.payload) for r in records if r.record_type == RecordType.LAB
    ]
    labs.sort(key=lambda lab: lab.draw_date)
    return labs

