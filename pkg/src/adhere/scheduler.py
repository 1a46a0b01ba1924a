"""Dose due-times, gentle reminder planning, and per-slot status classification.

Reminders never express failure: the tone is a constant "gentle", repeats are
bounded, and a logged slot produces no further fires. Missed detection is
deliberately lenient: a dose logged any time before the end of the local day
counts as taken-late, never missed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from enum import Enum
from zoneinfo import ZoneInfo

from .core import (
    DataError,
    DataQualityWarning,
    DoseSchedule,
    IntakeEvent,
    IntakeKind,
    day_end,
    parse_instant,
    parse_time_of_day,
    resolve_zone,
)

DEFAULT_REPEAT_INTERVAL_MINUTES = 60
DEFAULT_MAX_REPEATS = 2

REMINDER_TONE = "gentle"


class SlotStatus(str, Enum):
    PENDING = "pending"
    TAKEN_ON_TIME = "taken_on_time"
    TAKEN_LATE = "taken_late"
    SKIPPED = "skipped"
    MISSED = "missed"


@dataclass(frozen=True)
class NotificationPrefs:
    """Per-patient reminder timing: slot overrides, repeat cadence, repeat cap."""

    patient_id: str
    overrides: dict[str, time] = field(default_factory=dict)
    gentle_repeat_interval: int = DEFAULT_REPEAT_INTERVAL_MINUTES  # minutes
    max_repeats_per_slot: int = DEFAULT_MAX_REPEATS

    def __post_init__(self) -> None:
        if self.max_repeats_per_slot < 0:
            raise DataError("max_repeats_per_slot must be >= 0")
        if self.gentle_repeat_interval <= 0:
            raise DataError("gentle_repeat_interval must be positive")

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "overrides": {k: v.strftime("%H:%M") for k, v in self.overrides.items()},
            "gentle_repeat_interval": self.gentle_repeat_interval,
            "max_repeats_per_slot": self.max_repeats_per_slot,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NotificationPrefs":
        return cls(
            patient_id=data["patient_id"],
            overrides={
                k: parse_time_of_day(v) for k, v in data.get("overrides", {}).items()
            },
            gentle_repeat_interval=int(
                data.get("gentle_repeat_interval", DEFAULT_REPEAT_INTERVAL_MINUTES)
            ),
            max_repeats_per_slot=int(data.get("max_repeats_per_slot", DEFAULT_MAX_REPEATS)),
        )


@dataclass(frozen=True)
class DueSlot:
    """One slot due on a given day, with its window expanded to instants."""

    slot_id: str
    med_name: str
    is_immunosuppressant: bool
    day: date
    nominal: datetime
    window_start: datetime
    window_end: datetime

    def expiry(self, timezone: str | ZoneInfo) -> datetime:
        """Instant after which an unlogged slot counts as missed.

        The window may spill past midnight, so the slot stays classifiable
        until both the window and the local day are over.
        """
        return max(self.window_end, day_end(self.day, timezone))

    def to_dict(self) -> dict:
        return {
            "slot_id": self.slot_id,
            "med_name": self.med_name,
            "is_immunosuppressant": self.is_immunosuppressant,
            "day": self.day.isoformat(),
            "nominal": self.nominal.isoformat(),
            "window_start": self.window_start.isoformat(),
            "window_end": self.window_end.isoformat(),
        }


@dataclass(frozen=True)
class ReminderEntry:
    slot_id: str
    fire_instants: tuple[datetime, ...]
    tone: str = REMINDER_TONE

    def to_dict(self) -> dict:
        return {
            "slot_id": self.slot_id,
            "fire_instants": [t.isoformat() for t in self.fire_instants],
            "tone": self.tone,
        }


@dataclass(frozen=True)
class ReminderPlan:
    day: date
    entries: tuple[ReminderEntry, ...]

    def to_dict(self) -> dict:
        return {
            "day": self.day.isoformat(),
            "entries": [e.to_dict() for e in self.entries],
        }


def due_slots(
    schedule: DoseSchedule, day: date, timezone: str | ZoneInfo
) -> list[DueSlot]:
    """Expand a schedule into the slots due on a day, in the patient's zone.

    Days before the schedule's effective_from have nothing due.
    """
    if day < schedule.effective_from:
        return []
    tz = resolve_zone(timezone)
    out: list[DueSlot] = []
    for med in schedule.medications:
        for slot in med.slots:
            nominal = datetime.combine(day, slot.nominal_time, tzinfo=tz)
            out.append(
                DueSlot(
                    slot_id=slot.slot_id,
                    med_name=med.med_name,
                    is_immunosuppressant=med.is_immunosuppressant,
                    day=day,
                    nominal=nominal,
                    window_start=nominal - timedelta(minutes=slot.window_before),
                    window_end=nominal + timedelta(minutes=slot.window_after),
                )
            )
    return out


def reminder_plan(
    schedule: DoseSchedule,
    prefs: NotificationPrefs,
    day: date,
    taken_so_far: set[str],
    timezone: str | ZoneInfo,
) -> ReminderPlan:
    """Plan gentle reminder fires for the slots not yet logged today.

    First fire at the per-slot override time if present, else the nominal
    time; then up to max_repeats_per_slot repeats at the repeat interval.
    Logged slots get no entry; nagging after compliance is a punishment.
    """
    tz = resolve_zone(timezone)
    interval = timedelta(minutes=prefs.gentle_repeat_interval)
    entries: list[ReminderEntry] = []
    for slot in due_slots(schedule, day, tz):
        if slot.slot_id in taken_so_far:
            continue
        start_time = prefs.overrides.get(slot.slot_id)
        first = (
            datetime.combine(day, start_time, tzinfo=tz)
            if start_time is not None
            else slot.nominal
        )
        fires = tuple(first + i * interval for i in range(1 + prefs.max_repeats_per_slot))
        entries.append(ReminderEntry(slot_id=slot.slot_id, fire_instants=fires))
    return ReminderPlan(day=day, entries=tuple(entries))


class EventIndex:
    """Intake events bucketed by (slot, local day) for fast day-by-day replay.

    Window matching may reach into a neighboring calendar day, so candidate
    lookup pulls the adjacent buckets too; the precise filter still runs.
    """

    def __init__(self, events: list[IntakeEvent], timezone: str | ZoneInfo):
        tz = resolve_zone(timezone)
        self._buckets: dict[tuple[str, date], list[IntakeEvent]] = {}
        for event in sorted(events, key=lambda e: e.timestamp):
            key = (event.slot_id, event.timestamp.astimezone(tz).date())
            self._buckets.setdefault(key, []).append(event)

    def candidates(self, slot_id: str, day: date) -> list[IntakeEvent]:
        out: list[IntakeEvent] = []
        for offset in (-1, 0, 1):
            out.extend(self._buckets.get((slot_id, day + timedelta(days=offset)), []))
        return out


def events_for_slot_day(
    slot: DueSlot,
    events: list[IntakeEvent] | EventIndex,
    timezone: str | ZoneInfo,
) -> list[IntakeEvent]:
    """Events belonging to this slot on this day.

    An event belongs if it falls inside the slot's window (which may cross
    midnight) or anywhere in the slot's local day.
    """
    tz = resolve_zone(timezone)
    if isinstance(events, EventIndex):
        candidates = events.candidates(slot.slot_id, slot.day)
    else:
        candidates = [e for e in events if e.slot_id == slot.slot_id]
    matched = [
        e
        for e in candidates
        if slot.window_start <= e.timestamp <= slot.window_end
        or e.timestamp.astimezone(tz).date() == slot.day
    ]
    matched.sort(key=lambda e: e.timestamp)
    return matched


def classify_slot(
    slot: DueSlot,
    events: list[IntakeEvent] | EventIndex,
    now: datetime | str,
    timezone: str | ZoneInfo,
) -> SlotStatus:
    """Resolve one slot-day to a status.

    A taken event beats an explicit skip whenever both exist (the real
    intake is the outcome that matters clinically); mixed records are
    surfaced as a data-quality warning. With no events the slot is pending
    until both its window and its local day are over, then missed.
    """
    now_ts = parse_instant(now)
    relevant = events_for_slot_day(slot, events, timezone)
    if relevant:
        kinds = {e.kind for e in relevant}
        if len(kinds) > 1:
            warnings.warn(
                f"slot {slot.slot_id} on {slot.day}: contradictory taken/skipped records",
                DataQualityWarning,
                stacklevel=2,
            )
        taken = [e for e in relevant if e.kind == IntakeKind.TAKEN]
        if taken:
            first = taken[0]
            if slot.window_start <= first.timestamp <= slot.window_end:
                return SlotStatus.TAKEN_ON_TIME
            return SlotStatus.TAKEN_LATE
        return SlotStatus.SKIPPED
    if now_ts >= slot.expiry(timezone):
        return SlotStatus.MISSED
    return SlotStatus.PENDING
