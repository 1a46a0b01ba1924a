"""Domain types and calendar semantics shared by every other module.

A "day" is always the calendar date in the patient's own timezone: streaks
are patient-facing and must match the patient's clock, so day boundaries
are never computed in UTC.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from enum import Enum
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

# Window applied to a dose slot when the schedule does not specify one.
DEFAULT_WINDOW_MINUTES = 120

# A day stays open for retroactive logging this long past local midnight.
DAY_CLOSE_GRACE_HOURS = 6


class AdherenceError(Exception):
    """Base class for domain errors raised by this package."""


class ConfigurationError(AdherenceError):
    """Bad configuration, e.g. an unresolvable timezone name."""


class DataError(AdherenceError):
    """Malformed or contradictory input data."""


class InsufficientDataError(AdherenceError):
    """Not enough observations to compute the requested statistic."""


class DataQualityWarning(UserWarning):
    """Non-fatal inconsistency in recorded events (e.g. taken + skipped)."""


class Organ(str, Enum):
    LIVER = "liver"
    KIDNEY = "kidney"
    HEART = "heart"
    LUNG = "lung"
    INTESTINE = "intestine"
    PANCREAS = "pancreas"


class IntakeKind(str, Enum):
    TAKEN = "taken"
    SKIPPED = "skipped"


class Analyte(str, Enum):
    TACROLIMUS = "tacrolimus"


def resolve_zone(name: str | ZoneInfo) -> ZoneInfo:
    if isinstance(name, ZoneInfo):
        return name
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ConfigurationError(f"unknown timezone: {name!r}") from exc


def parse_instant(value: str | datetime) -> datetime:
    """Parse an RFC3339 timestamp into an aware datetime.

    Accepts a 'Z' suffix (Python 3.10's fromisoformat does not). Naive
    timestamps are rejected: every recorded instant must carry an offset.
    """
    if isinstance(value, datetime):
        ts = value
    else:
        try:
            ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise DataError(f"unparseable timestamp: {value!r}") from exc
    if ts.tzinfo is None:
        raise DataError(f"timestamp must carry a UTC offset: {value!r}")
    return ts


def parse_time_of_day(value: str | time) -> time:
    if isinstance(value, time):
        return value
    try:
        hh, mm = value.split(":")
        return time(int(hh), int(mm))
    except (ValueError, AttributeError) as exc:
        raise DataError(f"invalid HH:MM time-of-day: {value!r}") from exc


def local_day(timestamp: str | datetime, timezone: str | ZoneInfo) -> date:
    """Calendar date of an instant in the given zone. Total and deterministic."""
    ts = parse_instant(timestamp)
    return ts.astimezone(resolve_zone(timezone)).date()


def day_start(day: date, timezone: str | ZoneInfo) -> datetime:
    return datetime.combine(day, time(0, 0), tzinfo=resolve_zone(timezone))


def day_end(day: date, timezone: str | ZoneInfo) -> datetime:
    """First instant of the next local day."""
    return day_start(day + timedelta(days=1), timezone)


@dataclass(frozen=True)
class Patient:
    """One transplant recipient.

    patient_id is an opaque unique string; timezone is an IANA zone name
    and fixes the patient's day boundaries everywhere downstream.
    """

    patient_id: str
    transplant_date: date
    organ: Organ
    timezone: str = "UTC"

    def __post_init__(self) -> None:
        if not self.patient_id:
            raise DataError("patient_id must be non-empty")
        if self.transplant_date > date.today():
            raise DataError("transplant_date cannot be in the future")
        resolve_zone(self.timezone)

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "transplant_date": self.transplant_date.isoformat(),
            "organ": self.organ.value,
            "timezone": self.timezone,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Patient":
        return cls(
            patient_id=data["patient_id"],
            transplant_date=date.fromisoformat(data["transplant_date"]),
            organ=Organ(data["organ"]),
            timezone=data.get("timezone", "UTC"),
        )


@dataclass(frozen=True)
class DoseSlot:
    """One daily dose slot: a nominal local time plus an on-time window."""

    slot_id: str
    nominal_time: time
    window_before: int = DEFAULT_WINDOW_MINUTES  # minutes
    window_after: int = DEFAULT_WINDOW_MINUTES  # minutes

    def __post_init__(self) -> None:
        if not self.slot_id:
            raise DataError("slot_id must be non-empty")
        if self.window_before < 0 or self.window_after < 0:
            raise DataError(f"slot {self.slot_id}: windows must be >= 0")

    def to_dict(self) -> dict:
        return {
            "slot_id": self.slot_id,
            "nominal_time": self.nominal_time.strftime("%H:%M"),
            "window_before": self.window_before,
            "window_after": self.window_after,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DoseSlot":
        return cls(
            slot_id=data["slot_id"],
            nominal_time=parse_time_of_day(data["nominal_time"]),
            window_before=int(data.get("window_before", DEFAULT_WINDOW_MINUTES)),
            window_after=int(data.get("window_after", DEFAULT_WINDOW_MINUTES)),
        )


@dataclass(frozen=True)
class MedicationLine:
    """A prescribed medication and its daily slots.

    is_immunosuppressant marks the anti-rejection medicines; analytics can
    filter on it, but scoring covers every scheduled slot.
    """

    med_name: str
    is_immunosuppressant: bool
    slots: tuple[DoseSlot, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(self.slots))

    def to_dict(self) -> dict:
        return {
            "med_name": self.med_name,
            "is_immunosuppressant": self.is_immunosuppressant,
            "slots": [s.to_dict() for s in self.slots],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MedicationLine":
        return cls(
            med_name=data["med_name"],
            is_immunosuppressant=bool(data["is_immunosuppressant"]),
            slots=tuple(DoseSlot.from_dict(s) for s in data.get("slots", [])),
        )


@dataclass(frozen=True)
class DoseSchedule:
    """A patient's regimen in force from effective_from onward.

    Schedules are versioned by effective_from; events replay against the
    schedule in force on their day.
    """

    patient_id: str
    medications: tuple[MedicationLine, ...]
    effective_from: date

    def __post_init__(self) -> None:
        object.__setattr__(self, "medications", tuple(self.medications))

    def slot_ids(self) -> list[str]:
        return [s.slot_id for m in self.medications for s in m.slots]

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "effective_from": self.effective_from.isoformat(),
            "medications": [m.to_dict() for m in self.medications],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DoseSchedule":
        return cls(
            patient_id=data["patient_id"],
            medications=tuple(
                MedicationLine.from_dict(m) for m in data.get("medications", [])
            ),
            effective_from=date.fromisoformat(data["effective_from"]),
        )


@dataclass(frozen=True)
class IntakeEvent:
    """The atomic adherence observation: one slot was taken or skipped."""

    patient_id: str
    slot_id: str
    timestamp: datetime
    kind: IntakeKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", parse_instant(self.timestamp))
        object.__setattr__(self, "kind", IntakeKind(self.kind))

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "slot_id": self.slot_id,
            "ts": self.timestamp.isoformat(),
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntakeEvent":
        return cls(
            patient_id=data["patient_id"],
            slot_id=data["slot_id"],
            timestamp=parse_instant(data["ts"]),
            kind=IntakeKind(data["kind"]),
        )


@dataclass(frozen=True)
class LabResult:
    """A dated tacrolimus trough level in ng/mL."""

    patient_id: str
    draw_date: date
    value: float
    analyte: Analyte = Analyte.TACROLIMUS

    def __post_init__(self) -> None:
        import math

        if not math.isfinite(self.value) or self.value <= 0:
            raise DataError(
                f"lab value must be strictly positive and finite, got {self.value}"
            )

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "draw_date": self.draw_date.isoformat(),
            "analyte": self.analyte.value,
            "value_ng_ml": self.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabResult":
        return cls(
            patient_id=data["patient_id"],
            draw_date=date.fromisoformat(data["draw_date"]),
            value=float(data["value_ng_ml"]),
            analyte=Analyte(data.get("analyte", "tacrolimus")),
        )


@dataclass(frozen=True)
class Violation:
    """One failed schedule invariant, naming the offending field."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def validate_schedule(schedule: DoseSchedule) -> list[Violation]:
    """Check every schedule invariant; an empty list means the schedule is ok.

    A schedule that validates clean replays any event stream without schema
    errors downstream, so this is the single admission gate.
    """
    violations: list[Violation] = []
    if not schedule.patient_id:
        violations.append(Violation("patient_id", "empty"))
    if not schedule.medications:
        violations.append(Violation("medications", "empty"))
    seen: set[str] = set()
    for med in schedule.medications:
        if not med.med_name:
            violations.append(Violation("med_name", "empty"))
        if not med.slots:
            violations.append(Violation(f"{med.med_name}.slots", "empty"))
        previous: time | None = None
        for slot in med.slots:
            if slot.slot_id in seen:
                violations.append(Violation("slot_id", f"duplicate: {slot.slot_id}"))
            seen.add(slot.slot_id)
            if previous is not None and slot.nominal_time <= previous:
                violations.append(
                    Violation(
                        f"{med.med_name}.slots",
                        f"nominal times not strictly increasing at {slot.slot_id}",
                    )
                )
            previous = slot.nominal_time
    return violations
