"""Per-day adherence outcomes, streak bookkeeping, and missed-dose rates.

A day is adherent only when every scheduled slot was taken: an explicit skip
is an omission and counts against streaks exactly like silence. Days freeze
at local midnight plus a grace period, after which the outcome is final and
feeds the game ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta
from zoneinfo import ZoneInfo

from .core import (
    DAY_CLOSE_GRACE_HOURS,
    DataError,
    DoseSchedule,
    IntakeEvent,
    day_end,
    parse_instant,
)
from .scheduler import EventIndex, SlotStatus, classify_slot, due_slots


@dataclass(frozen=True)
class DayOutcome:
    """Aggregated slot statuses for one patient-day.

    Once closed, scheduled == taken + skipped + missed. An open day always
    reports adherent=False; adherence is only ever decided on closed days.
    """

    patient_id: str
    day: date
    scheduled: int
    taken: int
    skipped: int
    missed: int
    adherent: bool
    closed: bool

    @property
    def pending(self) -> int:
        return self.scheduled - self.taken - self.skipped - self.missed

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "day": self.day.isoformat(),
            "scheduled": self.scheduled,
            "taken": self.taken,
            "skipped": self.skipped,
            "missed": self.missed,
            "adherent": self.adherent,
            "closed": self.closed,
        }


@dataclass(frozen=True)
class StreakStats:
    current: int
    longest: int
    runs: tuple[int, ...]


@dataclass(frozen=True)
class AdherenceSummary:
    """Period-level adherence rollup consumed by dashboards and reports.

    total_missed counts missed and explicitly skipped doses alike.
    """

    patient_id: str
    period_start: date
    period_end: date
    total_scheduled: int
    total_missed: int
    missed_dose_rate: float
    current_streak_days: int
    longest_streak_days: int

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "period_start": self.period_start.isoformat(),
            "period_end": self.period_end.isoformat(),
            "total_scheduled": self.total_scheduled,
            "total_missed": self.total_missed,
            "missed_dose_rate": self.missed_dose_rate,
            "current_streak_days": self.current_streak_days,
            "longest_streak_days": self.longest_streak_days,
        }


def close_instant(
    schedule: DoseSchedule | None, day: date, timezone: str | ZoneInfo
) -> datetime:
    """Instant at which a day freezes: local midnight plus grace, or the end
    of the latest dose window if one spills further."""
    frozen_at = day_end(day, timezone) + timedelta(hours=DAY_CLOSE_GRACE_HOURS)
    if schedule is not None:
        for slot in due_slots(schedule, day, timezone):
            if slot.window_end > frozen_at:
                frozen_at = slot.window_end
    return frozen_at


def day_outcome(
    schedule: DoseSchedule,
    events: list[IntakeEvent] | EventIndex,
    day: date,
    now: datetime | str,
    timezone: str | ZoneInfo,
) -> DayOutcome:
    """Fold classify_slot over the day's due slots into one outcome."""
    now_ts = parse_instant(now)
    slots = due_slots(schedule, day, timezone)
    counts = {status: 0 for status in SlotStatus}
    for slot in slots:
        counts[classify_slot(slot, events, now_ts, timezone)] += 1
    taken = counts[SlotStatus.TAKEN_ON_TIME] + counts[SlotStatus.TAKEN_LATE]
    closed = now_ts >= close_instant(schedule, day, timezone)
    adherent = (
        closed
        and len(slots) > 0
        and counts[SlotStatus.MISSED] == 0
        and counts[SlotStatus.SKIPPED] == 0
        and counts[SlotStatus.PENDING] == 0
    )
    return DayOutcome(
        patient_id=schedule.patient_id,
        day=day,
        scheduled=len(slots),
        taken=taken,
        skipped=counts[SlotStatus.SKIPPED],
        missed=counts[SlotStatus.MISSED],
        adherent=adherent,
        closed=closed,
    )


def _check_ordered(outcomes: list[DayOutcome]) -> None:
    for a, b in zip(outcomes, outcomes[1:]):
        if b.day == a.day:
            raise DataError(f"duplicate day outcome: {a.day}")
        if b.day < a.day:
            raise DataError(f"outcomes not sorted by day at {b.day}")


def streaks(outcomes: list[DayOutcome]) -> StreakStats:
    """Maximal runs of consecutive adherent calendar days.

    A missing day record breaks a streak just like a non-adherent day does;
    the current streak counts back from the most recent closed day. Open
    (not yet closed) days are ignored.
    """
    _check_ordered(outcomes)
    closed = [o for o in outcomes if o.closed]
    runs: list[int] = []
    run = 0
    prev_day: date | None = None
    for outcome in closed:
        contiguous = prev_day is not None and outcome.day == prev_day + timedelta(days=1)
        if outcome.adherent:
            if run > 0 and contiguous:
                run += 1
            else:
                if run:
                    runs.append(run)
                run = 1
        else:
            if run:
                runs.append(run)
            run = 0
        prev_day = outcome.day
    if run:
        runs.append(run)
    current = run  # nonzero only when the most recent closed day is adherent
    longest = max(runs, default=0)
    return StreakStats(current=current, longest=longest, runs=tuple(runs))


def missed_dose_rate(
    outcomes: list[DayOutcome], period_start: date, period_end: date
) -> float:
    """Missed plus skipped doses over scheduled doses, closed days only.

    Returns 0.0 when nothing was scheduled in the period.
    """
    if period_start > period_end:
        raise DataError("period start after period end")
    scheduled = 0
    non_adherent = 0
    for o in outcomes:
        if o.closed and period_start <= o.day <= period_end:
            scheduled += o.scheduled
            non_adherent += o.missed + o.skipped
    return non_adherent / scheduled if scheduled else 0.0


def summarize(
    outcomes: list[DayOutcome], period_start: date, period_end: date
) -> AdherenceSummary:
    """Roll a window of outcomes up into an AdherenceSummary."""
    window = [o for o in outcomes if period_start <= o.day <= period_end]
    _check_ordered(window)
    stats = streaks(window)
    scheduled = sum(o.scheduled for o in window if o.closed)
    missed = sum(o.missed + o.skipped for o in window if o.closed)
    patient_id = window[0].patient_id if window else ""
    return AdherenceSummary(
        patient_id=patient_id,
        period_start=period_start,
        period_end=period_end,
        total_scheduled=scheduled,
        total_missed=missed,
        missed_dose_rate=missed / scheduled if scheduled else 0.0,
        current_streak_days=stats.current,
        longest_streak_days=stats.longest,
    )
