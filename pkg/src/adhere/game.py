"""The reward state machine: daily points, 7-day challenges, milestone badges.

One point per adherent day; one challenge per completed 7-day block inside an
unbroken streak (day 14 of one streak completes the second challenge, no
re-enrollment); collectible badges at 1, 3, 5, 10 and 15 completed
challenges. There are no bonus points, no decay, and no penalties of any
kind; a broken streak resets the streak counter and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, timedelta
from enum import Enum

from .core import AdherenceError
from .ledger import DayOutcome

CHALLENGE_LENGTH_DAYS = 7

MILESTONES = (1, 3, 5, 10, 15)

BADGES = {
    1: "first-challenge",
    3: "three-challenges",
    5: "five-challenges",
    10: "ten-challenges",
    15: "full-collection",
}


class ReplayError(AdherenceError):
    """Outcome stream is not contiguous with the ledger's last applied day."""


class AlreadyAppliedError(ReplayError):
    """The outcome's day was already folded into the ledger."""


class AwardKind(str, Enum):
    DAILY_POINT = "daily_point"
    CHALLENGE_COMPLETED = "challenge_completed"
    MILESTONE_REACHED = "milestone_reached"


@dataclass(frozen=True)
class Award:
    """One emitted reward event; within a day the order is always
    daily_point, then challenge_completed, then milestone_reached."""

    kind: AwardKind
    day: date
    detail: int  # points granted, challenge ordinal, or milestone value

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "day": self.day.isoformat(), "detail": self.detail}

    @classmethod
    def from_dict(cls, data: dict) -> "Award":
        return cls(
            kind=AwardKind(data["kind"]),
            day=date.fromisoformat(data["day"]),
            detail=int(data["detail"]),
        )


@dataclass(frozen=True)
class Reward:
    milestone: int
    badge_id: str
    earned_on: date

    def to_dict(self) -> dict:
        return {
            "milestone": self.milestone,
            "badge_id": self.badge_id,
            "earned_on": self.earned_on.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Reward":
        return cls(
            milestone=int(data["milestone"]),
            badge_id=data["badge_id"],
            earned_on=date.fromisoformat(data["earned_on"]),
        )


@dataclass(frozen=True)
class GameLedger:
    """Replayable gamification state; every field except the streak counter
    is monotone under apply_day."""

    patient_id: str
    total_points: int = 0
    challenges_completed: int = 0
    current_streak_days: int = 0
    milestones_reached: tuple[int, ...] = ()
    rewards: tuple[Reward, ...] = ()
    last_applied_day: date | None = None

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "total_points": self.total_points,
            "challenges_completed": self.challenges_completed,
            "current_streak_days": self.current_streak_days,
            "milestones_reached": list(self.milestones_reached),
            "rewards": [r.to_dict() for r in self.rewards],
            "last_applied_day": (
                self.last_applied_day.isoformat() if self.last_applied_day else None
            ),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GameLedger":
        return cls(
            patient_id=data["patient_id"],
            total_points=int(data["total_points"]),
            challenges_completed=int(data["challenges_completed"]),
            current_streak_days=int(data["current_streak_days"]),
            milestones_reached=tuple(data.get("milestones_reached", [])),
            rewards=tuple(Reward.from_dict(r) for r in data.get("rewards", [])),
            last_applied_day=(
                date.fromisoformat(data["last_applied_day"])
                if data.get("last_applied_day")
                else None
            ),
        )


def apply_day(ledger: GameLedger, outcome: DayOutcome) -> tuple[GameLedger, list[Award]]:
    """Fold one closed day outcome into the ledger.

    Replay must be contiguous: the first applied day seeds the ledger, after
    which each outcome must be exactly one day after the last.
    """
    if not outcome.closed:
        raise ReplayError(f"day {outcome.day} is still open")
    if ledger.last_applied_day is not None:
        if outcome.day <= ledger.last_applied_day:
            raise AlreadyAppliedError(
                f"day {outcome.day} already applied (ledger at {ledger.last_applied_day})"
            )
        if outcome.day != ledger.last_applied_day + timedelta(days=1):
            raise ReplayError(
                f"non-contiguous replay: expected {ledger.last_applied_day + timedelta(days=1)}, "
                f"got {outcome.day}"
            )

    awards: list[Award] = []
    if not outcome.adherent:
        new = replace(ledger, current_streak_days=0, last_applied_day=outcome.day)
        return new, awards

    streak = ledger.current_streak_days + 1
    points = ledger.total_points + 1
    awards.append(Award(kind=AwardKind.DAILY_POINT, day=outcome.day, detail=1))

    challenges = ledger.challenges_completed
    milestones = list(ledger.milestones_reached)
    rewards = list(ledger.rewards)
    if streak % CHALLENGE_LENGTH_DAYS == 0:
        challenges += 1
        awards.append(
            Award(kind=AwardKind.CHALLENGE_COMPLETED, day=outcome.day, detail=challenges)
        )
        for milestone in MILESTONES:
            if milestone <= challenges and milestone not in milestones:
                milestones.append(milestone)
                rewards.append(
                    Reward(
                        milestone=milestone,
                        badge_id=BADGES[milestone],
                        earned_on=outcome.day,
                    )
                )
                awards.append(
                    Award(
                        kind=AwardKind.MILESTONE_REACHED,
                        day=outcome.day,
                        detail=milestone,
                    )
                )

    new = GameLedger(
        patient_id=ledger.patient_id,
        total_points=points,
        challenges_completed=challenges,
        current_streak_days=streak,
        milestones_reached=tuple(milestones),
        rewards=tuple(rewards),
        last_applied_day=outcome.day,
    )
    return new, awards


def score_trace(bits: str, start: date = date(2024, 1, 1)) -> tuple[int, int, set[int]]:
    """Batch-score a daily adherence bit-string, oldest day first.

    '1' is an adherent day, '0' anything else. Equivalent to folding
    apply_day from an empty ledger; exposed as the oracle entry point.
    """
    ledger = GameLedger(patient_id="trace")
    for i, bit in enumerate(bits):
        if bit not in "01":
            raise ValueError(f"trace must be a string of 0s and 1s, got {bit!r}")
        day = start + timedelta(days=i)
        outcome = DayOutcome(
            patient_id="trace",
            day=day,
            scheduled=1,
            taken=1 if bit == "1" else 0,
            skipped=0,
            missed=0 if bit == "1" else 1,
            adherent=bit == "1",
            closed=True,
        )
        ledger, _ = apply_day(ledger, outcome)
    return ledger.total_points, ledger.challenges_completed, set(ledger.milestones_reached)


def level(ledger: GameLedger) -> int:
    """Game level 0..5: the number of milestone badges reached."""
    return len(ledger.milestones_reached)
