from __future__ import annotations

from datetime import date, datetime, timezone

import pytest

from adhere.core import (
    DoseSchedule,
    DoseSlot,
    IntakeEvent,
    IntakeKind,
    MedicationLine,
    Organ,
    Patient,
    parse_time_of_day,
)


@pytest.fixture
def patient() -> Patient:
    return Patient(
        patient_id="p-001",
        transplant_date=date(2023, 11, 15),
        organ=Organ.KIDNEY,
        timezone="America/Los_Angeles",
    )


@pytest.fixture
def schedule() -> DoseSchedule:
    """Two-slot tacrolimus regimen effective 2024-03-01, default windows."""
    return DoseSchedule(
        patient_id="p-001",
        medications=(
            MedicationLine(
                med_name="tacrolimus",
                is_immunosuppressant=True,
                slots=(
                    DoseSlot(slot_id="tac-am", nominal_time=parse_time_of_day("08:00")),
                    DoseSlot(slot_id="tac-pm", nominal_time=parse_time_of_day("20:00")),
                ),
            ),
        ),
        effective_from=date(2024, 3, 1),
    )


def taken(slot_id: str, ts: str, patient_id: str = "p-001") -> IntakeEvent:
    return IntakeEvent(
        patient_id=patient_id, slot_id=slot_id, timestamp=ts, kind=IntakeKind.TAKEN
    )


def skipped(slot_id: str, ts: str, patient_id: str = "p-001") -> IntakeEvent:
    return IntakeEvent(
        patient_id=patient_id, slot_id=slot_id, timestamp=ts, kind=IntakeKind.SKIPPED
    )


def utc(y: int, mo: int, d: int, h: int = 0, mi: int = 0) -> datetime:
    return datetime(y, mo, d, h, mi, tzinfo=timezone.utc)
