from __future__ import annotations

from datetime import date, timedelta

import pytest
from hypothesis import given, strategies as st

from adhere.core import (
    ConfigurationError,
    DataError,
    DoseSchedule,
    DoseSlot,
    IntakeEvent,
    LabResult,
    MedicationLine,
    Organ,
    Patient,
    local_day,
    parse_instant,
    parse_time_of_day,
    validate_schedule,
)

from conftest import utc


class TestLocalDay:
    def test_instant_already_in_zone(self):
        assert local_day("2024-03-01T23:30:00-08:00", "America/Los_Angeles") == date(
            2024, 3, 1
        )

    def test_utc_instant_crosses_back_a_day(self):
        # 02:30 UTC is 18:30 the previous day at UTC-8.
        assert local_day("2024-03-02T02:30:00Z", "America/Los_Angeles") == date(2024, 3, 1)

    def test_identity_zone(self):
        assert local_day("2024-03-01T12:00:00Z", "UTC") == date(2024, 3, 1)

    def test_unknown_timezone(self):
        with pytest.raises(ConfigurationError):
            local_day("2024-03-01T12:00:00Z", "Mars/Olympus_Mons")

    @given(
        epoch=st.integers(min_value=0, max_value=4_000_000_000),
        delta=st.integers(min_value=0, max_value=10_000_000),
        zone=st.sampled_from(
            ["UTC", "America/Los_Angeles", "Europe/Berlin", "Asia/Tokyo", "Pacific/Kiritimati"]
        ),
    )
    def test_monotone_in_timestamp(self, epoch, delta, zone):
        from datetime import datetime, timezone

        t1 = datetime.fromtimestamp(epoch, tz=timezone.utc)
        t2 = datetime.fromtimestamp(epoch + delta, tz=timezone.utc)
        assert local_day(t1, zone) <= local_day(t2, zone)


class TestParseInstant:
    def test_z_suffix(self):
        ts = parse_instant("2024-03-01T12:00:00Z")
        assert ts.utcoffset() is not None

    def test_naive_rejected(self):
        with pytest.raises(DataError):
            parse_instant("2024-03-01T12:00:00")

    def test_garbage_rejected(self):
        with pytest.raises(DataError):
            parse_instant("not-a-time")


class TestValidateSchedule:
    def test_well_formed_two_slot_schedule(self, schedule):
        assert validate_schedule(schedule) == []

    def test_empty_medications(self):
        s = DoseSchedule(patient_id="p", medications=(), effective_from=date(2024, 1, 1))
        violations = validate_schedule(s)
        assert any(v.field == "medications" for v in violations)

    def test_duplicate_slot_id(self):
        line = MedicationLine(
            med_name="tacrolimus",
            is_immunosuppressant=True,
            slots=(
                DoseSlot(slot_id="dup", nominal_time=parse_time_of_day("08:00")),
                DoseSlot(slot_id="dup", nominal_time=parse_time_of_day("20:00")),
            ),
        )
        s = DoseSchedule(patient_id="p", medications=(line,), effective_from=date(2024, 1, 1))
        assert any("duplicate" in v.message for v in validate_schedule(s))

    def test_non_increasing_slot_times(self):
        line = MedicationLine(
            med_name="tacrolimus",
            is_immunosuppressant=True,
            slots=(
                DoseSlot(slot_id="a", nominal_time=parse_time_of_day("20:00")),
                DoseSlot(slot_id="b", nominal_time=parse_time_of_day("08:00")),
            ),
        )
        s = DoseSchedule(patient_id="p", medications=(line,), effective_from=date(2024, 1, 1))
        assert any("increasing" in v.message for v in validate_schedule(s))

    def test_medication_without_slots(self):
        line = MedicationLine(med_name="prednisone", is_immunosuppressant=False, slots=())
        s = DoseSchedule(patient_id="p", medications=(line,), effective_from=date(2024, 1, 1))
        assert any(v.field.endswith(".slots") for v in validate_schedule(s))


class TestDomainInvariants:
    def test_patient_id_required(self):
        with pytest.raises(DataError):
            Patient(patient_id="", transplant_date=date(2023, 1, 1), organ=Organ.LIVER)

    def test_transplant_date_not_in_future(self):
        with pytest.raises(DataError):
            Patient(
                patient_id="p",
                transplant_date=date.today() + timedelta(days=2),
                organ=Organ.LIVER,
            )

    def test_lab_value_must_be_positive(self):
        with pytest.raises(DataError):
            LabResult(patient_id="p", draw_date=date(2024, 1, 1), value=-1.0)
        with pytest.raises(DataError):
            LabResult(patient_id="p", draw_date=date(2024, 1, 1), value=0.0)

    def test_negative_window_rejected(self):
        with pytest.raises(DataError):
            DoseSlot(slot_id="s", nominal_time=parse_time_of_day("08:00"), window_before=-5)

    def test_bad_time_of_day(self):
        with pytest.raises(DataError):
            parse_time_of_day("25:99")


class TestSerialization:
    def test_schedule_round_trip(self, schedule):
        assert DoseSchedule.from_dict(schedule.to_dict()) == schedule

    def test_intake_event_round_trip(self):
        event = IntakeEvent(
            patient_id="p", slot_id="s", timestamp=utc(2024, 3, 1, 16), kind="taken"
        )
        assert IntakeEvent.from_dict(event.to_dict()) == event

    def test_patient_round_trip(self, patient):
        assert Patient.from_dict(patient.to_dict()) == patient

    def test_lab_round_trip(self):
        lab = LabResult(patient_id="p", draw_date=date(2024, 2, 2), value=8.4)
        assert LabResult.from_dict(lab.to_dict()) == lab
