from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from datetime import date

import pytest

from adhere.core import (
    DataError,
    DoseSchedule,
    DoseSlot,
    IntakeKind,
    MedicationLine,
    Organ,
    Patient,
    parse_time_of_day,
)
from adhere.game import AwardKind
from adhere.service import AdherenceService, DayClosedError, ManualClock
from adhere.store import EventStore, NotFoundError, PatientRecord, RecordType

TZ = "America/Los_Angeles"


def la(day: str, hhmm: str) -> str:
    return f"{day}T{hhmm}:00-08:00"


@pytest.fixture
def clock():
    return ManualClock(la("2024-03-01", "07:00"))


@pytest.fixture
def service(tmp_path, clock, schedule):
    svc = AdherenceService(EventStore(tmp_path / "data"), now_fn=clock)
    patient = Patient(
        patient_id="p-001",
        transplant_date=date(2023, 11, 15),
        organ=Organ.KIDNEY,
        timezone=TZ,
    )
    svc.create_patient(PatientRecord(patient=patient, arm="app"), schedule=schedule)
    return svc


def log_adherent_day(service, clock, day: str):
    clock.set(la(day, "08:05"))
    service.record_intake("p-001", "tac-am", la(day, "08:05"), IntakeKind.TAKEN)
    clock.set(la(day, "20:05"))
    service.record_intake("p-001", "tac-pm", la(day, "20:05"), IntakeKind.TAKEN)


class TestRecordIntake:
    def test_happy_path_appends_once(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        ack = service.record_intake("p-001", "tac-am", la("2024-03-01", "08:05"), "taken")
        assert not ack.duplicate
        assert ack.record.seq == 2  # schedule_change is seq 1
        assert ack.awards == ()
        intakes = [
            r for r in service.store.read_records("p-001") if r.record_type == RecordType.INTAKE
        ]
        assert len(intakes) == 1

    def test_duplicate_is_a_no_op(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        service.record_intake("p-001", "tac-am", la("2024-03-01", "08:05"), "taken")
        ack = service.record_intake("p-001", "tac-am", la("2024-03-01", "08:07"), "taken")
        assert ack.duplicate
        intakes = [
            r for r in service.store.read_records("p-001") if r.record_type == RecordType.INTAKE
        ]
        assert len(intakes) == 1

    def test_unknown_patient(self, service):
        with pytest.raises(NotFoundError):
            service.record_intake("ghost", "tac-am", la("2024-03-01", "08:05"), "taken")

    def test_unknown_slot(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        with pytest.raises(NotFoundError):
            service.record_intake("p-001", "mystery", la("2024-03-01", "08:05"), "taken")

    def test_day_three_days_past_is_frozen(self, service, clock):
        clock.set(la("2024-03-10", "09:00"))
        with pytest.raises(DayClosedError):
            service.record_intake("p-001", "tac-am", la("2024-03-07", "08:00"), "taken")

    def test_malformed_timestamp(self, service):
        with pytest.raises(DataError):
            service.record_intake("p-001", "tac-am", "yesterday-ish", "taken")

    def test_pre_effective_day_has_no_slots(self, service, clock):
        clock.set(la("2024-02-28", "08:05"))
        with pytest.raises(NotFoundError):
            service.record_intake("p-001", "tac-am", la("2024-02-28", "08:05"), "taken")

    def test_concurrent_duplicates_append_exactly_once(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        ts = la("2024-03-01", "08:05")

        def submit(_):
            return service.record_intake("p-001", "tac-am", ts, "taken")

        with ThreadPoolExecutor(max_workers=16) as pool:
            acks = list(pool.map(submit, range(32)))
        intakes = [
            r for r in service.store.read_records("p-001") if r.record_type == RecordType.INTAKE
        ]
        assert len(intakes) == 1
        assert sum(1 for a in acks if not a.duplicate) == 1


class TestCloseDay:
    def test_seven_adherent_days_complete_a_challenge(self, service, clock):
        for i in range(1, 8):
            log_adherent_day(service, clock, f"2024-03-0{i}")
        clock.set(la("2024-03-08", "07:00"))  # past 2024-03-07 close (06:00 + grace)
        results = service.close_day(date(2024, 3, 7))
        awards = results["p-001"]
        kinds = [a.kind for a in awards]
        assert kinds.count(AwardKind.DAILY_POINT) == 7
        assert kinds.count(AwardKind.CHALLENGE_COMPLETED) == 1
        assert kinds.count(AwardKind.MILESTONE_REACHED) == 1
        ledger = service.game_view("p-001")
        assert ledger.total_points == 7
        assert ledger.challenges_completed == 1
        assert [r.badge_id for r in ledger.rewards] == ["first-challenge"]

    def test_close_is_idempotent(self, service, clock):
        log_adherent_day(service, clock, "2024-03-01")
        clock.set(la("2024-03-03", "07:00"))
        first = service.close_day(date(2024, 3, 2))
        second = service.close_day(date(2024, 3, 2))
        assert len(first["p-001"]) > 0
        assert second["p-001"] == []

    def test_open_day_is_not_closed(self, service, clock):
        log_adherent_day(service, clock, "2024-03-01")
        clock.set(la("2024-03-02", "12:00"))
        service.close_day(date(2024, 3, 2))
        ledger = service.game_view("p-001")
        assert ledger.last_applied_day == date(2024, 3, 1)

    def test_missed_day_resets_streak(self, service, clock):
        log_adherent_day(service, clock, "2024-03-01")
        # 2024-03-02 passes silently: both slots missed.
        clock.set(la("2024-03-04", "07:00"))
        service.close_day(date(2024, 3, 3))
        ledger = service.game_view("p-001")
        assert ledger.total_points == 1
        assert ledger.current_streak_days == 0

    def test_awards_are_persisted_as_events(self, service, clock):
        log_adherent_day(service, clock, "2024-03-01")
        clock.set(la("2024-03-03", "07:00"))
        service.close_day(date(2024, 3, 1))
        records = service.store.read_records("p-001")
        assert any(r.record_type == RecordType.AWARD for r in records)

    def test_snapshot_matches_replay(self, service, clock):
        for i in range(1, 6):
            log_adherent_day(service, clock, f"2024-03-0{i}")
        clock.set(la("2024-03-08", "07:00"))
        service.close_day(date(2024, 3, 7))
        assert service.verify_snapshot("p-001")

    def test_grace_window_intake_closes_day_and_returns_awards(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        service.record_intake("p-001", "tac-am", la("2024-03-01", "08:05"), "taken")
        clock.set(la("2024-03-02", "01:00"))  # inside the 6h grace for 2024-03-01
        ack = service.record_intake("p-001", "tac-pm", la("2024-03-01", "20:30"), "taken")
        assert [a.kind for a in ack.awards] == [AwardKind.DAILY_POINT]
        assert service.game_view("p-001").last_applied_day == date(2024, 3, 1)
        with pytest.raises(DayClosedError):
            service.record_intake("p-001", "tac-am", la("2024-03-01", "09:00"), "skipped")


class TestLabs:
    CSV = (
        "patient_id,draw_date,analyte,value_ng_ml\n"
        "p-001,2024-03-01,tacrolimus,8.1\n"
        "p-001,2024-03-08,tacrolimus,9.4\n"
        "p-001,2024-03-15,tacrolimus,7.7\n"
    )

    def test_three_valid_rows(self, service):
        accepted, rejected = service.ingest_labs(self.CSV)
        assert (accepted, rejected) == (3, [])

    def test_nonpositive_value_rejected(self, service):
        csv = "patient_id,draw_date,analyte,value_ng_ml\np-001,2024-03-01,tacrolimus,-1\n"
        accepted, rejected = service.ingest_labs(csv)
        assert accepted == 0
        assert "nonpositive" in rejected[0][1]

    def test_duplicate_draw_rejected_within_batch(self, service):
        csv = (
            "patient_id,draw_date,analyte,value_ng_ml\n"
            "p-001,2024-03-01,tacrolimus,8.1\n"
            "p-001,2024-03-01,tacrolimus,8.3\n"
        )
        accepted, rejected = service.ingest_labs(csv)
        assert accepted == 1
        assert "duplicate" in rejected[0][1]

    def test_duplicate_against_store_rejected(self, service):
        service.ingest_labs(self.CSV)
        accepted, rejected = service.ingest_labs(self.CSV)
        assert accepted == 0
        assert len(rejected) == 3

    def test_unknown_patient_rejected(self, service):
        csv = "patient_id,draw_date,analyte,value_ng_ml\nghost,2024-03-01,tacrolimus,8.1\n"
        accepted, rejected = service.ingest_labs(csv)
        assert accepted == 0
        assert "unknown patient" in rejected[0][1]

    def test_bad_header_is_an_error(self, service):
        with pytest.raises(DataError):
            service.ingest_labs("who,what\n1,2\n")

    def test_unsupported_analyte_rejected(self, service):
        csv = "patient_id,draw_date,analyte,value_ng_ml\np-001,2024-03-01,sirolimus,8.1\n"
        accepted, rejected = service.ingest_labs(csv)
        assert accepted == 0
        assert "analyte" in rejected[0][1]


class TestViews:
    def test_new_patient_dashboard_is_zeroed(self, service, clock):
        clock.set(la("2024-03-01", "07:30"))
        view = service.dashboard("p-001", date(2024, 2, 1), date(2024, 3, 1))
        assert view["game"]["total_points"] == 0
        assert all(s["status"] == "pending" for s in view["today"]["slots"])
        assert view["cv"] is None
        assert "lab draws" in view["cv_unavailable"]

    def test_dashboard_after_challenge_shows_badge(self, service, clock):
        for i in range(1, 8):
            log_adherent_day(service, clock, f"2024-03-0{i}")
        clock.set(la("2024-03-08", "07:00"))
        service.close_day(date(2024, 3, 7))
        view = service.dashboard("p-001", date(2024, 3, 1), date(2024, 3, 7))
        assert view["game"]["challenges_completed"] == 1
        assert view["game"]["rewards"][0]["badge_id"] == "first-challenge"
        assert view["summary"]["current_streak_days"] == 7

    def test_dashboard_cv_with_enough_labs(self, service, clock):
        service.ingest_labs(TestLabs.CSV)
        clock.set(la("2024-03-20", "07:00"))
        view = service.dashboard("p-001", date(2024, 3, 1), date(2024, 3, 31))
        assert view["cv"]["n"] == 3

    def test_today_view_reminders_skip_logged_slots(self, service, clock):
        clock.set(la("2024-03-01", "08:05"))
        service.record_intake("p-001", "tac-am", la("2024-03-01", "08:05"), "taken")
        view = service.today_view("p-001")
        reminder_slots = [e["slot_id"] for e in view["reminders"]["entries"]]
        assert reminder_slots == ["tac-pm"]

    def test_schedule_versioning_changes_due_slots(self, service, clock):
        v2 = DoseSchedule(
            patient_id="p-001",
            medications=(
                MedicationLine(
                    med_name="tacrolimus",
                    is_immunosuppressant=True,
                    slots=(
                        DoseSlot(slot_id="tac-only", nominal_time=parse_time_of_day("09:00")),
                    ),
                ),
            ),
            effective_from=date(2024, 3, 5),
        )
        service.set_schedule("p-001", v2)
        clock.set(la("2024-03-05", "07:00"))
        view = service.today_view("p-001")
        assert [s["slot_id"] for s in view["slots"]] == ["tac-only"]

    def test_invalid_schedule_rejected(self, service):
        bad = DoseSchedule(patient_id="p-001", medications=(), effective_from=date(2024, 3, 9))
        with pytest.raises(DataError):
            service.set_schedule("p-001", bad)


class TestCohortView:
    def test_empty_store_renders_unavailable(self, tmp_path):
        service = AdherenceService(EventStore(tmp_path / "empty"))
        report = service.cohort_view(date(2024, 1, 1), date(2024, 6, 30))
        assert report.cv_comparison is None
        assert report.unavailable

    def test_single_arm_partial_availability(self, tmp_path, clock, schedule):
        service = AdherenceService(EventStore(tmp_path / "one-arm"), now_fn=clock)
        for i in range(3):
            pid = f"solo-{i}"
            patient = Patient(
                patient_id=pid,
                transplant_date=date(2023, 11, 15),
                organ=Organ.KIDNEY,
                timezone=TZ,
            )
            sched = DoseSchedule.from_dict({**schedule.to_dict(), "patient_id": pid})
            service.create_patient(PatientRecord(patient=patient, arm="nonuser"), schedule=sched)
            csv = (
                "patient_id,draw_date,analyte,value_ng_ml\n"
                f"{pid},2024-03-01,tacrolimus,{8 + i}\n"
                f"{pid},2024-03-08,tacrolimus,{9 + i}\n"
            )
            assert service.ingest_labs(csv)[0] == 2
        report = service.cohort_view(date(2024, 3, 1), date(2024, 3, 31))
        nonuser = next(a for a in report.arm_summaries if a.arm == "nonuser")
        assert nonuser.mean_cv is not None
        assert report.cv_comparison is None
