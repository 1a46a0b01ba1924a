"""Synthetic patient cohorts with configurable adherence behavior and
miss-rate-linked lab variability.

Every patient draws from an independent substream derived by hashing
(master seed, arm seed, patient index), so cohorts are reproducible
patient-by-patient and safe to generate in parallel. The gamification
uplift is not assigned up front: each simulated patient's own replayed
game ledger switches it on the day their third challenge completes, so
the challenge subgroup arises endogenously.

All default parameter values are synthetic placeholders for desk-scale
experiments, not clinical estimates.
"""

from __future__ import annotations

import hashlib
import random
from collections import deque
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from .core import (
    DataError,
    DoseSchedule,
    DoseSlot,
    IntakeEvent,
    IntakeKind,
    LabResult,
    MedicationLine,
    Organ,
    Patient,
    parse_time_of_day,
    resolve_zone,
)
from .game import GameLedger, apply_day
from .ledger import AdherenceSummary, DayOutcome, summarize
from .report import CohortPatient
from .stats import LabSeries

TROUGH_FLOOR_NG_ML = 0.1
TRAILING_MISS_WINDOW_DAYS = 30
UPLIFT_CHALLENGE_THRESHOLD = 3


@dataclass(frozen=True)
class BehaviorParams:
    """Per-arm behavioral model: daily take probability, its slow drift, and
    the multiplicative miss-probability reduction once three challenges are
    complete."""

    base_daily_adherence_prob: float
    gamification_uplift: float = 0.0
    post_surgery_decay: float = 0.0  # signed drift per day
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_daily_adherence_prob <= 1.0:
            raise DataError("base_daily_adherence_prob must be in [0, 1]")
        if not 0.0 <= self.gamification_uplift < 1.0:
            raise DataError("gamification_uplift must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "base_daily_adherence_prob": self.base_daily_adherence_prob,
            "gamification_uplift": self.gamification_uplift,
            "post_surgery_decay": self.post_surgery_decay,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BehaviorParams":
        return cls(
            base_daily_adherence_prob=float(data["base_daily_adherence_prob"]),
            gamification_uplift=float(data.get("gamification_uplift", 0.0)),
            post_surgery_decay=float(data.get("post_surgery_decay", 0.0)),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class LabModelParams:
    """Trough-level model: draws every draw_interval_days from a normal
    whose sd inflates linearly with the trailing 30-day miss rate."""

    true_mean_level: float = 8.0  # ng/mL
    sd_adherent: float = 1.0  # ng/mL
    sd_inflation_per_missrate: float = 32.0
    draw_interval_days: int = 7

    def __post_init__(self) -> None:
        if (
            self.true_mean_level <= 0
            or self.sd_adherent <= 0
            or self.sd_inflation_per_missrate <= 0
            or self.draw_interval_days < 1
        ):
            raise DataError("lab model parameters must be positive")

    def to_dict(self) -> dict:
        return {
            "true_mean_level": self.true_mean_level,
            "sd_adherent": self.sd_adherent,
            "sd_inflation_per_missrate": self.sd_inflation_per_missrate,
            "draw_interval_days": self.draw_interval_days,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabModelParams":
        return cls(
            true_mean_level=float(data.get("true_mean_level", 8.0)),
            sd_adherent=float(data.get("sd_adherent", 1.0)),
            sd_inflation_per_missrate=float(data.get("sd_inflation_per_missrate", 32.0)),
            draw_interval_days=int(data.get("draw_interval_days", 7)),
        )


@dataclass(frozen=True)
class ArmConfig:
    name: str
    patients: int
    behavior: BehaviorParams

    def __post_init__(self) -> None:
        if self.patients < 1:
            raise DataError("arm must have at least one patient")

    def to_dict(self) -> dict:
        return {"name": self.name, "patients": self.patients, "behavior": self.behavior.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ArmConfig":
        return cls(
            name=data["name"],
            patients=int(data["patients"]),
            behavior=BehaviorParams.from_dict(data["behavior"]),
        )


def default_schedule_template() -> tuple[MedicationLine, ...]:
    return (
        MedicationLine(
            med_name="tacrolimus",
            is_immunosuppressant=True,
            slots=(
                DoseSlot(slot_id="tac-am", nominal_time=parse_time_of_day("08:00")),
                DoseSlot(slot_id="tac-pm", nominal_time=parse_time_of_day("20:00")),
            ),
        ),
    )


@dataclass(frozen=True)
class CohortConfig:
    arms: tuple[ArmConfig, ...]
    days: int
    start_date: date
    master_seed: int
    schedule_template: tuple[MedicationLine, ...] = field(
        default_factory=default_schedule_template
    )
    lab_model: LabModelParams = field(default_factory=LabModelParams)
    timezone: str = "UTC"

    def __post_init__(self) -> None:
        if self.days < 1:
            raise DataError("days must be positive")
        if not self.arms:
            raise DataError("config needs at least one arm")
        resolve_zone(self.timezone)

    @property
    def total_patients(self) -> int:
        return sum(a.patients for a in self.arms)

    def to_dict(self) -> dict:
        return {
            "arms": [a.to_dict() for a in self.arms],
            "days": self.days,
            "start_date": self.start_date.isoformat(),
            "master_seed": self.master_seed,
            "schedule_template": {"medications": [m.to_dict() for m in self.schedule_template]},
            "lab_model": self.lab_model.to_dict(),
            "timezone": self.timezone,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CohortConfig":
        template = data.get("schedule_template")
        medications = (
            tuple(MedicationLine.from_dict(m) for m in template["medications"])
            if template
            else default_schedule_template()
        )
        return cls(
            arms=tuple(ArmConfig.from_dict(a) for a in data["arms"]),
            days=int(data["days"]),
            start_date=date.fromisoformat(data["start_date"]),
            master_seed=int(data["master_seed"]),
            schedule_template=medications,
            lab_model=LabModelParams.from_dict(data.get("lab_model", {})),
            timezone=data.get("timezone", "UTC"),
        )


def paper_shaped_config(master_seed: int = 7, days: int = 180) -> CohortConfig:
    """An 18-vs-49 two-arm configuration; counts mimic the study shape,
    every behavioral number is synthetic."""
    return CohortConfig(
        arms=(
            ArmConfig(
                name="app",
                patients=18,
                behavior=BehaviorParams(
                    base_daily_adherence_prob=0.95, gamification_uplift=0.28, seed=1
                ),
            ),
            ArmConfig(
                name="nonuser",
                patients=49,
                behavior=BehaviorParams(
                    base_daily_adherence_prob=0.95, gamification_uplift=0.0, seed=2
                ),
            ),
        ),
        days=days,
        start_date=date(2024, 1, 1),
        master_seed=master_seed,
    )


@dataclass(frozen=True)
class SimulatedPatient:
    patient: Patient
    arm: str
    schedule: DoseSchedule
    events: tuple[IntakeEvent, ...]
    labs: LabSeries
    outcomes: tuple[DayOutcome, ...]
    ledger: GameLedger


@dataclass(frozen=True)
class SimulatedCohort:
    config: CohortConfig
    patients: tuple[SimulatedPatient, ...]


def _patient_seed(master_seed: int, arm_seed: int, patient_index: int) -> int:
    key = f"{master_seed}:{arm_seed}:{patient_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _arm_for_index(config: CohortConfig, patient_index: int) -> tuple[ArmConfig, int]:
    offset = patient_index
    for arm in config.arms:
        if offset < arm.patients:
            return arm, offset
        offset -= arm.patients
    raise DataError(f"patient index {patient_index} out of range")


def simulate_patient(config: CohortConfig, patient_index: int) -> SimulatedPatient:
    """Generate one patient's intake log, labs, outcomes, and game ledger.

    Fully determined by (master seed, patient index): the substream is
    consumed in a fixed order: each day's slots first, then that day's
    lab draw if one is due.
    """
    arm, index_in_arm = _arm_for_index(config, patient_index)
    rng = random.Random(_patient_seed(config.master_seed, arm.behavior.seed, patient_index))
    tz = resolve_zone(config.timezone)
    patient_id = f"{arm.name}-{index_in_arm:04d}"

    patient = Patient(
        patient_id=patient_id,
        transplant_date=config.start_date,
        organ=Organ.KIDNEY,
        timezone=config.timezone,
    )
    schedule = DoseSchedule(
        patient_id=patient_id,
        medications=config.schedule_template,
        effective_from=config.start_date,
    )
    slots = [slot for med in schedule.medications for slot in med.slots]
    slot_times = {s.slot_id: s.nominal_time for s in slots}

    events: list[IntakeEvent] = []
    labs: list[LabResult] = []
    outcomes: list[DayOutcome] = []
    ledger = GameLedger(patient_id=patient_id)
    trailing: deque[tuple[int, int]] = deque(maxlen=TRAILING_MISS_WINDOW_DAYS)

    behavior = arm.behavior
    lab_model = config.lab_model
    for day_index in range(config.days):
        day = config.start_date + timedelta(days=day_index)
        p_take = behavior.base_daily_adherence_prob + behavior.post_surgery_decay * day_index
        p_take = min(1.0, max(0.0, p_take))
        if ledger.challenges_completed >= UPLIFT_CHALLENGE_THRESHOLD:
            p_take = 1.0 - (1.0 - p_take) * (1.0 - behavior.gamification_uplift)

        # Lab draw happens before the day's doses; its variability reflects
        # the trailing miss rate of the preceding days only.
        if (day_index + 1) % lab_model.draw_interval_days == 0:
            scheduled_recent = sum(s for s, _ in trailing)
            missed_recent = sum(m for _, m in trailing)
            miss_rate = missed_recent / scheduled_recent if scheduled_recent else 0.0
            sd = lab_model.sd_adherent * (1.0 + lab_model.sd_inflation_per_missrate * miss_rate)
            value = max(TROUGH_FLOOR_NG_ML, rng.gauss(lab_model.true_mean_level, sd))
            labs.append(LabResult(patient_id=patient_id, draw_date=day, value=value))

        taken_count = 0
        for slot in slots:
            if rng.random() < p_take:
                taken_count += 1
                ts = datetime.combine(day, slot_times[slot.slot_id], tzinfo=tz)
                events.append(
                    IntakeEvent(
                        patient_id=patient_id,
                        slot_id=slot.slot_id,
                        timestamp=ts,
                        kind=IntakeKind.TAKEN,
                    )
                )
        missed_count = len(slots) - taken_count
        trailing.append((len(slots), missed_count))

        outcome = DayOutcome(
            patient_id=patient_id,
            day=day,
            scheduled=len(slots),
            taken=taken_count,
            skipped=0,
            missed=missed_count,
            adherent=missed_count == 0 and len(slots) > 0,
            closed=True,
        )
        outcomes.append(outcome)
        ledger, _ = apply_day(ledger, outcome)

    return SimulatedPatient(
        patient=patient,
        arm=arm.name,
        schedule=schedule,
        events=tuple(events),
        labs=LabSeries(patient_id=patient_id, observations=tuple(labs)),
        outcomes=tuple(outcomes),
        ledger=ledger,
    )


def simulate_cohort(config: CohortConfig) -> SimulatedCohort:
    patients = tuple(simulate_patient(config, i) for i in range(config.total_patients))
    return SimulatedCohort(config=config, patients=patients)


def report_records(
    cohort: SimulatedCohort, window_start: date, window_end: date
) -> list[CohortPatient]:
    """Assemble per-patient report inputs with summaries over the window."""
    records = []
    for sim in cohort.patients:
        summary: AdherenceSummary = summarize(list(sim.outcomes), window_start, window_end)
        records.append(
            CohortPatient(
                patient_id=sim.patient.patient_id,
                arm=sim.arm,
                labs=sim.labs,
                summary=summary,
                ledger=sim.ledger,
            )
        )
    return records


def export_cohort(cohort: SimulatedCohort, out_dir) -> "EventStore":
    """Write a cohort to a platform data directory.

    Emits the same JSON-lines event logs, snapshots, and labs CSV the live
    platform produces and ingests, with deterministic recorded_at instants
    so identical configs export byte-identical directories.
    """
    from .ledger import close_instant
    from .store import EventStore, PatientRecord, RecordType, Snapshot
    from .core import day_start

    store = EventStore(out_dir)
    tz = resolve_zone(cohort.config.timezone)
    csv_lines = ["patient_id,draw_date,analyte,value_ng_ml"]
    last_day = cohort.config.start_date + timedelta(days=cohort.config.days - 1)

    for sim in cohort.patients:
        pid = sim.patient.patient_id
        store.register_patient(PatientRecord(patient=sim.patient, arm=sim.arm))
        epoch = day_start(cohort.config.start_date, tz)
        batch = [(RecordType.SCHEDULE_CHANGE, sim.schedule.to_dict(), epoch)]
        for event in sim.events:
            batch.append((RecordType.INTAKE, event.to_dict(), event.timestamp))
        for lab in sim.labs.observations:
            batch.append((RecordType.LAB, lab.to_dict(), day_start(lab.draw_date, tz)))
            csv_lines.append(f"{pid},{lab.draw_date.isoformat()},tacrolimus,{lab.value!r}")
        ledger = GameLedger(patient_id=pid)
        for outcome in sim.outcomes:
            ledger, awards = apply_day(ledger, outcome)
            frozen_at = close_instant(sim.schedule, outcome.day, tz)
            for award in awards:
                batch.append((RecordType.AWARD, award.to_dict(), frozen_at))
        store.append_batch(pid, batch)
        summary = summarize(list(sim.outcomes), cohort.config.start_date, last_day)
        store.write_snapshot(
            Snapshot(
                patient_id=pid,
                as_of_seq=store.last_seq(pid),
                ledger=ledger,
                summary=summary,
            )
        )

    store.root.joinpath("labs.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return store
