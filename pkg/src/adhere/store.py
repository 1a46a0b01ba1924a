"""Append-only JSON-lines event store with per-patient logs and snapshots.

One log file per patient, one record per line, strictly increasing per-patient
sequence numbers. Records are immutable once written; all state downstream is
a replay of the log, and snapshots are just caches that replay must always be
able to reproduce. A truncated final line (crash mid-write) is discarded on
read; corruption anywhere else refuses to load.
"""

from __future__ import annotations

import json
import os
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path

from .core import AdherenceError, DataError, Patient, parse_instant
from .game import GameLedger
from .ledger import AdherenceSummary
from .scheduler import NotificationPrefs


class NotFoundError(AdherenceError):
    """Unknown patient or slot."""


class RecordType(str, Enum):
    INTAKE = "intake"
    AWARD = "award"
    LAB = "lab"
    SCHEDULE_CHANGE = "schedule_change"


@dataclass(frozen=True)
class EventRecord:
    record_type: RecordType
    payload: dict
    seq: int
    recorded_at: datetime

    def to_dict(self) -> dict:
        return {
            "record_type": self.record_type.value,
            "seq": self.seq,
            "recorded_at": self.recorded_at.isoformat(),
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EventRecord":
        return cls(
            record_type=RecordType(data["record_type"]),
            payload=data["payload"],
            seq=int(data["seq"]),
            recorded_at=parse_instant(data["recorded_at"]),
        )


@dataclass(frozen=True)
class Snapshot:
    """Cached replay state: replay(log up to as_of_seq) must equal this."""

    patient_id: str
    as_of_seq: int
    ledger: GameLedger
    summary: AdherenceSummary | None

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "as_of_seq": self.as_of_seq,
            "ledger": self.ledger.to_dict(),
            "summary": self.summary.to_dict() if self.summary else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Snapshot":
        summary = data.get("summary")
        return cls(
            patient_id=data["patient_id"],
            as_of_seq=int(data["as_of_seq"]),
            ledger=GameLedger.from_dict(data["ledger"]),
            summary=(
                AdherenceSummary(
                    patient_id=summary["patient_id"],
                    period_start=datetime.fromisoformat(summary["period_start"]).date(),
                    period_end=datetime.fromisoformat(summary["period_end"]).date(),
                    total_scheduled=summary["total_scheduled"],
                    total_missed=summary["total_missed"],
                    missed_dose_rate=summary["missed_dose_rate"],
                    current_streak_days=summary["current_streak_days"],
                    longest_streak_days=summary["longest_streak_days"],
                )
                if summary
                else None
            ),
        )


@dataclass(frozen=True)
class PatientRecord:
    """Registry entry: the patient plus platform-level attributes."""

    patient: Patient
    arm: str | None = None
    prefs: NotificationPrefs | None = None

    def to_dict(self) -> dict:
        return {
            "patient": self.patient.to_dict(),
            "arm": self.arm,
            "prefs": self.prefs.to_dict() if self.prefs else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatientRecord":
        return cls(
            patient=Patient.from_dict(data["patient"]),
            arm=data.get("arm"),
            prefs=NotificationPrefs.from_dict(data["prefs"]) if data.get("prefs") else None,
        )


class EventStore:
    """Filesystem layout: patients.json, events/<id>.jsonl, snapshots/<id>.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.events_dir = self.root / "events"
        self.snapshots_dir = self.root / "snapshots"
        self.registry_path = self.root / "patients.json"
        for d in (self.root, self.events_dir, self.snapshots_dir):
            d.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._locks_guard = threading.Lock()
        self._patient_locks: dict[str, threading.RLock] = {}
        self._last_seq: dict[str, int] = {}

    # -- locking ---------------------------------------------------------

    def _lock_for(self, patient_id: str) -> threading.RLock:
        with self._locks_guard:
            if patient_id not in self._patient_locks:
                self._patient_locks[patient_id] = threading.RLock()
            return self._patient_locks[patient_id]

    @contextmanager
    def patient_lock(self, patient_id: str):
        lock = self._lock_for(patient_id)
        with lock:
            yield

    # -- registry ---------------------------------------------------------

    def _read_registry(self) -> dict:
        if not self.registry_path.exists():
            return {}
        return json.loads(self.registry_path.read_text(encoding="utf-8"))

    def _write_registry(self, registry: dict) -> None:
        tmp = self.registry_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(registry, indent=2, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.registry_path)

    def register_patient(self, record: PatientRecord) -> None:
        with self._registry_lock:
            registry = self._read_registry()
            registry[record.patient.patient_id] = record.to_dict()
            self._write_registry(registry)

    def get_patient(self, patient_id: str) -> PatientRecord:
        with self._registry_lock:
            registry = self._read_registry()
        if patient_id not in registry:
            raise NotFoundError(f"unknown patient: {patient_id}")
        return PatientRecord.from_dict(registry[patient_id])

    def has_patient(self, patient_id: str) -> bool:
        with self._registry_lock:
            return patient_id in self._read_registry()

    def list_patient_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._read_registry().keys())

    # -- event log ---------------------------------------------------------

    def _log_path(self, patient_id: str) -> Path:
        return self.events_dir / f"{patient_id}.jsonl"

    def read_records(self, patient_id: str) -> list[EventRecord]:
        """Load and validate a patient's full log.

        A final line without structure (torn write) is dropped; a malformed
        line anywhere else is corruption and raises.
        """
        path = self._log_path(patient_id)
        if not path.exists():
            return []
        raw = path.read_text(encoding="utf-8")
        if not raw:
            return []
        lines = raw.split("\n")
        trailing_complete = raw.endswith("\n")
        if trailing_complete:
            lines = lines[:-1]
        records: list[EventRecord] = []
        for i, line in enumerate(lines):
            is_last = i == len(lines) - 1
            try:
                records.append(EventRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                if is_last:
                    break  # torn tail write from a crash; replay proceeds without it
                raise DataError(f"corrupt event log {path} at line {i + 1}") from exc
        last_seq = 0
        for record in records:
            if record.seq <= last_seq:
                raise DataError(
                    f"non-monotone seq in {path}: {record.seq} after {last_seq}"
                )
            last_seq = record.seq
        return records

    def last_seq(self, patient_id: str) -> int:
        with self.patient_lock(patient_id):
            if patient_id not in self._last_seq:
                records = self.read_records(patient_id)
                self._last_seq[patient_id] = records[-1].seq if records else 0
            return self._last_seq[patient_id]

    def _recover_tail(self, patient_id: str) -> None:
        """Make the log appendable after a torn write.

        A newline-less tail that still parses was a complete record missing
        only its terminator; a tail that does not parse was never committed
        and is truncated away. Mirrors exactly what read_records accepts.
        """
        path = self._log_path(patient_id)
        if not path.exists():
            return
        raw = path.read_bytes()
        if not raw or raw.endswith(b"\n"):
            return
        cut = raw.rfind(b"\n") + 1
        tail = raw[cut:]
        try:
            EventRecord.from_dict(json.loads(tail.decode("utf-8")))
            with open(path, "ab") as fh:
                fh.write(b"\n")
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, ValueError):
            with open(path, "r+b") as fh:
                fh.truncate(cut)

    def append(
        self,
        patient_id: str,
        record_type: RecordType,
        payload: dict,
        recorded_at: datetime,
    ) -> EventRecord:
        return self.append_batch(patient_id, [(record_type, payload, recorded_at)])[0]

    def append_batch(
        self,
        patient_id: str,
        items: list[tuple[RecordType, dict, datetime]],
    ) -> list[EventRecord]:
        with self.patient_lock(patient_id):
            self._recover_tail(patient_id)
            seq = self.last_seq(patient_id)
            records: list[EventRecord] = []
            lines: list[str] = []
            for record_type, payload, recorded_at in items:
                seq += 1
                record = EventRecord(
                    record_type=record_type,
                    payload=payload,
                    seq=seq,
                    recorded_at=recorded_at,
                )
                records.append(record)
                lines.append(json.dumps(record.to_dict(), sort_keys=True))
            with open(self._log_path(patient_id), "a", encoding="utf-8") as fh:
                fh.write("".join(line + "\n" for line in lines))
                fh.flush()
            self._last_seq[patient_id] = seq
            return records

    # -- snapshots ---------------------------------------------------------

    def _snapshot_path(self, patient_id: str) -> Path:
        return self.snapshots_dir / f"{patient_id}.json"

    def write_snapshot(self, snapshot: Snapshot) -> None:
        with self.patient_lock(snapshot.patient_id):
            path = self._snapshot_path(snapshot.patient_id)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(snapshot.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
            )
            os.replace(tmp, path)

    def read_snapshot(self, patient_id: str) -> Snapshot | None:
        path = self._snapshot_path(patient_id)
        if not path.exists():
            return None
        return Snapshot.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def drop_snapshot(self, patient_id: str) -> None:
        path = self._snapshot_path(patient_id)
        if path.exists():
            path.unlink()
