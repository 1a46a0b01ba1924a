from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import date

import pytest

from adhere.core import DataError, Organ, Patient
from adhere.game import GameLedger
from adhere.store import (
    EventStore,
    NotFoundError,
    PatientRecord,
    RecordType,
    Snapshot,
)

from conftest import utc

NOW = utc(2024, 3, 10, 12)


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "data")


def record_of(patient_id="p-001"):
    return PatientRecord(
        patient=Patient(
            patient_id=patient_id,
            transplant_date=date(2023, 11, 15),
            organ=Organ.KIDNEY,
            timezone="UTC",
        ),
        arm="app",
    )


class TestRegistry:
    def test_register_and_get(self, store):
        store.register_patient(record_of())
        loaded = store.get_patient("p-001")
        assert loaded.patient.patient_id == "p-001"
        assert loaded.arm == "app"

    def test_unknown_patient(self, store):
        with pytest.raises(NotFoundError):
            store.get_patient("ghost")

    def test_list_is_sorted(self, store):
        for pid in ("b", "a", "c"):
            store.register_patient(record_of(pid))
        assert store.list_patient_ids() == ["a", "b", "c"]


class TestAppendRead:
    def test_round_trip(self, store):
        r1 = store.append("p-001", RecordType.INTAKE, {"slot_id": "am"}, NOW)
        r2 = store.append("p-001", RecordType.LAB, {"value_ng_ml": 8.0}, NOW)
        assert (r1.seq, r2.seq) == (1, 2)
        loaded = store.read_records("p-001")
        assert [r.seq for r in loaded] == [1, 2]
        assert loaded[0].payload == {"slot_id": "am"}

    def test_seq_continues_across_instances(self, store, tmp_path):
        store.append("p-001", RecordType.INTAKE, {}, NOW)
        fresh = EventStore(store.root)
        r = fresh.append("p-001", RecordType.INTAKE, {}, NOW)
        assert r.seq == 2

    def test_append_batch_sequences(self, store):
        records = store.append_batch(
            "p-001", [(RecordType.INTAKE, {"n": i}, NOW) for i in range(5)]
        )
        assert [r.seq for r in records] == [1, 2, 3, 4, 5]

    def test_missing_log_is_empty(self, store):
        assert store.read_records("p-001") == []


class TestCrashRecovery:
    def test_torn_tail_is_discarded_on_read(self, store):
        store.append("p-001", RecordType.INTAKE, {"n": 1}, NOW)
        store.append("p-001", RecordType.INTAKE, {"n": 2}, NOW)
        path = store.events_dir / "p-001.jsonl"
        raw = path.read_bytes()
        path.write_bytes(raw[:-25])  # cut into the middle of the last record
        fresh = EventStore(store.root)
        records = fresh.read_records("p-001")
        assert [r.payload["n"] for r in records] == [1]

    def test_append_after_torn_tail_truncates_partial(self, store):
        store.append("p-001", RecordType.INTAKE, {"n": 1}, NOW)
        store.append("p-001", RecordType.INTAKE, {"n": 2}, NOW)
        path = store.events_dir / "p-001.jsonl"
        path.write_bytes(path.read_bytes()[:-25])
        fresh = EventStore(store.root)
        fresh.append("p-001", RecordType.INTAKE, {"n": 3}, NOW)
        records = fresh.read_records("p-001")
        assert [r.payload["n"] for r in records] == [1, 3]
        assert [r.seq for r in records] == [1, 2]

    def test_complete_record_missing_newline_is_kept(self, store):
        store.append("p-001", RecordType.INTAKE, {"n": 1}, NOW)
        path = store.events_dir / "p-001.jsonl"
        path.write_bytes(path.read_bytes()[:-1])  # drop only the newline
        fresh = EventStore(store.root)
        assert [r.payload["n"] for r in fresh.read_records("p-001")] == [1]
        fresh.append("p-001", RecordType.INTAKE, {"n": 2}, NOW)
        assert [r.payload["n"] for r in fresh.read_records("p-001")] == [1, 2]

    def test_mid_file_corruption_raises(self, store):
        store.append("p-001", RecordType.INTAKE, {"n": 1}, NOW)
        store.append("p-001", RecordType.INTAKE, {"n": 2}, NOW)
        path = store.events_dir / "p-001.jsonl"
        lines = path.read_text().split("\n")
        lines[0] = lines[0][:10]  # mangle the first record
        path.write_text("\n".join(lines))
        with pytest.raises(DataError):
            EventStore(store.root).read_records("p-001")

    def test_non_monotone_seq_rejected(self, store):
        path = store.events_dir / "p-001.jsonl"
        rec = {"record_type": "intake", "seq": 2, "recorded_at": NOW.isoformat(), "payload": {}}
        bad = {"record_type": "intake", "seq": 1, "recorded_at": NOW.isoformat(), "payload": {}}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(DataError):
            store.read_records("p-001")


class TestSnapshots:
    def test_round_trip(self, store):
        snapshot = Snapshot(
            patient_id="p-001",
            as_of_seq=10,
            ledger=GameLedger(patient_id="p-001", total_points=5),
            summary=None,
        )
        store.write_snapshot(snapshot)
        assert store.read_snapshot("p-001") == snapshot

    def test_missing_snapshot_is_none(self, store):
        assert store.read_snapshot("p-001") is None

    def test_no_tmp_file_left_behind(self, store):
        store.write_snapshot(
            Snapshot(patient_id="p", as_of_seq=1, ledger=GameLedger(patient_id="p"), summary=None)
        )
        assert [p.name for p in store.snapshots_dir.iterdir()] == ["p.json"]


class TestConcurrency:
    def test_parallel_appends_keep_seq_dense(self, store):
        def append_many(k):
            for i in range(20):
                store.append("p-001", RecordType.INTAKE, {"writer": k, "i": i}, NOW)

        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(append_many, range(8)))
        records = store.read_records("p-001")
        assert [r.seq for r in records] == list(range(1, 161))

    def test_cross_patient_appends_are_independent(self, store):
        barrier = threading.Barrier(4)

        def worker(pid):
            barrier.wait()
            for i in range(30):
                store.append(pid, RecordType.INTAKE, {"i": i}, NOW)

        threads = [threading.Thread(target=worker, args=(f"p-{k}",)) for k in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for k in range(4):
            assert len(store.read_records(f"p-{k}")) == 30
