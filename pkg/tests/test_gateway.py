import json
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from galaxy.config import GalaxyConfig
from galaxy.gateway.app import create_app
from galaxy.gateway.runtime import GalaxySystem, rebuild_from_log
from galaxy.gateway.store import CommandLog, read_snapshot, write_snapshot

UTC = timezone.utc
T0 = datetime(2026, 8, 20, 9, 0, tzinfo=UTC)


def chat_command(text, minutes=0):
    return {"kind": "chat", "ts": (T0 + timedelta(minutes=minutes)).isoformat(),
            "text": text, "session": "s1", "skip_extraction": True}


SCRIPT = [
    chat_command('write "buy milk" to my memo'),
    chat_command('send an email to bob@example.com saying "running late"', 1),
    chat_command("tell me something interesting", 2),
    {"kind": "tick", "ts": (T0 + timedelta(minutes=3)).isoformat()},
]


def fresh(tmp_path, name, log=False):
    config = GalaxyConfig(data_dir=tmp_path / name)
    log_path = tmp_path / name / "commands.jsonl" if log else None
    system = GalaxySystem(config=config, log_path=log_path)
    system.inference.scripted.register("content_generation", (), "All right.")
    return system


class TestCommandLog:
    def test_append_and_read(self, tmp_path):
        log = CommandLog(tmp_path / "log.jsonl")
        assert log.append({"kind": "a"}) == 0
        assert log.append({"kind": "b"}) == 1
        docs, halt = log.read()
        assert [d["kind"] for d in docs] == ["a", "b"]
        assert halt is None
        assert len(log) == 2

    def test_corrupt_line_halts_read(self, tmp_path):
        path = tmp_path / "log.jsonl"
        log = CommandLog(path)
        log.append({"kind": "a"})
        with path.open("a") as fh:
            fh.write("{broken\n")
        log2 = CommandLog(path)
        log2.append({"kind": "c"})     # appended after the corruption
        docs, halt = log2.read()
        assert [d["kind"] for d in docs] == ["a"]
        assert halt.offset == 1

    def test_snapshot_is_compacted_prefix(self, tmp_path):
        log = CommandLog(tmp_path / "log.jsonl")
        for i in range(5):
            log.append({"kind": "k", "i": i})
        write_snapshot(tmp_path / "snap.json", log, 3)
        snap = read_snapshot(tmp_path / "snap.json")
        assert snap["offset"] == 3
        assert [c["i"] for c in snap["commands"]] == [0, 1, 2]


class TestReplay:
    def run_script(self, system, upto=None):
        for command in SCRIPT[:upto]:
            system.submit(command)
        return system.state_digest()

    def test_identical_scripts_identical_digests(self, tmp_path):
        a = self.run_script(fresh(tmp_path, "a"))
        b = self.run_script(fresh(tmp_path, "b"))
        assert a == b

    def test_divergent_scripts_differ(self, tmp_path):
        a = self.run_script(fresh(tmp_path, "a"))
        b = self.run_script(fresh(tmp_path, "b"), upto=2)
        assert a != b

    def test_rebuild_from_log_matches_live(self, tmp_path):
        live = fresh(tmp_path, "live", log=True)
        digest = self.run_script(live)
        rebuilt, halt = rebuild_from_log(
            tmp_path / "live" / "commands.jsonl",
            config=GalaxyConfig(data_dir=tmp_path / "rebuilt"),
            fixtures=[("content_generation", (), "All right.")])
        assert halt is None
        assert rebuilt.state_digest() == digest

    def test_kill_and_replay_at_every_prefix(self, tmp_path):
        live = fresh(tmp_path, "live", log=True)
        prefix_digests = []
        for command in SCRIPT:
            live.submit(command)
            prefix_digests.append(live.state_digest())
        for upto in range(1, len(SCRIPT) + 1):
            rebuilt, _ = rebuild_from_log(
                tmp_path / "live" / "commands.jsonl",
                config=GalaxyConfig(data_dir=tmp_path / f"re{upto}"),
                fixtures=[("content_generation", (), "All right.")],
                upto=upto)
            assert rebuilt.state_digest() == prefix_digests[upto - 1]

    def test_idempotency_key_returns_cached_result(self, tmp_path):
        system = fresh(tmp_path, "idem", log=True)
        first = system.submit(SCRIPT[0], idempotency_key="k1")
        again = system.submit(SCRIPT[0], idempotency_key="k1")
        assert first == again
        assert len(system.log) == 1

    def test_unknown_command_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            fresh(tmp_path, "x").submit({"kind": "mystery", "ts": T0.isoformat()})


class TestEventBus:
    def test_events_are_ordered_and_typed(self, tmp_path):
        system = fresh(tmp_path, "bus")
        system.submit(SCRIPT[0])
        seqs = [e["seq"] for e in system.bus.history]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
        kinds = {e["kind"] for e in system.bus.history}
        assert "task_status" in kinds and "chat_delta" in kinds

    def test_subscribers_receive_live_events(self, tmp_path):
        system = fresh(tmp_path, "bus2")
        already = system.bus.seq          # boot emits registration events
        queue = system.bus.subscribe()
        system.submit(SCRIPT[0])
        event = queue.get(timeout=1)
        assert event["seq"] == already + 1


class TestHttpGateway:
    @pytest.fixture
    def client(self, tmp_path):
        return TestClient(create_app(fresh(tmp_path, "web")))

    def test_chat_endpoint(self, client):
        resp = client.post("/chat", json={
            "text": 'write "hello" to my memo', "ts": T0.isoformat(),
            "skip_extraction": True})
        assert resp.status_code == 200
        assert resp.json()["status"] == "completed"

    def test_idempotency_header(self, client):
        body = {"text": 'write "hello" to my memo', "ts": T0.isoformat(),
                "skip_extraction": True}
        first = client.post("/chat", json=body,
                            headers={"Idempotency-Key": "abc"}).json()
        again = client.post("/chat", json=body,
                            headers={"Idempotency-Key": "abc"}).json()
        assert first == again

    def test_alignment_flow_over_http(self, client):
        started = client.post("/chat", json={
            "text": 'send an email saying "on my way"', "ts": T0.isoformat(),
            "skip_extraction": True}).json()
        assert started["status"] == "suspended"
        resumed = client.post(f"/align/{started['task_id']}", json={
            "answers": {"address": "bob@example.com"},
            "ts": T0.isoformat()}).json()
        assert resumed == {"result": "resumed", "status": "completed"}

    def test_plan_endpoints(self, client):
        missing = client.get("/plan/2026-08-21")
        assert missing.status_code == 404
        client.post("/plan/2026-08-21/draft", json={"ts": T0.isoformat()})
        drafted = client.get("/plan/2026-08-21")
        assert drafted.status_code == 200
        decided = client.post("/plan/2026-08-21", json={
            "decision": {"action": "confirm"}, "ts": T0.isoformat()}).json()
        assert decided["result"] == "confirmed"

    def test_register_space_over_http(self, client):
        from galaxy.spaces import translator_manifest
        resp = client.post("/spaces", json={
            "manifest": translator_manifest().to_doc(), "ts": T0.isoformat()})
        assert resp.status_code == 200
        catalog = client.get("/spaces").json()["catalog"]
        assert "translator" in [c["name"] for c in catalog]

    def test_space_schema_endpoint(self, client):
        schema = client.get("/spaces/email").json()
        node = next(n for n in schema["nodes"] if n["name"] == "send_email")
        assert {p["name"] for p in node["params"]} == {"address", "content"}
        assert client.get("/spaces/nope").status_code == 404

    def test_forest_and_catalog_views(self, client):
        forest = client.get("/forest").json()["nodes"]
        assert any(n["path"] == "env/spaces/memo/write_text" for n in forest)
        catalog = client.get("/spaces").json()["catalog"]
        assert [c["name"] for c in catalog] == ["chat_window", "email", "memo"]

    def test_latency_and_diagnostics(self, client):
        done = client.post("/chat", json={
            "text": 'write "x" to my memo', "ts": T0.isoformat(),
            "skip_extraction": True}).json()
        latency = client.get(f"/latency/{done['task_id']}").json()
        assert abs(latency["total_s"]
                   - sum(latency["routes"].values())) < 1e-3
        diag = client.get("/diagnostics").json()
        assert diag["degraded_mode"] is False

    def test_report_endpoint(self, client):
        report = client.get("/report/2026-08-21").json()
        assert report["date"] == "2026-08-21"
        assert report["roast"]

    def test_bad_command_is_400(self, client):
        resp = client.post("/plan/2030-01-01", json={
            "decision": {"action": "confirm"}})
        assert resp.status_code == 400
