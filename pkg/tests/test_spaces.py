from datetime import datetime, timezone

import pytest

from galaxy.forest import CognitionNode, Forest
from galaxy.registry import FunctionRegistry
from galaxy.spaces import (MissingArgumentError, ParamSpec, RegistrationError,
                           SchemaViolationError, SpaceManifest, SpaceNode,
                           SpaceRegistry, UnknownSpaceError,
                           UnknownSpaceNodeError, email_manifest,
                           memo_manifest, register_builtin_functions,
                           validate_manifest)

NOW = datetime(2026, 8, 20, 12, 0, tzinfo=timezone.utc)


@pytest.fixture
def spaces(tmp_path):
    forest = Forest()
    forest.insert(CognitionNode(path=("env", "spaces"),
                                semantic="registered capability spaces"))
    register_builtin_functions(forest.registry, tmp_path)
    registry = SpaceRegistry(forest, tmp_path)
    registry.register(memo_manifest())
    registry.register(email_manifest())
    return registry


def test_register_creates_forest_nodes_and_sandbox(spaces, tmp_path):
    node = spaces.forest.get("env/spaces/memo/write_text")
    assert node is not None
    assert node.function_ref == "memo:write_text"
    assert (tmp_path / "spaces" / "memo" / "manifest.json").exists()
    assert [c["name"] for c in spaces.catalog()] == ["email", "memo"]


def test_duplicate_registration_rejected(spaces):
    with pytest.raises(RegistrationError):
        spaces.register(memo_manifest())


def test_unresolved_binding_rejected(spaces):
    bad = SpaceManifest(name="ghost", description="x", nodes=[
        SpaceNode("run", "run it", [], "ghost:run")])
    with pytest.raises(RegistrationError):
        spaces.register(bad)
    # rollback: no forest node left behind
    assert spaces.forest.get("env/spaces/ghost") is None


def test_validate_manifest_reports_all_problems():
    registry = FunctionRegistry()
    manifest = SpaceManifest(name="bad/name", description="x", nodes=[
        SpaceNode("a", "s", [ParamSpec("p"), ParamSpec("p")], "nope:a"),
        SpaceNode("a", "s", [], "nope:a")])
    problems = validate_manifest(manifest, registry)
    joined = "\n".join(problems)
    assert "invalid space name" in joined
    assert "duplicate node name" in joined
    assert "duplicate parameter" in joined
    assert "unresolved binding" in joined


def test_unregister_removes_forest_subtree(spaces):
    spaces.unregister("memo")
    assert spaces.forest.get("env/spaces/memo") is None
    with pytest.raises(UnknownSpaceError):
        spaces.get_manifest("memo")


def test_invoke_round_trip(spaces, tmp_path):
    spaces.invoke("memo", "write_text", {"text": "buy milk"}, now=NOW)
    result = spaces.invoke("memo", "read_text", {}, now=NOW)
    assert result == {"content": "buy milk\n"}


def test_invoke_missing_argument_lists_names(spaces):
    with pytest.raises(MissingArgumentError) as err:
        spaces.invoke("email", "send_email", {"content": "hi"}, now=NOW)
    assert err.value.missing == ["address"]


def test_invoke_schema_violations(spaces):
    with pytest.raises(SchemaViolationError):
        spaces.invoke("memo", "write_text", {"text": 7}, now=NOW)
    with pytest.raises(SchemaViolationError):
        spaces.invoke("memo", "write_text", {"text": "x", "extra": 1}, now=NOW)


def test_invoke_unknown_targets(spaces):
    with pytest.raises(UnknownSpaceError):
        spaces.invoke("nothing", "x", {}, now=NOW)
    with pytest.raises(UnknownSpaceNodeError):
        spaces.invoke("memo", "nothing", {}, now=NOW)


def test_invoke_emits_record_and_perception_event(spaces):
    records, events = [], []
    spaces.record_listeners.append(records.append)
    spaces.event_listeners.append(events.append)
    spaces.invoke("memo", "write_text", {"text": "note"}, task_id="t1", now=NOW)
    assert records[0].route == "kernel_space_call"
    assert records[0].outcome == "ok"
    assert records[0].task_id == "t1"
    assert events[0].kind == "behavior" and events[0].tool == "memo"
    spaces.invoke("memo", "read_text", {}, now=NOW)    # not a perception node
    assert len(events) == 1


def test_failed_invoke_emits_error_record(spaces):
    spaces.registry.register("memo:boom", lambda: 1 / 0)
    spaces.get_manifest("memo").nodes.append(
        SpaceNode("boom", "always fails", [], "memo:boom"))
    records = []
    spaces.record_listeners.append(records.append)
    with pytest.raises(ZeroDivisionError):
        spaces.invoke("memo", "boom", {}, now=NOW)
    assert records[0].outcome == "space_function_error"


def test_perceive_normalizes_raw_interaction(spaces):
    events = []
    spaces.event_listeners.append(events.append)
    event = spaces.perceive({"timestamp": "2026-08-20T08:30:00+00:00",
                             "source": "email", "intent": "read a newsletter"})
    assert event.tool == "email"
    assert event.status == "observed"
    assert event.start.tzinfo is not None
    assert events == [event]


def test_reset_space_recreates_sandbox(spaces, tmp_path):
    spaces.invoke("memo", "write_text", {"text": "junk"}, now=NOW)
    memo_file = tmp_path / "spaces" / "memo" / "data" / "memo.txt"
    assert memo_file.exists()
    spaces.reset_space("memo")
    assert not memo_file.exists()
    assert (tmp_path / "spaces" / "memo" / "manifest.json").exists()


def test_manifest_doc_round_trip():
    manifest = email_manifest()
    clone = SpaceManifest.from_doc(manifest.to_doc())
    assert clone.to_doc() == manifest.to_doc()
