import json
from datetime import datetime, timedelta, timezone

import pytest

from galaxy.agenda import BehaviorPattern
from galaxy.embedding import embed_text
from galaxy.forest import CognitionNode, DesignDescriptor
from galaxy.kernel import latency_breakdown
from galaxy.records import ExecutionRecord
from galaxy.spaces import translator_manifest

UTC = timezone.utc
T0 = datetime(2026, 8, 20, 9, 0, tzinfo=UTC)


def record(outcome, minutes=0, route="kernel_space_call", **kw):
    return ExecutionRecord(route=route, caller="kora", outcome=outcome,
                           timestamp=T0 + timedelta(minutes=minutes), **kw)


def pattern(intent="translate the abstract into English", tool="chat_window",
            support=9):
    return BehaviorPattern(
        pattern_id="bp-test", tool=tool,
        centroid_embedding=embed_text(intent),
        representative_intent=intent, support=support,
        hour_histogram=[0] * 9 + [support] + [0] * 14,
        weekday_mask=[True] * 5 + [False] * 2,
        exemplar_ids=[f"ev-{i}" for i in range(support)],
        last_seen=T0)


class TestOversight:
    def test_ok_records_pass_through(self, system):
        assert system.kernel.oversee_record(record("ok")) is None

    def test_three_same_errors_in_window_trigger_routine(self, system):
        out = None
        for m in range(3):
            out = system.kernel.oversee_record(
                record("invoke_failed", minutes=m, detail="boom"))
        assert out is not None and out["trigger"] == "routine"
        assert out["report"]["routine"] == "reset-space"

    def test_errors_outside_window_do_not_trigger(self, system):
        for m in (0, 20, 40):
            out = system.kernel.oversee_record(
                record("invoke_failed", minutes=m))
        assert out is None

    def test_parse_error_triggers_immediately(self, system):
        out = system.kernel.oversee_record(record("extraction_parse_error"))
        assert out["trigger"] == "routine"
        assert system.agenda.strict_extraction is True

    def test_unmatched_error_goes_to_meta_reflection(self, system):
        out = system.kernel.oversee_record(record("weird_glitch"))
        assert out["trigger"] == "meta_reflection"
        assert system.kernel.advisory_log


class TestFailureRoutines:
    def test_routine_is_idempotent(self, system):
        context = {"space": "memo"}
        first = system.kernel.run_failure_routine("reset-space", context)
        second = system.kernel.run_failure_routine("reset-space", context)
        assert first["result"] == "ok"
        assert second["result"] == "noop"

    def test_failed_step_escalates(self, system):
        out = system.kernel.run_failure_routine("reset-space",
                                                {"space": "no-such-space"})
        assert out["result"] == "escalated"
        assert system.kernel.escalations[-1]["kind"] == "repair_failed"

    def test_unknown_routine_rejected(self, system):
        with pytest.raises(KeyError):
            system.kernel.run_failure_routine("mystery", {})


def break_search_path(system, tmp_path):
    """Register a module-bound node whose search path is misconfigured."""
    real_dir = tmp_path / "modules"
    real_dir.mkdir(exist_ok=True)
    module = real_dir / "clip_tools.py"
    module.write_text("def clip(text):\n    return {'clipped': text[:10]}\n")
    # Hang the module-bound node off an existing space so the catalog stays
    # consistent; only the search path is wrong.
    system.forest.insert(CognitionNode(
        path=("env", "spaces", "memo", "clip"),
        semantic="clip a text snippet",
        function_ref="mod:clip_tools:clip",
        design=DesignDescriptor(source=str(module), symbol="clip")))
    return module


class TestSelfCheck:
    def test_clean_boot_has_no_findings(self, system):
        report = system.self_check()
        assert report["findings"] == []
        assert report["degraded_mode"] is False

    def test_wrong_search_path_repaired_then_clean(self, system, tmp_path):
        module = break_search_path(system, tmp_path)
        assert not system.forest.registry.resolves("mod:clip_tools:clip")
        report = system.self_check()
        assert [r["kind"] for r in report["repairs"]] == ["search_path_injected"]
        assert report["unrepaired"] == []
        assert report["degraded_mode"] is False
        assert system.forest.registry.resolve("mod:clip_tools:clip")("abcdefghijkl") \
            == {"clipped": "abcdefghij"}
        second = system.self_check()
        assert second["findings"] == [] and second["repairs"] == []

    def test_repair_disabled_degrades_and_quarantines(self, make_system, tmp_path):
        system = make_system(self_repair_enabled=False)
        break_search_path(system, tmp_path)
        report = system.self_check()
        assert report["repairs"] == []
        assert any(f["kind"] == "unresolved_binding" for f in report["unrepaired"])
        assert report["degraded_mode"] is True
        assert system.kora.degraded is True
        kora_view = system.forest.subset_view("kora")
        assert system.forest.get("env/spaces/memo/clip") is not None
        assert not kora_view.admits(system.forest.get("env/spaces/memo/clip"))

    def test_missing_design_source_reported(self, system):
        system.forest.insert(CognitionNode(
            path=("env", "spaces", "ghostspace"), semantic="gone",
            design=DesignDescriptor(source="/nowhere/ghost.py", symbol="x")))
        report = system.self_check()
        assert any(f["kind"] == "missing_design_source"
                   for f in report["findings"])


class TestProposals:
    def register_fixture(self, system):
        system.inference.scripted.register(
            "space_proposal", ("translate",), translator_manifest().to_doc())

    def test_low_support_pattern_ignored(self, system):
        self.register_fixture(system)
        assert system.kernel.propose_space(pattern(support=5), now=T0) is None

    def test_covered_pattern_ignored(self, system):
        self.register_fixture(system)
        covered = pattern(intent="send an email message to a contact")
        assert system.kernel.propose_space(covered, now=T0) is None

    def test_novel_pattern_proposed_with_alignment_question(self, system):
        self.register_fixture(system)
        questions = []
        system.kernel.alignment_listeners.append(questions.append)
        proposal = system.kernel.propose_space(pattern(), now=T0)
        assert proposal is not None
        assert proposal.manifest.name == "translator"
        assert questions[0]["kind"] == "space_proposal"

    def test_rejection_cooldown(self, system):
        self.register_fixture(system)
        proposal = system.kernel.propose_space(pattern(), now=T0)
        system.kernel.decide_proposal(proposal.proposal_id, False, now=T0)
        assert system.kernel.propose_space(pattern(), now=T0 + timedelta(days=3)) \
            is None
        again = system.kernel.propose_space(pattern(),
                                            now=T0 + timedelta(days=20))
        assert again is not None


class TestScaffolding:
    def confirmed_proposal(self, system):
        system.inference.scripted.register(
            "space_proposal", ("translate",), translator_manifest().to_doc())
        proposal = system.kernel.propose_space(pattern(), now=T0)
        return system.kernel.decide_proposal(proposal.proposal_id, True, now=T0)

    def test_scaffold_registers_working_space(self, system):
        proposal = self.confirmed_proposal(system)
        assert system.kernel.scaffold_space(proposal) == "registered"
        assert proposal.status == "registered"
        module = system.config.data_dir / "scaffold" / "translator_tools.py"
        assert module.exists()
        node = system.forest.get("env/spaces/translator/translate")
        assert node.function_ref == "mod:translator_tools:translate"
        result = system.spaces.invoke(
            "translator", "translate",
            {"text": "good morning", "target_language": "French"}, now=T0)
        assert result == {"translation": "[French] good morning"}

    def test_unknown_template_escalates(self, system):
        system.inference.scripted.register(
            "space_proposal", (),
            {"name": "stargazer", "description": "novel",
             "nodes": [{"name": "gaze", "semantic": "look up", "params": [],
                        "function_binding": ""}]})
        proposal = system.kernel.propose_space(
            pattern(intent="track constellations nightly"), now=T0)
        decided = system.kernel.decide_proposal(proposal.proposal_id, True)
        assert system.kernel.scaffold_space(decided) == "escalated"
        assert "human guidance" in system.kernel.escalations[-1]["question"]

    def test_unscaffoldable_node_returns_to_proposed(self, system):
        system.inference.scripted.register(
            "space_proposal", (),
            {"name": "translator", "description": "translate things",
             "nodes": [{"name": "transliterate", "semantic": "odd node",
                        "params": [], "function_binding": ""}]})
        proposal = system.kernel.propose_space(
            pattern(intent="translate the abstract"), now=T0)
        decided = system.kernel.decide_proposal(proposal.proposal_id, True)
        assert system.kernel.scaffold_space(decided) == "validation_failed"
        assert decided.status == "proposed"
        assert decided.findings


class TestLatency:
    def test_breakdown_sums_buckets(self):
        records = [
            record("ok", route="kora_cloud_call", elapsed_s=0.13, task_id="t"),
            record("ok", route="kernel_cognition_retrieval", elapsed_s=0.87,
                   task_id="t"),
            record("ok", route="kernel_space_call", elapsed_s=0.22, task_id="t"),
            record("ok", route="kora_feedback", elapsed_s=0.12, task_id="t"),
            record("ok", route="kernel_space_call", elapsed_s=9.0, task_id="other"),
            record("ok", route="other", elapsed_s=9.0, task_id="t"),
        ]
        out = latency_breakdown(records, "t")
        assert out["routes"]["kora_cloud_call"] == pytest.approx(0.13)
        assert out["total_s"] == pytest.approx(0.13 + 0.87 + 0.22 + 0.12)
        assert abs(out["total_s"] - sum(out["routes"].values())) < 1e-3
