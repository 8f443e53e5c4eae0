from __future__ import annotations

import itertools
import json

import pytest

from daf.corpus import DatasetHandle
from daf.registry import REGISTRY
from daf.report import (
    PHASE_ACTIONS,
    ActionRecommendation,
    AuditPlanContext,
    CardProvenance,
    ReportError,
    Selection,
    apply_mitigation,
    attach_actions,
    canon_float,
    config_digest,
    duplicate_removal_selection,
    make_card,
    recommend_actions,
    render_report,
)
from daf.results import (
    AssociationFlag,
    AssociationResult,
    DisaggregatedTable,
    Distribution,
    DuplicateReport,
    GroupKey,
    Proportion,
    Unsupported,
)
from tests.conftest import write_jsonl, write_lines

PROV = CardProvenance(
    dataset_label="fixture",
    records_scanned=10,
    n_missing={},
    config_digest="abc123",
    tool_version="0.1.0",
    timestamp="2026-08-10",
)

CTX = AuditPlanContext(
    goal="DatasetDevelopment", phase="DataCollectionProcessing",
    dataset_mutable=True, release_planned=False,
)


def flagged_association_payload(flagged: bool = True) -> AssociationResult:
    old_age = GroupKey("terms", "age", "old_age")
    table = DisaggregatedTable(
        rows=(old_age,), columns=("medical",), cells={(old_age, "medical"): 8},
        row_totals={old_age: 8}, col_totals={"medical": 8}, grand_total=10,
    )
    flag = AssociationFlag(group=old_age, category="medical", lift=2.5, support=8, flagged=flagged)
    return AssociationResult(table=table, flags=(flag,), lift_threshold=2.0, support=5)


class TestMakeCard:
    def test_pronoun_card_fields(self):
        card = make_card("pronouns", Distribution.from_counts({"she/her": 3}), REGISTRY, PROV)
        assert card.analysis_object == ("Text",)
        assert card.effort == "Low"
        assert card.dependencies == ("pronoun lexicon",)
        assert card.section == "who"

    def test_unsupported_card(self):
        card = make_card("hateful_symbols", None, REGISTRY, PROV)
        assert isinstance(card.output, Unsupported)
        assert card.effort == "NotYetPossible"
        assert "automated" in card.output.reason

    def test_mismatched_payload_rejected(self):
        with pytest.raises(ReportError, match="does not match"):
            make_card("pronouns", Proportion(1, 2), REGISTRY, PROV)

    def test_unregistered_id_rejected(self):
        with pytest.raises(ReportError, match="not registered"):
            make_card("nonsense", Distribution(()), REGISTRY, PROV)

    def test_all_registered_cards_carry_framework_fields(self):
        for spec in REGISTRY.values():
            assert spec.task
            assert spec.title
            assert spec.analysis_object
            assert spec.effort
            assert spec.output_kind


class TestRecommendActions:
    def card(self, payload):
        card = make_card("sit_x_topic", payload, REGISTRY, PROV)
        return card

    def test_flagged_mutable_gets_removal_and_augmentation(self):
        actions = recommend_actions(self.card(flagged_association_payload()), CTX)
        names = [a.action for a in actions]
        assert names[0] == "Flagging"
        assert "Removal" in names and "Augmentation" in names

    def test_immutable_suppresses_mutations(self):
        context = AuditPlanContext("DatasetDevelopment", "DataCollectionProcessing",
                                   dataset_mutable=False, release_planned=False)
        actions = recommend_actions(self.card(flagged_association_payload()), context)
        names = [a.action for a in actions]
        assert "Removal" not in names and "Augmentation" not in names and "Addition" not in names
        assert names == ["Flagging", "Warning"]

    def test_clean_card_gets_flagging_only(self):
        actions = recommend_actions(self.card(flagged_association_payload(flagged=False)), CTX)
        assert [a.action for a in actions] == ["Flagging"]

    def test_unsupported_gets_documentation_warning(self):
        card = make_card("hateful_symbols", None, REGISTRY, PROV)
        actions = recommend_actions(card, CTX)
        assert [(a.phase, a.action) for a in actions] == [
            ("DataCollectionProcessing", "Flagging"), ("Documentation", "Warning")]

    def test_release_planned_adds_licensing_access(self):
        context = AuditPlanContext("Auditing", "PackagingRelease", True, True)
        actions = recommend_actions(self.card(flagged_association_payload()), context)
        names = [a.action for a in actions]
        assert "Licensing" in names and "Access" in names

    def test_high_proportion_is_severe(self):
        card = make_card("sexual_imagery", Proportion(8, 10), REGISTRY, PROV)
        actions = recommend_actions(card, CTX, proportion_limit=0.5)
        assert "Removal" in [a.action for a in actions]

    def test_low_proportion_is_clean(self):
        card = make_card("sexual_imagery", Proportion(1, 10), REGISTRY, PROV)
        assert [a.action for a in recommend_actions(card, CTX)] == ["Flagging"]

    def test_recommendations_always_phase_legal_exhaustive(self):
        payloads = [
            flagged_association_payload(),
            flagged_association_payload(flagged=False),
        ]
        cards = [self.card(p) for p in payloads]
        cards.append(make_card("hateful_symbols", None, REGISTRY, PROV))
        cards.append(make_card("sexual_imagery", Proportion(9, 10), REGISTRY, PROV))
        for goal, phase, mutable, release in itertools.product(
            ("DatasetDevelopment", "UseDecisions", "ModelUnderstanding", "Auditing"),
            ("DataCollectionProcessing", "ModelEvaluation", "Documentation", "PackagingRelease"),
            (True, False),
            (True, False),
        ):
            context = AuditPlanContext(goal, phase, mutable, release)
            for card in cards:
                for rec in recommend_actions(card, context):
                    assert rec.action in PHASE_ACTIONS[rec.phase]
                    assert rec.rationale

    def test_illegal_pairs_rejected_by_type(self):
        with pytest.raises(ReportError):
            ActionRecommendation(phase="Documentation", action="Removal", rationale="no")


class TestRenderReport:
    def cards(self):
        card = make_card("pronouns", Distribution.from_counts({"she/her": 3, "he/him": 5}), REGISTRY, PROV)
        card = attach_actions(card, CTX)
        other = make_card("sit_x_topic", flagged_association_payload(), REGISTRY, PROV)
        other = attach_actions(other, CTX)
        return [card, other]

    def test_structured_is_deterministic(self):
        cards = self.cards()
        assert render_report(cards, "structured") == render_report(cards, "structured")

    def test_structured_card_order_is_canonical(self):
        cards = self.cards()
        report_a = render_report(cards, "structured")
        report_b = render_report(list(reversed(cards)), "structured")
        assert report_a == report_b

    def test_empty_card_list_rejected(self):
        with pytest.raises(ReportError):
            render_report([], "structured")

    def test_human_readable_groups_by_section(self):
        text = render_report(self.cards(), "human-readable", context=CTX)
        who = text.index("Who is in the data")
        assoc = text.index("Human x content associations")
        assert who < assoc
        assert "[pronouns]" in text
        assert "lift" in text

    def test_structured_fields_complete(self):
        doc = json.loads(render_report(self.cards(), "structured", context=CTX))
        assert doc["daf_report"] == 1
        for card in doc["cards"]:
            for key in ("analysis_id", "title", "task", "analysis_object", "effort",
                        "dependencies", "output", "action", "provenance"):
                assert key in card, key
            for key in ("dataset_label", "records_scanned", "n_missing",
                        "config_digest", "tool_version", "timestamp"):
                assert key in card["provenance"], key

    def test_canon_float_nine_significant_digits(self):
        assert canon_float(1 / 3) == 0.333333333
        assert json.dumps(canon_float(1 / 3)) == "0.333333333"
        assert json.dumps(canon_float(0.1)) == "0.1"
        assert json.dumps(canon_float(2e-10)) == "2e-10"

    def test_config_digest_stable_under_key_order(self):
        assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})


class TestApplyMitigation:
    def dataset(self, tmp_path, n=20):
        rows = [{"id": f"r{i:03d}", "text": f"text number {i}"} for i in range(n)]
        path = write_jsonl(tmp_path / "data.jsonl", rows)
        return DatasetHandle(path=str(path), format="jsonl", label="mit")

    def test_remove_mode_arithmetic(self, tmp_path):
        handle = self.dataset(tmp_path)
        selection = Selection("pii", frozenset({"r001", "r005", "r009"}), {"analysis": "pii"})
        out = tmp_path / "out.jsonl"
        manifest = apply_mitigation(handle, [selection], "remove", str(out))
        out_lines = out.read_text().splitlines()
        assert len(out_lines) + len(manifest["affected_ids"]) == 20
        assert manifest["affected_ids"] == ["r001", "r005", "r009"]

    def test_remove_preserves_bytes_of_survivors(self, tmp_path):
        handle = self.dataset(tmp_path)
        original = {json.loads(line)["id"]: line for line in open(handle.path, "rb").read().splitlines()}
        out = tmp_path / "out.jsonl"
        apply_mitigation(handle, [Selection("x", frozenset({"r000"}), {})], "remove", str(out))
        for line in out.read_bytes().splitlines():
            rid = json.loads(line)["id"]
            assert line == original[rid]

    def test_tag_mode_preserves_count_and_untouched_bytes(self, tmp_path):
        handle = self.dataset(tmp_path)
        original = open(handle.path, "rb").read().splitlines()
        out = tmp_path / "out.jsonl"
        selection = Selection("duplicate", frozenset({"r002"}), {})
        manifest = apply_mitigation(handle, [selection], "tag", str(out))
        tagged_lines = out.read_bytes().splitlines()
        assert len(tagged_lines) == 20
        assert manifest["counts"]["tagged"] == 1
        for before, after in zip(original, tagged_lines):
            rid = json.loads(after)["id"]
            if rid == "r002":
                assert json.loads(after)["meta"]["daf_tags"] == "duplicate"
            else:
                assert before == after

    def test_empty_selection_is_identity(self, tmp_path):
        handle = self.dataset(tmp_path)
        out = tmp_path / "out.jsonl"
        manifest = apply_mitigation(handle, [Selection("none", frozenset(), {})], "remove", str(out))
        assert out.read_bytes() == open(handle.path, "rb").read()
        assert manifest["affected_ids"] == []

    def test_tag_mode_rejected_for_tsv(self, tmp_path):
        path = write_lines(tmp_path / "d.tsv", ["a\tcaption\thttp://x/i.jpg"])
        handle = DatasetHandle(path=str(path), format="tsv-pairs")
        with pytest.raises(ReportError, match="jsonl"):
            apply_mitigation(handle, [], "tag", str(tmp_path / "o.tsv"))

    def test_duplicate_removal_keeps_lowest_id(self):
        report = DuplicateReport(
            mode="exact",
            clusters=(("r2", "r1", "r3"), ("r9", "r8")),
            records_scanned=10,
            parameters={},
        )
        selection = duplicate_removal_selection(report)
        assert selection.ids == frozenset({"r2", "r3", "r9"})
