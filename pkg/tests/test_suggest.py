"""Suggest module: ranking, placement, preview/resolve, grounding."""

import json
import random

import pytest

from themecanvas.errors import EngineError
from themecanvas.graph import Workspace
from themecanvas.suggest import (
    contains_whole_word,
    describe_theme,
    preview_suggestion,
    rank_themes,
    resolve_suggestion,
    suggest_placement,
    suggest_theme_name,
    top_tfidf_terms,
    validate_grounding,
)

from conftest import (
    apply_random_ops,
    fixed_clock,
    make_provider,
    oracle_rank,
    random_text,
    scripted_provider,
)


def theme_with_members(workspace, name, texts):
    theme = workspace.create_node({"kind": "theme", "name": name})
    members = []
    for text in texts:
        evidence = workspace.create_node({"kind": "evidence", "text": text})
        workspace.connect(theme, evidence, "membership")
        members.append(evidence)
    return theme, members


class TestRankThemes:
    def test_query_prefers_overlapping_theme(self, workspace):
        t1, _ = theme_with_members(
            workspace, "T1", ["index build time", "index memory footprint"]
        )
        t2, _ = theme_with_members(workspace, "T2", ["query latency", "recall at ten"])
        ranking = rank_themes(workspace, "query latency spikes")
        assert [r.theme_id for r in ranking] == [t2, t1]
        assert ranking[0].score > 0.0
        assert ranking[1].score == 0.0
        expected = oracle_rank(workspace, "query latency spikes")
        for got, want in zip(ranking, expected):
            assert got.theme_id == want[0]
            assert abs(got.score - want[1]) < 1e-9

    def test_no_themes_empty_ranking(self, workspace):
        assert rank_themes(workspace, "anything") == []

    def test_zero_overlap_orders_by_theme_id(self, workspace):
        theme_with_members(workspace, "Alpha", ["one two"])
        theme_with_members(workspace, "Beta", ["three four"])
        ranking = rank_themes(workspace, "zzz qqq")
        assert [r.score for r in ranking] == [0.0, 0.0]
        assert [r.theme_id for r in ranking] == sorted(r.theme_id for r in ranking)

    def test_empty_query(self, workspace):
        with pytest.raises(EngineError) as err:
            rank_themes(workspace, "   ")
        assert err.value.code == "empty_query"

    def test_scores_within_unit_interval(self, workspace):
        theme_with_members(workspace, "T", ["query latency", "query latency spikes"])
        for query in ("query latency", "latency", "query query query"):
            for ranked in rank_themes(workspace, query):
                assert 0.0 <= ranked.score <= 1.0

    def test_matches_oracle_on_random_workspaces(self):
        rng = random.Random(99)
        for _ in range(30):
            workspace = Workspace("w", clock=fixed_clock)
            for t in range(rng.randint(1, 5)):
                theme_with_members(
                    workspace,
                    random_text(rng, 2),
                    [random_text(rng) for _ in range(rng.randint(0, 4))],
                )
            query = random_text(rng)
            got = rank_themes(workspace, query)
            want = oracle_rank(workspace, query)
            assert [g.theme_id for g in got] == [w[0] for w in want]
            for g, w in zip(got, want):
                assert abs(g.score - w[1]) < 1e-9


class TestSuggestPlacement:
    def test_empty_workspace_forces_new_theme(self, workspace, provider):
        evidence = workspace.create_node({"kind": "evidence", "text": "query latency"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "new_theme", "name": "Latency", "rationale": "wording"})],
        )
        suggestion = suggest_placement(workspace, evidence, provider)
        assert suggestion.kind == "new_theme"
        assert suggestion.status == "pending"
        assert suggestion.basis == (evidence,)

    def test_assign_from_mock(self, workspace, provider):
        theme, _ = theme_with_members(workspace, "T2", ["query latency"])
        evidence = workspace.create_node({"kind": "evidence", "text": "latency spike"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "assign", "theme_id": theme, "rationale": "overlap"})],
        )
        suggestion = suggest_placement(workspace, evidence, provider)
        assert suggestion.kind == "assign"
        assert suggestion.payload["theme_id"] == theme

    def test_unknown_target_theme_invalid(self, workspace, provider):
        theme_with_members(workspace, "T", ["text"])
        evidence = workspace.create_node({"kind": "evidence", "text": "latency"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "assign", "theme_id": "T99", "rationale": "x"})],
        )
        with pytest.raises(EngineError) as err:
            suggest_placement(workspace, evidence, provider)
        assert err.value.code == "provider_invalid"

    def test_assign_with_no_themes_invalid(self, workspace, provider):
        evidence = workspace.create_node({"kind": "evidence", "text": "latency"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "assign", "theme_id": "T1", "rationale": "x"})],
        )
        with pytest.raises(EngineError) as err:
            suggest_placement(workspace, evidence, provider)
        assert err.value.code == "provider_invalid"

    def test_already_assigned(self, workspace, provider):
        theme, members = theme_with_members(workspace, "T", ["in the theme"])
        with pytest.raises(EngineError) as err:
            suggest_placement(workspace, members[0], provider)
        assert err.value.code == "already_assigned"

    def test_unknown_node(self, workspace, provider):
        with pytest.raises(EngineError) as err:
            suggest_placement(workspace, "n99", provider)
        assert err.value.code == "unknown_node"

    def test_failed_generation_leaves_state_identical(self, workspace, provider):
        evidence = workspace.create_node({"kind": "evidence", "text": "latency"})
        before = workspace.serialize()
        with pytest.raises(EngineError):
            suggest_placement(workspace, evidence, provider)  # empty script
        assert workspace.serialize() == before


class TestPreviewAndResolve:
    def _pending_assign(self, workspace, provider):
        theme, _ = theme_with_members(workspace, "T2", ["query latency"])
        evidence = workspace.create_node({"kind": "evidence", "text": "spikes"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "assign", "theme_id": theme, "rationale": "overlap"})],
        )
        return theme, evidence, suggest_placement(workspace, evidence, provider)

    def test_preview_is_pure_and_repeatable(self, workspace, provider):
        theme, evidence, suggestion = self._pending_assign(workspace, provider)
        before = workspace.serialize()
        first = preview_suggestion(workspace, suggestion.suggestion_id)
        second = preview_suggestion(workspace, suggestion.suggestion_id)
        assert first == second
        assert workspace.serialize() == before
        assert first == [
            {
                "op": "add_edge",
                "edge": {
                    "edge_id": suggestion.payload["edge_id"],
                    "from": theme,
                    "to": evidence,
                    "kind": "membership",
                    "created_by": "ai_accepted",
                    "created_at": first[0]["edge"]["created_at"],
                },
            }
        ]

    def test_new_theme_preview_has_node_and_edge(self, workspace, provider):
        evidence = workspace.create_node({"kind": "evidence", "text": "latency"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "new_theme", "name": "Latency", "rationale": "w"})],
        )
        suggestion = suggest_placement(workspace, evidence, provider)
        delta = preview_suggestion(workspace, suggestion.suggestion_id)
        assert [c["op"] for c in delta] == ["add_node", "add_edge"]

    def test_preview_after_target_deleted_marks_stale(self, workspace, provider):
        theme, evidence, suggestion = self._pending_assign(workspace, provider)
        workspace.delete_node(theme)
        with pytest.raises(EngineError) as err:
            preview_suggestion(workspace, suggestion.suggestion_id)
        assert err.value.code == "suggestion_stale"
        assert workspace.get_suggestion(suggestion.suggestion_id).status == "stale"

    def test_accept_applies_preview_delta(self, workspace, provider):
        theme, evidence, suggestion = self._pending_assign(workspace, provider)
        previewed = preview_suggestion(workspace, suggestion.suggestion_id)
        mirror = workspace.clone()
        for change in previewed:
            mirror.apply_change(change)
        applied = resolve_suggestion(workspace, suggestion.suggestion_id, "accept")
        assert applied == previewed
        assert workspace.serialize_graph() == mirror.serialize_graph()
        assert workspace.get_suggestion(suggestion.suggestion_id).status == "accepted"
        edge = workspace.edges[suggestion.payload["edge_id"]]
        assert edge.created_by == "ai_accepted"

    def test_reject_leaves_graph_bytes_unchanged(self, workspace, provider):
        _, _, suggestion = self._pending_assign(workspace, provider)
        before = workspace.serialize_graph()
        assert resolve_suggestion(workspace, suggestion.suggestion_id, "reject") is None
        assert workspace.serialize_graph() == before
        assert workspace.get_suggestion(suggestion.suggestion_id).status == "rejected"

    def test_revise_new_theme_name(self, workspace, provider):
        evidence = workspace.create_node({"kind": "evidence", "text": "latency"})
        provider.register_mock_script(
            "placement/1",
            [json.dumps({"kind": "new_theme", "name": "Latency", "rationale": "w"})],
        )
        suggestion = suggest_placement(workspace, evidence, provider)
        resolve_suggestion(
            workspace, suggestion.suggestion_id, "revise", {"name": "Tail Latency"}
        )
        theme = workspace.get_node(suggestion.payload["node_id"])
        assert theme.name == "Tail Latency"
        assert theme.created_by == "human"
        assert workspace.get_suggestion(suggestion.suggestion_id).status == "revised"

    def test_invalid_revision_payload(self, workspace, provider):
        _, _, suggestion = self._pending_assign(workspace, provider)
        with pytest.raises(EngineError) as err:
            resolve_suggestion(
                workspace, suggestion.suggestion_id, "revise", {"theme_id": "n99"}
            )
        assert err.value.code == "invalid_revision_payload"
        assert workspace.get_suggestion(suggestion.suggestion_id).status == "pending"

    def test_resolve_terminal_status_rejected(self, workspace, provider):
        _, _, suggestion = self._pending_assign(workspace, provider)
        resolve_suggestion(workspace, suggestion.suggestion_id, "reject")
        with pytest.raises(EngineError):
            resolve_suggestion(workspace, suggestion.suggestion_id, "accept")

    def test_unknown_suggestion(self, workspace):
        with pytest.raises(EngineError) as err:
            preview_suggestion(workspace, "w1.s99")
        assert err.value.code == "unknown_suggestion"


class TestSuggestThemeName:
    def test_no_members(self, workspace, provider):
        theme = workspace.create_node({"kind": "theme", "name": "T"})
        with pytest.raises(EngineError) as err:
            suggest_theme_name(workspace, theme, provider)
        assert err.value.code == "no_evidence"

    def test_mock_name(self, workspace, provider):
        theme, members = theme_with_members(workspace, "T", ["index upkeep", "index merge"])
        provider.register_mock_script(
            "name/1", [json.dumps({"name": "Index Maintenance", "rationale": "shared"})]
        )
        suggestion = suggest_theme_name(workspace, theme, provider)
        assert suggestion.kind == "rename_theme"
        assert suggestion.payload["name"] == "Index Maintenance"
        assert suggestion.basis == tuple(members)

    def test_fallback_top_terms(self, workspace, provider):
        # Two-theme workspace; target members "query latency" and "query
        # latency spikes". Hand-computed TF-IDF over the member-concatenation
        # corpus: "query" and "latency" tie at tf 2, "spikes" at tf 1, all
        # with the same idf, so ties break alphabetically.
        theme, _ = theme_with_members(
            workspace, "Target", ["query latency", "query latency spikes"]
        )
        theme_with_members(workspace, "Other", ["index build", "index memory"])
        suggestion = suggest_theme_name(workspace, theme, provider)  # empty script
        assert suggestion.payload["name"] == "Latency Query Spikes"
        terms = top_tfidf_terms(
            "query latency\nquery latency spikes",
            ["query latency\nquery latency spikes", "index build\nindex memory"],
        )
        assert [t.title() for t in terms] == ["Latency", "Query", "Spikes"]

    def test_overlong_name_schema_rejected(self, workspace, provider):
        theme, _ = theme_with_members(workspace, "T", ["words"])
        provider.register_mock_script(
            "name/1",
            [json.dumps({"name": "x" * 61, "rationale": "too long"})] * 3,
        )
        with pytest.raises(EngineError) as err:
            suggest_theme_name(workspace, theme, provider)
        assert err.value.code == "provider_invalid"

    def test_accept_renames(self, workspace, provider):
        theme, _ = theme_with_members(workspace, "Old", ["index upkeep"])
        provider.register_mock_script(
            "name/1", [json.dumps({"name": "New Name", "rationale": "r"})]
        )
        suggestion = suggest_theme_name(workspace, theme, provider)
        resolve_suggestion(workspace, suggestion.suggestion_id, "accept")
        assert workspace.get_node(theme).name == "New Name"


class TestDescribeTheme:
    def test_grounded_keywords_kept(self, workspace, provider):
        theme, members = theme_with_members(
            workspace, "T", ["query latency spikes", "recall regression"]
        )
        provider.register_mock_script(
            "describe/1",
            [
                json.dumps(
                    {
                        "text": "Covers latency problems and recall issues.",
                        "keywords": [
                            {"keyword": "latency", "evidence_ids": [members[0]]},
                            {"keyword": "recall", "evidence_ids": [members[1]]},
                        ],
                        "rationale": "keywords from evidence",
                    }
                )
            ],
        )
        suggestion = describe_theme(workspace, theme, provider)
        links = suggestion.payload["description"]["keyword_links"]
        assert len(links) == 2
        assert suggestion.payload["warnings"] == []

    def test_ungrounded_keyword_dropped_with_warning(self, workspace, provider):
        theme, members = theme_with_members(
            workspace, "T", ["query latency spikes", "recall regression"]
        )
        provider.register_mock_script(
            "describe/1",
            [
                json.dumps(
                    {
                        "text": "Covers latency, recall, and throughput.",
                        "keywords": [
                            {"keyword": "latency", "evidence_ids": [members[0]]},
                            {"keyword": "recall", "evidence_ids": [members[1]]},
                            {"keyword": "throughput", "evidence_ids": [members[0]]},
                        ],
                        "rationale": "r",
                    }
                )
            ],
        )
        suggestion = describe_theme(workspace, theme, provider)
        links = suggestion.payload["description"]["keyword_links"]
        assert [l["keyword"] for l in links] == ["latency", "recall"]
        assert any("throughput" in w for w in suggestion.payload["warnings"])

    def test_all_ungrounded_errors(self, workspace, provider):
        theme, _ = theme_with_members(workspace, "T", ["query latency"])
        provider.register_mock_script(
            "describe/1",
            [
                json.dumps(
                    {
                        "text": "Mentions throughput and saturation only.",
                        "keywords": [
                            {"keyword": "throughput", "evidence_ids": []},
                            {"keyword": "saturation", "evidence_ids": []},
                        ],
                        "rationale": "r",
                    }
                )
            ],
        )
        with pytest.raises(EngineError) as err:
            describe_theme(workspace, theme, provider)
        assert err.value.code == "ungrounded_description"

    def test_accept_stores_description(self, workspace, provider):
        theme, members = theme_with_members(workspace, "T", ["query latency spikes"])
        provider.register_mock_script(
            "describe/1",
            [
                json.dumps(
                    {
                        "text": "About latency.",
                        "keywords": [{"keyword": "latency", "evidence_ids": [members[0]]}],
                        "rationale": "r",
                    }
                )
            ],
        )
        suggestion = describe_theme(workspace, theme, provider)
        resolve_suggestion(workspace, suggestion.suggestion_id, "accept")
        description = workspace.get_node(theme).description
        assert description is not None
        assert description.keyword_links[0].keyword == "latency"


class TestValidateGrounding:
    def _member(self, workspace, text):
        node_id = workspace.create_node({"kind": "evidence", "text": text})
        return workspace.get_node(node_id)

    def test_case_insensitive_match(self, workspace):
        member = self._member(workspace, "query latency spikes")
        description, warnings = validate_grounding(
            "All about Latency.", [{"keyword": "Latency", "evidence_ids": []}], [member]
        )
        assert description.keyword_links[0].evidence_ids == (member.node_id,)
        assert warnings == []

    def test_whole_word_rule(self, workspace):
        member = self._member(workspace, "query latency")
        with pytest.raises(EngineError) as err:
            validate_grounding(
                "Mentions late arrivals.", [{"keyword": "late", "evidence_ids": []}], [member]
            )
        assert err.value.code == "ungrounded_description"

    def test_claimed_ids_not_trusted(self, workspace):
        m1 = self._member(workspace, "query latency")
        m2 = self._member(workspace, "recall regression")
        description, _ = validate_grounding(
            "About latency.",
            [{"keyword": "latency", "evidence_ids": [m2.node_id, "E9"]}],
            [m1, m2],
        )
        assert description.keyword_links[0].evidence_ids == (m1.node_id,)

    def test_keyword_missing_from_text_dropped(self, workspace):
        m1 = self._member(workspace, "query latency")
        description, warnings = validate_grounding(
            "About latency.",
            [
                {"keyword": "latency", "evidence_ids": []},
                {"keyword": "query", "evidence_ids": []},
            ],
            [m1],
        )
        assert [l.keyword for l in description.keyword_links] == ["latency"]
        assert any("query" in w for w in warnings)

    @pytest.mark.parametrize(
        "text,keyword,expected",
        [
            ("query latency spikes", "latency", True),
            ("query latency", "late", False),
            ("Latency matters", "latency", True),
            ("end-to-end latency", "end-to-end", True),
            ("latency2 metric", "latency", False),
            ("", "latency", False),
            ("latency", "", False),
        ],
    )
    def test_contains_whole_word(self, text, keyword, expected):
        assert contains_whole_word(text, keyword) is expected


class TestOfflineDeterminism:
    def test_replayed_op_sequences_are_byte_identical(self):
        serialized = []
        for _ in range(2):
            rng = random.Random(4242)
            workspace = Workspace("w", clock=fixed_clock)
            provider = scripted_provider(rng)
            apply_random_ops(workspace, rng, 80, provider)
            serialized.append(workspace.serialize())
        assert serialized[0] == serialized[1]
