"""Evaluation harness: classification, scoring, and the bundled fixture."""

import json

import pytest

from themecanvas.errors import EngineError
from themecanvas.evaluation import (
    GoldItem,
    GoldLabeling,
    ItemAssignment,
    apply_refinement,
    build_fixture_workspace,
    bundled_fixture,
    load_labeling,
    run_classification,
    run_fixture_iterations,
    score_accuracy,
)
from themecanvas.graph import Workspace

from conftest import fixed_clock, oracle_rank


def labeled(items):
    return GoldLabeling(
        items=tuple(GoldItem(f"x{i}", text, gold) for i, (text, gold) in enumerate(items)),
        labels=tuple({gold for _, gold in items}),
    )


def assignments_for(gold: GoldLabeling, correct_ids: set[str], theme: str = "t-right"):
    rows = []
    for item in gold.items:
        rows.append(
            ItemAssignment(
                item_id=item.item_id,
                theme_id=theme if item.item_id in correct_ids else "t-wrong",
                score=1.0,
                low_confidence=False,
            )
        )
    return rows


class TestScoreAccuracy:
    def _sixteen(self):
        return labeled([(f"text {i}", "yes") for i in range(16)])

    def test_seven_of_sixteen(self):
        gold = self._sixteen()
        correct = {f"x{i}" for i in range(7)}
        report = score_accuracy(
            assignments_for(gold, correct), gold, {"t-right": "yes", "t-wrong": "no"}
        )
        assert report.correct_count == 7
        assert report.total_count == 16
        assert report.accuracy == 0.4375

    def test_thirteen_of_sixteen(self):
        gold = self._sixteen()
        correct = {f"x{i}" for i in range(13)}
        report = score_accuracy(
            assignments_for(gold, correct), gold, {"t-right": "yes", "t-wrong": "no"}
        )
        assert report.accuracy == 0.8125

    def test_zero_of_n(self):
        gold = self._sixteen()
        report = score_accuracy(
            assignments_for(gold, set()), gold, {"t-right": "yes", "t-wrong": "no"}
        )
        assert report.accuracy == 0.0

    def test_accuracy_is_exact_ratio(self):
        gold = self._sixteen()
        for k in range(17):
            correct = {f"x{i}" for i in range(k)}
            report = score_accuracy(
                assignments_for(gold, correct), gold, {"t-right": "yes", "t-wrong": "no"}
            )
            assert report.accuracy == report.correct_count / report.total_count
            assert report.correct_count == k

    def test_item_mismatch(self):
        gold = self._sixteen()
        rows = assignments_for(gold, set())[:-1]
        with pytest.raises(EngineError) as err:
            score_accuracy(rows, gold, {})
        assert err.value.code == "item_mismatch"

    def test_duplicate_assignments_rejected(self):
        gold = self._sixteen()
        rows = assignments_for(gold, set())
        rows.append(rows[0])
        with pytest.raises(EngineError) as err:
            score_accuracy(rows, gold, {"t-right": "yes", "t-wrong": "no"})
        assert err.value.code == "item_mismatch"
        assert err.value.details["duplicates"] == 1


class TestRunClassification:
    def test_four_abstracts_all_correct(self):
        # Two indexing and two latency abstracts against two matching themes;
        # the brute-force argmax oracle must agree with every assignment.
        workspace = Workspace("w", clock=fixed_clock)
        indexing = workspace.create_node({"kind": "theme", "name": "Indexing"})
        latency = workspace.create_node({"kind": "theme", "name": "Query Latency"})
        for text in ("index build pipeline", "index segment merge"):
            evidence = workspace.create_node({"kind": "evidence", "text": text})
            workspace.connect(indexing, evidence, "membership")
        for text in ("query latency tail", "latency spikes under load"):
            evidence = workspace.create_node({"kind": "evidence", "text": text})
            workspace.connect(latency, evidence, "membership")
        gold = labeled(
            [
                ("building the index faster", "indexing"),
                ("index merge scheduling", "indexing"),
                ("query latency regressions", "latency"),
                ("tail latency spikes", "latency"),
            ]
        )
        assignments = run_classification(gold.items, workspace)
        report = score_accuracy(
            assignments, gold, {indexing: "indexing", latency: "latency"}
        )
        assert report.accuracy == 1.0
        for item, assignment in zip(gold.items, assignments):
            oracle_best = oracle_rank(workspace, item.text)[0]
            assert assignment.theme_id == oracle_best[0]
            assert abs(assignment.score - oracle_best[1]) < 1e-9

    def test_no_themes(self):
        workspace = Workspace("w", clock=fixed_clock)
        gold = labeled([("anything", "x")])
        with pytest.raises(EngineError) as err:
            run_classification(gold.items, workspace)
        assert err.value.code == "no_themes"

    def test_zero_overlap_falls_to_lowest_theme_id(self):
        workspace = Workspace("w", clock=fixed_clock)
        t1 = workspace.create_node({"kind": "theme", "name": "Alpha"})
        t2 = workspace.create_node({"kind": "theme", "name": "Beta"})
        gold = labeled([("zzz qqq www", "x")])
        (assignment,) = run_classification(gold.items, workspace)
        assert assignment.theme_id == min(t1, t2)
        assert assignment.score == 0.0
        assert assignment.low_confidence is True


class TestFixture:
    def test_fixture_shape(self):
        labeling = bundled_fixture()
        assert len(labeling.items) == 16
        assert set(labeling.labels) == {"indexing", "latency", "compression", "replication"}
        per_label = {}
        for item in labeling.items:
            per_label[item.gold_theme] = per_label.get(item.gold_theme, 0) + 1
        assert set(per_label.values()) == {4}

    def test_bad_fixture_schema(self):
        with pytest.raises(EngineError) as err:
            load_labeling({"schema": "eval/2", "items": [], "labels": []})
        assert err.value.code == "unknown_schema_version"

    def test_pinned_iteration_accuracies(self):
        # Frozen at fixture-authoring time from the brute-force oracle:
        # the misaligned first pass scores 9/16, the refined pass 15/16.
        first, second = run_fixture_iterations()
        assert (first.correct_count, first.total_count) == (9, 16)
        assert first.accuracy == 0.5625
        assert (second.correct_count, second.total_count) == (15, 16)
        assert second.accuracy == 0.9375
        assert second.accuracy >= first.accuracy
        for report in (first, second):
            recount = sum(1 for row in report.assignments if row["correct"])
            assert report.correct_count == recount
            assert report.accuracy == recount / len(report.assignments)

    def test_iterations_agree_with_oracle(self):
        labeling = bundled_fixture()
        workspace, labels = build_fixture_workspace()
        for stage in range(2):
            if stage == 1:
                labels = apply_refinement(workspace)
            assignments = run_classification(labeling.items, workspace)
            for item, assignment in zip(labeling.items, assignments):
                best = oracle_rank(workspace, item.text)[0]
                assert assignment.theme_id == best[0]
                assert abs(assignment.score - best[1]) < 1e-9

    def test_refinement_never_decreases_accuracy(self):
        reports = run_fixture_iterations()
        for before, after in zip(reports, reports[1:]):
            assert after.accuracy >= before.accuracy

    def test_report_is_deterministic(self):
        as_dicts = [
            json.dumps([r.to_dict() for r in run_fixture_iterations()], sort_keys=True)
            for _ in range(2)
        ]
        assert as_dicts[0] == as_dicts[1]
