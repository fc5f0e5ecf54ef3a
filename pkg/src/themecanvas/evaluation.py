"""Desk-scale classification harness: themes against gold labels, per iteration.

Classifies corpus items (abstract-length texts) into the workspace's current
themes, scores exact-match accuracy against a gold labeling, and tracks how
accuracy moves as themes are refined (renamed, merged, fed more excerpts).
The lexical matcher reuses the theme-ranking scorer so results are
deterministic and reproducible offline; the provider matcher routes each item
through the placement prompt constrained to existing themes, and its numbers
are only meaningful against a live model.

The bundled fixture ships 16 labeled items over four topics plus a scripted
two-iteration refinement; expected accuracies are pinned by a brute-force
oracle at authoring time.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .errors import EngineError
from .graph import Workspace
from .provider import PromptRequest, ProviderClient
from .suggest import rank_themes

FIXTURE_SCHEMA = "eval/1"

LEXICAL = "lexical"
PROVIDER = "provider"


@dataclass(frozen=True)
class GoldItem:
    item_id: str
    text: str
    gold_theme: str


@dataclass(frozen=True)
class GoldLabeling:
    items: tuple[GoldItem, ...]
    labels: tuple[str, ...]


@dataclass(frozen=True)
class ItemAssignment:
    item_id: str
    theme_id: str
    score: float
    low_confidence: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "theme_id": self.theme_id,
            "score": self.score,
            "low_confidence": self.low_confidence,
        }


@dataclass(frozen=True)
class EvalReport:
    iteration_tag: str
    matcher: str
    assignments: tuple[dict[str, Any], ...]
    correct_count: int
    total_count: int
    accuracy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "iteration_tag": self.iteration_tag,
            "matcher": self.matcher,
            "assignments": list(self.assignments),
            "correct_count": self.correct_count,
            "total_count": self.total_count,
            "accuracy": self.accuracy,
        }


def load_labeling(data: dict[str, Any]) -> GoldLabeling:
    if not isinstance(data, dict) or data.get("schema") != FIXTURE_SCHEMA:
        raise EngineError(
            "unknown_schema_version",
            f"expected schema {FIXTURE_SCHEMA!r}, got {data.get('schema')!r}",
        )
    labels = tuple(data.get("labels", []))
    items = []
    seen = set()
    for raw in data.get("items", []):
        item = GoldItem(
            item_id=raw["item_id"], text=raw["text"], gold_theme=raw["gold_theme"]
        )
        if not item.text.strip():
            raise EngineError("validation_error", f"item {item.item_id} has empty text")
        if item.gold_theme not in labels:
            raise EngineError(
                "validation_error",
                f"item {item.item_id} labeled {item.gold_theme!r}, not in label set",
            )
        if item.item_id in seen:
            raise EngineError("validation_error", f"duplicate item id {item.item_id}")
        seen.add(item.item_id)
        items.append(item)
    if not items:
        raise EngineError("validation_error", "labeling has no items")
    return GoldLabeling(items=tuple(items), labels=labels)


def bundled_fixture() -> GoldLabeling:
    text = resources.files(__package__).joinpath("fixtures/eval_corpus.json").read_text(
        encoding="utf-8"
    )
    return load_labeling(json.loads(text))


# ---------------------------------------------------------------------------
# Classification and scoring
# ---------------------------------------------------------------------------


def run_classification(
    items: Sequence[GoldItem],
    workspace: Workspace,
    matcher: str = LEXICAL,
    provider: ProviderClient | None = None,
) -> list[ItemAssignment]:
    """Assign each item to its best theme under the chosen matcher.

    Lexical picks the argmax of the TF-IDF cosine ranking (ties fall to the
    ascending theme id, flagged low-confidence at score zero). The provider
    matcher sends each item through the placement prompt restricted to the
    existing themes.
    """
    themes = workspace.themes()
    if not themes:
        raise EngineError("no_themes", "classification needs at least one theme")
    assignments = []
    for item in items:
        if matcher == LEXICAL:
            ranking = rank_themes(workspace, item.text)
            best = ranking[0]
            assignments.append(
                ItemAssignment(
                    item_id=item.item_id,
                    theme_id=best.theme_id,
                    score=best.score,
                    low_confidence=best.score == 0.0,
                )
            )
        elif matcher == PROVIDER:
            if provider is None:
                raise EngineError("validation_error", "provider matcher needs a provider")
            theme_lines = "\n".join(f"{t.node_id}: {t.name}" for t in themes)
            response = provider.complete_structured(
                PromptRequest(
                    template_id="placement/1",
                    variables={"excerpt": item.text, "themes": theme_lines},
                    response_schema_id="placement/1",
                )
            )
            if response["kind"] != "assign" or response.get("theme_id") not in {
                t.node_id for t in themes
            }:
                raise EngineError(
                    "provider_invalid",
                    f"matcher must assign to an existing theme, got {response!r}",
                )
            assignments.append(
                ItemAssignment(
                    item_id=item.item_id,
                    theme_id=response["theme_id"],
                    score=1.0,
                    low_confidence=False,
                )
            )
        else:
            raise EngineError("validation_error", f"unknown matcher {matcher!r}")
    return assignments


def score_accuracy(
    assignments: Sequence[ItemAssignment],
    gold: GoldLabeling,
    theme_labels: Mapping[str, str],
    iteration_tag: str = "",
    matcher: str = LEXICAL,
) -> EvalReport:
    """Exact-match accuracy of assignments against the gold labeling; pure.

    ``theme_labels`` maps each theme id to the gold label it stands for.
    """
    gold_by_id = {item.item_id: item for item in gold.items}
    assigned_ids = {a.item_id for a in assignments}
    if assigned_ids != set(gold_by_id) or len(assignments) != len(gold_by_id):
        raise EngineError(
            "item_mismatch",
            "assignments and gold labeling must cover the same item ids exactly once",
            missing=sorted(set(gold_by_id) - assigned_ids),
            extra=sorted(assigned_ids - set(gold_by_id)),
            duplicates=len(assignments) - len(assigned_ids),
        )
    rows = []
    correct = 0
    for assignment in assignments:
        item = gold_by_id[assignment.item_id]
        label = theme_labels.get(assignment.theme_id)
        is_correct = label == item.gold_theme
        correct += int(is_correct)
        rows.append(
            {
                **assignment.to_dict(),
                "label": label,
                "gold_theme": item.gold_theme,
                "correct": is_correct,
            }
        )
    total = len(rows)
    return EvalReport(
        iteration_tag=iteration_tag,
        matcher=matcher,
        assignments=tuple(rows),
        correct_count=correct,
        total_count=total,
        accuracy=correct / total,
    )


# ---------------------------------------------------------------------------
# Bundled two-iteration refinement
# ---------------------------------------------------------------------------

# Iteration 1: vague system-generated themes with one seed excerpt each. The
# "General Methods" catch-all soaks up items that merely sound like papers.
_INITIAL_THEMES = [
    ("General Methods", ["this paper presents a method and evaluates the results"]),
    ("Fast Lookup", ["fast lookup structures"]),
    ("Response Time", ["stable response time under load"]),
    ("Small Footprint", ["smaller memory footprint"]),
    ("Copies Of Data", ["copies of data kept in sync"]),
]

_INITIAL_LABELS = {
    "General Methods": "indexing",
    "Fast Lookup": "indexing",
    "Response Time": "latency",
    "Small Footprint": "compression",
    "Copies Of Data": "replication",
}

# Iteration 2: merge away the catch-all, rename to gold-aligned names, and
# feed each theme two stronger excerpts.
_RENAMES = {
    "Fast Lookup": "Index Construction",
    "Response Time": "Query Latency",
    "Small Footprint": "Data Compression",
    "Copies Of Data": "Replication And Consistency",
}

_EXTRA_SEEDS = {
    "Index Construction": [
        "index construction and build time for tree structures",
        "bulk loading segments during index build",
    ],
    "Query Latency": [
        "query latency spikes and tail response time",
        "p99 query latency under bursty load",
    ],
    "Data Compression": [
        "compression shrinks the storage footprint",
        "entropy coding packs columns into compact codes",
    ],
    "Replication And Consistency": [
        "replicas stay consistent through consensus",
        "replica synchronization and failover across regions",
    ],
}

_REFINED_LABELS = {
    "Index Construction": "indexing",
    "Query Latency": "latency",
    "Data Compression": "compression",
    "Replication And Consistency": "replication",
}


def build_fixture_workspace(
    clock: Callable[[], float] | None = None,
) -> tuple[Workspace, dict[str, str]]:
    """Iteration-1 workspace: misaligned themes with weak seed evidence.

    Returns the workspace and the theme-id-to-gold-label mapping.
    """
    workspace = Workspace("eval", clock=clock or (lambda: 0.0))
    theme_ids: dict[str, str] = {}
    for column, (name, seeds) in enumerate(_INITIAL_THEMES):
        theme_id = workspace.create_node(
            {"kind": "theme", "name": name, "position": (column * 200.0, 0.0)}
        )
        theme_ids[name] = theme_id
        for row, seed in enumerate(seeds, start=1):
            evidence_id = workspace.create_node(
                {"kind": "evidence", "text": seed, "position": (column * 200.0, row * 80.0)}
            )
            workspace.connect(theme_id, evidence_id, "membership")
    labels = {theme_ids[name]: label for name, label in _INITIAL_LABELS.items()}
    return workspace, labels


def apply_refinement(workspace: Workspace) -> dict[str, str]:
    """Iteration-2 edits: merge the catch-all, rename, add stronger excerpts.

    Returns the refreshed theme-id-to-gold-label mapping.
    """
    by_name = {t.name: t.node_id for t in workspace.themes()}
    workspace.merge_themes(by_name["Fast Lookup"], by_name["General Methods"])
    for old_name, new_name in _RENAMES.items():
        workspace.update_node(by_name[old_name], {"name": new_name})
    by_name = {t.name: t.node_id for t in workspace.themes()}
    for row, (name, seeds) in enumerate(_EXTRA_SEEDS.items()):
        for column, seed in enumerate(seeds, start=1):
            evidence_id = workspace.create_node(
                {
                    "kind": "evidence",
                    "text": seed,
                    "position": (column * 200.0, 400.0 + row * 80.0),
                }
            )
            workspace.connect(by_name[name], evidence_id, "membership")
    return {by_name[name]: label for name, label in _REFINED_LABELS.items()}


def run_fixture_iterations(
    clock: Callable[[], float] | None = None,
) -> list[EvalReport]:
    """Both refinement iterations on the bundled fixture, lexical matcher."""
    labeling = bundled_fixture()
    workspace, labels = build_fixture_workspace(clock)
    first = score_accuracy(
        run_classification(labeling.items, workspace),
        labeling,
        labels,
        iteration_tag="iteration-1",
    )
    labels = apply_refinement(workspace)
    second = score_accuracy(
        run_classification(labeling.items, workspace),
        labeling,
        labels,
        iteration_tag="iteration-2",
    )
    return [first, second]


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def render_table(report: EvalReport) -> str:
    """Fixed-width plain-text table for terminals and logs."""
    header = f"{'item':<8} {'gold':<14} {'assigned':<14} {'score':>7}  ok"
    lines = [
        f"[{report.iteration_tag or 'run'}] matcher={report.matcher} "
        f"accuracy={report.correct_count}/{report.total_count} ({report.accuracy:.4f})",
        header,
        "-" * len(header),
    ]
    for row in report.assignments:
        lines.append(
            f"{row['item_id']:<8} {row['gold_theme']:<14} {str(row['label']):<14} "
            f"{row['score']:>7.4f}  {'yes' if row['correct'] else 'NO'}"
        )
    return "\n".join(lines)


def write_report_files(reports: Sequence[EvalReport], out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, report.csv, and accuracy.png into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    json_path = out / "report.json"
    json_path.write_text(
        json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    csv_path = out / "report.csv"
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["iteration", "item_id", "gold_theme", "theme_id", "label", "score", "correct"]
    )
    for report in reports:
        for row in report.assignments:
            writer.writerow(
                [
                    report.iteration_tag,
                    row["item_id"],
                    row["gold_theme"],
                    row["theme_id"],
                    row["label"],
                    f"{row['score']:.6f}",
                    int(row["correct"]),
                ]
            )
    csv_path.write_text(buffer.getvalue(), encoding="utf-8")

    figure_path = out / "accuracy.png"
    render_accuracy_figure(reports, figure_path)
    return {"json": json_path, "csv": csv_path, "figure": figure_path}


def render_accuracy_figure(reports: Sequence[EvalReport], path: str | Path) -> None:
    """Bar chart of accuracy per refinement iteration."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tags = [r.iteration_tag or f"run {i}" for i, r in enumerate(reports, start=1)]
    values = [r.accuracy for r in reports]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(tags, values, color="#4878a8", width=0.5)
    for bar, report in zip(bars, reports):
        ax.annotate(
            f"{report.correct_count}/{report.total_count}",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title("Classification accuracy by refinement iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
