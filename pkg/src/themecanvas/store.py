"""Versioned workspace persistence, undo, and codebook export.

Workspaces persist as single ``workspace/1`` JSON files with deterministic
serialization (sorted keys, stable ids), so identical states produce
identical bytes and files diff cleanly. Loading re-validates every invariant
the engine maintains (anchors against the embedded documents, the hierarchy
forest, edge endpoints, the revision/event-count equality) and refuses files
that fail, naming the violated invariant.

Undo walks the event log backwards: each event stores the inverse delta of
the mutation it recorded, so one application per event returns any reachable
state exactly to the empty initial workspace.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

from .corpus import VALID, checksum_pages
from .errors import EngineError
from .graph import (
    HIERARCHY,
    MEMBERSHIP,
    SUGGESTION_KINDS,
    SUGGESTION_STATUSES,
    WORKSPACE_SCHEMA,
    CodebookEntry,
    EvidenceNode,
    ThemeNode,
    Workspace,
    canonical_json,
)


def save_workspace(workspace: Workspace, destination: str | Path) -> None:
    """Write the workspace file; identical states produce identical bytes."""
    try:
        Path(destination).write_bytes(workspace.serialize())
    except OSError as exc:
        raise EngineError("io_failure", f"cannot write {destination}: {exc}")


def load_workspace(
    source: str | Path, clock: Callable[[], float] | None = None
) -> Workspace:
    """Read and validate a workspace file; refuses invalid ones."""
    try:
        raw = Path(source).read_bytes()
    except OSError as exc:
        raise EngineError("io_failure", f"cannot read {source}: {exc}")
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EngineError("integrity_violation", str(exc), invariant="valid_json")
    if not isinstance(data, dict) or data.get("schema") != WORKSPACE_SCHEMA:
        raise EngineError(
            "unknown_schema_version",
            f"expected schema {WORKSPACE_SCHEMA!r}, got {data.get('schema')!r}",
        )
    try:
        workspace = Workspace.from_dict(data, clock=clock)
    except (KeyError, TypeError, ValueError, EngineError) as exc:
        raise EngineError("integrity_violation", str(exc), invariant="structure")
    validate_workspace(workspace)
    return workspace


def _violation(invariant: str, message: str) -> EngineError:
    return EngineError("integrity_violation", message, invariant=invariant)


def validate_workspace(workspace: Workspace) -> None:
    """Re-check every structural invariant; raises integrity_violation."""
    for doc_id in workspace.corpus.doc_ids():
        doc = workspace.corpus.get(doc_id)
        if checksum_pages(p.text for p in doc.pages) != doc.checksum:
            raise _violation("document_checksum", f"checksum mismatch for {doc_id}")

    for node in workspace.nodes.values():
        if isinstance(node, EvidenceNode):
            if not node.text.strip():
                raise _violation("empty_text", f"evidence {node.node_id} has no text")
            if node.anchor is not None:
                if workspace.corpus.verify_anchor(node.anchor) != VALID:
                    raise _violation(
                        "anchor_quote", f"anchor of {node.node_id} fails verification"
                    )
                if node.text != node.anchor.quote:
                    raise _violation(
                        "anchor_quote", f"text of {node.node_id} differs from its quote"
                    )
            if node.summaries is not None:
                s = node.summaries
                if not (
                    len(s.tiny) <= len(s.short) <= len(s.medium) <= len(node.text)
                ):
                    raise _violation(
                        "summary_lengths", f"tier lengths not monotone on {node.node_id}"
                    )
        elif isinstance(node, ThemeNode):
            if not node.name.strip():
                raise _violation("empty_text", f"theme {node.node_id} has no name")

    seen_memberships: set[tuple[str, str]] = set()
    parents: dict[str, str] = {}
    for edge in workspace.edges.values():
        if edge.from_id not in workspace.nodes or edge.to_id not in workspace.nodes:
            raise _violation("edge_endpoints", f"edge {edge.edge_id} dangles")
        from_kind = workspace.nodes[edge.from_id].kind
        to_kind = workspace.nodes[edge.to_id].kind
        if edge.kind == MEMBERSHIP:
            if from_kind != "theme" or to_kind != "evidence":
                raise _violation(
                    "edge_endpoints", f"membership edge {edge.edge_id} mistyped"
                )
            pair = (edge.from_id, edge.to_id)
            if pair in seen_memberships:
                raise _violation(
                    "duplicate_membership", f"duplicate membership {pair}"
                )
            seen_memberships.add(pair)
        elif edge.kind == HIERARCHY:
            if from_kind != "theme" or to_kind != "theme":
                raise _violation(
                    "edge_endpoints", f"hierarchy edge {edge.edge_id} mistyped"
                )
            if edge.to_id in parents:
                raise _violation(
                    "hierarchy_forest", f"{edge.to_id} has two hierarchy parents"
                )
            parents[edge.to_id] = edge.from_id
        else:
            raise _violation("edge_endpoints", f"edge {edge.edge_id} has unknown kind")

    for start in parents:
        current: str | None = start
        seen: set[str] = set()
        while current is not None:
            if current in seen:
                raise _violation("hierarchy_forest", f"hierarchy cycle through {start}")
            seen.add(current)
            current = parents.get(current)

    for suggestion in workspace.suggestions.values():
        if suggestion.status not in SUGGESTION_STATUSES:
            raise _violation(
                "suggestion_status",
                f"{suggestion.suggestion_id} has status {suggestion.status!r}",
            )
        if suggestion.kind not in SUGGESTION_KINDS:
            raise _violation(
                "suggestion_status",
                f"{suggestion.suggestion_id} has kind {suggestion.kind!r}",
            )
        if not suggestion.basis:
            raise _violation(
                "suggestion_basis", f"{suggestion.suggestion_id} has empty basis"
            )

    if workspace.revision != len(workspace.events):
        raise _violation(
            "revision_event_count",
            f"revision {workspace.revision} != {len(workspace.events)} events",
        )
    for index, event in enumerate(workspace.events, start=1):
        if event.seq != index:
            raise _violation("event_sequence", f"event {index} has seq {event.seq}")


def undo(workspace: Workspace) -> int:
    """Revert the last applied event; returns the new revision."""
    return workspace.undo()


# ---------------------------------------------------------------------------
# Codebook export
# ---------------------------------------------------------------------------


def export_codebook(workspace: Workspace, format: str = "markdown") -> bytes:
    """Render the codebook projection deterministically."""
    entries = workspace.codebook_projection()
    if format == "json":
        return canonical_json(
            {"workspace_id": workspace.workspace_id, "themes": [e.to_dict() for e in entries]}
        )
    if format != "markdown":
        raise EngineError("validation_error", f"unknown export format {format!r}")
    return _render_markdown(workspace, entries).encode("utf-8")


def _render_markdown(workspace: Workspace, entries: list[CodebookEntry]) -> str:
    lines = ["# Codebook"]
    for entry in entries:
        lines.append("")
        lines.append(f"## {entry.name}")
        if entry.description is not None:
            lines.append("")
            lines.append(entry.description.text)
        for evidence in entry.shown_evidence:
            lines.append("")
            for text_line in evidence["text"].splitlines() or [""]:
                lines.append(f"> {text_line}")
            anchor = evidence.get("anchor")
            if anchor:
                title = _doc_title(workspace, anchor["doc_id"])
                lines.append(f"> source: {title}, p.{anchor['page_no']}")
        extra = entry.total_evidence_count - len(entry.shown_evidence)
        if extra > 0:
            lines.append("")
            lines.append(f"+{extra} more")
    return "\n".join(lines) + "\n"


def _doc_title(workspace: Workspace, doc_id: str) -> str:
    if doc_id in workspace.corpus:
        return workspace.corpus.get(doc_id).title
    return doc_id


def export_codebook_dict(workspace: Workspace) -> dict[str, Any]:
    """Codebook as plain data, for the HTTP layer."""
    return {
        "workspace_id": workspace.workspace_id,
        "themes": [e.to_dict() for e in workspace.codebook_projection()],
    }
