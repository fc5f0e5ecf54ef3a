"""Workspace state: the spatial graph of evidence and theme nodes.

A :class:`Workspace` aggregates everything a researcher builds: ingested
documents, evidence and theme nodes with canvas positions, membership and
hierarchy edges, AI suggestions, and the append-only event log. Every
mutation is planned as an ordered list of primitive changes (``add_node``,
``remove_node``, ``update_node``, ``add_edge``, ``remove_edge``, plus
document/suggestion primitives), validated up front, then applied atomically
and logged together with its inverse. Applying a delta then its inverse
restores the prior state exactly, which is what undo relies on.

Hierarchy edges always form a forest (at most one parent per theme, no
cycles), membership edges are unique per (theme, evidence) pair, and anchored
evidence keeps ``text == anchor.quote`` at all times.

Ids are deterministic: one per-workspace counter feeds node (``n<k>``), edge
(``e<k>``) and suggestion (``<workspace_id>.s<k>``) ids, so replaying the
same operation sequence from the same initial state reproduces the workspace
byte for byte. Suggestion ids carry the workspace id because the service
routes them without a workspace path segment.
"""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Callable, Iterable

from .corpus import Anchor, CorpusStore, SourceDocument, build_document
from .errors import EngineError
from .summarize import SummaryTiers

WORKSPACE_SCHEMA = "workspace/1"

CREATED_BY_HUMAN = "human"
CREATED_BY_AI = "ai_accepted"

MEMBERSHIP = "membership"
HIERARCHY = "hierarchy"

PENDING = "pending"
ACCEPTED = "accepted"
REVISED = "revised"
REJECTED = "rejected"
STALE = "stale"

SUGGESTION_STATUSES = (PENDING, ACCEPTED, REVISED, REJECTED, STALE)
SUGGESTION_KINDS = ("assign", "new_theme", "rename_theme", "describe_theme")


# ---------------------------------------------------------------------------
# Semantic zoom
# ---------------------------------------------------------------------------


class DetailTier(IntEnum):
    """Detail levels ordered full > medium > short > tiny."""

    tiny = 0
    short = 1
    medium = 2
    full = 3


@dataclass(frozen=True)
class ZoomThresholds:
    """Zoom cutoffs for evidence tiers; four bands over a 0.1-1.5 zoom range."""

    full: float = 0.75
    medium: float = 0.5
    short: float = 0.25

    def tier_for(self, zoom: float) -> DetailTier:
        if zoom >= self.full:
            return DetailTier.full
        if zoom >= self.medium:
            return DetailTier.medium
        if zoom >= self.short:
            return DetailTier.short
        return DetailTier.tiny

    def to_dict(self) -> dict[str, float]:
        return {"full": self.full, "medium": self.medium, "short": self.short}


DEFAULT_THRESHOLDS = ZoomThresholds()


def tier_for_zoom(
    zoom: float, node_kind: str, thresholds: ZoomThresholds = DEFAULT_THRESHOLDS
) -> DetailTier:
    """Detail tier a node renders at for a zoom factor.

    Theme nodes keep their fixed text at every zoom; evidence nodes follow the
    threshold table.
    """
    if not (isinstance(zoom, (int, float)) and zoom > 0) or math.isnan(zoom):
        raise EngineError("nonpositive_zoom", f"zoom must be > 0, got {zoom!r}")
    if node_kind == "theme":
        return DetailTier.full
    if node_kind == "evidence":
        return thresholds.tier_for(zoom)
    raise EngineError("validation_error", f"unknown node kind {node_kind!r}")


# ---------------------------------------------------------------------------
# Node, edge, and suggestion records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeywordLink:
    keyword: str
    evidence_ids: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"keyword": self.keyword, "evidence_ids": list(self.evidence_ids)}


@dataclass(frozen=True)
class GroundedDescription:
    """Theme description whose keywords are verified against member evidence."""

    text: str
    keyword_links: tuple[KeywordLink, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "keyword_links": [link.to_dict() for link in self.keyword_links],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GroundedDescription":
        return cls(
            text=data["text"],
            keyword_links=tuple(
                KeywordLink(link["keyword"], tuple(link["evidence_ids"]))
                for link in data["keyword_links"]
            ),
        )


@dataclass
class EvidenceNode:
    node_id: str
    text: str
    position: tuple[float, float]
    created_by: str
    created_at: int
    anchor: Anchor | None = None
    summaries: SummaryTiers | None = None

    kind = "evidence"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "evidence",
            "node_id": self.node_id,
            "text": self.text,
            "anchor": self.anchor.to_dict() if self.anchor else None,
            "summaries": self.summaries.to_dict() if self.summaries else None,
            "position": list(self.position),
            "created_by": self.created_by,
            "created_at": self.created_at,
        }


@dataclass
class ThemeNode:
    node_id: str
    name: str
    position: tuple[float, float]
    created_by: str
    created_at: int
    description: GroundedDescription | None = None

    kind = "theme"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "theme",
            "node_id": self.node_id,
            "name": self.name,
            "description": self.description.to_dict() if self.description else None,
            "position": list(self.position),
            "created_by": self.created_by,
            "created_at": self.created_at,
        }


def node_from_dict(data: dict[str, Any]) -> EvidenceNode | ThemeNode:
    position = (float(data["position"][0]), float(data["position"][1]))
    if data["kind"] == "evidence":
        return EvidenceNode(
            node_id=data["node_id"],
            text=data["text"],
            anchor=Anchor.from_dict(data["anchor"]) if data.get("anchor") else None,
            summaries=SummaryTiers.from_dict(data["summaries"])
            if data.get("summaries")
            else None,
            position=position,
            created_by=data["created_by"],
            created_at=int(data["created_at"]),
        )
    if data["kind"] == "theme":
        return ThemeNode(
            node_id=data["node_id"],
            name=data["name"],
            description=GroundedDescription.from_dict(data["description"])
            if data.get("description")
            else None,
            position=position,
            created_by=data["created_by"],
            created_at=int(data["created_at"]),
        )
    raise EngineError("validation_error", f"unknown node kind {data.get('kind')!r}")


@dataclass
class Edge:
    edge_id: str
    from_id: str
    to_id: str
    kind: str
    created_by: str
    created_at: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "edge_id": self.edge_id,
            "from": self.from_id,
            "to": self.to_id,
            "kind": self.kind,
            "created_by": self.created_by,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Edge":
        return cls(
            edge_id=data["edge_id"],
            from_id=data["from"],
            to_id=data["to"],
            kind=data["kind"],
            created_by=data["created_by"],
            created_at=int(data["created_at"]),
        )


@dataclass
class Suggestion:
    """An AI proposal with a human-resolved lifecycle.

    ``payload`` is kind-specific and JSON-ready; entity ids a suggestion would
    create (new theme node, membership edge) are pre-allocated at generation
    time so preview and acceptance apply the identical delta. ``base_revision``
    is the workspace revision the proposal was computed from; suggestions go
    stale rather than silently re-targeting.
    """

    suggestion_id: str
    kind: str
    payload: dict[str, Any]
    rationale: str
    basis: tuple[str, ...]
    base_revision: int
    status: str = PENDING

    def to_dict(self) -> dict[str, Any]:
        # The payload is copied so event records never alias live state.
        return {
            "suggestion_id": self.suggestion_id,
            "kind": self.kind,
            "payload": copy.deepcopy(self.payload),
            "rationale": self.rationale,
            "basis": list(self.basis),
            "base_revision": self.base_revision,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Suggestion":
        return cls(
            suggestion_id=data["suggestion_id"],
            kind=data["kind"],
            payload=copy.deepcopy(data["payload"]),
            rationale=data["rationale"],
            basis=tuple(data["basis"]),
            base_revision=int(data["base_revision"]),
            status=data["status"],
        )


@dataclass
class WorkspaceEvent:
    """One applied mutation: payload for audit, inverse delta for undo."""

    seq: int
    op_name: str
    payload: dict[str, Any]
    inverse: list[dict[str, Any]]
    counter_before: int
    timestamp: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "op_name": self.op_name,
            "payload": self.payload,
            "inverse": self.inverse,
            "counter_before": self.counter_before,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "WorkspaceEvent":
        return cls(
            seq=int(data["seq"]),
            op_name=data["op_name"],
            payload=data["payload"],
            inverse=list(data["inverse"]),
            counter_before=int(data["counter_before"]),
            timestamp=float(data["timestamp"]),
        )


# ---------------------------------------------------------------------------
# Change primitives
# ---------------------------------------------------------------------------

GRAPH_CHANGE_OPS = ("add_node", "remove_node", "update_node", "add_edge", "remove_edge")

_INVERSE_OP = {
    "add_node": "remove_node",
    "remove_node": "add_node",
    "add_edge": "remove_edge",
    "remove_edge": "add_edge",
    "add_document": "remove_document",
    "remove_document": "add_document",
    "add_suggestion": "remove_suggestion",
    "remove_suggestion": "add_suggestion",
}


def invert_change(change: dict[str, Any]) -> dict[str, Any]:
    op = change["op"]
    if op in _INVERSE_OP:
        inverted = dict(change)
        inverted["op"] = _INVERSE_OP[op]
        return inverted
    if op == "update_node":
        return {
            "op": "update_node",
            "node_id": change["node_id"],
            "before": change["after"],
            "after": change["before"],
        }
    if op == "update_suggestion":
        return {
            "op": "update_suggestion",
            "suggestion_id": change["suggestion_id"],
            "before": change["after"],
            "after": change["before"],
        }
    raise EngineError("validation_error", f"unknown change op {op!r}")


def invert_delta(changes: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    """Inverse delta: inverted primitives in reverse order."""
    return [invert_change(c) for c in reversed(list(changes))]


def graph_changes(changes: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    """The graph-only portion of a delta (what previews and deletions expose)."""
    return [c for c in changes if c["op"] in GRAPH_CHANGE_OPS]


# ---------------------------------------------------------------------------
# Codebook projection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodebookEntry:
    theme_id: str
    name: str
    description: GroundedDescription | None
    shown_evidence: tuple[dict[str, Any], ...]
    total_evidence_count: int
    child_theme_ids: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "theme_id": self.theme_id,
            "name": self.name,
            "description": self.description.to_dict() if self.description else None,
            "shown_evidence": list(self.shown_evidence),
            "total_evidence_count": self.total_evidence_count,
            "child_theme_ids": list(self.child_theme_ids),
        }


# ---------------------------------------------------------------------------
# Workspace
# ---------------------------------------------------------------------------


class Workspace:
    """One researcher's canvas, event-sourced.

    ``revision`` always equals the number of applied events. Reads never
    change it; every mutating operation appends exactly one event.
    """

    def __init__(
        self,
        workspace_id: str,
        clock: Callable[[], float] | None = None,
    ) -> None:
        self.workspace_id = workspace_id
        self.corpus = CorpusStore()
        self.nodes: dict[str, EvidenceNode | ThemeNode] = {}
        self.edges: dict[str, Edge] = {}
        self.suggestions: dict[str, Suggestion] = {}
        self.events: list[WorkspaceEvent] = []
        self.revision = 0
        self.clock = clock or time.time
        self._counter = 0

    # -- id allocation --------------------------------------------------------

    def _next(self) -> int:
        self._counter += 1
        return self._counter

    def allocate_node_id(self) -> tuple[str, int]:
        seq = self._next()
        return f"n{seq}", seq

    def allocate_edge_id(self) -> tuple[str, int]:
        seq = self._next()
        return f"e{seq}", seq

    def allocate_suggestion_id(self) -> str:
        return f"{self.workspace_id}.s{self._next()}"

    # -- lookups ---------------------------------------------------------------

    def get_node(self, node_id: str) -> EvidenceNode | ThemeNode:
        node = self.nodes.get(node_id)
        if node is None:
            raise EngineError("unknown_node", f"no node {node_id!r}")
        return node

    def get_theme(self, node_id: str) -> ThemeNode:
        node = self.get_node(node_id)
        if not isinstance(node, ThemeNode):
            raise EngineError("kind_mismatch", f"{node_id!r} is not a theme node")
        return node

    def get_evidence(self, node_id: str) -> EvidenceNode:
        node = self.get_node(node_id)
        if not isinstance(node, EvidenceNode):
            raise EngineError("kind_mismatch", f"{node_id!r} is not an evidence node")
        return node

    def get_suggestion(self, suggestion_id: str) -> Suggestion:
        suggestion = self.suggestions.get(suggestion_id)
        if suggestion is None:
            raise EngineError("unknown_suggestion", f"no suggestion {suggestion_id!r}")
        return suggestion

    def membership_edges(self, theme_id: str) -> list[Edge]:
        edges = [
            e
            for e in self.edges.values()
            if e.kind == MEMBERSHIP and e.from_id == theme_id
        ]
        edges.sort(key=lambda e: (e.created_at, e.to_id))
        return edges

    def member_ids(self, theme_id: str) -> list[str]:
        return [e.to_id for e in self.membership_edges(theme_id)]

    def membership_edge_between(self, theme_id: str, evidence_id: str) -> Edge | None:
        for edge in self.edges.values():
            if (
                edge.kind == MEMBERSHIP
                and edge.from_id == theme_id
                and edge.to_id == evidence_id
            ):
                return edge
        return None

    def evidence_memberships(self, evidence_id: str) -> list[Edge]:
        return sorted(
            (
                e
                for e in self.edges.values()
                if e.kind == MEMBERSHIP and e.to_id == evidence_id
            ),
            key=lambda e: e.edge_id,
        )

    def hierarchy_parent(self, theme_id: str) -> str | None:
        for edge in self.edges.values():
            if edge.kind == HIERARCHY and edge.to_id == theme_id:
                return edge.from_id
        return None

    def hierarchy_children(self, theme_id: str) -> list[str]:
        children = [
            (self.nodes[e.to_id].created_at, e.to_id)
            for e in self.edges.values()
            if e.kind == HIERARCHY and e.from_id == theme_id
        ]
        return [node_id for _, node_id in sorted(children)]

    def themes(self) -> list[ThemeNode]:
        themes = [n for n in self.nodes.values() if isinstance(n, ThemeNode)]
        themes.sort(key=lambda t: (t.created_at, t.node_id))
        return themes

    def evidence_nodes(self) -> list[EvidenceNode]:
        nodes = [n for n in self.nodes.values() if isinstance(n, EvidenceNode)]
        nodes.sort(key=lambda n: (n.created_at, n.node_id))
        return nodes

    # -- mutation machinery ----------------------------------------------------

    def commit(
        self,
        op_name: str,
        payload: dict[str, Any],
        planner: Callable[[], list[dict[str, Any]]],
    ) -> list[dict[str, Any]]:
        """Plan, apply, and log one mutation atomically.

        The planner validates preconditions and may allocate ids; if it raises,
        the id counter is rolled back and the workspace is untouched. Applying
        a planned change list cannot fail.
        """
        counter_before = self._counter
        try:
            changes = planner()
        except BaseException:
            self._counter = counter_before
            raise
        for change in changes:
            self.apply_change(change)
        self.events.append(
            WorkspaceEvent(
                seq=self.revision + 1,
                op_name=op_name,
                payload=payload,
                inverse=invert_delta(changes),
                counter_before=counter_before,
                timestamp=self.clock(),
            )
        )
        self.revision += 1
        return changes

    def apply_change(self, change: dict[str, Any]) -> None:
        op = change["op"]
        if op == "add_node":
            node = node_from_dict(change["node"])
            self.nodes[node.node_id] = node
        elif op == "remove_node":
            del self.nodes[change["node"]["node_id"]]
        elif op == "update_node":
            self._set_node_fields(change["node_id"], change["after"])
        elif op == "add_edge":
            edge = Edge.from_dict(change["edge"])
            self.edges[edge.edge_id] = edge
        elif op == "remove_edge":
            del self.edges[change["edge"]["edge_id"]]
        elif op == "add_document":
            self.corpus.add(SourceDocument.from_dict(change["document"]))
        elif op == "remove_document":
            self.corpus.remove(change["document"]["doc_id"])
        elif op == "add_suggestion":
            suggestion = Suggestion.from_dict(change["suggestion"])
            self.suggestions[suggestion.suggestion_id] = suggestion
        elif op == "remove_suggestion":
            del self.suggestions[change["suggestion"]["suggestion_id"]]
        elif op == "update_suggestion":
            suggestion = self.suggestions[change["suggestion_id"]]
            for key, value in change["after"].items():
                setattr(suggestion, key, value)
        else:
            raise EngineError("validation_error", f"unknown change op {op!r}")

    def _set_node_fields(self, node_id: str, fields: dict[str, Any]) -> None:
        node = self.nodes[node_id]
        for key, value in fields.items():
            if key == "position":
                node.position = (float(value[0]), float(value[1]))
            elif key == "anchor":
                node.anchor = Anchor.from_dict(value) if value else None
            elif key == "summaries":
                node.summaries = SummaryTiers.from_dict(value) if value else None
            elif key == "description":
                node.description = (
                    GroundedDescription.from_dict(value) if value else None
                )
            else:
                setattr(node, key, value)

    def undo(self) -> int:
        """Revert the last event; returns the new revision."""
        if not self.events:
            raise EngineError("nothing_to_undo", "workspace has no applied events")
        event = self.events[-1]
        for change in event.inverse:
            self.apply_change(change)
        self._counter = event.counter_before
        self.events.pop()
        self.revision -= 1
        return self.revision

    # -- corpus ----------------------------------------------------------------

    def ingest_document(self, payload: dict[str, Any]) -> str:
        """Attach an extracted document; idempotent on identical page text."""
        doc = build_document(payload)
        existing = self.corpus.find_by_checksum(doc.checksum)
        if existing is not None:
            return existing
        self.commit(
            "ingest_document",
            {"doc_id": doc.doc_id, "title": doc.title},
            lambda: [{"op": "add_document", "document": doc.to_dict()}],
        )
        return doc.doc_id

    # -- graph mutations ---------------------------------------------------------

    def create_node(self, spec: dict[str, Any]) -> str:
        """Add an evidence or theme node from a creation spec."""
        allocated: dict[str, str] = {}

        def plan() -> list[dict[str, Any]]:
            node_dict = self._plan_node(spec)
            allocated["node_id"] = node_dict["node_id"]
            return [{"op": "add_node", "node": node_dict}]

        payload = {"spec": _jsonify(spec)}
        self.commit("create_node", payload, plan)
        return allocated["node_id"]

    def _plan_node(self, spec: dict[str, Any]) -> dict[str, Any]:
        kind = spec.get("kind")
        position = _parse_position(spec.get("position", (0.0, 0.0)))
        created_by = spec.get("created_by", CREATED_BY_HUMAN)
        if created_by not in (CREATED_BY_HUMAN, CREATED_BY_AI):
            raise EngineError("validation_error", f"bad created_by {created_by!r}")
        if kind == "theme":
            name = spec.get("name")
            if not isinstance(name, str) or not name.strip():
                raise EngineError("empty_text", "theme name must be non-empty")
            node_id, seq = self.allocate_node_id()
            return ThemeNode(
                node_id=node_id,
                name=name,
                position=position,
                created_by=created_by,
                created_at=seq,
            ).to_dict()
        if kind == "evidence":
            anchor = spec.get("anchor")
            if isinstance(anchor, dict):
                try:
                    anchor = Anchor.from_dict(anchor)
                except (KeyError, TypeError, ValueError):
                    raise EngineError("validation_error", "malformed anchor payload")
            elif anchor is not None and not isinstance(anchor, Anchor):
                raise EngineError("validation_error", "malformed anchor payload")
            text = spec.get("text")
            if text is None and anchor is not None:
                text = anchor.quote
            if not isinstance(text, str) or not text.strip():
                raise EngineError("empty_text", "evidence text must be non-empty")
            if anchor is not None:
                verdict = self.corpus.verify_anchor(anchor)
                if verdict != "valid":
                    raise EngineError("invalid_anchor", f"anchor verdict: {verdict}")
                if text != anchor.quote:
                    raise EngineError(
                        "invalid_anchor", "evidence text must equal the anchor quote"
                    )
            node_id, seq = self.allocate_node_id()
            return EvidenceNode(
                node_id=node_id,
                text=text,
                anchor=anchor,
                summaries=None,
                position=position,
                created_by=created_by,
                created_at=seq,
            ).to_dict()
        raise EngineError("validation_error", f"unknown node kind {kind!r}")

    def update_node(self, node_id: str, patch: dict[str, Any]) -> int:
        """Patch position, text (evidence), or name (theme); returns new revision.

        Editing the text of an anchored evidence node detaches the anchor and
        clears stale summaries.
        """

        def plan() -> list[dict[str, Any]]:
            node = self.get_node(node_id)
            allowed = {"position", "text"} if node.kind == "evidence" else {"position", "name"}
            unknown = set(patch) - allowed
            if unknown:
                raise EngineError(
                    "validation_error",
                    f"cannot patch {sorted(unknown)} on a {node.kind} node",
                )
            before: dict[str, Any] = {}
            after: dict[str, Any] = {}
            if "position" in patch:
                position = _parse_position(patch["position"])
                if position != node.position:
                    before["position"] = list(node.position)
                    after["position"] = list(position)
            if "text" in patch:
                text = patch["text"]
                if not isinstance(text, str) or not text.strip():
                    raise EngineError("empty_text", "evidence text must be non-empty")
                if text != node.text:
                    before["text"] = node.text
                    after["text"] = text
                    if node.anchor is not None:
                        before["anchor"] = node.anchor.to_dict()
                        after["anchor"] = None
                    if node.summaries is not None:
                        before["summaries"] = node.summaries.to_dict()
                        after["summaries"] = None
            if "name" in patch:
                name = patch["name"]
                if not isinstance(name, str) or not name.strip():
                    raise EngineError("empty_text", "theme name must be non-empty")
                if name != node.name:
                    before["name"] = node.name
                    after["name"] = name
            if not after:
                return []
            return [
                {"op": "update_node", "node_id": node_id, "before": before, "after": after}
            ]

        self.commit("update_node", {"node_id": node_id, "patch": _jsonify(patch)}, plan)
        return self.revision

    def delete_node(self, node_id: str) -> list[dict[str, Any]]:
        """Remove a node and its incident edges; children of a theme survive."""

        def plan() -> list[dict[str, Any]]:
            node = self.get_node(node_id)
            incident = sorted(
                (
                    e
                    for e in self.edges.values()
                    if e.from_id == node_id or e.to_id == node_id
                ),
                key=lambda e: e.edge_id,
            )
            changes: list[dict[str, Any]] = [
                {"op": "remove_edge", "edge": e.to_dict()} for e in incident
            ]
            changes.append({"op": "remove_node", "node": node.to_dict()})
            return changes

        return self.commit("delete_node", {"node_id": node_id}, plan)

    def connect(
        self,
        from_id: str,
        to_id: str,
        kind: str,
        created_by: str = CREATED_BY_HUMAN,
    ) -> str:
        """Add a membership (theme to evidence) or hierarchy (theme to theme) edge."""
        allocated: dict[str, str] = {}

        def plan() -> list[dict[str, Any]]:
            edge_dict = self._plan_edge(from_id, to_id, kind, created_by)
            allocated["edge_id"] = edge_dict["edge_id"]
            return [{"op": "add_edge", "edge": edge_dict}]

        self.commit(
            "connect", {"from": from_id, "to": to_id, "kind": kind}, plan
        )
        return allocated["edge_id"]

    def _plan_edge(
        self, from_id: str, to_id: str, kind: str, created_by: str
    ) -> dict[str, Any]:
        from_node = self.get_node(from_id)
        to_node = self.get_node(to_id)
        if kind == MEMBERSHIP:
            if from_node.kind != "theme" or to_node.kind != "evidence":
                raise EngineError(
                    "kind_mismatch", "membership edges connect a theme to evidence"
                )
            if self.membership_edge_between(from_id, to_id) is not None:
                raise EngineError(
                    "duplicate_edge", f"{from_id} already contains {to_id}"
                )
        elif kind == HIERARCHY:
            if from_node.kind != "theme" or to_node.kind != "theme":
                raise EngineError(
                    "kind_mismatch", "hierarchy edges connect a theme to a theme"
                )
            if from_id == to_id:
                raise EngineError("cycle_detected", "a theme cannot parent itself")
            if self.hierarchy_parent(to_id) is not None:
                raise EngineError(
                    "second_parent", f"{to_id} already has a hierarchy parent"
                )
            ancestor = self.hierarchy_parent(from_id)
            while ancestor is not None:
                if ancestor == to_id:
                    raise EngineError(
                        "cycle_detected", f"{to_id} is an ancestor of {from_id}"
                    )
                ancestor = self.hierarchy_parent(ancestor)
        else:
            raise EngineError("validation_error", f"unknown edge kind {kind!r}")
        edge_id, seq = self.allocate_edge_id()
        return Edge(
            edge_id=edge_id,
            from_id=from_id,
            to_id=to_id,
            kind=kind,
            created_by=created_by,
            created_at=seq,
        ).to_dict()

    def merge_themes(self, survivor_id: str, absorbed_id: str) -> list[dict[str, Any]]:
        """Fold one theme into another.

        Membership edges re-point to the survivor (deduplicated, keeping their
        original link times), hierarchy children re-parent to the survivor,
        and the absorbed theme disappears. If re-parenting would create a
        cycle nothing is applied. The survivor keeps its own name and
        description.
        """

        def plan() -> list[dict[str, Any]]:
            if survivor_id == absorbed_id:
                raise EngineError("same_node", "cannot merge a theme into itself")
            survivor = self.get_theme(survivor_id)
            absorbed = self.get_theme(absorbed_id)

            incident = sorted(
                (
                    e
                    for e in self.edges.values()
                    if e.from_id == absorbed_id or e.to_id == absorbed_id
                ),
                key=lambda e: e.edge_id,
            )
            changes: list[dict[str, Any]] = [
                {"op": "remove_edge", "edge": e.to_dict()} for e in incident
            ]

            # Post-removal parent map, used to detect cycles while re-parenting.
            removed = {e.edge_id for e in incident}
            parent: dict[str, str] = {
                e.to_id: e.from_id
                for e in self.edges.values()
                if e.kind == HIERARCHY and e.edge_id not in removed
            }

            def creates_cycle(new_parent: str, child: str) -> bool:
                current: str | None = new_parent
                while current is not None:
                    if current == child:
                        return True
                    current = parent.get(current)
                return False

            for edge in incident:
                if edge.kind == MEMBERSHIP and edge.from_id == absorbed_id:
                    if self.membership_edge_between(survivor_id, edge.to_id) is not None:
                        continue
                    edge_id, _ = self.allocate_edge_id()
                    changes.append(
                        {
                            "op": "add_edge",
                            "edge": Edge(
                                edge_id=edge_id,
                                from_id=survivor_id,
                                to_id=edge.to_id,
                                kind=MEMBERSHIP,
                                created_by=edge.created_by,
                                created_at=edge.created_at,
                            ).to_dict(),
                        }
                    )
                elif edge.kind == HIERARCHY and edge.from_id == absorbed_id:
                    child = edge.to_id
                    if child == survivor_id:
                        continue
                    if creates_cycle(survivor_id, child):
                        raise EngineError(
                            "cycle_detected",
                            f"re-parenting {child} under {survivor_id} would loop",
                        )
                    edge_id, _ = self.allocate_edge_id()
                    changes.append(
                        {
                            "op": "add_edge",
                            "edge": Edge(
                                edge_id=edge_id,
                                from_id=survivor_id,
                                to_id=child,
                                kind=HIERARCHY,
                                created_by=edge.created_by,
                                created_at=edge.created_at,
                            ).to_dict(),
                        }
                    )
                    parent[child] = survivor_id

            changes.append({"op": "remove_node", "node": absorbed.to_dict()})
            return changes

        return self.commit(
            "merge_themes",
            {"survivor_id": survivor_id, "absorbed_id": absorbed_id},
            plan,
        )

    # -- projections -------------------------------------------------------------

    def codebook_projection(self) -> list[CodebookEntry]:
        """Read-only codebook: every theme with at most two evidence samples.

        The shown pair are the earliest-linked members (membership-edge
        creation order, ties by node id); constructing the view mutates
        nothing.
        """
        entries = []
        for theme in self.themes():
            member_edges = self.membership_edges(theme.node_id)
            shown = []
            for edge in member_edges[:2]:
                evidence = self.nodes[edge.to_id]
                shown.append(
                    {
                        "node_id": evidence.node_id,
                        "text": evidence.text,
                        "anchor": evidence.anchor.to_dict() if evidence.anchor else None,
                    }
                )
            entries.append(
                CodebookEntry(
                    theme_id=theme.node_id,
                    name=theme.name,
                    description=theme.description,
                    shown_evidence=tuple(shown),
                    total_evidence_count=len(member_edges),
                    child_theme_ids=tuple(self.hierarchy_children(theme.node_id)),
                )
            )
        return entries

    # -- serialization -------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": WORKSPACE_SCHEMA,
            "workspace_id": self.workspace_id,
            "revision": self.revision,
            "id_counter": self._counter,
            "documents": [
                self.corpus.get(doc_id).to_dict() for doc_id in self.corpus.doc_ids()
            ],
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "edges": [self.edges[k].to_dict() for k in sorted(self.edges)],
            "suggestions": [
                self.suggestions[k].to_dict() for k in sorted(self.suggestions)
            ],
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(
        cls, data: dict[str, Any], clock: Callable[[], float] | None = None
    ) -> "Workspace":
        workspace = cls(data["workspace_id"], clock=clock)
        workspace.revision = int(data["revision"])
        workspace._counter = int(data["id_counter"])
        for doc in data.get("documents", []):
            workspace.corpus.add(SourceDocument.from_dict(doc))
        for node in data.get("nodes", []):
            parsed = node_from_dict(node)
            workspace.nodes[parsed.node_id] = parsed
        for edge in data.get("edges", []):
            parsed_edge = Edge.from_dict(edge)
            workspace.edges[parsed_edge.edge_id] = parsed_edge
        for suggestion in data.get("suggestions", []):
            parsed_suggestion = Suggestion.from_dict(suggestion)
            workspace.suggestions[parsed_suggestion.suggestion_id] = parsed_suggestion
        for event in data.get("events", []):
            workspace.events.append(WorkspaceEvent.from_dict(event))
        return workspace

    def serialize(self) -> bytes:
        """Canonical bytes: identical states produce identical files."""
        return canonical_json(self.to_dict())

    def serialize_graph(self) -> bytes:
        """Canonical bytes of the material graph state (nodes and edges only)."""
        return canonical_json(
            {
                "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
                "edges": [self.edges[k].to_dict() for k in sorted(self.edges)],
            }
        )

    def clone(self) -> "Workspace":
        return Workspace.from_dict(self.to_dict(), clock=self.clock)


def canonical_json(data: Any) -> bytes:
    return (
        json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    ).encode("utf-8")


def _parse_position(value: Any) -> tuple[float, float]:
    try:
        x, y = value
        x, y = float(x), float(y)
    except (TypeError, ValueError):
        raise EngineError("validation_error", f"bad position {value!r}")
    if math.isnan(x) or math.isnan(y):
        raise EngineError("validation_error", "position must not be NaN")
    return (x, y)


def _jsonify(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, Anchor):
        return value.to_dict()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value
