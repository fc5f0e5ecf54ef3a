"""The mixed-initiative pipeline: grounded, previewable, human-resolved proposals.

Placement (assign an excerpt to a theme or found a new one), theme naming,
and evidence-grounded descriptions all run through the provider, are
validated against the live workspace, and land as pending
:class:`~themecanvas.graph.Suggestion` records. Nothing touches the graph
until a human accepts, revises, or rejects; preview returns the exact delta
acceptance would apply.

Theme relevance uses a lexical scorer so ranking works offline and is oracle
checkable: terms are maximal runs of Unicode alphanumerics, lowercased;
tf is the raw count; idf is ln((N+1)/(df+1)) + 1 over the documents in play;
vectors are L2-normalized and compared by cosine. Keyword grounding never
trusts provider-claimed evidence ids; matching evidence is always recomputed.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .errors import EngineError
from .graph import (
    ACCEPTED,
    CREATED_BY_AI,
    CREATED_BY_HUMAN,
    Edge,
    EvidenceNode,
    GroundedDescription,
    KeywordLink,
    MEMBERSHIP,
    PENDING,
    REJECTED,
    REVISED,
    STALE,
    Suggestion,
    ThemeNode,
    Workspace,
    graph_changes,
)
from .provider import PromptRequest, ProviderClient

TOP_K_THEMES = 5

# Offset of an AI-founded theme node from its first evidence, canvas units.
_NEW_THEME_OFFSET = (0.0, -140.0)

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


# ---------------------------------------------------------------------------
# Lexical scoring
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN.findall(text)]


def _idf(documents: Sequence[Counter]) -> dict[str, float]:
    n = len(documents)
    df: Counter = Counter()
    for doc in documents:
        df.update(set(doc))
    return {term: math.log((n + 1) / (count + 1)) + 1.0 for term, count in df.items()}


def _weight_vector(counts: Counter, idf: Mapping[str, float]) -> dict[str, float]:
    vector = {
        term: tf * idf[term] for term, tf in counts.items() if term in idf
    }
    norm = math.sqrt(sum(w * w for w in vector.values()))
    if norm == 0.0:
        return {}
    return {term: w / norm for term, w in vector.items()}


def _cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    score = sum(w * b.get(term, 0.0) for term, w in a.items())
    return min(1.0, max(0.0, score))


@dataclass(frozen=True)
class RankedTheme:
    theme_id: str
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {"theme_id": self.theme_id, "score": self.score}


def theme_document(workspace: Workspace, theme: ThemeNode) -> str:
    """The text a theme is scored by: its name plus member evidence texts."""
    parts = [theme.name]
    for member_id in workspace.member_ids(theme.node_id):
        parts.append(workspace.nodes[member_id].text)
    return "\n".join(parts)


def rank_themes(workspace: Workspace, query_text: str) -> list[RankedTheme]:
    """Score every theme against a query by TF-IDF cosine; pure.

    Sorted by descending score, ties by ascending theme id. The idf corpus is
    the set of theme documents; query terms unseen in any theme contribute
    nothing.
    """
    if not query_text or not query_text.strip():
        raise EngineError("empty_query", "query text must be non-empty")
    themes = workspace.themes()
    if not themes:
        return []
    documents = [Counter(tokenize(theme_document(workspace, t))) for t in themes]
    idf = _idf(documents)
    query_vector = _weight_vector(Counter(tokenize(query_text)), idf)
    ranked = [
        RankedTheme(theme_id=t.node_id, score=_cosine(query_vector, _weight_vector(doc, idf)))
        for t, doc in zip(themes, documents)
    ]
    ranked.sort(key=lambda r: (-r.score, r.theme_id))
    return ranked


def top_tfidf_terms(
    target: str, corpus_documents: Sequence[str], count: int = 3
) -> list[str]:
    """Most distinctive terms of one document within a corpus.

    Ties break by ascending term so the result is deterministic.
    """
    documents = [Counter(tokenize(doc)) for doc in corpus_documents]
    idf = _idf(documents)
    target_counts = Counter(tokenize(target))
    weights = [(tf * idf.get(term, 0.0), term) for term, tf in target_counts.items()]
    weights.sort(key=lambda pair: (-pair[0], pair[1]))
    return [term for _, term in weights[:count]]


# ---------------------------------------------------------------------------
# Keyword grounding
# ---------------------------------------------------------------------------


def contains_whole_word(text: str, keyword: str) -> bool:
    """Case-insensitive whole-word containment; boundaries are non-alphanumerics."""
    haystack = text.lower()
    needle = keyword.lower()
    if not needle:
        return False
    start = 0
    while True:
        index = haystack.find(needle, start)
        if index < 0:
            return False
        end = index + len(needle)
        before_ok = index == 0 or not haystack[index - 1].isalnum()
        after_ok = end == len(haystack) or not haystack[end].isalnum()
        if before_ok and after_ok:
            return True
        start = index + 1


def validate_grounding(
    text: str,
    candidate_keywords: Iterable[Mapping[str, Any]],
    members: Sequence[EvidenceNode],
) -> tuple[GroundedDescription, list[str]]:
    """Keep only keywords verifiable against the evidence; rewrite their links.

    A keyword survives when it appears whole-word (case-insensitive) in the
    description text and in at least one member's text. Provider-claimed
    evidence ids are discarded and replaced with the exact matching set.
    Dropped keywords become warnings; if none survive the description is
    rejected as ungrounded.
    """
    links: list[KeywordLink] = []
    warnings: list[str] = []
    seen: set[str] = set()
    for candidate in candidate_keywords:
        keyword = str(candidate.get("keyword", "")).strip()
        if not keyword:
            warnings.append("dropped empty keyword")
            continue
        folded = keyword.lower()
        if folded in seen:
            warnings.append(f"dropped duplicate keyword {keyword!r}")
            continue
        seen.add(folded)
        if not contains_whole_word(text, keyword):
            warnings.append(f"dropped keyword {keyword!r}: not in the description text")
            continue
        matches = sorted(
            m.node_id for m in members if contains_whole_word(m.text, keyword)
        )
        if not matches:
            warnings.append(f"dropped keyword {keyword!r}: not found in any evidence")
            continue
        links.append(KeywordLink(keyword=keyword, evidence_ids=tuple(matches)))
    if not links:
        raise EngineError(
            "ungrounded_description", "no keyword could be verified against evidence"
        )
    return GroundedDescription(text=text, keyword_links=tuple(links)), warnings


# ---------------------------------------------------------------------------
# Suggestion generation
# ---------------------------------------------------------------------------


def _commit_suggestion(
    workspace: Workspace, op_name: str, suggestion: Suggestion
) -> Suggestion:
    workspace.commit(
        op_name,
        {"suggestion_id": suggestion.suggestion_id},
        lambda: [{"op": "add_suggestion", "suggestion": suggestion.to_dict()}],
    )
    return workspace.suggestions[suggestion.suggestion_id]


def _render_theme_lines(workspace: Workspace, ranking: list[RankedTheme], k: int) -> str:
    lines = []
    for ranked in ranking[:k]:
        theme = workspace.get_theme(ranked.theme_id)
        line = f"{theme.node_id}: {theme.name} (relevance {ranked.score:.4f})"
        if theme.description is not None:
            line += f" - {theme.description.text}"
        lines.append(line)
    return "\n".join(lines)


def suggest_placement(
    workspace: Workspace,
    evidence_id: str,
    provider: ProviderClient,
    k: int = TOP_K_THEMES,
) -> Suggestion:
    """Propose assigning an unassigned excerpt to a theme, or founding a new one.

    The provider sees the excerpt plus the top-k themes by lexical relevance;
    with no themes in the workspace the proposal is forced to ``new_theme``
    and the provider is only asked for the name. Entity ids the proposal
    would create are pre-allocated here so preview and acceptance apply the
    identical delta.
    """
    evidence = workspace.get_evidence(evidence_id)
    if workspace.evidence_memberships(evidence_id):
        raise EngineError("already_assigned", f"{evidence_id} is already in a theme")
    themes = workspace.themes()
    ranking = rank_themes(workspace, evidence.text) if themes else []
    base_revision = workspace.revision

    response = _complete(
        provider,
        PromptRequest(
            template_id="placement/1",
            variables={
                "excerpt": evidence.text,
                "themes": _render_theme_lines(workspace, ranking, k),
            },
            response_schema_id="placement/1",
        ),
    )

    kind = response["kind"]
    if kind == "assign":
        if not themes:
            raise EngineError(
                "provider_invalid", "provider chose assign but no theme exists"
            )
        theme_id = response["theme_id"]
        if theme_id not in workspace.nodes or workspace.nodes[theme_id].kind != "theme":
            raise EngineError("provider_invalid", f"unknown theme id {theme_id!r}")
        edge_id, _ = workspace.allocate_edge_id()
        payload: dict[str, Any] = {
            "theme_id": theme_id,
            "evidence_id": evidence_id,
            "edge_id": edge_id,
        }
    else:
        name = response["name"].strip()
        if not name:
            raise EngineError("provider_invalid", "provider returned an empty theme name")
        node_id, _ = workspace.allocate_node_id()
        edge_id, _ = workspace.allocate_edge_id()
        payload = {
            "name": name,
            "evidence_id": evidence_id,
            "node_id": node_id,
            "edge_id": edge_id,
            "position": [
                evidence.position[0] + _NEW_THEME_OFFSET[0],
                evidence.position[1] + _NEW_THEME_OFFSET[1],
            ],
        }

    suggestion = Suggestion(
        suggestion_id=workspace.allocate_suggestion_id(),
        kind=kind,
        payload=payload,
        rationale=response["rationale"],
        basis=(evidence_id,),
        base_revision=base_revision,
    )
    return _commit_suggestion(workspace, "suggest_placement", suggestion)


def suggest_theme_name(
    workspace: Workspace, theme_id: str, provider: ProviderClient
) -> Suggestion:
    """Propose a name from the aggregated context of direct member evidence.

    When the provider is unreachable, falls back to the three highest-TF-IDF
    terms of the member concatenation (corpus: all themes' member
    concatenations), title-cased.
    """
    theme = workspace.get_theme(theme_id)
    member_ids = workspace.member_ids(theme_id)
    if not member_ids:
        raise EngineError("no_evidence", f"theme {theme_id} has no member evidence")
    member_text = "\n".join(workspace.nodes[m].text for m in member_ids)
    base_revision = workspace.revision

    try:
        response = provider.complete_structured(
            PromptRequest(
                template_id="name/1",
                variables={"theme_name": theme.name, "evidence": member_text},
                response_schema_id="name/1",
            )
        )
        name = response["name"].strip()
        if not name:
            raise EngineError("provider_invalid", "provider returned an empty name")
        rationale = response["rationale"]
    except EngineError as exc:
        if exc.code == "schema_violation_exhausted":
            raise EngineError("provider_invalid", exc.message)
        if exc.code not in ("provider_unreachable", "timeout"):
            raise
        corpus_documents = [
            "\n".join(workspace.nodes[m].text for m in workspace.member_ids(t.node_id))
            for t in workspace.themes()
        ]
        terms = top_tfidf_terms(member_text, corpus_documents, count=3)
        name = " ".join(term.title() for term in terms)
        rationale = "Most distinctive terms across this theme's evidence: " + ", ".join(
            terms
        )

    suggestion = Suggestion(
        suggestion_id=workspace.allocate_suggestion_id(),
        kind="rename_theme",
        payload={"theme_id": theme_id, "name": name},
        rationale=rationale,
        basis=tuple(member_ids),
        base_revision=base_revision,
    )
    return _commit_suggestion(workspace, "suggest_theme_name", suggestion)


def describe_theme(
    workspace: Workspace, theme_id: str, provider: ProviderClient
) -> Suggestion:
    """Propose an evidence-grounded description for a theme."""
    theme = workspace.get_theme(theme_id)
    member_ids = workspace.member_ids(theme_id)
    if not member_ids:
        raise EngineError("no_evidence", f"theme {theme_id} has no member evidence")
    members = [workspace.get_evidence(m) for m in member_ids]
    base_revision = workspace.revision

    response = _complete(
        provider,
        PromptRequest(
            template_id="describe/1",
            variables={
                "theme_name": theme.name,
                "evidence": "\n".join(f"[{m.node_id}] {m.text}" for m in members),
            },
            response_schema_id="describe/1",
        ),
    )
    description, warnings = validate_grounding(
        response["text"], response["keywords"], members
    )

    suggestion = Suggestion(
        suggestion_id=workspace.allocate_suggestion_id(),
        kind="describe_theme",
        payload={
            "theme_id": theme_id,
            "description": description.to_dict(),
            "warnings": warnings,
        },
        rationale=response.get("rationale", ""),
        basis=tuple(
            sorted({eid for link in description.keyword_links for eid in link.evidence_ids})
        ),
        base_revision=base_revision,
    )
    return _commit_suggestion(workspace, "describe_theme", suggestion)


def _complete(provider: ProviderClient, request: PromptRequest) -> dict[str, Any]:
    try:
        return provider.complete_structured(request)
    except EngineError as exc:
        if exc.code == "schema_violation_exhausted":
            raise EngineError("provider_invalid", exc.message)
        raise


# ---------------------------------------------------------------------------
# Preview and resolution
# ---------------------------------------------------------------------------


def _stale_reason(workspace: Workspace, suggestion: Suggestion) -> str | None:
    payload = suggestion.payload
    for node_id in suggestion.basis:
        if node_id not in workspace.nodes:
            return f"basis node {node_id} no longer exists"
    kind = suggestion.kind
    if kind == "assign":
        if payload["theme_id"] not in workspace.nodes:
            return "target theme no longer exists"
        if payload["evidence_id"] not in workspace.nodes:
            return "evidence node no longer exists"
        if workspace.membership_edge_between(payload["theme_id"], payload["evidence_id"]):
            return "membership already exists"
    elif kind == "new_theme":
        if payload["evidence_id"] not in workspace.nodes:
            return "evidence node no longer exists"
    elif kind in ("rename_theme", "describe_theme"):
        if payload["theme_id"] not in workspace.nodes:
            return "target theme no longer exists"
    return None


def _mark_stale(workspace: Workspace, suggestion: Suggestion, reason: str) -> None:
    workspace.commit(
        "mark_suggestion_stale",
        {"suggestion_id": suggestion.suggestion_id, "reason": reason},
        lambda: [
            {
                "op": "update_suggestion",
                "suggestion_id": suggestion.suggestion_id,
                "before": {"status": suggestion.status},
                "after": {"status": STALE},
            }
        ],
    )


def _build_delta(
    workspace: Workspace,
    suggestion: Suggestion,
    payload: dict[str, Any],
    created_by: str,
) -> list[dict[str, Any]]:
    """The graph delta applying this suggestion would make; pure."""
    kind = suggestion.kind
    if kind == "assign":
        edge = Edge(
            edge_id=payload["edge_id"],
            from_id=payload["theme_id"],
            to_id=payload["evidence_id"],
            kind=MEMBERSHIP,
            created_by=created_by,
            created_at=_seq_of(payload["edge_id"]),
        )
        return [{"op": "add_edge", "edge": edge.to_dict()}]
    if kind == "new_theme":
        theme = ThemeNode(
            node_id=payload["node_id"],
            name=payload["name"],
            position=(payload["position"][0], payload["position"][1]),
            created_by=created_by,
            created_at=_seq_of(payload["node_id"]),
        )
        edge = Edge(
            edge_id=payload["edge_id"],
            from_id=payload["node_id"],
            to_id=payload["evidence_id"],
            kind=MEMBERSHIP,
            created_by=created_by,
            created_at=_seq_of(payload["edge_id"]),
        )
        return [
            {"op": "add_node", "node": theme.to_dict()},
            {"op": "add_edge", "edge": edge.to_dict()},
        ]
    if kind == "rename_theme":
        theme = workspace.get_theme(payload["theme_id"])
        return [
            {
                "op": "update_node",
                "node_id": theme.node_id,
                "before": {"name": theme.name},
                "after": {"name": payload["name"]},
            }
        ]
    if kind == "describe_theme":
        theme = workspace.get_theme(payload["theme_id"])
        members = [workspace.get_evidence(m) for m in workspace.member_ids(theme.node_id)]
        raw = payload["description"]
        description, _ = validate_grounding(raw["text"], raw["keyword_links"], members)
        return [
            {
                "op": "update_node",
                "node_id": theme.node_id,
                "before": {
                    "description": theme.description.to_dict()
                    if theme.description
                    else None
                },
                "after": {"description": description.to_dict()},
            }
        ]
    raise EngineError("validation_error", f"unknown suggestion kind {kind!r}")


def _seq_of(entity_id: str) -> int:
    return int(re.sub(r"\D", "", entity_id.rsplit(".", 1)[-1]))


def _require_pending(workspace: Workspace, suggestion: Suggestion) -> None:
    if suggestion.status == STALE:
        raise EngineError(
            "suggestion_stale", f"suggestion {suggestion.suggestion_id} is stale"
        )
    if suggestion.status != PENDING:
        raise EngineError(
            "validation_error",
            f"suggestion {suggestion.suggestion_id} already resolved "
            f"({suggestion.status})",
        )
    reason = _stale_reason(workspace, suggestion)
    if reason is None and suggestion.kind == "describe_theme":
        # Grounding is re-checked against live members; a description that can
        # no longer be verified at all has gone stale, not invalid.
        try:
            _build_delta(workspace, suggestion, suggestion.payload, CREATED_BY_AI)
        except EngineError as exc:
            if exc.code == "ungrounded_description":
                reason = "description can no longer be grounded in member evidence"
            else:
                raise
    if reason is not None:
        _mark_stale(workspace, suggestion, reason)
        raise EngineError(
            "suggestion_stale",
            f"suggestion {suggestion.suggestion_id} is stale: {reason}",
        )


def preview_suggestion(workspace: Workspace, suggestion_id: str) -> list[dict[str, Any]]:
    """The exact delta acceptance would apply; mutates nothing when pending.

    A suggestion whose base entities disappeared is marked stale instead, and
    the call fails with ``suggestion_stale``.
    """
    suggestion = workspace.get_suggestion(suggestion_id)
    _require_pending(workspace, suggestion)
    return _build_delta(workspace, suggestion, suggestion.payload, CREATED_BY_AI)


def _validate_revision_payload(
    workspace: Workspace, suggestion: Suggestion, edits: dict[str, Any]
) -> dict[str, Any]:
    editable = {
        "assign": {"theme_id"},
        "new_theme": {"name", "position"},
        "rename_theme": {"name"},
        "describe_theme": {"description"},
    }[suggestion.kind]
    unknown = set(edits) - editable
    if unknown:
        raise EngineError(
            "invalid_revision_payload",
            f"cannot edit {sorted(unknown)} on a {suggestion.kind} suggestion",
        )
    payload = dict(suggestion.payload)
    payload.update(edits)
    if suggestion.kind == "assign":
        theme_id = payload["theme_id"]
        if theme_id not in workspace.nodes or workspace.nodes[theme_id].kind != "theme":
            raise EngineError("invalid_revision_payload", f"unknown theme {theme_id!r}")
        if workspace.membership_edge_between(theme_id, payload["evidence_id"]):
            raise EngineError(
                "invalid_revision_payload", "membership already exists for that theme"
            )
    if suggestion.kind in ("new_theme", "rename_theme"):
        if not isinstance(payload["name"], str) or not payload["name"].strip():
            raise EngineError("invalid_revision_payload", "name must be non-empty")
    if suggestion.kind == "describe_theme":
        raw = payload["description"]
        if not isinstance(raw, dict) or "text" not in raw:
            raise EngineError("invalid_revision_payload", "description must carry text")
        members = [
            workspace.get_evidence(m)
            for m in workspace.member_ids(payload["theme_id"])
        ]
        try:
            description, _ = validate_grounding(
                raw["text"], raw.get("keyword_links", []), members
            )
        except EngineError as exc:
            raise EngineError("invalid_revision_payload", exc.message)
        payload["description"] = description.to_dict()
    return payload


def resolve_suggestion(
    workspace: Workspace,
    suggestion_id: str,
    decision: str,
    revised_payload: dict[str, Any] | None = None,
) -> list[dict[str, Any]] | None:
    """Accept, revise, or reject a pending suggestion.

    Accept applies exactly the preview delta, with created artifacts marked
    ``ai_accepted``; revise applies the user-edited payload with artifacts
    marked ``human``; reject changes no graph state. Every outcome appends one
    event.
    """
    suggestion = workspace.get_suggestion(suggestion_id)
    if decision not in ("accept", "revise", "reject"):
        raise EngineError("validation_error", f"unknown decision {decision!r}")
    _require_pending(workspace, suggestion)

    def status_change(status: str) -> dict[str, Any]:
        return {
            "op": "update_suggestion",
            "suggestion_id": suggestion_id,
            "before": {"status": suggestion.status},
            "after": {"status": status},
        }

    if decision == "reject":
        workspace.commit(
            "resolve_suggestion",
            {"suggestion_id": suggestion_id, "decision": "reject"},
            lambda: [status_change(REJECTED)],
        )
        return None

    if decision == "accept":
        def plan_accept() -> list[dict[str, Any]]:
            delta = _build_delta(workspace, suggestion, suggestion.payload, CREATED_BY_AI)
            return delta + [status_change(ACCEPTED)]

        changes = workspace.commit(
            "resolve_suggestion",
            {"suggestion_id": suggestion_id, "decision": "accept"},
            plan_accept,
        )
        return graph_changes(changes)

    def plan_revise() -> list[dict[str, Any]]:
        payload = _validate_revision_payload(workspace, suggestion, revised_payload or {})
        delta = _build_delta(workspace, suggestion, payload, CREATED_BY_HUMAN)
        return delta + [status_change(REVISED)]

    changes = workspace.commit(
        "resolve_suggestion",
        {
            "suggestion_id": suggestion_id,
            "decision": "revise",
            "edits": revised_payload or {},
        },
        plan_revise,
    )
    return graph_changes(changes)
