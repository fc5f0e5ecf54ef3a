"""Summary tiers behind semantic zoom: medium, short, and tiny renderings.

Tiers come from the language-model provider in a single structured call; a
deterministic extractive truncation serves as the offline fallback and as the
enforcement pass that keeps every tier inside its character budget. Length
monotonicity (tiny <= short <= medium <= original) holds for every
:class:`SummaryTiers` ever constructed, no matter what the provider returns.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Any

from .errors import EngineError
from .provider import PromptRequest, ProviderClient

ELLIPSIS = "…"

_WORD = re.compile(r"\S+")


@dataclass(frozen=True)
class SummaryBudgets:
    """Character budgets per tier; defaults fit typical node sizes per zoom band."""

    medium: int = 280
    short: int = 120
    tiny: int = 40

    def to_dict(self) -> dict[str, int]:
        return {"medium": self.medium, "short": self.short, "tiny": self.tiny}


DEFAULT_BUDGETS = SummaryBudgets()

SOURCE_PROVIDER = "provider"
SOURCE_EXTRACTIVE = "extractive"


@dataclass(frozen=True)
class SummaryTiers:
    medium: str
    short: str
    tiny: str
    source: str
    source_text_checksum: str

    def for_tier(self, tier_name: str) -> str:
        return {"medium": self.medium, "short": self.short, "tiny": self.tiny}[tier_name]

    def to_dict(self) -> dict[str, Any]:
        return {
            "medium": self.medium,
            "short": self.short,
            "tiny": self.tiny,
            "source": self.source,
            "source_text_checksum": self.source_text_checksum,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SummaryTiers":
        return cls(
            medium=data["medium"],
            short=data["short"],
            tiny=data["tiny"],
            source=data["source"],
            source_text_checksum=data["source_text_checksum"],
        )


def text_checksum(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def extractive_summary(text: str, budget: int) -> str:
    """Deterministic truncation: longest whole-word prefix within the budget.

    Texts already within budget pass through unchanged. Otherwise the longest
    prefix ending on a word boundary with length <= budget - 1 is kept and a
    single ellipsis appended; if not even the first word fits, the raw
    (budget - 1)-character prefix is used instead.
    """
    if budget < 2:
        raise EngineError("budget_too_small", f"budget must be >= 2, got {budget}")
    if not text:
        raise EngineError("empty_text", "cannot summarize empty text")
    if len(text) <= budget:
        return text
    limit = budget - 1
    best = None
    for match in _WORD.finditer(text):
        if match.end() <= limit:
            best = match.end()
        else:
            break
    if best is None:
        return text[:limit] + ELLIPSIS
    return text[:best] + ELLIPSIS


def _fit(text: str, budget: int) -> str:
    # Tolerates budgets < 2 (possible when the original text is a char or two).
    if len(text) <= budget:
        return text
    if budget < 2:
        return text[:budget]
    return extractive_summary(text, budget)


def extractive_tiers(text: str, budgets: SummaryBudgets = DEFAULT_BUDGETS) -> SummaryTiers:
    """All three tiers via the extractive rule alone."""
    medium = _fit(text, min(budgets.medium, len(text)))
    short = _fit(text, min(budgets.short, len(medium)))
    tiny = _fit(text, min(budgets.tiny, len(short)))
    return SummaryTiers(
        medium=medium,
        short=short,
        tiny=tiny,
        source=SOURCE_EXTRACTIVE,
        source_text_checksum=text_checksum(text),
    )


def summarize_tiers(
    text: str,
    provider: ProviderClient | None,
    budgets: SummaryBudgets = DEFAULT_BUDGETS,
) -> SummaryTiers:
    """Produce all three tiers for a piece of evidence text.

    Requests the three tiers from the provider in one structured call; any
    tier over budget is re-truncated extractively, and cascading budgets keep
    the tier lengths monotone. On provider failure (or when the text already
    fits the tiny budget, where the length invariant forces identity) the
    extractive path is used and the provider is not consulted.
    """
    if not text:
        raise EngineError("empty_text", "cannot summarize empty text")
    if len(text) <= budgets.tiny or provider is None:
        return extractive_tiers(text, budgets)
    try:
        response = provider.complete_structured(
            PromptRequest(
                template_id="summarize/1",
                variables={
                    "text": text,
                    "medium_budget": str(budgets.medium),
                    "short_budget": str(budgets.short),
                    "tiny_budget": str(budgets.tiny),
                },
                response_schema_id="summarize/1",
            )
        )
    except EngineError:
        return extractive_tiers(text, budgets)
    medium = _fit(response["medium"], min(budgets.medium, len(text)))
    short = _fit(response["short"], min(budgets.short, len(medium)))
    tiny = _fit(response["tiny"], min(budgets.tiny, len(short)))
    return SummaryTiers(
        medium=medium,
        short=short,
        tiny=tiny,
        source=SOURCE_PROVIDER,
        source_text_checksum=text_checksum(text),
    )


def render_at_tier(node: Any, tier: Any) -> str:
    """Text an evidence node shows at a detail tier.

    ``full`` always returns the original text; the other tiers require
    summaries that are present and fresh (checksum matches the current text).
    """
    tier_name = getattr(tier, "name", str(tier))
    if tier_name == "full":
        return node.text
    summaries = node.summaries
    if summaries is None:
        raise EngineError("summaries_missing", f"node {node.node_id} has no summaries")
    if summaries.source_text_checksum != text_checksum(node.text):
        raise EngineError("summaries_stale", f"summaries for {node.node_id} are stale")
    return summaries.for_tier(tier_name)


def summarize_node(
    workspace: Any,
    node_id: str,
    provider: ProviderClient | None,
    budgets: SummaryBudgets = DEFAULT_BUDGETS,
) -> SummaryTiers:
    """Compute and store tiers for an evidence node (lazy; fresh tiers reused)."""
    node = workspace.get_evidence(node_id)
    current = node.summaries
    if current is not None and current.source_text_checksum == text_checksum(node.text):
        return current
    tiers = summarize_tiers(node.text, provider, budgets)
    apply_summaries(workspace, node_id, tiers)
    return tiers


def apply_summaries(workspace: Any, node_id: str, tiers: SummaryTiers) -> bool:
    """Store computed tiers on a node unless its text changed meanwhile.

    Stale results (checksum no longer matching) are discarded silently, which
    is what lets summarization run against immutable snapshots.
    """
    node = workspace.get_evidence(node_id)
    if tiers.source_text_checksum != text_checksum(node.text):
        return False
    current = node.summaries
    workspace.commit(
        "set_summaries",
        {"node_id": node_id},
        lambda: [
            {
                "op": "update_node",
                "node_id": node_id,
                "before": {"summaries": current.to_dict() if current else None},
                "after": {"summaries": tiers.to_dict()},
            }
        ],
    )
    return True
