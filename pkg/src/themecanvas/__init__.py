"""themecanvas: workspace engine for evidence-grounded thematic analysis.

The engine anchors text excerpts to their source documents, organizes them as
a spatial graph of evidence and theme nodes with multi-tier summaries for
semantic zoom, and runs a previewable, human-resolved AI suggestion pipeline
over it, all behind an event-sourced workspace with undo and a small HTTP
service.
"""

from .corpus import Anchor, CorpusStore, PageBlock, SourceDocument
from .errors import EngineError
from .graph import (
    DetailTier,
    Edge,
    EvidenceNode,
    GroundedDescription,
    Suggestion,
    ThemeNode,
    Workspace,
    ZoomThresholds,
    tier_for_zoom,
)
from .provider import PromptRequest, ProviderClient, ProviderConfig
from .summarize import SummaryBudgets, SummaryTiers, extractive_summary, summarize_tiers

__all__ = [
    "Anchor",
    "CorpusStore",
    "DetailTier",
    "Edge",
    "EngineError",
    "EvidenceNode",
    "GroundedDescription",
    "PageBlock",
    "PromptRequest",
    "ProviderClient",
    "ProviderConfig",
    "SourceDocument",
    "Suggestion",
    "SummaryBudgets",
    "SummaryTiers",
    "ThemeNode",
    "Workspace",
    "ZoomThresholds",
    "extractive_summary",
    "summarize_tiers",
    "tier_for_zoom",
]

__version__ = "0.1.0"
