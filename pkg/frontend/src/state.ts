/**
 * Canvas view-model: the pure data the panes render from.
 *
 * Holds the latest workspace snapshot plus view state (zoom, selection,
 * keyword highlight). Rendered evidence text always equals the API-served
 * string for the tier dictated by the shared threshold table.
 */

import { tierForZoom, renderAtTier } from "./tiers.js";
import type {
  ConfigDto,
  DetailTier,
  EdgeDto,
  NodeDto,
  SuggestionDto,
  ThemeNodeDto,
  WorkspaceStateDto,
} from "./types.js";

export interface RenderedNode {
  nodeId: string;
  kind: NodeDto["kind"];
  text: string;
  tier: DetailTier;
  position: [number, number];
  aiBadge: boolean;
  highlighted: boolean;
  selected: boolean;
}

export interface HighlightState {
  keyword: string | null;
  evidenceIds: string[];
}

export const EMPTY_HIGHLIGHT: HighlightState = { keyword: null, evidenceIds: [] };

export interface ZoomLimits {
  min: number;
  max: number;
}

const DEFAULT_LIMITS: ZoomLimits = { min: 0.05, max: 4.0 };

export class CanvasViewModel {
  zoom = 1.0;
  selection: string | null = null;
  highlight: HighlightState = EMPTY_HIGHLIGHT;
  private state: WorkspaceStateDto | null = null;

  constructor(
    private readonly config: ConfigDto,
    private readonly limits: ZoomLimits = DEFAULT_LIMITS,
  ) {}

  get revision(): number {
    return this.state?.revision ?? -1;
  }

  get workspace(): WorkspaceStateDto | null {
    return this.state;
  }

  applyWorkspace(state: WorkspaceStateDto): void {
    this.state = state;
    if (this.selection && !state.nodes.some((n) => n.node_id === this.selection)) {
      this.selection = null;
    }
  }

  /** Clamped to the configured limits; never throws on wild wheel input. */
  applyZoom(zoom: number): number {
    if (Number.isNaN(zoom)) {
      return this.zoom;
    }
    this.zoom = Math.min(this.limits.max, Math.max(this.limits.min, zoom));
    return this.zoom;
  }

  setHighlight(keyword: string | null, evidenceIds: string[]): void {
    this.highlight = keyword === null ? EMPTY_HIGHLIGHT : { keyword, evidenceIds };
  }

  node(nodeId: string): NodeDto | undefined {
    return this.state?.nodes.find((n) => n.node_id === nodeId);
  }

  themes(): ThemeNodeDto[] {
    return (this.state?.nodes ?? []).filter((n): n is ThemeNodeDto => n.kind === "theme");
  }

  edges(): EdgeDto[] {
    return this.state?.edges ?? [];
  }

  pendingSuggestions(): SuggestionDto[] {
    return (this.state?.suggestions ?? []).filter((s) => s.status === "pending");
  }

  suggestion(suggestionId: string): SuggestionDto | undefined {
    return this.state?.suggestions.find((s) => s.suggestion_id === suggestionId);
  }

  /** Nodes with their zoom-dependent display text; themes keep fixed text. */
  renderedNodes(): RenderedNode[] {
    const highlighted = new Set(this.highlight.evidenceIds);
    return (this.state?.nodes ?? []).map((node) => {
      const tier = tierForZoom(this.zoom, node.kind, this.config.zoom_thresholds);
      return {
        nodeId: node.node_id,
        kind: node.kind,
        text: node.kind === "theme" ? node.name : renderAtTier(node, tier),
        tier,
        position: node.position,
        aiBadge: node.created_by === "ai_accepted",
        highlighted: node.kind === "evidence" && highlighted.has(node.node_id),
        selected: this.selection === node.node_id,
      };
    });
  }

  /** Evidence nodes whose summaries are missing or stale for the current tier. */
  nodesNeedingSummaries(): string[] {
    if (!this.state) return [];
    const needed: string[] = [];
    for (const node of this.state.nodes) {
      if (node.kind !== "evidence") continue;
      const tier = tierForZoom(this.zoom, "evidence", this.config.zoom_thresholds);
      if (tier !== "full" && node.summaries === null) {
        needed.push(node.node_id);
      }
    }
    return needed;
  }
}
