/**
 * Detail-tier selection for semantic zoom.
 *
 * The threshold table always comes from the service's /config endpoint so the
 * client and engine can never disagree; nothing here hard-codes a cutoff.
 * The client never re-summarizes: it only picks among strings the API served
 * (the original text or one of the stored summary tiers).
 */

import type { DetailTier, EvidenceNodeDto, NodeDto, ZoomThresholdsDto } from "./types.js";

export function tierForZoom(
  zoom: number,
  nodeKind: NodeDto["kind"],
  thresholds: ZoomThresholdsDto,
): DetailTier {
  if (!(zoom > 0)) {
    throw new RangeError(`zoom must be > 0, got ${zoom}`);
  }
  if (nodeKind === "theme") {
    return "full";
  }
  if (zoom >= thresholds.full) return "full";
  if (zoom >= thresholds.medium) return "medium";
  if (zoom >= thresholds.short) return "short";
  return "tiny";
}

/**
 * The text an evidence node displays at a tier. Falls back to the original
 * text when summaries have not been computed yet (the app then queues a
 * summarize job; it never truncates locally).
 */
export function renderAtTier(node: EvidenceNodeDto, tier: DetailTier): string {
  if (tier === "full" || node.summaries === null) {
    return node.text;
  }
  return node.summaries[tier];
}
