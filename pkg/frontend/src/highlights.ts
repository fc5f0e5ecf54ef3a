/**
 * Keyword hover highlighting: a hovered insight keyword lights up exactly the
 * evidence nodes its grounded link lists, and clicking an anchored evidence
 * node drives the source pane to the quoted region.
 */

import type { HighlightState } from "./state.js";
import { EMPTY_HIGHLIGHT } from "./state.js";
import type { AnchorDto, EvidenceNodeDto, ThemeNodeDto } from "./types.js";

export function highlightForKeyword(
  theme: ThemeNodeDto,
  keyword: string,
): HighlightState {
  const link = theme.description?.keyword_links.find(
    (l) => l.keyword.toLowerCase() === keyword.toLowerCase(),
  );
  if (!link) {
    return EMPTY_HIGHLIGHT;
  }
  return { keyword: link.keyword, evidenceIds: [...link.evidence_ids] };
}

export function clearHighlight(): HighlightState {
  return EMPTY_HIGHLIGHT;
}

export interface SourceRegion {
  docId: string;
  pageNo: number;
  charStart: number;
  charEnd: number;
}

/** Where the source pane should scroll when an anchored node is activated. */
export function sourceRegionFor(node: EvidenceNodeDto): SourceRegion | null {
  const anchor: AnchorDto | null = node.anchor;
  if (anchor === null) {
    return null;
  }
  return {
    docId: anchor.doc_id,
    pageNo: anchor.page_no,
    charStart: anchor.char_start,
    charEnd: anchor.char_end,
  };
}
