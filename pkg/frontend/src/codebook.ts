/**
 * Codebook view: the stable, read-only projection of current themes. At most
 * two evidence quotes per theme with a "+N more" counter; keyword spans in
 * descriptions are hoverable and drive the shared highlight state. No drag,
 * edit, or delete affordances exist here.
 */

import type { CodebookDto, CodebookEntryDto, DescriptionDto } from "./types.js";

export interface CodebookCallbacks {
  onHoverKeyword?: (themeId: string, keyword: string) => void;
  onLeaveKeyword?: () => void;
}

export function renderCodebook(
  codebook: CodebookDto,
  root: HTMLElement,
  callbacks: CodebookCallbacks = {},
): void {
  root.textContent = "";
  root.classList.add("tc-codebook");
  root.setAttribute("aria-readonly", "true");
  const doc = root.ownerDocument;
  for (const entry of codebook.themes) {
    root.appendChild(renderEntry(entry, doc, callbacks));
  }
}

function renderEntry(
  entry: CodebookEntryDto,
  doc: Document,
  callbacks: CodebookCallbacks,
): HTMLElement {
  const section = doc.createElement("section");
  section.className = "tc-codebook-theme";
  section.dataset.themeId = entry.theme_id;

  const heading = doc.createElement("h3");
  heading.textContent = entry.name;
  section.appendChild(heading);

  if (entry.description) {
    section.appendChild(
      renderDescription(entry.theme_id, entry.description, doc, callbacks),
    );
  }

  for (const evidence of entry.shown_evidence.slice(0, 2)) {
    const quote = doc.createElement("blockquote");
    quote.className = "tc-codebook-evidence";
    quote.dataset.nodeId = evidence.node_id;
    quote.textContent = evidence.text;
    if (evidence.anchor) {
      const source = doc.createElement("cite");
      source.textContent = `p.${evidence.anchor.page_no}`;
      quote.appendChild(source);
    }
    section.appendChild(quote);
  }

  const extra = entry.total_evidence_count - Math.min(2, entry.shown_evidence.length);
  if (extra > 0) {
    const more = doc.createElement("p");
    more.className = "tc-codebook-more";
    more.textContent = `+${extra} more`;
    section.appendChild(more);
  }
  return section;
}

/** Description prose with each grounded keyword wrapped in a hoverable span. */
function renderDescription(
  themeId: string,
  description: DescriptionDto,
  doc: Document,
  callbacks: CodebookCallbacks,
): HTMLElement {
  const paragraph = doc.createElement("p");
  paragraph.className = "tc-codebook-description";

  const keywords = description.keyword_links.map((l) => l.keyword);
  const pieces = splitOnKeywords(description.text, keywords);
  for (const piece of pieces) {
    if (piece.keyword === null) {
      paragraph.appendChild(doc.createTextNode(piece.text));
      continue;
    }
    const span = doc.createElement("span");
    span.className = "tc-keyword";
    span.dataset.keyword = piece.keyword;
    span.textContent = piece.text;
    span.addEventListener("mouseenter", () =>
      callbacks.onHoverKeyword?.(themeId, piece.keyword as string),
    );
    span.addEventListener("mouseleave", () => callbacks.onLeaveKeyword?.());
    paragraph.appendChild(span);
  }
  return paragraph;
}

interface TextPiece {
  text: string;
  keyword: string | null;
}

function splitOnKeywords(text: string, keywords: string[]): TextPiece[] {
  const pieces: TextPiece[] = [];
  let cursor = 0;
  const lower = text.toLowerCase();
  while (cursor < text.length) {
    let nextIndex = -1;
    let nextKeyword: string | null = null;
    for (const keyword of keywords) {
      const index = findWholeWord(lower, keyword.toLowerCase(), cursor);
      if (index >= 0 && (nextIndex < 0 || index < nextIndex)) {
        nextIndex = index;
        nextKeyword = keyword;
      }
    }
    if (nextIndex < 0 || nextKeyword === null) {
      pieces.push({ text: text.slice(cursor), keyword: null });
      break;
    }
    if (nextIndex > cursor) {
      pieces.push({ text: text.slice(cursor, nextIndex), keyword: null });
    }
    pieces.push({
      text: text.slice(nextIndex, nextIndex + nextKeyword.length),
      keyword: nextKeyword,
    });
    cursor = nextIndex + nextKeyword.length;
  }
  return pieces;
}

function findWholeWord(haystack: string, needle: string, from: number): number {
  let start = from;
  for (;;) {
    const index = haystack.indexOf(needle, start);
    if (index < 0) return -1;
    const end = index + needle.length;
    const beforeOk = index === 0 || !isAlnum(haystack[index - 1]);
    const afterOk = end === haystack.length || !isAlnum(haystack[end]);
    if (beforeOk && afterOk) return index;
    start = index + 1;
  }
}

function isAlnum(ch: string): boolean {
  return /[\p{L}\p{N}]/u.test(ch);
}
