/**
 * Source pane: the extracted pages of a document, selection-to-canvas
 * actions, and highlight of the region an anchored node points at.
 *
 * Pages render their extracted text; when the ingestion payload carried
 * geometry blocks the matching region gets an overlay box positioned by its
 * fractional bbox, otherwise the whole page gets a banner-level highlight.
 */

import type { SourceRegion } from "./highlights.js";
import type { DocumentDto, PageDto } from "./types.js";

export interface Selection {
  docId: string;
  pageNo: number;
  charStart: number;
  charEnd: number;
}

export interface SourcePaneCallbacks {
  /** "Add to canvas": manual incorporation of the selected excerpt. */
  onAddToCanvas?: (selection: Selection) => void;
  /** "Suggest placement": hand the excerpt to the AI pipeline. */
  onSuggestPlacement?: (selection: Selection) => void;
}

export class SourcePane {
  readonly element: HTMLElement;
  private selection: Selection | null = null;
  private addButton!: HTMLButtonElement;
  private suggestButton!: HTMLButtonElement;

  constructor(
    private readonly document_: DocumentDto,
    doc: Document,
    private readonly callbacks: SourcePaneCallbacks = {},
  ) {
    this.element = doc.createElement("aside");
    this.element.className = "tc-source-pane";
    this.element.dataset.docId = document_.doc_id;
    this.build(doc);
  }

  private build(doc: Document): void {
    const title = doc.createElement("h2");
    title.textContent = this.document_.title;
    this.element.appendChild(title);

    const actions = doc.createElement("div");
    actions.className = "tc-selection-actions";
    this.addButton = doc.createElement("button");
    this.addButton.dataset.action = "add-to-canvas";
    this.addButton.textContent = "Add to canvas";
    this.addButton.disabled = true;
    this.addButton.addEventListener("click", () => {
      if (this.selection) this.callbacks.onAddToCanvas?.(this.selection);
    });
    this.suggestButton = doc.createElement("button");
    this.suggestButton.dataset.action = "suggest-placement";
    this.suggestButton.textContent = "Suggest placement";
    this.suggestButton.disabled = true;
    this.suggestButton.addEventListener("click", () => {
      if (this.selection) this.callbacks.onSuggestPlacement?.(this.selection);
    });
    actions.append(this.addButton, this.suggestButton);
    this.element.appendChild(actions);

    for (const page of this.document_.pages) {
      this.element.appendChild(this.buildPage(page, doc));
    }
  }

  private buildPage(page: PageDto, doc: Document): HTMLElement {
    const section = doc.createElement("section");
    section.className = "tc-source-page";
    section.dataset.pageNo = String(page.page_no);

    const label = doc.createElement("h4");
    label.textContent = `p.${page.page_no}`;
    section.appendChild(label);

    const body = doc.createElement("pre");
    body.className = "tc-source-text";
    body.textContent = page.text;
    section.appendChild(body);
    return section;
  }

  /** Record a text selection (page-relative character offsets). */
  setSelection(pageNo: number, charStart: number, charEnd: number): void {
    if (charStart >= charEnd) {
      this.clearSelection();
      return;
    }
    this.selection = {
      docId: this.document_.doc_id,
      pageNo,
      charStart,
      charEnd,
    };
    this.addButton.disabled = false;
    this.suggestButton.disabled = false;
  }

  clearSelection(): void {
    this.selection = null;
    this.addButton.disabled = true;
    this.suggestButton.disabled = true;
  }

  /** Scroll to and mark the region an anchor points at. */
  showRegion(region: SourceRegion): void {
    for (const marked of Array.from(
      this.element.querySelectorAll(".tc-region, .tc-page-banner"),
    )) {
      marked.remove();
    }
    for (const active of Array.from(this.element.querySelectorAll(".tc-page-active"))) {
      active.classList.remove("tc-page-active");
    }
    const section = this.element.querySelector<HTMLElement>(
      `[data-page-no="${region.pageNo}"]`,
    );
    if (!section) return;
    section.classList.add("tc-page-active");

    const page = this.document_.pages.find((p) => p.page_no === region.pageNo);
    const block = page?.blocks?.find(
      ([start, end]) => start <= region.charStart && region.charEnd <= end,
    );
    const doc = this.element.ownerDocument;
    if (block) {
      const [, , [x, y, w, h]] = block;
      const overlay = doc.createElement("div");
      overlay.className = "tc-region";
      overlay.style.left = `${x * 100}%`;
      overlay.style.top = `${y * 100}%`;
      overlay.style.width = `${w * 100}%`;
      overlay.style.height = `${h * 100}%`;
      section.appendChild(overlay);
    } else {
      // No geometry: highlight at page granularity.
      const banner = doc.createElement("div");
      banner.className = "tc-page-banner";
      banner.textContent = `quoted region: characters ${region.charStart}-${region.charEnd}`;
      section.insertBefore(banner, section.firstChild);
    }
    section.scrollIntoView?.({ block: "nearest" });
  }
}
