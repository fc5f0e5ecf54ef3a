/**
 * Suggestion cards: every pending AI proposal shows its rationale and exactly
 * four controls (preview, accept, revise, reject). Accept stays disabled
 * while a preview request is in flight and permanently once the suggestion
 * goes stale; resolving is always the human's click.
 */

import { ApiClient, ApiError } from "./api.js";
import type { DeltaChange, SuggestionDto } from "./types.js";

export interface SuggestionCardCallbacks {
  /** Fired after any resolve (or stale discovery) so the app can refresh. */
  onChanged?: () => void;
  /** Receives the preview delta for ghost-rendering on the canvas. */
  onPreview?: (delta: DeltaChange[]) => void;
}

export class SuggestionCard {
  readonly element: HTMLElement;
  private previewInFlight = false;
  private stale: boolean;

  private previewButton!: HTMLButtonElement;
  private acceptButton!: HTMLButtonElement;
  private reviseButton!: HTMLButtonElement;
  private rejectButton!: HTMLButtonElement;

  constructor(
    private readonly client: ApiClient,
    private suggestion: SuggestionDto,
    doc: Document,
    private readonly callbacks: SuggestionCardCallbacks = {},
  ) {
    this.stale = suggestion.status === "stale";
    this.element = doc.createElement("article");
    this.element.className = "tc-suggestion-card";
    this.element.dataset.suggestionId = suggestion.suggestion_id;
    this.build(doc);
    this.update();
  }

  private build(doc: Document): void {
    const title = doc.createElement("header");
    title.className = "tc-suggestion-kind";
    title.textContent = describeKind(this.suggestion);
    this.element.appendChild(title);

    const rationale = doc.createElement("p");
    rationale.className = "tc-suggestion-rationale";
    rationale.textContent = this.suggestion.rationale;
    this.element.appendChild(rationale);

    const basis = doc.createElement("p");
    basis.className = "tc-suggestion-basis";
    basis.textContent = `based on ${this.suggestion.basis.join(", ")}`;
    this.element.appendChild(basis);

    const controls = doc.createElement("div");
    controls.className = "tc-suggestion-controls";
    this.previewButton = this.button(doc, "preview", () => this.preview());
    this.acceptButton = this.button(doc, "accept", () => this.resolve("accept"));
    this.reviseButton = this.button(doc, "revise", () => this.revise());
    this.rejectButton = this.button(doc, "reject", () => this.resolve("reject"));
    for (const button of [
      this.previewButton,
      this.acceptButton,
      this.reviseButton,
      this.rejectButton,
    ]) {
      controls.appendChild(button);
    }
    this.element.appendChild(controls);
  }

  private button(doc: Document, action: string, onClick: () => void): HTMLButtonElement {
    const button = doc.createElement("button");
    button.dataset.action = action;
    button.textContent = action;
    button.addEventListener("click", onClick);
    return button;
  }

  private update(): void {
    this.element.classList.toggle("tc-stale", this.stale);
    this.acceptButton.disabled = this.previewInFlight || this.stale;
    this.previewButton.disabled = this.stale;
    this.reviseButton.disabled = this.stale;
  }

  get acceptDisabled(): boolean {
    return this.acceptButton.disabled;
  }

  async preview(): Promise<void> {
    this.previewInFlight = true;
    this.update();
    try {
      const { delta } = await this.client.previewSuggestion(this.suggestion.suggestion_id);
      this.callbacks.onPreview?.(delta);
    } catch (error) {
      if (error instanceof ApiError && error.code === "suggestion_stale") {
        this.stale = true;
        this.callbacks.onChanged?.();
      } else {
        throw error;
      }
    } finally {
      this.previewInFlight = false;
      this.update();
    }
  }

  private async resolve(decision: "accept" | "reject"): Promise<void> {
    try {
      await this.client.resolveSuggestion(this.suggestion.suggestion_id, decision);
    } catch (error) {
      if (error instanceof ApiError && error.code === "suggestion_stale") {
        this.stale = true;
        this.update();
      } else {
        throw error;
      }
    }
    this.callbacks.onChanged?.();
  }

  private async revise(): Promise<void> {
    const edits = this.collectRevision();
    if (edits === null) {
      return;
    }
    try {
      await this.client.resolveSuggestion(this.suggestion.suggestion_id, "revise", edits);
    } catch (error) {
      if (error instanceof ApiError && error.code === "suggestion_stale") {
        this.stale = true;
        this.update();
      } else {
        throw error;
      }
    }
    this.callbacks.onChanged?.();
  }

  /** Minimal revision UX: prompt for the editable field of this kind. */
  private collectRevision(): Record<string, unknown> | null {
    const win = this.element.ownerDocument.defaultView;
    const ask = win?.prompt?.bind(win);
    if (!ask) return null;
    if (this.suggestion.kind === "assign") {
      const themeId = ask("Assign to theme id:", String(this.suggestion.payload.theme_id));
      return themeId ? { theme_id: themeId } : null;
    }
    if (this.suggestion.kind === "describe_theme") {
      const payload = this.suggestion.payload.description as { text?: string } | undefined;
      const text = ask("Description text:", payload?.text ?? "");
      return text ? { description: { text, keyword_links: [] } } : null;
    }
    const name = ask("Theme name:", String(this.suggestion.payload.name ?? ""));
    return name ? { name } : null;
  }
}

function describeKind(suggestion: SuggestionDto): string {
  switch (suggestion.kind) {
    case "assign":
      return `assign ${suggestion.payload.evidence_id} to ${suggestion.payload.theme_id}`;
    case "new_theme":
      return `new theme "${suggestion.payload.name}"`;
    case "rename_theme":
      return `rename ${suggestion.payload.theme_id} to "${suggestion.payload.name}"`;
    case "describe_theme":
      return `describe ${suggestion.payload.theme_id}`;
  }
}

export function renderSuggestionList(
  client: ApiClient,
  suggestions: SuggestionDto[],
  root: HTMLElement,
  callbacks: SuggestionCardCallbacks = {},
): SuggestionCard[] {
  root.textContent = "";
  root.classList.add("tc-suggestions");
  const cards = suggestions.map(
    (s) => new SuggestionCard(client, s, root.ownerDocument, callbacks),
  );
  for (const card of cards) {
    root.appendChild(card.element);
  }
  return cards;
}
