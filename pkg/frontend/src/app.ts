/**
 * Application shell: bind a workspace into a split view (source pane on the
 * left, working canvas on the right, suggestion rail and codebook route),
 * refresh by polling the revision, and route every state change through the
 * documented API.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderCanvas } from "./canvas.js";
import { renderCodebook } from "./codebook.js";
import { highlightForKeyword, sourceRegionFor } from "./highlights.js";
import { SourcePane } from "./pdfpane.js";
import { CanvasViewModel } from "./state.js";
import { renderSuggestionList, SuggestionCard } from "./suggestions.js";
import type { ThemeNodeDto } from "./types.js";

export interface AppOptions {
  pollIntervalMs?: number;
  /** "canvas" is the working view; "codebook" the read-only projection. */
  route?: "canvas" | "codebook";
}

export class WorkspaceApp {
  readonly viewModel: CanvasViewModel;
  private sourcePanes = new Map<string, SourcePane>();
  private cards: SuggestionCard[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;
  private route: "canvas" | "codebook";
  private summarizeRequested = new Set<string>();

  private canvasEl!: HTMLElement;
  private suggestionsEl!: HTMLElement;
  private codebookEl!: HTMLElement;
  private sourcesEl!: HTMLElement;
  private errorEl!: HTMLElement;

  private constructor(
    private readonly client: ApiClient,
    private readonly workspaceId: string,
    private readonly root: HTMLElement,
    viewModel: CanvasViewModel,
    private readonly options: AppOptions,
  ) {
    this.viewModel = viewModel;
    this.route = options.route ?? "canvas";
  }

  /** Load config and workspace, render the split view, start polling. */
  static async bind(
    client: ApiClient,
    workspaceId: string,
    root: HTMLElement,
    options: AppOptions = {},
  ): Promise<WorkspaceApp> {
    const config = await client.getConfig();
    const app = new WorkspaceApp(
      client,
      workspaceId,
      root,
      new CanvasViewModel(config),
      options,
    );
    app.buildSkeleton();
    try {
      await app.refresh();
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        app.showError(`workspace "${workspaceId}" not found`);
        return app;
      }
      throw error;
    }
    app.startPolling();
    return app;
  }

  private buildSkeleton(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    this.root.classList.add("tc-app");

    this.errorEl = doc.createElement("div");
    this.errorEl.className = "tc-error-banner";
    this.errorEl.hidden = true;
    this.root.appendChild(this.errorEl);

    this.sourcesEl = doc.createElement("div");
    this.sourcesEl.className = "tc-sources";
    this.root.appendChild(this.sourcesEl);

    const main = doc.createElement("main");
    this.canvasEl = doc.createElement("div");
    this.canvasEl.className = "tc-canvas-host";
    this.codebookEl = doc.createElement("div");
    this.codebookEl.className = "tc-codebook-host";
    this.codebookEl.hidden = this.route !== "codebook";
    this.canvasEl.hidden = this.route !== "canvas";
    main.append(this.canvasEl, this.codebookEl);
    this.root.appendChild(main);

    this.suggestionsEl = doc.createElement("aside");
    this.suggestionsEl.className = "tc-suggestion-rail";
    this.root.appendChild(this.suggestionsEl);
  }

  private showError(message: string): void {
    this.errorEl.hidden = false;
    this.errorEl.textContent = message;
  }

  /** Pull the latest state and re-render everything that depends on it. */
  async refresh(): Promise<void> {
    const state = await this.client.getWorkspace(this.workspaceId);
    this.viewModel.applyWorkspace(state);
    for (const document of state.documents) {
      if (!this.sourcePanes.has(document.doc_id)) {
        const pane = new SourcePane(document, this.root.ownerDocument, {
          onAddToCanvas: async (selection) => {
            const { anchor } = await this.client.extractSnippet(
              selection.docId,
              selection.pageNo,
              selection.charStart,
              selection.charEnd,
            );
            await this.client.createNode(this.workspaceId, {
              kind: "evidence",
              anchor,
              position: [0, 0],
            });
            await this.refresh();
          },
          onSuggestPlacement: async (selection) => {
            const { anchor } = await this.client.extractSnippet(
              selection.docId,
              selection.pageNo,
              selection.charStart,
              selection.charEnd,
            );
            const created = await this.client.createNode(this.workspaceId, {
              kind: "evidence",
              anchor,
              position: [0, 0],
            });
            await this.client.enqueueJob(this.workspaceId, "placement", {
              evidence_id: created.node_id,
            });
            await this.refresh();
          },
        });
        this.sourcePanes.set(document.doc_id, pane);
        this.sourcesEl.appendChild(pane.element);
      }
    }
    await this.render();
  }

  private async render(): Promise<void> {
    if (this.route === "canvas") {
      this.renderCanvasRoute();
    } else {
      await this.renderCodebookRoute();
    }
    this.cards = renderSuggestionList(
      this.client,
      this.viewModel.pendingSuggestions(),
      this.suggestionsEl,
      { onChanged: () => void this.refresh() },
    );
  }

  private renderCanvasRoute(): void {
    renderCanvas(this.viewModel, this.canvasEl, {
      onSelectNode: (nodeId) => {
        this.viewModel.selection = nodeId;
      },
      onActivateEvidence: (nodeId) => this.revealSource(nodeId),
    });
  }

  private async renderCodebookRoute(): Promise<void> {
    const codebook = await this.client.getCodebook(this.workspaceId);
    renderCodebook(codebook, this.codebookEl, {
      onHoverKeyword: (themeId, keyword) => this.hoverKeyword(themeId, keyword),
      onLeaveKeyword: () => this.clearKeyword(),
    });
  }

  get suggestionCards(): SuggestionCard[] {
    return this.cards;
  }

  /** Re-render evidence at the tier the shared threshold table dictates. */
  applyZoom(zoom: number): void {
    this.viewModel.applyZoom(zoom);
    if (this.route === "canvas") {
      this.renderCanvasRoute();
    }
    this.queueMissingSummaries();
  }

  /** Summaries are computed lazily: first zoom-out requests them as jobs. */
  private queueMissingSummaries(): void {
    for (const nodeId of this.viewModel.nodesNeedingSummaries()) {
      if (this.summarizeRequested.has(nodeId)) continue;
      this.summarizeRequested.add(nodeId);
      void this.client
        .enqueueJob(this.workspaceId, "summarize", { node_id: nodeId })
        .then(() => this.refresh())
        .catch(() => this.summarizeRequested.delete(nodeId));
    }
  }

  /** Highlight exactly the evidence nodes linked to a grounded keyword. */
  hoverKeyword(themeId: string, keyword: string): void {
    const theme = this.viewModel.node(themeId);
    if (!theme || theme.kind !== "theme") {
      return;
    }
    const highlight = highlightForKeyword(theme as ThemeNodeDto, keyword);
    this.viewModel.setHighlight(highlight.keyword, highlight.evidenceIds);
    this.renderCanvasRoute();
  }

  clearKeyword(): void {
    this.viewModel.setHighlight(null, []);
    this.renderCanvasRoute();
  }

  /** Clicking an anchored evidence node scrolls the source pane to it. */
  revealSource(nodeId: string): void {
    const node = this.viewModel.node(nodeId);
    if (!node || node.kind !== "evidence") return;
    const region = sourceRegionFor(node);
    if (!region) return;
    this.sourcePanes.get(region.docId)?.showRegion(region);
  }

  private startPolling(): void {
    const interval = this.options.pollIntervalMs ?? 1500;
    this.timer = setInterval(() => {
      void this.pollOnce();
    }, interval);
  }

  private async pollOnce(): Promise<void> {
    try {
      const state = await this.client.getWorkspace(this.workspaceId);
      if (state.revision !== this.viewModel.revision) {
        this.viewModel.applyWorkspace(state);
        await this.render();
      }
    } catch {
      // transient polling failures surface on the next user action
    }
  }

  dispose(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
