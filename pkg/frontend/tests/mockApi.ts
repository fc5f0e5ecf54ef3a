/**
 * In-memory stand-in for the workspace service. Serves a representative
 * workspace fixture over a fetch-compatible function, records every request,
 * and lets tests control preview latency and staleness.
 */

import type { FetchLike } from "../src/api.js";
import type {
  CodebookDto,
  ConfigDto,
  SuggestionDto,
  WorkspaceStateDto,
} from "../src/types.js";

export const PAGE_TEXT =
  "The tail latency of lookups grows sharply under mixed load.";

export function makeConfig(overrides: Partial<ConfigDto["zoom_thresholds"]> = {}): ConfigDto {
  return {
    zoom_thresholds: { full: 0.75, medium: 0.5, short: 0.25, ...overrides },
    summary_budgets: { medium: 280, short: 120, tiny: 40 },
    tier_order: ["full", "medium", "short", "tiny"],
  };
}

export function makeWorkspace(): WorkspaceStateDto {
  return {
    workspace_id: "w1",
    revision: 7,
    documents: [
      {
        doc_id: "d1",
        title: "Storage Systems Notes",
        checksum: "abc",
        pages: [
          {
            page_no: 1,
            text: PAGE_TEXT,
            blocks: [[4, 16, [0.1, 0.2, 0.5, 0.05]]],
          },
        ],
      },
    ],
    nodes: [
      {
        kind: "theme",
        node_id: "n1",
        name: "Query Latency",
        description: {
          text: "Covers latency and rebuilds.",
          keyword_links: [
            { keyword: "latency", evidence_ids: ["n2"] },
            { keyword: "rebuilds", evidence_ids: ["n3"] },
          ],
        },
        position: [40, 20],
        created_by: "ai_accepted",
        created_at: 1,
      },
      {
        kind: "evidence",
        node_id: "n2",
        text: "tail latency",
        anchor: {
          doc_id: "d1",
          page_no: 1,
          char_start: 4,
          char_end: 16,
          quote: "tail latency",
        },
        summaries: {
          medium: "medium tier n2",
          short: "short n2",
          tiny: "tiny n2",
          source: "provider",
          source_text_checksum: "x",
        },
        position: [40, 160],
        created_by: "ai_accepted",
        created_at: 2,
      },
      {
        kind: "evidence",
        node_id: "n3",
        text: "Index rebuilds block the write path",
        anchor: null,
        summaries: {
          medium: "medium tier n3",
          short: "short n3",
          tiny: "tiny n3",
          source: "extractive",
          source_text_checksum: "y",
        },
        position: [240, 160],
        created_by: "human",
        created_at: 3,
      },
      {
        kind: "evidence",
        node_id: "n4",
        text: "loose annotation",
        anchor: null,
        summaries: null,
        position: [440, 160],
        created_by: "human",
        created_at: 4,
      },
    ],
    edges: [
      {
        edge_id: "e5",
        from: "n1",
        to: "n2",
        kind: "membership",
        created_by: "ai_accepted",
        created_at: 5,
      },
      {
        edge_id: "e6",
        from: "n1",
        to: "n3",
        kind: "membership",
        created_by: "human",
        created_at: 6,
      },
    ],
    suggestions: [makeSuggestion()],
  };
}

export function makeSuggestion(): SuggestionDto {
  return {
    suggestion_id: "w1.s7",
    kind: "assign",
    payload: { theme_id: "n1", evidence_id: "n4", edge_id: "e8" },
    rationale: "the annotation mentions latency-adjacent stalls",
    basis: ["n4"],
    base_revision: 7,
    status: "pending",
  };
}

export function makeCodebook(): CodebookDto {
  return {
    workspace_id: "w1",
    themes: [
      {
        theme_id: "n1",
        name: "Query Latency",
        description: {
          text: "Covers latency and rebuilds.",
          keyword_links: [
            { keyword: "latency", evidence_ids: ["n2"] },
            { keyword: "rebuilds", evidence_ids: ["n3"] },
          ],
        },
        shown_evidence: [
          {
            node_id: "n2",
            text: "tail latency",
            anchor: {
              doc_id: "d1",
              page_no: 1,
              char_start: 4,
              char_end: 16,
              quote: "tail latency",
            },
          },
          { node_id: "n3", text: "Index rebuilds block the write path", anchor: null },
        ],
        total_evidence_count: 3,
        child_theme_ids: [],
      },
    ],
  };
}

export interface RecordedRequest {
  method: string;
  url: string;
  body: unknown;
}

export class MockApi {
  state = makeWorkspace();
  config = makeConfig();
  codebook = makeCodebook();
  requests: RecordedRequest[] = [];
  staleSuggestions = new Set<string>();
  /** When set, preview responses wait on this promise (in-flight testing). */
  previewGate: Promise<void> | null = null;
  private nextId = 100;

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.requests.push({ method, url: path, body });
    return this.route(method, path, body);
  };

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  private async route(method: string, path: string, body: any): Promise<Response> {
    if (method === "GET" && path === "/config") {
      return this.json(this.config);
    }
    if (method === "GET" && path === `/workspaces/${this.state.workspace_id}`) {
      return this.json(this.state);
    }
    if (method === "GET" && path.startsWith("/workspaces/")) {
      if (path.endsWith("/codebook")) {
        return this.json(this.codebook);
      }
      return this.json({ code: "workspace_missing", message: "no such workspace" }, 404);
    }
    if (method === "POST" && path === "/workspaces") {
      return this.json({ workspace_id: this.state.workspace_id, revision: 0 }, 201);
    }
    if (method === "POST" && /^\/documents\/[^/]+\/snippets$/.test(path)) {
      const docId = path.split("/")[2];
      const doc = this.state.documents.find((d) => d.doc_id === docId);
      if (!doc) {
        return this.json({ code: "unknown_document", message: "no document" }, 404);
      }
      const page = doc.pages[body.page_no - 1];
      return this.json({
        anchor: {
          doc_id: docId,
          page_no: body.page_no,
          char_start: body.char_start,
          char_end: body.char_end,
          quote: page.text.slice(body.char_start, body.char_end),
        },
      });
    }
    if (method === "POST" && path === `/workspaces/${this.state.workspace_id}/nodes`) {
      const nodeId = `n${this.nextId++}`;
      this.state.revision += 1;
      this.state.nodes.push({
        kind: "evidence",
        node_id: nodeId,
        text: body.text ?? body.anchor?.quote ?? "",
        anchor: body.anchor ?? null,
        summaries: null,
        position: body.position ?? [0, 0],
        created_by: "human",
        created_at: this.nextId,
      });
      return this.json(
        { node_id: nodeId, revision: this.state.revision, delta: [] },
        201,
      );
    }
    if (method === "POST" && path === `/workspaces/${this.state.workspace_id}/jobs`) {
      return this.json(
        {
          job_id: `j${this.nextId++}`,
          workspace_id: this.state.workspace_id,
          kind: body.kind,
          state: "done",
          result: { suggestion_id: "w1.s7" },
          error: null,
        },
        202,
      );
    }
    const preview = path.match(/^\/suggestions\/([^/]+)\/preview$/);
    if (method === "POST" && preview) {
      if (this.previewGate) {
        await this.previewGate;
      }
      if (this.staleSuggestions.has(preview[1])) {
        const suggestion = this.state.suggestions.find(
          (s) => s.suggestion_id === preview[1],
        );
        if (suggestion) suggestion.status = "stale";
        return this.json(
          { code: "suggestion_stale", message: "target gone" },
          409,
        );
      }
      return this.json({
        suggestion_id: preview[1],
        delta: [{ op: "add_edge", edge: { edge_id: "e8" } }],
      });
    }
    const resolve = path.match(/^\/suggestions\/([^/]+)\/resolve$/);
    if (method === "POST" && resolve) {
      if (this.staleSuggestions.has(resolve[1])) {
        return this.json({ code: "suggestion_stale", message: "target gone" }, 409);
      }
      const suggestion = this.state.suggestions.find(
        (s) => s.suggestion_id === resolve[1],
      );
      if (suggestion) {
        suggestion.status =
          body.decision === "accept"
            ? "accepted"
            : body.decision === "revise"
              ? "revised"
              : "rejected";
      }
      this.state.revision += 1;
      return this.json({
        suggestion_id: resolve[1],
        revision: this.state.revision,
        delta: [],
      });
    }
    if (method === "POST" && path.endsWith("/undo")) {
      this.state.revision -= 1;
      return this.json({ revision: this.state.revision });
    }
    return this.json({ code: "validation_error", message: `unhandled ${method} ${path}` }, 400);
  }
}
