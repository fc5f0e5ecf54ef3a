/**
 * Typed client for the workspace service. Every state transition the UI can
 * make goes through these methods and nothing else; tests assert that the
 * set of URLs touched stays inside this documented surface.
 */

import type {
  AnchorDto,
  CodebookDto,
  ConfigDto,
  DeltaChange,
  JobTicketDto,
  SuggestionDto,
  WorkspaceStateDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface MutationResponse {
  revision: number;
  delta: DeltaChange[];
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    if (!response.ok) {
      const errorBody = parsed as { code?: string; message?: string } | null;
      throw new ApiError(
        errorBody?.code ?? "http_error",
        errorBody?.message ?? `HTTP ${response.status}`,
        response.status,
      );
    }
    return parsed as T;
  }

  getConfig(): Promise<ConfigDto> {
    return this.request("GET", "/config");
  }

  createWorkspace(): Promise<{ workspace_id: string; revision: number }> {
    return this.request("POST", "/workspaces", {});
  }

  getWorkspace(workspaceId: string): Promise<WorkspaceStateDto> {
    return this.request("GET", `/workspaces/${workspaceId}`);
  }

  ingestDocument(
    workspaceId: string,
    payload: Record<string, unknown>,
  ): Promise<{ doc_id: string; revision: number }> {
    return this.request("POST", `/workspaces/${workspaceId}/documents`, payload);
  }

  extractSnippet(
    docId: string,
    pageNo: number,
    charStart: number,
    charEnd: number,
  ): Promise<{ anchor: AnchorDto }> {
    return this.request("POST", `/documents/${docId}/snippets`, {
      page_no: pageNo,
      char_start: charStart,
      char_end: charEnd,
    });
  }

  createNode(
    workspaceId: string,
    spec: Record<string, unknown>,
    expectedRevision?: number,
  ): Promise<MutationResponse & { node_id: string }> {
    return this.request("POST", `/workspaces/${workspaceId}/nodes`, {
      ...spec,
      ...(expectedRevision === undefined ? {} : { expected_revision: expectedRevision }),
    });
  }

  patchNode(
    workspaceId: string,
    nodeId: string,
    patch: Record<string, unknown>,
    expectedRevision?: number,
  ): Promise<MutationResponse> {
    return this.request("PATCH", `/workspaces/${workspaceId}/nodes/${nodeId}`, {
      ...patch,
      ...(expectedRevision === undefined ? {} : { expected_revision: expectedRevision }),
    });
  }

  deleteNode(workspaceId: string, nodeId: string): Promise<MutationResponse> {
    return this.request("DELETE", `/workspaces/${workspaceId}/nodes/${nodeId}`);
  }

  connect(
    workspaceId: string,
    from: string,
    to: string,
    kind: "membership" | "hierarchy",
  ): Promise<MutationResponse & { edge_id: string }> {
    return this.request("POST", `/workspaces/${workspaceId}/edges`, { from, to, kind });
  }

  mergeThemes(
    workspaceId: string,
    survivorId: string,
    absorbedId: string,
  ): Promise<MutationResponse> {
    return this.request("POST", `/workspaces/${workspaceId}/themes/merge`, {
      survivor_id: survivorId,
      absorbed_id: absorbedId,
    });
  }

  enqueueJob(
    workspaceId: string,
    kind: JobTicketDto["kind"],
    params: Record<string, unknown>,
  ): Promise<JobTicketDto> {
    return this.request("POST", `/workspaces/${workspaceId}/jobs`, { kind, params });
  }

  pollJob(jobId: string): Promise<JobTicketDto> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  previewSuggestion(
    suggestionId: string,
  ): Promise<{ suggestion_id: string; delta: DeltaChange[] }> {
    return this.request("POST", `/suggestions/${suggestionId}/preview`);
  }

  resolveSuggestion(
    suggestionId: string,
    decision: "accept" | "revise" | "reject",
    payload?: Record<string, unknown>,
  ): Promise<{ suggestion_id: string; revision: number; delta: DeltaChange[] }> {
    return this.request("POST", `/suggestions/${suggestionId}/resolve`, {
      decision,
      ...(payload === undefined ? {} : { payload }),
    });
  }

  getCodebook(workspaceId: string): Promise<CodebookDto> {
    return this.request("GET", `/workspaces/${workspaceId}/codebook`);
  }

  undo(workspaceId: string): Promise<{ revision: number }> {
    return this.request("POST", `/workspaces/${workspaceId}/undo`, {});
  }

  async suggestionsOf(workspaceId: string): Promise<SuggestionDto[]> {
    const state = await this.getWorkspace(workspaceId);
    return state.suggestions;
  }
}
