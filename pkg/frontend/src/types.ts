/** Wire types mirroring the workspace service's JSON payloads. */

export interface AnchorDto {
  doc_id: string;
  page_no: number;
  char_start: number;
  char_end: number;
  quote: string;
}

export interface SummaryTiersDto {
  medium: string;
  short: string;
  tiny: string;
  source: "provider" | "extractive";
  source_text_checksum: string;
}

export interface EvidenceNodeDto {
  kind: "evidence";
  node_id: string;
  text: string;
  anchor: AnchorDto | null;
  summaries: SummaryTiersDto | null;
  position: [number, number];
  created_by: "human" | "ai_accepted";
  created_at: number;
}

export interface KeywordLinkDto {
  keyword: string;
  evidence_ids: string[];
}

export interface DescriptionDto {
  text: string;
  keyword_links: KeywordLinkDto[];
}

export interface ThemeNodeDto {
  kind: "theme";
  node_id: string;
  name: string;
  description: DescriptionDto | null;
  position: [number, number];
  created_by: "human" | "ai_accepted";
  created_at: number;
}

export type NodeDto = EvidenceNodeDto | ThemeNodeDto;

export interface EdgeDto {
  edge_id: string;
  from: string;
  to: string;
  kind: "membership" | "hierarchy";
  created_by: "human" | "ai_accepted";
  created_at: number;
}

export type SuggestionStatus = "pending" | "accepted" | "revised" | "rejected" | "stale";

export interface SuggestionDto {
  suggestion_id: string;
  kind: "assign" | "new_theme" | "rename_theme" | "describe_theme";
  payload: Record<string, unknown>;
  rationale: string;
  basis: string[];
  base_revision: number;
  status: SuggestionStatus;
}

export interface GeometryBlockDto extends Array<unknown> {
  0: number;
  1: number;
  2: [number, number, number, number];
}

export interface PageDto {
  page_no: number;
  text: string;
  blocks?: GeometryBlockDto[];
}

export interface DocumentDto {
  doc_id: string;
  title: string;
  checksum: string;
  pages: PageDto[];
}

export interface WorkspaceStateDto {
  workspace_id: string;
  revision: number;
  documents: DocumentDto[];
  nodes: NodeDto[];
  edges: EdgeDto[];
  suggestions: SuggestionDto[];
}

export interface ZoomThresholdsDto {
  full: number;
  medium: number;
  short: number;
}

export interface ConfigDto {
  zoom_thresholds: ZoomThresholdsDto;
  summary_budgets: { medium: number; short: number; tiny: number };
  tier_order: string[];
}

export type DeltaChange = Record<string, unknown> & { op: string };

export interface JobTicketDto {
  job_id: string;
  workspace_id: string;
  kind: "placement" | "name" | "describe" | "summarize";
  state: "queued" | "running" | "done" | "failed";
  result: Record<string, unknown> | null;
  error: { code: string; message: string } | null;
}

export interface CodebookEvidenceDto {
  node_id: string;
  text: string;
  anchor: AnchorDto | null;
}

export interface CodebookEntryDto {
  theme_id: string;
  name: string;
  description: DescriptionDto | null;
  shown_evidence: CodebookEvidenceDto[];
  total_evidence_count: number;
  child_theme_ids: string[];
}

export interface CodebookDto {
  workspace_id: string;
  themes: CodebookEntryDto[];
}

export type DetailTier = "full" | "medium" | "short" | "tiny";
