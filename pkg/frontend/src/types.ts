// View models mirroring the /v1 JSON contract (snake_case preserved).

export type TargetStatus = "unannotated" | "annotated" | "rejected";

export interface TokenView {
  kind: string;
  text: string;
  span: [number, number];
  symbol: string | null;
  status?: TargetStatus;
  target_key?: string;
}

export interface SegmentView {
  segment_id: number;
  raw_latex: string;
  display: "block" | "inline";
  existing_qid: string | null;
  span: [number, number];
  is_equation: boolean;
  status: TargetStatus;
  target_key: string;
  tokens: TokenView[];
}

export interface TableRowView {
  target_text: string;
  name: string;
  qid: string | null;
  mode: string;
  provenance: string;
  is_identifier: boolean;
  target_key: string;
}

export interface SessionView {
  session_id: string;
  title: string;
  format: string;
  progress: number;
  warnings: string[];
  conflicts: string[];
  segments: SegmentView[];
  annotations: TableRowView[];
  rejected: string[];
  event_count: number;
}

export interface CandidateView {
  name: string;
  qid: string | null;
  rank: number;
  score: number;
}

export interface ColumnView {
  label: string;
  source: string;
  candidates: CandidateView[];
}

export interface RecommendationView {
  target: string;
  eval_mode: boolean;
  seed: number;
  columns: ColumnView[];
}

export interface ProvenancePayload {
  type: "recommended" | "manual";
  source?: string;
  position?: number;
}

export interface AnnotatePayload {
  target: string;
  name: string;
  qid?: string | null;
  mode: "global" | "local";
  provenance: ProvenancePayload;
  elapsed_ms: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
