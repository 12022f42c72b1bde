// Wire types for the session service. Everything displayed in the UI
// comes from these payloads; the client never computes labels, scores
// or fairness numbers itself.

export type RecordValues = Record<string, string | number>;

export interface IfcConflictPrompt {
  kind: "ifc_conflict";
  record: RecordValues;
  record_index: number;
  user_label: string;
  model_label: string;
  past_label: string;
  affected_indices: number[];
}

export interface SlcOfferPrompt {
  kind: "slc_offer_explanation";
  record: RecordValues;
  record_index: number;
  user_label: string;
  model_label: string;
}

export interface TaggedInstance {
  record: RecordValues;
  label: string;
  distance: number;
}

export interface Explanation {
  logic: {
    rule_text: string;
    tree_text: string;
    conditions: [string, string, unknown][];
    label: string;
    note: string;
  };
  instances: {
    examples: TaggedInstance[];
    counterexamples: TaggedInstance[];
    example_label: string;
    counterexample_label: string;
    source: string;
    shortage: boolean;
  };
}

export interface SlcSuggestionPrompt {
  kind: "slc_suggestion";
  record: RecordValues;
  record_index: number;
  user_label: string;
  model_label: string;
  explanation: Explanation | null;
}

export interface GfcCandidate {
  index: number;
  record: RecordValues;
  current_label: string;
  flip_to: string;
  probability: number;
}

export interface GfcReviewPrompt {
  kind: "gfc_review";
  plan: {
    disc_before: number;
    dn_candidates: number[];
    pp_candidates: number[];
    target_dn_flips: number;
    target_pp_flips: number;
  };
  disc_before: number;
  candidates?: { dn: GfcCandidate[]; pp: GfcCandidate[] };
}

export type KnownPrompt =
  | IfcConflictPrompt
  | SlcOfferPrompt
  | SlcSuggestionPrompt
  | GfcReviewPrompt;

// Future server versions may add prompt kinds; those render as a raw fallback.
export type Prompt = KnownPrompt | { kind: string; [key: string]: unknown };

export interface Finalized {
  index: number;
  final_label: string;
  provenance: string;
  user_label: string;
  model_label: string;
}

export interface Outcome {
  finalized: Finalized | null;
  prompt: Prompt | null;
  relabels: { index: number; old: string; new: string; source: string }[];
  retrained: boolean;
  notices: string[];
  complete: boolean;
  status: SessionStatus;
  next: NextRecord | null;
  duplicate?: boolean;
}

export type SessionStatus = "awaiting_label" | "awaiting_response" | "complete";

export interface NextRecord {
  stream_index: number;
  record: RecordValues;
}

export interface SessionSummary {
  id: string;
  status: SessionStatus;
  labeled: number;
  target: number;
  provenance_counts: Record<string, number>;
  disc: number | null;
  unfair_couples: number;
  stats: Record<string, number>;
  pending: Prompt | null;
  next: NextRecord | null;
  feed: "dataset" | "client";
  labels: [string, string];
  positive_label: string;
  sensitive_attribute: string;
}

export interface SessionEvent {
  seq: number;
  ts: number;
  type: string;
  [key: string]: unknown;
}

export interface EventsPage {
  events: SessionEvent[];
  next: number;
}

export interface Metrics {
  labeled: number;
  disc: number | null;
  unfair_couples: number;
  stats: Record<string, number>;
  provenance_counts: Record<string, number>;
}

export interface GfcPreview {
  disc_before: number;
  disc_after: number | null;
  flips: number;
}

export type PromptResponse =
  | { kind: "ifc_conflict"; choice: "change_current" | "relabel_past" }
  | { kind: "slc_offer_explanation"; show: boolean }
  | { kind: "slc_suggestion"; accept: boolean }
  | { kind: "gfc_review"; accept_dn: number[]; accept_pp: number[] };

export interface CreateSessionRequest {
  dataset: { generator?: string; seed?: number; csv?: string; schema?: string };
  config?: Record<string, unknown>;
  rules?: { rules: unknown[] } | null;
  pretrain?: boolean;
  feed?: "dataset" | "client";
}
