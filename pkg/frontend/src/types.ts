/** Client-side mirrors of the service's JSON payloads. */

export interface SystemInfo {
  system_tag: string;
  description: string;
  oracles: string[];
  default_oracle: string;
  predicate_name: string;
  retriever_k: number;
  safety_instructions: string;
}

export interface SourceView {
  id: string;
  label: string;
  title: string;
  original_text: string;
  current_text: string;
  edited: boolean;
  score: number;
}

export type SessionStateName =
  | "created"
  | "retrieved"
  | "mining"
  | "complete"
  | "failed";

export interface RunSummary {
  question: string;
  source_ids: string[];
  model_call_count: number;
  minimal_rules: string[][];
  elapsed_ms: number | null;
}

export interface SessionSnapshot {
  session_id: string;
  system_tag: string;
  state: SessionStateName;
  question: string | null;
  safety_enabled: boolean;
  oracle_name: string;
  sources: SourceView[];
  latest_run: RunSummary | null;
  runs_archived: number;
}

export type PredicateHeld = "held" | "failed" | "not_evaluated";

export interface RuleRecord {
  subset: string[];
  cardinality: number;
  valid: boolean;
  minimal: boolean;
  pruned: boolean;
  predicate_held: PredicateHeld;
  model_call_index?: number;
  model_output?: string;
}

export type EventKind =
  | "level_started"
  | "subset_evaluated"
  | "subset_pruned"
  | "rule_valid"
  | "rule_minimal"
  | "mining_complete";

export interface EventPayload {
  sequence: number;
  kind: EventKind;
  level: number | null;
  subset?: string[];
  record?: RuleRecord;
  summary?: RunSummary;
}

export interface FailurePayload {
  message: string;
  summary: RunSummary | null;
}

/** One parsed server-sent event with its JSON body decoded. */
export interface StreamMessage {
  event: string;
  data: unknown;
}

export interface RunDetail {
  state: SessionStateName;
  completed: boolean;
  summary: RunSummary;
  records: RuleRecord[];
  past_summaries: RunSummary[];
}
