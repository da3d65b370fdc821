// Mirrors the service's JSON contract (schema_version 1, snake_case fields).

export const SCHEMA_VERSION = 1;

interface SessionCore {
  schema_version: number;
  session_id: string;
  stage: string;
  prompt: string;
  needs_handover: boolean;
  base_probability: number | null;
  adjusted_probability: number | null;
  decision: string | null;
}

/** Shape of create/input responses. */
export interface SessionState extends SessionCore {
  retry_count: number;
  done: boolean;
}

export interface TranscriptEntry {
  stage: string;
  prompt: string;
  input: string;
  timestamp: number;
}

/** Shape of the full-session endpoint; retries come as a per-stage map. */
export interface SessionDetail extends SessionCore {
  sex: string | null;
  age: number | null;
  weight_kg: number | null;
  height_m: number | null;
  bmi: number | null;
  retry_counts: Record<string, number>;
  step: number;
  transcript: TranscriptEntry[];
}

export interface Report {
  schema_version: number;
  session_id: string;
  sex: string;
  age: number;
  bmi: number;
  raw_score: number;
  base_probability: number;
  adjusted_probability: number;
  decision: string;
  transcript: TranscriptEntry[];
}

export interface Health {
  schema_version: number;
  status: string;
  model_hash: string | null;
  session_count: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
