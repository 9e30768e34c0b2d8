/** Payload shapes of the monitoring service's JSON API (see GET /api/version). */

export type Phase = "idle" | "running" | "paused" | "completed";

export type UniverseStatus = "ok" | "warning" | "error" | "timeout" | "invalid_output";

export interface RunStateDoc {
  phase: Phase;
  completed: number;
  total: number;
  cursor: number;
  eta_seconds: number | null;
}

export interface SensitivityDoc {
  decision: string;
  score: number | null;
  ci: [number, number] | null;
  defined: boolean;
}

export interface SnapshotDoc {
  seq: number;
  phase: Phase;
  completed: number;
  failed: number;
  total: number;
  eta_seconds: number | null;
  elapsed_seconds: number;
  mean: number | null;
  mean_ci: [number, number] | null;
  sensitivity: SensitivityDoc[];
}

export interface DecisionDoc {
  name: string;
  options: string[];
  cardinality: number;
  sensitivity: { score: number | null; ci: [number, number] | null; defined: boolean };
}

export interface SpaceDoc {
  name: string;
  decisions: DecisionDoc[];
  rules: { exclude: Record<string, string> }[];
  total_universes: number;
}

export interface UniverseDoc {
  universe_id: number;
  status: UniverseStatus;
  outcome: number | null;
  quality: number | null;
  duration: number;
  /** present when the records were fetched with ?decision=<name> */
  option?: string;
}

export interface MessageDoc {
  text: string;
  severity: "error" | "warning";
  count: number;
  universe_ids: number[];
}

export interface QualityDoc {
  observed: number[];
  predicted: number[];
  quantile_dots: { observed: number[]; predicted: number[] };
}

export type ApiEventType = "state_changed" | "universe_completed" | "snapshot";

/** One frame of the event stream; `seq` is monotone per connection. */
export interface RecordedEvent {
  type: ApiEventType;
  payload: { seq: number } & Record<string, unknown>;
}

export interface ControlResult {
  ok: boolean;
  status: number;
  state?: RunStateDoc;
  detail?: string;
}

/** The slice of the HTTP surface the dashboard consumes. */
export interface ApiLike {
  space(): Promise<SpaceDoc>;
  state(): Promise<RunStateDoc>;
  progress(): Promise<SnapshotDoc[]>;
  universes(decision?: string): Promise<UniverseDoc[]>;
  messages(): Promise<MessageDoc[]>;
  quality(universeId: number): Promise<QualityDoc | null>;
  control(action: "start" | "pause" | "resume" | "reset"): Promise<ControlResult>;
}
