// Wire types for the session service. These mirror docs/api.md in the
// repository root; the UI never computes privacy numbers itself.

export interface GridSpec {
  width: number;
  height: number;
  cell_size: number;
}

export type Edge = [number, number];

export interface PolicyDoc {
  nodes: number[];
  edges: Edge[];
  epoch: number;
  reason: string;
}

export interface AuditReport {
  pass: boolean;
  worst_ratio: number | "inf";
  bound: number;
  worst_pair: [number, number, number] | null;
}

export interface Metrics {
  ticks: number;
  users: number;
  epsilon: number;
  releases: number;
  gaps: number;
  utility_error: number | null;
  adversary_error: number | null;
  r0_true: number | null;
  r0_observed: number | null;
  r0_gap: number | null;
  monitor: { areas: string[]; counts: Record<string, number[]> };
}

export interface StreamRecord {
  user: number;
  tick: number;
  true_cell: number | null;
  released_cell: number | null;
}

export interface StreamPage {
  start: number;
  end: number;
  records: StreamRecord[];
}

export interface TraceResult {
  patient: number;
  contacts: number[];
  at_risk: number[];
  infected_cells: number[];
  disclosures: { user: number; tick: number; cell: number }[];
  log: string[];
}

export interface ApiError {
  error_code: string;
  message: string;
  field: string | null;
}

export type PolicyKind =
  | "grid"
  | "complete"
  | "partition"
  | "contact"
  | "isolated"
  | "random"
  | "custom";
