/** Shared types mirroring the service's JSON payloads. */

export const OBJECTIVE_NAMES = [
  "accessibility",
  "environment",
  "neg_cost",
  "equity",
] as const;

export const OBJECTIVE_LABELS: Record<string, string> = {
  accessibility: "Accessibility",
  environment: "Environmental quality",
  neg_cost: "Cost efficiency",
  equity: "Spatial equity",
};

export type Vec4 = [number, number, number, number];

export interface ArchiveEntry {
  record: number;
  objectives: number[];
  normalized_objectives: number[];
  preference: number[];
  portfolio: number[];
  attention: number[];
}

export interface ParcelSummary {
  id: number;
  district: number;
  walk_score: number;
  green_space: number;
  base_cost: number;
  flood_zone: boolean;
  qct: boolean;
  minority_tract: boolean;
}

export interface ComplianceReport {
  feasible: boolean;
  first_violation: number | null;
  violations: { id: number; magnitude: number }[];
  checked_count: number;
}

export interface Recommendation {
  record: number | null;
  portfolio: ParcelSummary[];
  objectives: number[];
  normalized_objectives: number[];
  preference: number[];
  compliance: ComplianceReport;
  explanation: string[];
  soft_relaxed: boolean;
  latency_ms: number;
}

export interface SoftConstraintToggle {
  id: number;
  enabled: boolean;
}

export interface ReoptimizeBody {
  lambda: number[];
  soft_constraints?: SoftConstraintToggle[];
  budget_override?: number;
}
