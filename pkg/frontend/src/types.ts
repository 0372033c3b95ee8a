/** Payload shapes of the serve-mode JSON API, mirrored field for field.
 *
 * The console never derives objective numbers itself; these types are the
 * contract that every figure on screen is a field from one of these
 * documents.
 */

export const OBJECTIVES = ["ttft_s", "carbon_kg", "water_l", "cost_usd"] as const;
export type ObjectiveKey = (typeof OBJECTIVES)[number];
export type ObjectiveDict = Record<ObjectiveKey, number>;

export const SLIT_LABELS = [
  "SLIT-TTFT",
  "SLIT-Carbon",
  "SLIT-Water",
  "SLIT-Cost",
  "SLIT-Balance",
] as const;

/** assignment maps "region|model" to one weight per entry of locations. */
export interface PlanDoc {
  locations: string[];
  assignment: Record<string, number[]>;
}

export interface ParetoEntry {
  plan_id: string;
  plan: PlanDoc;
  objectives: ObjectiveDict;
  labels: string[];
}

export interface ParetoPayload {
  epoch: number;
  done: boolean;
  entries: ParetoEntry[];
  predicted_requests?: number;
  pending_requests?: number;
  selected_plan_id?: string | null;
}

export interface RecordDoc {
  epoch: number;
  selected_label: string;
  plan_id: string;
  planned: ObjectiveDict;
  realized: ObjectiveDict;
  observed_requests: number;
  queued_requests: number;
  fallback_requests: number;
  saturated_requests: number;
  ttft_samples: number;
}

export interface StatePayload {
  scheduler: string;
  seed: number;
  epoch: number;
  total_epochs: number;
  done: boolean;
  prepared: boolean;
  pending_requests: number;
  selected_plan_id: string | null;
  selected_label: string | null;
  auto_select_after_s: number | null;
  auto_select_armed: boolean;
  epochs_recorded: number;
  last_record: RecordDoc | null;
}

export interface ReportPayload {
  label: string;
  scheduler: string;
  select: string;
  seed: number;
  scale: number;
  epochs: number;
  aggregates: ObjectiveDict;
  records: RecordDoc[];
}

export interface SelectResponse {
  selected_plan_id: string;
  label: string;
  epoch: number;
}

export interface StepResponse {
  record: RecordDoc;
  done: boolean;
}
