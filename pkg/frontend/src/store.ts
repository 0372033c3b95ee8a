/** Client state machine around the serve API.
 *
 * One state-mutating request at a time: commitAndStep and stage refuse to
 * start while another is in flight, and the page disables its controls from
 * the same flag. The timeline and totals are rebuilt from GET /report after
 * every step, so the numbers on screen are the server's own accounting.
 *
 * Errors keep the HTTP status and the server's message verbatim together
 * with a retry closure that re-runs the failed operation.
 */

import { ApiError, ConsoleApi } from "./api.js";
import type { ObjectiveDict, ParetoEntry, RecordDoc } from "./types.js";

export interface ConsoleError {
  status: number;
  message: string;
  retry: () => Promise<void>;
}

export type Phase = "connecting" | "ready" | "done" | "unreachable";
export type View = "scatter" | "parallel" | "timeline";

export class ConsoleStore {
  phase: Phase = "connecting";
  scheduler = "";
  epoch = 0;
  totalEpochs = 0;
  predictedRequests = 0;
  pendingRequests = 0;
  autoSelectAfterS: number | null = null;
  front: ParetoEntry[] = [];
  selectedPlanId: string | null = null;
  records: RecordDoc[] = [];
  totals: ObjectiveDict | null = null;
  busy = false;
  error: ConsoleError | null = null;
  normalized = false;
  view: View = "scatter";
  config: Record<string, unknown> | null = null;

  private listeners: Array<() => void> = [];

  constructor(readonly api: ConsoleApi) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  async init(): Promise<void> {
    this.phase = "connecting";
    this.error = null;
    this.emit();
    try {
      this.config = await this.api.getConfig();
      await this.pull();
    } catch (err) {
      this.phase = "unreachable";
      this.fail(err, () => this.init());
    }
  }

  /** The three reads everything on screen renders from. */
  private async pull(): Promise<void> {
    const state = await this.api.getState();
    const pareto = await this.api.getPareto();
    const report = await this.api.getReport();
    this.scheduler = state.scheduler;
    this.epoch = state.epoch;
    this.totalEpochs = state.total_epochs;
    this.autoSelectAfterS = state.auto_select_after_s;
    this.front = pareto.entries;
    this.predictedRequests = pareto.predicted_requests ?? 0;
    this.pendingRequests = pareto.pending_requests ?? 0;
    this.selectedPlanId = state.selected_plan_id;
    this.records = report.records;
    this.totals = report.records.length > 0 ? report.aggregates : null;
    this.phase = state.done ? "done" : "ready";
    this.error = null;
    this.emit();
  }

  async refresh(): Promise<void> {
    try {
      await this.pull();
    } catch (err) {
      this.fail(err, () => this.refresh());
    }
  }

  /** POST /select only; highlights the pick so the operator can commit it. */
  async stage(planId: string): Promise<boolean> {
    if (this.busy) return false;
    this.busy = true;
    this.emit();
    try {
      const res = await this.api.select(planId);
      this.selectedPlanId = res.selected_plan_id;
      this.error = null;
      return true;
    } catch (err) {
      this.fail(err, async () => {
        await this.stage(planId);
      });
      return false;
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /** POST /select (when a plan is given) then POST /step, then re-pull.
   * planId null steps without selecting, for auto-select deadlines. */
  async commitAndStep(planId: string | null): Promise<boolean> {
    if (this.busy) return false;
    this.busy = true;
    this.emit();
    let stepped = false;
    try {
      if (planId !== null) await this.api.select(planId);
      await this.api.step();
      stepped = true;
      this.error = null;
    } catch (err) {
      this.fail(err, async () => {
        await this.commitAndStep(planId);
      });
    }
    if (stepped) {
      try {
        await this.pull();
      } catch (err) {
        this.fail(err, () => this.refresh());
      }
    }
    this.busy = false;
    this.emit();
    return stepped;
  }

  setNormalized(v: boolean): void {
    this.normalized = v;
    this.emit();
  }

  setView(v: View): void {
    this.view = v;
    this.emit();
  }

  entry(planId: string | null): ParetoEntry | null {
    if (planId === null) return null;
    return this.front.find((e) => e.plan_id === planId) ?? null;
  }

  private fail(err: unknown, retry: () => void | Promise<void>): void {
    const status = err instanceof ApiError ? err.status : 0;
    const message = err instanceof Error ? err.message : String(err);
    this.error = { status, message, retry: async () => void (await retry()) };
    this.emit();
  }
}
