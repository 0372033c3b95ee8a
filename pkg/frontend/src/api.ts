/** Thin fetch client. A non-2xx response becomes an ApiError carrying the
 * server's error text verbatim, so the UI surfaces exactly what the API said.
 */

import type {
  ParetoPayload,
  ReportPayload,
  SelectResponse,
  StatePayload,
  StepResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ConsoleApi {
  constructor(public baseUrl: string) {}

  private async call<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, `cannot reach ${this.baseUrl}: ${String(err)}`);
    }
    const text = await res.text();
    let doc: unknown = null;
    try {
      doc = text ? JSON.parse(text) : null;
    } catch {
      doc = null;
    }
    if (!res.ok) {
      const served = (doc as { error?: unknown } | null)?.error;
      const message = typeof served === "string" ? served : text || res.statusText;
      throw new ApiError(res.status, message);
    }
    return doc as T;
  }

  getState(): Promise<StatePayload> {
    return this.call("GET", "/state");
  }

  getPareto(): Promise<ParetoPayload> {
    return this.call("GET", "/pareto");
  }

  getReport(): Promise<ReportPayload> {
    return this.call("GET", "/report");
  }

  getConfig(): Promise<Record<string, unknown>> {
    return this.call("GET", "/config");
  }

  select(planId: string): Promise<SelectResponse> {
    return this.call("POST", "/select", { plan_id: planId });
  }

  step(): Promise<StepResponse> {
    return this.call("POST", "/step");
  }
}
