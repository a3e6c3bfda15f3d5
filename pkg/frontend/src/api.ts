/** Thin fetch client for the service; fetch is injectable for tests. */

import type { PutPlanFn, PutPlanResult } from "./editor.js";
import type { BlendDecision, Plan, PlanReport, Registry, Status, WhatIfResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      const body = await resp.text();
      throw new Error(`${init?.method ?? "GET"} ${path} -> ${resp.status}: ${body}`);
    }
    return (await resp.json()) as T;
  }

  status(): Promise<Status> {
    return this.json<Status>("/status");
  }

  registry(): Promise<Registry> {
    return this.json<Registry>("/plans");
  }

  reports(window: number): Promise<{ window: number; reports: PlanReport[] }> {
    return this.json(`/reports/plans?window=${window}`);
  }

  sampleRequest(): Promise<Record<string, unknown>> {
    return this.json("/sample/request");
  }

  whatif(overrides: Record<string, Partial<Plan>>, request?: Record<string, unknown>): Promise<WhatIfResponse> {
    return this.json<WhatIfResponse>("/whatif", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ overrides, request: request ?? null }),
    });
  }

  blend(request: Record<string, unknown>): Promise<BlendDecision> {
    return this.json<BlendDecision>("/blend", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  /** PUT /plans/{id}; 409 is a first-class outcome, not an exception. */
  putPlan: PutPlanFn = async (planId, body): Promise<PutPlanResult> => {
    const resp = await this.fetchFn(`${this.base}/plans/${encodeURIComponent(planId)}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (resp.status === 200) {
      return { status: 200, registry: (await resp.json()) as Registry };
    }
    if (resp.status === 409) {
      const payload = (await resp.json()) as { current_version: number };
      let serverPlan: Plan | null = null;
      try {
        const current = await this.fetchFn(`${this.base}/plans/${encodeURIComponent(planId)}`);
        if (current.ok) {
          serverPlan = ((await current.json()) as { plan: Plan }).plan;
        }
      } catch {
        serverPlan = null;
      }
      return { status: 409, currentVersion: payload.current_version, serverPlan };
    }
    const text = await resp.text();
    return { status: resp.status, error: text };
  };
}
