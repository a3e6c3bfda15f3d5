/** Wire types mirroring the service JSON payloads (snake_case preserved). */

export interface Selector {
  content_type: string | null;
  required_tags: string[];
}

export interface Plan {
  plan_id: string;
  selector: Selector;
  weight: number;
  bias: number;
  mode: "static" | "pid_delivered" | "hybrid";
  target_share: number | null;
  enabled: boolean;
}

export interface Registry {
  version: number;
  plans: Plan[];
}

export interface ScoreDecomposition {
  candidate_id: string;
  raw: number;
  aligned: number;
  plan_boosts: Record<string, number>;
  final: number;
}

export interface BlendDecision {
  request_id: string;
  ranked: ScoreDecomposition[];
  exposed_k: number;
  registry_version: number;
  alignment_snapshot: Record<string, number>;
}

export interface WhatIfResponse {
  current: BlendDecision;
  hypothetical: BlendDecision;
}

export interface PlanReport {
  plan_id: string;
  window_start: number;
  window_end: number;
  cost: number;
  vv_lift: number;
  boost_spend: number;
  exposure_share: number | null;
  roi_vv: number | null;
}

export interface StreamTick {
  window_id: number;
  t_end: number;
  registry_version: number;
  shares: Record<string, number | null>;
  biases: Record<string, number>;
  drift: Record<string, number | null>;
  boost_final_ratio: number;
  event_count: number;
}

export interface Status {
  mode: string;
  sim_t: number;
  closed_window: number;
  registry_version: number;
  event_count: number;
  control_tick: number;
}
