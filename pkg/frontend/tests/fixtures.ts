/**
 * Fixture payloads, shaped exactly like service responses. The float
 * values include a non-dyadic fold (0.1 + 0.2) so exactness tests cover
 * real rounding, not just trivially representable sums.
 */

import type { BlendDecision, Plan, PlanReport, Registry, StreamTick, WhatIfResponse } from "../src/types.js";

export const adPlan: Plan = {
  plan_id: "ad_delivery",
  selector: { content_type: "ad", required_tags: [] },
  weight: 0,
  bias: 0.0521,
  mode: "pid_delivered",
  target_share: 0.1,
  enabled: true,
};

export const csPlan: Plan = {
  plan_id: "cs_boost",
  selector: { content_type: "cold_start", required_tags: [] },
  weight: 0.25,
  bias: 0,
  mode: "static",
  target_share: null,
  enabled: true,
};

export const registry: Registry = { version: 7, plans: [adPlan, csPlan] };

// finals below are the left-to-right folds of (aligned, boosts sorted by id)
export const decision: BlendDecision = {
  request_id: "r0001",
  ranked: [
    {
      candidate_id: "a",
      raw: 1.25,
      aligned: 0.1,
      plan_boosts: { ad_delivery: 0.2 },
      final: 0.1 + 0.2,
    },
    {
      candidate_id: "b",
      raw: 0.9,
      aligned: 0.28,
      plan_boosts: {},
      final: 0.28,
    },
    {
      candidate_id: "c",
      raw: 0.8,
      aligned: 0.2,
      plan_boosts: { ad_delivery: 0.0521, cs_boost: 0.0125 },
      final: 0.2 + 0.0521 + 0.0125,
    },
  ],
  exposed_k: 2,
  registry_version: 7,
  alignment_snapshot: { mu_score: 1.3125, mu_anchor: 0.41, sample_count: 4000, updated_at: 500, half_life: 100000 },
};

export const whatIfResponse: WhatIfResponse = {
  current: decision,
  hypothetical: {
    ...decision,
    ranked: [
      { ...decision.ranked[0]! },
      { ...decision.ranked[2]!, plan_boosts: { ad_delivery: 0.3 }, final: 0.2 + 0.3 },
      { ...decision.ranked[1]! },
    ],
  },
};

export const reports: PlanReport[] = [
  {
    plan_id: "ad_delivery",
    window_start: 500,
    window_end: 750,
    cost: 3.4028,
    vv_lift: 61,
    boost_spend: 10.42,
    exposure_share: 0.09950248756218906,
    roi_vv: 17.92641354178912,
  },
  {
    plan_id: "cs_boost",
    window_start: 500,
    window_end: 750,
    cost: 0,
    vv_lift: 0,
    boost_spend: 1.0625,
    exposure_share: 0.0315,
    roi_vv: null,
  },
];

export function tick(windowId: number, extra: Partial<StreamTick> = {}): StreamTick {
  return {
    window_id: windowId,
    t_end: (windowId + 1) * 250,
    registry_version: 7,
    shares: { ad_delivery: 0.0975, cs_boost: 0.031 },
    biases: { ad_delivery: 0.0521 },
    drift: { aligned: 0.004, final: 0.0061 },
    boost_final_ratio: 0.0253,
    event_count: (windowId + 1) * 6000,
    ...extra,
  };
}
