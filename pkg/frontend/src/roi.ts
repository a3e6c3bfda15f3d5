/** ROI table rows: payload numbers pass through untouched. */

import { lit } from "./format.js";
import type { PlanReport } from "./types.js";

export interface RoiRow {
  planId: string;
  exposureShare: string;
  boostSpend: string;
  cost: string;
  vvLift: string;
  roi: string;
}

export function roiRows(reports: PlanReport[]): RoiRow[] {
  const rows = reports.map((r) => ({
    planId: r.plan_id,
    exposureShare: lit(r.exposure_share),
    boostSpend: lit(r.boost_spend),
    cost: lit(r.cost),
    vvLift: lit(r.vv_lift),
    roi: lit(r.roi_vv),
  }));
  rows.sort((a, b) => a.planId.localeCompare(b.planId));
  return rows;
}
