import { describe, expect, it } from "vitest";

import { lit } from "../src/format.js";
import { roiRows } from "../src/roi.js";
import { barModel } from "../src/bars.js";
import { decision, reports } from "./fixtures.js";

describe("read-only fidelity", () => {
  it("lit renders the exact payload value, never a rounded copy", () => {
    expect(lit(0.09950248756218906)).toBe("0.09950248756218906");
    expect(lit(0.30000000000000004)).toBe("0.30000000000000004");
    expect(lit(61)).toBe("61");
    expect(lit(null)).toBe("—");
  });

  it("roi rows pass every payload number through unchanged", () => {
    const rows = roiRows(reports);
    expect(rows).toHaveLength(2);
    for (const report of reports) {
      const row = rows.find((r) => r.planId === report.plan_id)!;
      expect(row.exposureShare).toBe(String(report.exposure_share));
      expect(row.boostSpend).toBe(String(report.boost_spend));
      expect(row.cost).toBe(String(report.cost));
      expect(row.vvLift).toBe(String(report.vv_lift));
      expect(row.roi).toBe(report.roi_vv === null ? "—" : String(report.roi_vv));
    }
  });

  it("roi rows render a snapshot of the fixture payload", () => {
    expect(roiRows(reports)).toMatchSnapshot();
  });

  it("bar segments carry the exact payload boosts", () => {
    const model = barModel(decision.ranked[2]!);
    expect(model.segments.map((s) => [s.label, s.value])).toEqual([
      ["aligned", 0.2],
      ["ad_delivery", 0.0521],
      ["cs_boost", 0.0125],
    ]);
  });
});
