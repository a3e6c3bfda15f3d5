import { describe, expect, it } from "vitest";

import { barModel, segmentWidths } from "../src/bars.js";
import { decision } from "./fixtures.js";

describe("decomposition bars", () => {
  it("segment sums equal the displayed final bit-exactly", () => {
    for (const item of decision.ranked) {
      const model = barModel(item);
      expect(model.segmentSum).toBe(item.final);
      expect(model.exact).toBe(true);
    }
  });

  it("non-dyadic fold stays exact because display order matches server order", () => {
    const model = barModel(decision.ranked[0]!);
    // 0.1 + 0.2 !== 0.3 in doubles; the payload final carries the fold result
    expect(model.segmentSum).toBe(0.30000000000000004);
    expect(model.final).not.toBe(0.3);
  });

  it("segments are ordered aligned first, then lexicographic plan ids", () => {
    const model = barModel({
      candidate_id: "x",
      raw: 1,
      aligned: 0.5,
      plan_boosts: { zeta: 0.01, alpha: 0.02 },
      final: 0.5 + 0.02 + 0.01,
    });
    expect(model.segments.map((s) => s.label)).toEqual(["aligned", "alpha", "zeta"]);
    expect(model.exact).toBe(true);
  });

  it("widths scale by the final score and never go negative", () => {
    const model = barModel(decision.ranked[2]!);
    const widths = segmentWidths(model, 200, 0.5);
    expect(widths).toHaveLength(model.segments.length);
    for (const w of widths) {
      expect(w).toBeGreaterThanOrEqual(0);
    }
    expect(widths[0]).toBeCloseTo((0.2 / 0.5) * 200, 10);
  });
});
