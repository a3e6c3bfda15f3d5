import { describe, expect, it } from "vitest";

import { whatIfRows } from "../src/whatif.js";
import { decision, whatIfResponse } from "./fixtures.js";

describe("what-if rows", () => {
  it("zero override yields identical columns and no change flags", () => {
    const rows = whatIfRows({ current: decision, hypothetical: decision });
    expect(rows.every((r) => r.change === null)).toBe(true);
    for (const row of rows) {
      expect(row.current?.final).toBe(row.hypothetical?.final);
      expect(row.currentRank).toBe(row.hypotheticalRank);
    }
  });

  it("flags items whose exposure changes under the override", () => {
    const rows = whatIfRows(whatIfResponse);
    const byId = new Map(rows.map((r) => [r.candidateId, r]));
    // fixture: ranking changes b<->c; with exposed_k=2, c gains and b loses
    expect(byId.get("c")?.change).toBe("gained");
    expect(byId.get("b")?.change).toBe("lost");
    expect(byId.get("a")?.change).toBe(null);
  });

  it("bar models on both sides stay exact", () => {
    for (const row of whatIfRows(whatIfResponse)) {
      for (const model of [row.current, row.hypothetical]) {
        if (model) {
          expect(model.exact).toBe(true);
        }
      }
    }
  });
});
