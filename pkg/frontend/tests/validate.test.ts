import { describe, expect, it } from "vitest";

import { validatePlanDraft } from "../src/validate.js";
import { adPlan, csPlan } from "./fixtures.js";

describe("client-side plan invariants", () => {
  it("accepts the fixture plans", () => {
    expect(validatePlanDraft(adPlan)).toEqual([]);
    expect(validatePlanDraft(csPlan)).toEqual([]);
  });

  it("pid plan with nonzero weight is blocked", () => {
    const errors = validatePlanDraft({ ...adPlan, weight: 0.3 });
    expect(errors.some((e) => e.includes("weight 0"))).toBe(true);
  });

  it("pid plan without a target is blocked", () => {
    const errors = validatePlanDraft({ ...adPlan, target_share: null });
    expect(errors.some((e) => e.includes("target_share"))).toBe(true);
  });

  it("target share outside the unit interval is blocked", () => {
    const errors = validatePlanDraft({ ...adPlan, target_share: 1.5 });
    expect(errors.some((e) => e.includes("[0, 1]"))).toBe(true);
  });

  it("empty plan id is blocked", () => {
    const errors = validatePlanDraft({ ...csPlan, plan_id: "" });
    expect(errors.some((e) => e.includes("plan_id"))).toBe(true);
  });
});
