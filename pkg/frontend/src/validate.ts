/**
 * Client-side mirror of the server's plan invariants, for fast feedback in
 * the editor. The server remains authoritative; anything accepted here can
 * still be rejected with a 400.
 */

import type { Plan } from "./types.js";

export function validatePlanDraft(plan: Plan): string[] {
  const errors: string[] = [];
  if (!plan.plan_id) {
    errors.push("plan_id must be non-empty");
  }
  if (!["static", "pid_delivered", "hybrid"].includes(plan.mode)) {
    errors.push(`unknown mode ${plan.mode}`);
  }
  if (plan.mode === "pid_delivered") {
    if (plan.target_share === null || plan.target_share === undefined) {
      errors.push("pid_delivered plan requires target_share");
    } else if (plan.target_share < 0 || plan.target_share > 1) {
      errors.push("target_share must lie in [0, 1]");
    }
    if (plan.weight !== 0) {
      errors.push("pid_delivered plan must have weight 0");
    }
  }
  if (!Number.isFinite(plan.weight)) {
    errors.push("weight must be finite");
  }
  if (!Number.isFinite(plan.bias)) {
    errors.push("bias must be finite");
  }
  return errors;
}
