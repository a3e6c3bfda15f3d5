/**
 * Plan editor state machine. Edits are optimistic: the draft carries the
 * registry version it was loaded from, and a 409 from the server moves the
 * editor into a conflict state exposing the newer server version for
 * re-editing. Nothing is ever overwritten silently.
 */

import type { Plan, Registry } from "./types.js";
import { validatePlanDraft } from "./validate.js";

export type EditorState =
  | { kind: "idle" }
  | { kind: "editing"; draft: Plan; expectedVersion: number; errors: string[] }
  | { kind: "submitting"; draft: Plan; expectedVersion: number }
  | { kind: "applied"; registry: Registry }
  | { kind: "conflict"; draft: Plan; serverVersion: number; serverPlan: Plan | null }
  | { kind: "rejected"; draft: Plan; expectedVersion: number; errors: string[] };

export function beginEdit(plan: Plan, registryVersion: number): EditorState {
  return { kind: "editing", draft: { ...plan }, expectedVersion: registryVersion, errors: [] };
}

export function withField(state: EditorState, field: keyof Plan, value: unknown): EditorState {
  if (state.kind !== "editing" && state.kind !== "rejected") {
    return state;
  }
  const draft = { ...state.draft, [field]: value } as Plan;
  return { kind: "editing", draft, expectedVersion: state.expectedVersion, errors: validatePlanDraft(draft) };
}

export interface PutPlanResult {
  status: number;
  registry?: Registry;
  currentVersion?: number;
  serverPlan?: Plan | null;
  error?: string;
}

export type PutPlanFn = (planId: string, body: { expected_version: number; plan: Plan }) => Promise<PutPlanResult>;

/** Submit the draft; blocked client-side when the invariant mirror fails. */
export async function submitEdit(state: EditorState, putPlan: PutPlanFn): Promise<EditorState> {
  if (state.kind !== "editing") {
    return state;
  }
  const errors = validatePlanDraft(state.draft);
  if (errors.length > 0) {
    return { kind: "rejected", draft: state.draft, expectedVersion: state.expectedVersion, errors };
  }
  const result = await putPlan(state.draft.plan_id, {
    expected_version: state.expectedVersion,
    plan: state.draft,
  });
  if (result.status === 200 && result.registry) {
    return { kind: "applied", registry: result.registry };
  }
  if (result.status === 409) {
    return {
      kind: "conflict",
      draft: state.draft,
      serverVersion: result.currentVersion ?? -1,
      serverPlan: result.serverPlan ?? null,
    };
  }
  return {
    kind: "rejected",
    draft: state.draft,
    expectedVersion: state.expectedVersion,
    errors: [result.error ?? `server rejected the edit (${result.status})`],
  };
}

/** From a conflict, restart the edit against the newer server version. */
export function reeditFromConflict(state: EditorState): EditorState {
  if (state.kind !== "conflict") {
    return state;
  }
  const base = state.serverPlan ?? state.draft;
  return {
    kind: "editing",
    draft: { ...base },
    expectedVersion: state.serverVersion,
    errors: validatePlanDraft(base),
  };
}
