/**
 * Stacked decomposition bars: one segment for the aligned value plus one
 * per plan boost, in lexicographic plan order. Summing the segment values
 * in that order reproduces the displayed final bit-exactly, because the
 * server computed the final with the same left-to-right fold.
 */

import type { ScoreDecomposition } from "./types.js";

export interface BarSegment {
  label: string;
  value: number;
}

export interface BarModel {
  candidateId: string;
  segments: BarSegment[];
  final: number;
  /** segment sum, folded in display order; equals final for valid payloads */
  segmentSum: number;
  exact: boolean;
}

export function barModel(item: ScoreDecomposition): BarModel {
  const segments: BarSegment[] = [{ label: "aligned", value: item.aligned }];
  for (const planId of Object.keys(item.plan_boosts).sort()) {
    segments.push({ label: planId, value: item.plan_boosts[planId]! });
  }
  let sum = segments[0]!.value;
  for (let i = 1; i < segments.length; i++) {
    sum += segments[i]!.value;
  }
  return {
    candidateId: item.candidate_id,
    segments,
    final: item.final,
    segmentSum: sum,
    exact: sum === item.final,
  };
}

/** Pixel widths for rendering; purely presentational. */
export function segmentWidths(model: BarModel, totalPx: number, maxFinal: number): number[] {
  if (maxFinal <= 0) {
    return model.segments.map(() => 0);
  }
  return model.segments.map((s) => Math.max(0, (s.value / maxFinal) * totalPx));
}
