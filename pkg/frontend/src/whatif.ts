/**
 * What-if panel model: pair the current and hypothetical rankings, build
 * bar models for both, and flag items whose exposure changed.
 */

import { BarModel, barModel } from "./bars.js";
import type { BlendDecision, WhatIfResponse } from "./types.js";

export interface WhatIfRow {
  candidateId: string;
  current: BarModel | null;
  currentRank: number | null;
  currentExposed: boolean;
  hypothetical: BarModel | null;
  hypotheticalRank: number | null;
  hypotheticalExposed: boolean;
  /** "gained" | "lost" | null: exposure change under the override */
  change: "gained" | "lost" | null;
}

function exposureMap(decision: BlendDecision): Map<string, { rank: number; exposed: boolean }> {
  const map = new Map<string, { rank: number; exposed: boolean }>();
  decision.ranked.forEach((item, rank) => {
    map.set(item.candidate_id, { rank, exposed: rank < decision.exposed_k });
  });
  return map;
}

export function whatIfRows(response: WhatIfResponse): WhatIfRow[] {
  const current = exposureMap(response.current);
  const hypothetical = exposureMap(response.hypothetical);
  const currentItems = new Map(response.current.ranked.map((i) => [i.candidate_id, i]));
  const hypoItems = new Map(response.hypothetical.ranked.map((i) => [i.candidate_id, i]));
  const ids = [...new Set([...current.keys(), ...hypothetical.keys()])];
  ids.sort((a, b) => {
    const ra = current.get(a)?.rank ?? Number.MAX_SAFE_INTEGER;
    const rb = current.get(b)?.rank ?? Number.MAX_SAFE_INTEGER;
    return ra - rb || a.localeCompare(b);
  });
  return ids.map((id) => {
    const cur = current.get(id);
    const hyp = hypothetical.get(id);
    const curExposed = cur?.exposed ?? false;
    const hypExposed = hyp?.exposed ?? false;
    let change: WhatIfRow["change"] = null;
    if (!curExposed && hypExposed) change = "gained";
    if (curExposed && !hypExposed) change = "lost";
    return {
      candidateId: id,
      current: currentItems.has(id) ? barModel(currentItems.get(id)!) : null,
      currentRank: cur?.rank ?? null,
      currentExposed: curExposed,
      hypothetical: hypoItems.has(id) ? barModel(hypoItems.get(id)!) : null,
      hypotheticalRank: hyp?.rank ?? null,
      hypotheticalExposed: hypExposed,
      change,
    };
  });
}
