/**
 * Metrics-stream state: appends ticks keyed by window id (reconnects never
 * duplicate a point), tracks per-plan series, and flags staleness once no
 * tick has arrived for two window intervals.
 */

import type { StreamTick } from "./types.js";

export interface SeriesPoint {
  windowId: number;
  value: number;
}

export interface StreamState {
  ticks: StreamTick[];
  seenWindows: Set<number>;
  shares: Map<string, SeriesPoint[]>;
  biases: Map<string, SeriesPoint[]>;
  drift: Map<string, SeriesPoint[]>;
  boostRatio: SeriesPoint[];
  lastTickAt: number | null;
  stale: boolean;
}

export function emptyStreamState(): StreamState {
  return {
    ticks: [],
    seenWindows: new Set(),
    shares: new Map(),
    biases: new Map(),
    drift: new Map(),
    boostRatio: [],
    lastTickAt: null,
    stale: false,
  };
}

function appendSeries(map: Map<string, SeriesPoint[]>, key: string, point: SeriesPoint): void {
  const series = map.get(key) ?? [];
  series.push(point);
  map.set(key, series);
}

/** Fold one tick into the state; duplicates (by window_id) are ignored. */
export function applyTick(state: StreamState, tick: StreamTick, nowMs: number): StreamState {
  if (state.seenWindows.has(tick.window_id)) {
    state.lastTickAt = nowMs;
    state.stale = false;
    return state;
  }
  state.seenWindows.add(tick.window_id);
  state.ticks.push(tick);
  for (const [planId, share] of Object.entries(tick.shares)) {
    if (share !== null) {
      appendSeries(state.shares, planId, { windowId: tick.window_id, value: share });
    }
  }
  for (const [planId, bias] of Object.entries(tick.biases)) {
    appendSeries(state.biases, planId, { windowId: tick.window_id, value: bias });
  }
  for (const [stage, value] of Object.entries(tick.drift)) {
    if (value !== null) {
      appendSeries(state.drift, stage, { windowId: tick.window_id, value });
    }
  }
  state.boostRatio.push({ windowId: tick.window_id, value: tick.boost_final_ratio });
  state.lastTickAt = nowMs;
  state.stale = false;
  return state;
}

/** Mark the state stale when two window intervals pass without a tick. */
export function checkStale(state: StreamState, nowMs: number, windowIntervalMs: number): boolean {
  if (state.lastTickAt === null) {
    return state.stale;
  }
  state.stale = nowMs - state.lastTickAt > 2 * windowIntervalMs;
  return state.stale;
}

/** Reconnect backoff: doubles per attempt, capped at 10 s. */
export function backoffMs(attempt: number): number {
  return Math.min(500 * 2 ** attempt, 10_000);
}
