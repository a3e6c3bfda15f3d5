import { describe, expect, it } from "vitest";

import { applyTick, backoffMs, checkStale, emptyStreamState } from "../src/stream.js";
import { tick } from "./fixtures.js";

describe("metrics stream state", () => {
  it("appends one point per window per series", () => {
    const state = emptyStreamState();
    applyTick(state, tick(0), 1000);
    applyTick(state, tick(1), 2000);
    expect(state.shares.get("ad_delivery")).toHaveLength(2);
    expect(state.biases.get("ad_delivery")).toHaveLength(2);
    expect(state.boostRatio.map((p) => p.windowId)).toEqual([0, 1]);
  });

  it("ignores duplicate window ids after a reconnect", () => {
    const state = emptyStreamState();
    applyTick(state, tick(0), 1000);
    applyTick(state, tick(1), 2000);
    applyTick(state, tick(1), 3000); // replayed on reconnect
    applyTick(state, tick(0), 3100);
    expect(state.ticks).toHaveLength(2);
    expect(state.shares.get("ad_delivery")).toHaveLength(2);
  });

  it("null shares are skipped, not plotted as zeros", () => {
    const state = emptyStreamState();
    applyTick(state, tick(0, { shares: { ad_delivery: null, cs_boost: 0.03 } }), 1000);
    expect(state.shares.has("ad_delivery")).toBe(false);
    expect(state.shares.get("cs_boost")).toHaveLength(1);
  });

  it("goes stale after two window intervals without a tick", () => {
    const state = emptyStreamState();
    applyTick(state, tick(0), 1000);
    expect(checkStale(state, 1000 + 1999, 1000)).toBe(false);
    expect(checkStale(state, 1000 + 2001, 1000)).toBe(true);
    applyTick(state, tick(1), 4000);
    expect(state.stale).toBe(false);
  });

  it("reconnect backoff doubles and caps", () => {
    expect(backoffMs(0)).toBe(500);
    expect(backoffMs(1)).toBe(1000);
    expect(backoffMs(10)).toBe(10000);
  });
});
