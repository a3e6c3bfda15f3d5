/**
 * Minimal canvas line charts. The data-to-pixel projection is a pure
 * function so tests can cover it; drawing is a thin layer on top.
 */

import type { SeriesPoint } from "./stream.js";

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
}

export interface ProjectedPoint {
  x: number;
  y: number;
}

export function projectSeries(
  points: SeriesPoint[],
  geometry: ChartGeometry,
  yMin: number,
  yMax: number,
): ProjectedPoint[] {
  if (points.length === 0) {
    return [];
  }
  const { width, height, padding } = geometry;
  const xs = points.map((p) => p.windowId);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const spanX = Math.max(x1 - x0, 1);
  const spanY = Math.max(yMax - yMin, 1e-12);
  return points.map((p) => ({
    x: padding + ((p.windowId - x0) / spanX) * (width - 2 * padding),
    y: height - padding - ((p.value - yMin) / spanY) * (height - 2 * padding),
  }));
}

export function autoRange(seriesList: SeriesPoint[][], floor = 0): [number, number] {
  let hi = -Infinity;
  let lo = Infinity;
  for (const series of seriesList) {
    for (const p of series) {
      hi = Math.max(hi, p.value);
      lo = Math.min(lo, p.value);
    }
  }
  if (!Number.isFinite(hi)) {
    return [floor, 1];
  }
  lo = Math.min(lo, floor);
  return [lo, hi <= lo ? lo + 1 : hi * 1.1];
}

const PALETTE = ["#4e9af1", "#f1734e", "#53c380", "#c353b3", "#c3b353", "#7a7a7a"];

export function drawChart(
  canvas: HTMLCanvasElement,
  series: Map<string, SeriesPoint[]>,
  options: { yMin?: number; yMax?: number; referenceY?: number } = {},
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const geometry: ChartGeometry = { width: canvas.width, height: canvas.height, padding: 8 };
  const all = [...series.values()];
  const [autoLo, autoHi] = autoRange(all);
  const yMin = options.yMin ?? autoLo;
  const yMax = options.yMax ?? autoHi;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ddd";
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
  if (options.referenceY !== undefined) {
    const [ref] = projectSeries([{ windowId: 0, value: options.referenceY }], geometry, yMin, yMax);
    if (ref) {
      ctx.strokeStyle = "#bbb";
      ctx.setLineDash([4, 4]);
      ctx.beginPath();
      ctx.moveTo(geometry.padding, ref.y);
      ctx.lineTo(canvas.width - geometry.padding, ref.y);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
  let colorIndex = 0;
  for (const [, points] of [...series.entries()].sort((a, b) => a[0].localeCompare(b[0]))) {
    const projected = projectSeries(points, geometry, yMin, yMax);
    ctx.strokeStyle = PALETTE[colorIndex % PALETTE.length]!;
    colorIndex++;
    ctx.beginPath();
    projected.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.stroke();
  }
}
