/**
 * Rendering helpers with a fidelity rule: a numeric readout is the exact
 * JSON value as JavaScript prints it, never a recomputed or rounded copy.
 * Layout-only rounding exists solely in chart pixel math, not in readouts.
 */

export function lit(value: number | null | undefined): string {
  if (value === null || value === undefined) {
    return "—";
  }
  return String(value);
}

export function litPercentLabel(value: number | null | undefined): string {
  // Shares are displayed as their raw fraction; the axis label carries the
  // unit so the number itself stays identical to the payload.
  return lit(value);
}
