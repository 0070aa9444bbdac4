/**
 * Shape checks that run on rendered series data (not pixels).
 */

/**
 * Count step-and-reset cycles in a trace: excursions that rise past the
 * high water mark and later fall back below the low one.  Thresholds
 * default to the 75%/25% points of the observed range, which is robust
 * to the absolute step size.
 */
export function countStepResetCycles(
  points: Array<[number, number]>,
  highFraction = 0.75,
  lowFraction = 0.25
): number {
  if (points.length < 3) return 0;
  const values = points.map(([, y]) => y);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  if (hi === lo) return 0;
  const high = lo + highFraction * (hi - lo);
  const low = lo + lowFraction * (hi - lo);

  let cycles = 0;
  let elevated = false;
  for (const value of values) {
    if (!elevated && value >= high) {
      elevated = true;
    } else if (elevated && value <= low) {
      elevated = false;
      cycles++;
    }
  }
  return cycles;
}

/** Mean of the last `fraction` of a trace (settling value). */
export function settledValue(points: Array<[number, number]>, fraction = 0.25): number {
  const tail = points.slice(Math.floor(points.length * (1 - fraction)));
  if (tail.length === 0) return NaN;
  return tail.reduce((acc, [, y]) => acc + y, 0) / tail.length;
}
