/** Min-max scaling over the displayed set. A flat axis (zero span) maps to
 * 0.5 so degenerate fronts render centered instead of dividing by zero.
 */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: Iterable<number>): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  return { min, max };
}

export function minmax(v: number, e: Extent): number {
  if (!(e.max > e.min)) return 0.5;
  return (v - e.min) / (e.max - e.min);
}
