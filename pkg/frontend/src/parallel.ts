/** Parallel-coordinates view: one polyline per plan across the four
 * objective axes. Axes are min-max scaled over the displayed set by
 * construction, so the normalization toggle has nothing to add here; the
 * axis ends are labeled with the raw extremes instead.
 */

import { esc, fmt } from "./format.js";
import { extentOf, minmax, type Extent } from "./normalize.js";
import { AXIS_TITLES, planSummary } from "./scatter.js";
import { OBJECTIVES, type ObjectiveKey, type ParetoEntry } from "./types.js";

export const PC_W = 640;
export const PC_H = 300;
const PAD_X = 70;
const PAD_T = 34;
const PAD_B = 26;

export interface ParallelAxis {
  key: ObjectiveKey;
  title: string;
  x: number;
  extent: Extent;
}

export interface ParallelLine {
  planId: string;
  labels: string[];
  selected: boolean;
  /** normalized 0..1 value per axis, larger = worse (objectives minimize) */
  vs: number[];
  /** pixel vertices, one per axis */
  xs: number[];
  ys: number[];
  tooltip: string;
}

export interface ParallelScene {
  empty: boolean;
  axes: ParallelAxis[];
  lines: ParallelLine[];
}

export function buildParallelScene(
  entries: ParetoEntry[],
  selectedPlanId: string | null,
): ParallelScene {
  if (entries.length === 0) return { empty: true, axes: [], lines: [] };
  const innerH = PC_H - PAD_T - PAD_B;
  const step = (PC_W - 2 * PAD_X) / (OBJECTIVES.length - 1);
  const axes = OBJECTIVES.map((key, i) => ({
    key,
    title: AXIS_TITLES[key],
    x: PAD_X + i * step,
    extent: extentOf(entries.map((e) => e.objectives[key])),
  }));
  const lines = entries.map((e): ParallelLine => {
    const vs = axes.map((ax) => minmax(e.objectives[ax.key], ax.extent));
    return {
      planId: e.plan_id,
      labels: e.labels,
      selected: e.plan_id === selectedPlanId,
      vs,
      xs: axes.map((ax) => ax.x),
      ys: vs.map((v) => PAD_T + v * innerH),
      tooltip: planSummary(e),
    };
  });
  return { empty: false, axes, lines };
}

export function renderParallelHTML(scene: ParallelScene): string {
  if (scene.empty)
    return '<div class="empty">No plans on this front. The run may be complete, or the epoch is still being prepared.</div>';
  const innerH = PC_H - PAD_T - PAD_B;
  const axes = scene.axes
    .map((ax) => {
      const top = fmt(ax.extent.min);
      const bottom = fmt(ax.extent.max > ax.extent.min ? ax.extent.max : ax.extent.min);
      return (
        `<line class="axisline" x1="${ax.x}" y1="${PAD_T}" x2="${ax.x}" y2="${PAD_T + innerH}"></line>` +
        `<text class="axis" x="${ax.x}" y="${PAD_T - 18}" text-anchor="middle">${esc(ax.title)}</text>` +
        `<text class="tick" x="${ax.x}" y="${PAD_T - 5}" text-anchor="middle">${esc(top)}</text>` +
        `<text class="tick" x="${ax.x}" y="${PAD_T + innerH + 14}" text-anchor="middle">${esc(bottom)}</text>`
      );
    })
    .join("");
  const lines = scene.lines
    .map((ln) => {
      const pts = ln.xs.map((x, i) => `${x.toFixed(1)},${ln.ys[i].toFixed(1)}`).join(" ");
      const cls = ln.selected ? "line sel" : ln.labels.length > 0 ? "line tagged" : "line";
      return (
        `<g class="pt" data-plan="${esc(ln.planId)}">` +
        `<title>${esc(ln.tooltip)}</title>` +
        `<polyline class="${cls}" points="${pts}"></polyline>` +
        `</g>`
      );
    })
    .join("");
  return (
    `<svg class="pcoords" viewBox="0 0 ${PC_W} ${PC_H}" width="${PC_W}" height="${PC_H}">` +
    `<text class="hint" x="${PC_W - 8}" y="${PC_H - 8}" text-anchor="end">top = best (min)</text>` +
    axes +
    lines +
    `</svg>`
  );
}
