/** Committed-epoch timeline: planned vs realized series per objective, plus
 * the run totals. All values verbatim from GET /report; the totals row in
 * particular is the server's own aggregate, never a client-side sum.
 */

import { esc, fmt } from "./format.js";
import { extentOf, minmax } from "./normalize.js";
import { AXIS_TITLES } from "./scatter.js";
import { OBJECTIVES, type ObjectiveDict, type ObjectiveKey, type RecordDoc } from "./types.js";

export const TL_W = 310;
export const TL_H = 170;
const PAD_L = 56;
const PAD_R = 12;
const PAD_T = 24;
const PAD_B = 26;

export interface TimelinePanel {
  key: ObjectiveKey;
  title: string;
  planned: number[];
  realized: number[];
}

export interface TimelineScene {
  empty: boolean;
  epochs: number[];
  panels: TimelinePanel[];
  totals: ObjectiveDict | null;
}

export function buildTimelineScene(
  records: RecordDoc[],
  aggregates: ObjectiveDict | null,
): TimelineScene {
  if (records.length === 0) return { empty: true, epochs: [], panels: [], totals: null };
  return {
    empty: false,
    epochs: records.map((r) => r.epoch),
    panels: OBJECTIVES.map((key) => ({
      key,
      title: AXIS_TITLES[key],
      planned: records.map((r) => r.planned[key]),
      realized: records.map((r) => r.realized[key]),
    })),
    totals: aggregates,
  };
}

function seriesPoints(values: number[], lo: number, span: number, innerW: number, innerH: number): string {
  const n = values.length;
  return values
    .map((v, i) => {
      const x = PAD_L + (n === 1 ? 0.5 : i / (n - 1)) * innerW;
      const u = span > 0 ? (v - lo) / span : 0.5;
      const y = PAD_T + (1 - u) * innerH;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

function panelMarkup(panel: TimelinePanel, epochs: number[]): string {
  const innerW = TL_W - PAD_L - PAD_R;
  const innerH = TL_H - PAD_T - PAD_B;
  const ext = extentOf([...panel.planned, ...panel.realized]);
  const span = ext.max - ext.min;
  const yTicks = (span > 0 ? [ext.min, ext.max] : [ext.min])
    .map((v) => {
      const y = PAD_T + (1 - minmax(v, ext)) * innerH + 3;
      return `<text class="tick" x="${PAD_L - 6}" y="${y.toFixed(1)}" text-anchor="end">${esc(fmt(v))}</text>`;
    })
    .join("");
  const first = epochs[0];
  const last = epochs[epochs.length - 1];
  return (
    `<svg class="tl" viewBox="0 0 ${TL_W} ${TL_H}" width="${TL_W}" height="${TL_H}">` +
    `<text class="axis" x="${PAD_L}" y="14">${esc(panel.title)}</text>` +
    `<rect class="frame" x="${PAD_L}" y="${PAD_T}" width="${innerW}" height="${innerH}"></rect>` +
    yTicks +
    `<text class="tick" x="${PAD_L}" y="${TL_H - 8}" text-anchor="middle">e${first}</text>` +
    `<text class="tick" x="${PAD_L + innerW}" y="${TL_H - 8}" text-anchor="middle">e${last}</text>` +
    `<polyline class="series planned" points="${seriesPoints(panel.planned, ext.min, span, innerW, innerH)}"></polyline>` +
    `<polyline class="series realized" points="${seriesPoints(panel.realized, ext.min, span, innerW, innerH)}"></polyline>` +
    `</svg>`
  );
}

export function renderTimelineHTML(scene: TimelineScene): string {
  if (scene.empty) return '<div class="empty">No epochs committed yet.</div>';
  const legend =
    '<div class="legend"><span class="swatch planned"></span>planned' +
    '<span class="swatch realized"></span>realized</div>';
  return `<div class="timeline">${legend}${scene.panels
    .map((p) => panelMarkup(p, scene.epochs))
    .join("")}</div>`;
}

/** data-raw carries the untouched aggregate so the displayed totals stay
 * traceable to the /report payload. */
export function renderTotalsHTML(totals: ObjectiveDict | null): string {
  if (totals === null) return "";
  const cells = OBJECTIVES.map(
    (k) =>
      `<div class="total"><span class="k">${esc(AXIS_TITLES[k])}</span>` +
      `<span class="v" data-key="${k}" data-raw="${esc(String(totals[k]))}">${esc(fmt(totals[k]))}</span></div>`,
  ).join("");
  return `<div class="totals">${cells}</div>`;
}
