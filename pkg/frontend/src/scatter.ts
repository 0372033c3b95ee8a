/** Scatter-matrix scene for the four-objective front: one panel per pair.
 *
 * Scenes are plain data derived from a /pareto payload, so the rendering
 * contract is testable without a browser: every panel carries exactly the
 * payload's points at their payload values, label badges ride the entries
 * the server labeled, and selection marks exactly one point per panel.
 *
 * Point positions are a min-max fit of the displayed set either way (that is
 * what fitting an axis to data means); the normalization toggle switches the
 * tick labels between raw units and the 0..1 scale.
 */

import { esc, fmt } from "./format.js";
import { extentOf, minmax, type Extent } from "./normalize.js";
import type { ObjectiveDict, ObjectiveKey, ParetoEntry } from "./types.js";

export const PAIRS: ReadonlyArray<readonly [ObjectiveKey, ObjectiveKey]> = [
  ["ttft_s", "carbon_kg"],
  ["ttft_s", "water_l"],
  ["ttft_s", "cost_usd"],
  ["carbon_kg", "water_l"],
  ["carbon_kg", "cost_usd"],
  ["water_l", "cost_usd"],
];

export const AXIS_TITLES: Record<ObjectiveKey, string> = {
  ttft_s: "TTFT (s)",
  carbon_kg: "Carbon (kg)",
  water_l: "Water (L)",
  cost_usd: "Cost (USD)",
};

export const LABEL_BADGES: Record<string, string> = {
  "SLIT-TTFT": "T",
  "SLIT-Carbon": "C",
  "SLIT-Water": "W",
  "SLIT-Cost": "$",
  "SLIT-Balance": "B",
};

export const PANEL_W = 252;
export const PANEL_H = 212;
const PAD_L = 56;
const PAD_R = 14;
const PAD_T = 16;
const PAD_B = 36;

export interface ScatterOptions {
  normalized: boolean;
  selectedPlanId: string | null;
}

export interface ScenePoint {
  planId: string;
  labels: string[];
  selected: boolean;
  /** pixel position inside the panel */
  px: number;
  py: number;
  /** axis values after the optional normalization */
  vx: number;
  vy: number;
  tooltip: string;
}

export interface Tick {
  at: number;
  text: string;
}

export interface ScatterPanel {
  xKey: ObjectiveKey;
  yKey: ObjectiveKey;
  points: ScenePoint[];
  xTicks: Tick[];
  yTicks: Tick[];
}

export interface ScatterScene {
  empty: boolean;
  panels: ScatterPanel[];
}

/** Hover text: the plan's per-bucket split over datacenters, verbatim from
 * the payload's plan document. */
export function planSummary(entry: ParetoEntry): string {
  const locs = entry.plan.locations;
  const head =
    entry.labels.length > 0 ? `${entry.plan_id}  [${entry.labels.join(", ")}]` : entry.plan_id;
  const lines = Object.entries(entry.plan.assignment).map(([bucket, weights]) => {
    const split = weights.map((w, i) => `${locs[i]} ${w.toFixed(2)}`).join(", ");
    return `${bucket}: ${split}`;
  });
  return [head, ...lines].join("\n");
}

function ticksFor(e: Extent, normalized: boolean): Tick[] {
  if (!(e.max > e.min)) return [{ at: 0.5, text: normalized ? "0.50" : fmt(e.min) }];
  return [0, 0.5, 1].map((t) => ({
    at: t,
    text: normalized ? t.toFixed(2) : fmt(e.min + t * (e.max - e.min)),
  }));
}

export function buildScatterScene(entries: ParetoEntry[], opts: ScatterOptions): ScatterScene {
  if (entries.length === 0) return { empty: true, panels: [] };
  const extents = {} as Record<ObjectiveKey, Extent>;
  for (const pair of PAIRS) {
    for (const key of pair) {
      extents[key] ??= extentOf(entries.map((e) => e.objectives[key]));
    }
  }
  const innerW = PANEL_W - PAD_L - PAD_R;
  const innerH = PANEL_H - PAD_T - PAD_B;
  const panels = PAIRS.map(([xKey, yKey]) => {
    const points = entries.map((e): ScenePoint => {
      const ux = minmax(e.objectives[xKey], extents[xKey]);
      const uy = minmax(e.objectives[yKey], extents[yKey]);
      return {
        planId: e.plan_id,
        labels: e.labels,
        selected: e.plan_id === opts.selectedPlanId,
        px: PAD_L + ux * innerW,
        py: PAD_T + (1 - uy) * innerH,
        vx: opts.normalized ? ux : e.objectives[xKey],
        vy: opts.normalized ? uy : e.objectives[yKey],
        tooltip: planSummary(e),
      };
    });
    return {
      xKey,
      yKey,
      points,
      xTicks: ticksFor(extents[xKey], opts.normalized),
      yTicks: ticksFor(extents[yKey], opts.normalized),
    };
  });
  return { empty: false, panels };
}

export const EMPTY_FRONT_HTML =
  '<div class="empty">No plans on this front. The run may be complete, or the epoch is still being prepared.</div>';

function pointMarkup(p: ScenePoint): string {
  const cls = p.selected ? "dot sel" : "dot";
  const badges = p.labels
    .map((lb, i) => {
      const badge = LABEL_BADGES[lb] ?? "?";
      return `<text class="badge" x="${(p.px + 8 + 9 * i).toFixed(1)}" y="${(p.py - 6).toFixed(1)}">${esc(badge)}</text>`;
    })
    .join("");
  const ring =
    p.labels.length > 0
      ? `<circle class="ring" cx="${p.px.toFixed(1)}" cy="${p.py.toFixed(1)}" r="8"></circle>`
      : "";
  return (
    `<g class="pt" data-plan="${esc(p.planId)}">` +
    `<title>${esc(p.tooltip)}</title>` +
    ring +
    `<circle class="${cls}" cx="${p.px.toFixed(1)}" cy="${p.py.toFixed(1)}" r="5"></circle>` +
    badges +
    `</g>`
  );
}

function panelMarkup(panel: ScatterPanel): string {
  const innerW = PANEL_W - PAD_L - PAD_R;
  const innerH = PANEL_H - PAD_T - PAD_B;
  const x0 = PAD_L;
  const y0 = PAD_T + innerH;
  const xTicks = panel.xTicks
    .map((t) => {
      const x = (x0 + t.at * innerW).toFixed(1);
      return `<text class="tick" x="${x}" y="${y0 + 16}" text-anchor="middle">${esc(t.text)}</text>`;
    })
    .join("");
  const yTicks = panel.yTicks
    .map((t) => {
      const y = (PAD_T + (1 - t.at) * innerH + 3).toFixed(1);
      return `<text class="tick" x="${x0 - 6}" y="${y}" text-anchor="end">${esc(t.text)}</text>`;
    })
    .join("");
  return (
    `<svg class="panel" viewBox="0 0 ${PANEL_W} ${PANEL_H}" width="${PANEL_W}" height="${PANEL_H}">` +
    `<rect class="frame" x="${x0}" y="${PAD_T}" width="${innerW}" height="${innerH}"></rect>` +
    `<text class="axis x" x="${x0 + innerW / 2}" y="${PANEL_H - 6}" text-anchor="middle">${esc(AXIS_TITLES[panel.xKey])}</text>` +
    `<text class="axis y" x="12" y="${PAD_T + innerH / 2}" text-anchor="middle" transform="rotate(-90 12 ${PAD_T + innerH / 2})">${esc(AXIS_TITLES[panel.yKey])}</text>` +
    xTicks +
    yTicks +
    panel.points.map(pointMarkup).join("") +
    `</svg>`
  );
}

export function renderScatterHTML(scene: ScatterScene): string {
  if (scene.empty) return EMPTY_FRONT_HTML;
  return `<div class="matrix">${scene.panels.map(panelMarkup).join("")}</div>`;
}

/** Convenience for the header chips: label -> objectives of the entry that
 * carries it, straight from the payload. */
export function labeledObjectives(entries: ParetoEntry[]): Map<string, ObjectiveDict> {
  const out = new Map<string, ObjectiveDict>();
  for (const e of entries) {
    for (const lb of e.labels) out.set(lb, e.objectives);
  }
  return out;
}
