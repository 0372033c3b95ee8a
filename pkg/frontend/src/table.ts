/** Sortable plan table: one row per archive entry, values verbatim. */

import { esc, fmt } from "./format.js";
import { AXIS_TITLES } from "./scatter.js";
import { OBJECTIVES, type ObjectiveDict, type ObjectiveKey, type ParetoEntry } from "./types.js";

export type SortKey = "plan_id" | "labels" | ObjectiveKey;
export type SortDir = 1 | -1;

export interface TableRow {
  planId: string;
  labels: string[];
  values: ObjectiveDict;
}

export function buildRows(entries: ParetoEntry[]): TableRow[] {
  return entries.map((e) => ({ planId: e.plan_id, labels: e.labels, values: e.objectives }));
}

/** Stable copy-sort; ties keep the archive order regardless of direction. */
export function sortRows(rows: TableRow[], key: SortKey, dir: SortDir): TableRow[] {
  const index = new Map(rows.map((r, i) => [r, i]));
  const rank = (a: TableRow, b: TableRow): number => {
    if (key === "plan_id") return a.planId.localeCompare(b.planId);
    if (key === "labels") return a.labels.join(",").localeCompare(b.labels.join(","));
    return a.values[key] - b.values[key];
  };
  return [...rows].sort((a, b) => {
    const r = rank(a, b);
    if (r !== 0) return r * dir;
    return index.get(a)! - index.get(b)!;
  });
}

export function renderTableHTML(
  rows: TableRow[],
  opts: { selectedPlanId: string | null; sortKey: SortKey; sortDir: SortDir },
): string {
  const arrow = (key: SortKey) =>
    key === opts.sortKey ? (opts.sortDir === 1 ? " ▴" : " ▾") : "";
  const headers = [
    `<th data-sort="plan_id">plan${arrow("plan_id")}</th>`,
    `<th data-sort="labels">labels${arrow("labels")}</th>`,
    ...OBJECTIVES.map((k) => `<th data-sort="${k}">${esc(AXIS_TITLES[k])}${arrow(k)}</th>`),
  ].join("");
  const body = rows
    .map((r) => {
      const cls = r.planId === opts.selectedPlanId ? ' class="sel"' : "";
      const cells = OBJECTIVES.map(
        (k) => `<td class="num" data-raw="${esc(String(r.values[k]))}">${esc(fmt(r.values[k]))}</td>`,
      ).join("");
      return (
        `<tr${cls} data-plan="${esc(r.planId)}">` +
        `<td class="id">${esc(r.planId.slice(0, 10))}</td>` +
        `<td>${esc(r.labels.join(", "))}</td>` +
        cells +
        `</tr>`
      );
    })
    .join("");
  return `<table class="plans"><thead><tr>${headers}</tr></thead><tbody>${body}</tbody></table>`;
}
