/** Browser entry point: wires the store to the page. All rendering goes
 * through the pure scene builders; this file only handles DOM events and
 * innerHTML swaps.
 */

import { ConsoleApi } from "./api.js";
import { buildParallelScene, renderParallelHTML } from "./parallel.js";
import { buildScatterScene, planSummary, renderScatterHTML } from "./scatter.js";
import { ConsoleStore, type View } from "./store.js";
import { buildRows, renderTableHTML, sortRows, type SortDir, type SortKey } from "./table.js";
import { buildTimelineScene, renderTimelineHTML, renderTotalsHTML } from "./timeline.js";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element: ${sel}`);
  return el;
};

let store: ConsoleStore;
let sortKey: SortKey = "ttft_s";
let sortDir: SortDir = 1;

function connect(baseUrl: string): void {
  store = new ConsoleStore(new ConsoleApi(baseUrl.replace(/\/+$/, "")));
  store.onChange(render);
  void store.init();
}

function statusText(): string {
  if (store.busy) return "stepping";
  switch (store.phase) {
    case "connecting":
      return "connecting";
    case "unreachable":
      return "unreachable";
    case "done":
      return "run complete";
    default:
      return "ready";
  }
}

function render(): void {
  $("#status").textContent = statusText();
  $("#status").className = `chip ${store.busy ? "busy" : store.phase}`;
  $("#epoch").textContent = `epoch ${store.epoch} / ${store.totalEpochs}`;
  $("#counts").textContent =
    store.phase === "ready"
      ? `${store.front.length} plans on the front, ${store.predictedRequests} predicted requests` +
        (store.pendingRequests ? `, ${store.pendingRequests} deferred` : "")
      : "";

  const banner = $("#error");
  if (store.error) {
    banner.style.display = "";
    const status = store.error.status;
    $("#error-msg").textContent = `${status > 0 ? `HTTP ${status}` : "network"}: ${store.error.message}`;
  } else {
    banner.style.display = "none";
  }

  for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-view]")) {
    btn.classList.toggle("active", btn.dataset.view === store.view);
  }

  const viz = $("#viz");
  if (store.view === "scatter") {
    const scene = buildScatterScene(store.front, {
      normalized: store.normalized,
      selectedPlanId: store.selectedPlanId,
    });
    viz.innerHTML = renderScatterHTML(scene);
  } else if (store.view === "parallel") {
    viz.innerHTML = renderParallelHTML(buildParallelScene(store.front, store.selectedPlanId));
  } else {
    const scene = buildTimelineScene(store.records, store.totals);
    viz.innerHTML = renderTimelineHTML(scene) + renderTotalsHTML(scene.totals);
  }

  $("#table").innerHTML = renderTableHTML(sortRows(buildRows(store.front), sortKey, sortDir), {
    selectedPlanId: store.selectedPlanId,
    sortKey,
    sortDir,
  });

  const picked = store.entry(store.selectedPlanId);
  $("#detail").textContent = picked
    ? planSummary(picked)
    : "Click a point or a table row to stage a plan.";

  const commit = $<HTMLButtonElement>("#commit");
  const canAuto = store.autoSelectAfterS !== null;
  commit.disabled =
    store.busy || store.phase !== "ready" || (store.selectedPlanId === null && !canAuto);
  commit.textContent =
    store.selectedPlanId === null && canAuto ? "Step (auto-select)" : "Commit & step";
  $<HTMLInputElement>("#normalize").disabled = store.view === "timeline";
}

function wire(): void {
  const baseInput = $<HTMLInputElement>("#api-base");
  const params = new URLSearchParams(location.search);
  baseInput.value = params.get("api") ?? "http://127.0.0.1:8642";

  $("#connect").addEventListener("click", () => connect(baseInput.value));
  $("#retry").addEventListener("click", () => {
    if (store.error) void store.error.retry();
  });
  $("#commit").addEventListener("click", () => void store.commitAndStep(store.selectedPlanId));
  $<HTMLInputElement>("#normalize").addEventListener("change", (ev) => {
    store.setNormalized((ev.target as HTMLInputElement).checked);
  });
  for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-view]")) {
    btn.addEventListener("click", () => store.setView(btn.dataset.view as View));
  }

  // staging: any element carrying data-plan (scatter point, polyline, row)
  const stageFrom = (ev: Event) => {
    const hit = (ev.target as Element).closest<HTMLElement>("[data-plan]");
    if (hit?.dataset.plan && !store.busy && store.phase === "ready") {
      void store.stage(hit.dataset.plan);
    }
  };
  $("#viz").addEventListener("click", stageFrom);
  $("#table").addEventListener("click", (ev) => {
    const th = (ev.target as Element).closest<HTMLElement>("th[data-sort]");
    if (th?.dataset.sort) {
      const key = th.dataset.sort as SortKey;
      sortDir = (key === sortKey ? -sortDir : 1) as SortDir;
      sortKey = key;
      render();
      return;
    }
    stageFrom(ev);
  });

  connect(baseInput.value);
}

wire();
