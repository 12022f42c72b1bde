import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import {
  historyList, promptView, recordTable, sparkline,
} from "./render.js";
import type { GfcReviewPrompt } from "./types.js";

const $ = (selector: string) => document.querySelector(selector) as HTMLElement;

let controller: SessionController | null = null;
let api: ApiClient;
let pollTimer: number | undefined;

function baseUrl(): string {
  const fromQuery = new URLSearchParams(location.search).get("base");
  const stored = localStorage.getItem("colabel-base");
  return fromQuery ?? stored ?? "http://127.0.0.1:8000";
}

function render(): void {
  if (!controller) return;
  const state = controller.state;
  $("#status").textContent =
    `${state.status} - ${state.labeled}/${state.target} labeled`;
  $("#notices").innerHTML = state.notices.map(n => `<li>${n}</li>`).join("");
  $("#history").innerHTML = historyList(state.history);
  $("#disc-spark").innerHTML = sparkline(state.metricsTrail, p => p.disc);
  $("#uc-spark").innerHTML = sparkline(state.metricsTrail, p => p.unfairCouples);
  const trail = state.metricsTrail;
  const latest = trail[trail.length - 1];
  $("#metric-values").textContent = latest
    ? `gap ${latest.disc === null ? "n/a" : latest.disc.toFixed(3)}, ` +
      `unfair couples ${latest.unfairCouples}`
    : "";

  const labelPane = $("#label-pane");
  const promptPane = $("#prompt-pane");
  if (state.pending) {
    labelPane.classList.add("hidden");
    promptPane.classList.remove("hidden");
    promptPane.innerHTML = promptView(state.pending);
    wirePromptButtons();
  } else if (state.status === "awaiting_label" && state.next) {
    promptPane.classList.add("hidden");
    labelPane.classList.remove("hidden");
    $("#record").innerHTML = recordTable(state.next.record);
    const [negative, positive] = state.labels;
    ($("#btn-negative") as HTMLButtonElement).textContent = `${negative} (n)`;
    ($("#btn-positive") as HTMLButtonElement).textContent = `${positive} (y)`;
    setLabelButtonsEnabled(controller.canLabel);
  } else {
    promptPane.classList.add("hidden");
    labelPane.classList.remove("hidden");
    $("#record").innerHTML = state.status === "complete"
      ? "<p>Session complete.</p>" : "<p>Waiting for the next record...</p>";
    setLabelButtonsEnabled(false);
  }
}

function setLabelButtonsEnabled(enabled: boolean): void {
  for (const id of ["#btn-negative", "#btn-positive"]) {
    ($(id) as HTMLButtonElement).disabled = !enabled;
  }
}

async function submitLabel(which: 0 | 1): Promise<void> {
  if (!controller || !controller.canLabel) return;
  await controller.submitLabel(controller.state.labels[which]);
  render();
}

function gfcSelection(): { accept_dn: number[]; accept_pp: number[] } {
  const accept_dn: number[] = [];
  const accept_pp: number[] = [];
  document.querySelectorAll<HTMLInputElement>("input[data-gfc-side]").forEach(box => {
    if (box.checked) {
      (box.dataset.gfcSide === "dn" ? accept_dn : accept_pp)
        .push(Number(box.dataset.gfcIndex));
    }
  });
  return { accept_dn, accept_pp };
}

async function refreshGfcPreview(): Promise<void> {
  if (!controller) return;
  const preview = await controller.previewGfc(gfcSelection());
  const target = document.querySelector('[data-role="disc-after"]');
  if (target) {
    target.textContent = preview.disc_after === null
      ? "n/a" : preview.disc_after.toFixed(3);
  }
}

function wirePromptButtons(): void {
  const act = (selector: string, handler: () => Promise<unknown>) => {
    const el = document.querySelector(selector) as HTMLButtonElement | null;
    if (el) el.onclick = async () => { await handler(); render(); };
  };
  const c = controller!;
  act('[data-action="ifc-change"]',
      () => c.respond({ kind: "ifc_conflict", choice: "change_current" }));
  act('[data-action="ifc-relabel"]',
      () => c.respond({ kind: "ifc_conflict", choice: "relabel_past" }));
  act('[data-action="offer-yes"]',
      () => c.respond({ kind: "slc_offer_explanation", show: true }));
  act('[data-action="offer-no"]',
      () => c.respond({ kind: "slc_offer_explanation", show: false }));
  act('[data-action="suggestion-accept"]',
      () => c.respond({ kind: "slc_suggestion", accept: true }));
  act('[data-action="suggestion-decline"]',
      () => c.respond({ kind: "slc_suggestion", accept: false }));
  act('[data-action="gfc-apply"]',
      () => c.respond({ kind: "gfc_review", ...gfcSelection() }));
  act('[data-action="gfc-none"]',
      () => c.respond({ kind: "gfc_review", accept_dn: [], accept_pp: [] }));
  if (c.state.pending?.kind === "gfc_review") {
    document.querySelectorAll<HTMLInputElement>("input[data-gfc-side]")
      .forEach(box => box.onchange = () => { void refreshGfcPreview(); });
    void refreshGfcPreview();
  }
}

async function startSession(): Promise<void> {
  const base = ($("#base-url") as HTMLInputElement).value.trim();
  localStorage.setItem("colabel-base", base);
  api = new ApiClient(base);
  const generator = ($("#dataset") as HTMLSelectElement).value;
  const target = Number(($("#target") as HTMLInputElement).value) || 100;
  controller = await SessionController.create(api, {
    dataset: { generator, seed: 0 },
    config: { target, k: 25 },
    pretrain: true,
    feed: "dataset",
  });
  controller.onChange(render);
  if (pollTimer !== undefined) clearInterval(pollTimer);
  pollTimer = window.setInterval(async () => {
    if (!controller || controller.state.busy) return;
    try {
      await controller.pollEvents();
      await controller.pollMetrics();
    } catch {
      // transient polling errors surface on the next tick
    }
  }, 1500);
  render();
}

window.addEventListener("DOMContentLoaded", () => {
  ($("#base-url") as HTMLInputElement).value = baseUrl();
  ($("#start") as HTMLButtonElement).onclick = () => { void startSession(); };
  ($("#btn-negative") as HTMLButtonElement).onclick = () => { void submitLabel(0); };
  ($("#btn-positive") as HTMLButtonElement).onclick = () => { void submitLabel(1); };
  document.addEventListener("keydown", event => {
    if (!controller || controller.state.pending) return;
    if (event.key === "n") void submitLabel(0);
    if (event.key === "y") void submitLabel(1);
  });
});
