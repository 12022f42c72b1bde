import type {
  GfcReviewPrompt, IfcConflictPrompt, Prompt, RecordValues,
  SlcOfferPrompt, SlcSuggestionPrompt, TaggedInstance,
} from "./types.js";
import type { HistoryRow, MetricPoint } from "./controller.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function recordTable(record: RecordValues): string {
  const rows = Object.entries(record)
    .map(([name, value]) =>
      `<tr><th>${escapeHtml(name)}</th><td>${escapeHtml(value)}</td></tr>`)
    .join("");
  return `<table class="record">${rows}</table>`;
}

const BADGE_TITLES: Record<string, string> = {
  IRC: "decided by a supervisor rule",
  IFC: "aligned with a similar past record",
  SLC: "model suggestion accepted",
  USER: "user decision",
};

export function provenanceBadge(provenance: string): string {
  const title = BADGE_TITLES[provenance] ?? provenance;
  return `<span class="badge badge-${escapeHtml(provenance.toLowerCase())}" ` +
         `title="${escapeHtml(title)}">${escapeHtml(provenance)}</span>`;
}

export function historyList(rows: HistoryRow[]): string {
  const items = rows.slice(-30).reverse().map(row => {
    const relabel = row.relabeled ? ` <span class="relabeled">relabeled</span>` : "";
    return `<li>#${row.index} &rarr; <b>${escapeHtml(row.label)}</b> ` +
           `${provenanceBadge(row.provenance)}${relabel}</li>`;
  }).join("");
  return `<ol class="history" reversed>${items}</ol>`;
}

export function instanceTable(title: string, instances: TaggedInstance[]): string {
  if (!instances.length) {
    return `<div class="instances"><h4>${escapeHtml(title)}</h4><p>none available</p></div>`;
  }
  const attrs = Object.keys(instances[0].record);
  const header = attrs.map(a => `<th>${escapeHtml(a)}</th>`).join("");
  const body = instances.map(inst =>
    `<tr>${attrs.map(a => `<td>${escapeHtml(inst.record[a])}</td>`).join("")}` +
    `<td><b>${escapeHtml(inst.label)}</b></td></tr>`).join("");
  return `<div class="instances"><h4>${escapeHtml(title)}</h4>` +
         `<table><tr>${header}<th>model label</th></tr>${body}</table></div>`;
}

export function ifcDialog(prompt: IfcConflictPrompt): string {
  return `
  <div class="dialog" data-kind="ifc_conflict">
    <h3>Similar record labeled differently</h3>
    <p>${prompt.affected_indices.length} past record(s) identical to this one
       (except for the protected attribute) carry the label
       <b>${escapeHtml(prompt.past_label)}</b>, but you chose
       <b>${escapeHtml(prompt.user_label)}</b>. One of them must change.</p>
    <button data-action="ifc-change">Use ${escapeHtml(prompt.past_label)} here</button>
    <button data-action="ifc-relabel">Keep mine, relabel the
      ${prompt.affected_indices.length} past record(s)</button>
  </div>`;
}

export function offerDialog(prompt: SlcOfferPrompt): string {
  return `
  <div class="dialog" data-kind="slc_offer_explanation">
    <h3>The model disagrees</h3>
    <p>You chose <b>${escapeHtml(prompt.user_label)}</b>; the model is fairly
       sure this should be <b>${escapeHtml(prompt.model_label)}</b>.
       See its explanation first?</p>
    <button data-action="offer-yes">Show explanation</button>
    <button data-action="offer-no">Skip</button>
  </div>`;
}

export function suggestionDialog(prompt: SlcSuggestionPrompt): string {
  let explanation = "";
  if (prompt.explanation) {
    const { logic, instances } = prompt.explanation;
    explanation = `
    <div class="explanation">
      <p class="rule">${escapeHtml(logic.rule_text)}</p>
      <details><summary>whole model</summary>
        <pre>${escapeHtml(logic.tree_text)}</pre></details>
      ${instanceTable(`records the model calls ${instances.example_label}`,
                      instances.examples)}
      ${instanceTable(`records the model calls ${instances.counterexample_label}`,
                      instances.counterexamples)}
    </div>`;
  }
  return `
  <div class="dialog" data-kind="slc_suggestion">
    <h3>Suggestion: ${escapeHtml(prompt.model_label)}</h3>
    ${explanation}
    <button data-action="suggestion-accept">Accept ${escapeHtml(prompt.model_label)}</button>
    <button data-action="suggestion-decline">Keep my ${escapeHtml(prompt.user_label)}</button>
  </div>`;
}

export function gfcDialog(prompt: GfcReviewPrompt): string {
  const candidates = prompt.candidates ?? { dn: [], pp: [] };
  const row = (c: { index: number; record: RecordValues; current_label: string;
                    flip_to: string; probability: number }, side: string) => `
    <tr><td><input type="checkbox" data-gfc-side="${side}" data-gfc-index="${c.index}"
        checked></td>
    <td>#${c.index}</td>
    <td>${escapeHtml(c.current_label)} &rarr; ${escapeHtml(c.flip_to)}</td>
    <td>${(c.probability * 100).toFixed(1)}%</td></tr>`;
  const table = (title: string, list: typeof candidates.dn, side: string) =>
    list.length
      ? `<h4>${escapeHtml(title)}</h4><table class="gfc">
         <tr><th></th><th>record</th><th>flip</th><th>model probability</th></tr>
         ${list.map(c => row(c, side)).join("")}</table>`
      : "";
  return `
  <div class="dialog" data-kind="gfc_review">
    <h3>Group fairness review</h3>
    <p>Current gap: <b data-role="disc-before">${prompt.disc_before.toFixed(3)}</b>,
       after selection: <b data-role="disc-after">&ndash;</b></p>
    ${table("Proposed flips to the favorable label", candidates.dn, "dn")}
    ${table("Proposed flips to the unfavorable label", candidates.pp, "pp")}
    <button data-action="gfc-apply">Relabel selected</button>
    <button data-action="gfc-none">Change nothing</button>
  </div>`;
}

export function unknownPromptFallback(prompt: Prompt): string {
  return `
  <div class="dialog" data-kind="unknown">
    <h3>Unrecognized request (${escapeHtml(prompt.kind)})</h3>
    <p>This client does not know how to render the prompt; raw payload:</p>
    <pre>${escapeHtml(JSON.stringify(prompt, null, 2))}</pre>
  </div>`;
}

export function promptView(prompt: Prompt): string {
  switch (prompt.kind) {
    case "ifc_conflict":
      return ifcDialog(prompt as IfcConflictPrompt);
    case "slc_offer_explanation":
      return offerDialog(prompt as SlcOfferPrompt);
    case "slc_suggestion":
      return suggestionDialog(prompt as SlcSuggestionPrompt);
    case "gfc_review":
      return gfcDialog(prompt as GfcReviewPrompt);
    default:
      return unknownPromptFallback(prompt);
  }
}

export function sparkline(points: MetricPoint[],
                          pick: (p: MetricPoint) => number | null,
                          width = 220, height = 36): string {
  const values = points.map(pick);
  const known = values.filter((v): v is number => v !== null);
  if (known.length < 2) {
    return `<svg class="sparkline" width="${width}" height="${height}"></svg>`;
  }
  const min = Math.min(...known, 0);
  const max = Math.max(...known, 0.0001);
  const step = width / (values.length - 1);
  const coords = values
    .map((v, i) => v === null ? null :
      `${(i * step).toFixed(1)},${(height - ((v - min) / (max - min)) * height).toFixed(1)}`)
    .filter((c): c is string => c !== null)
    .join(" ");
  return `<svg class="sparkline" width="${width}" height="${height}">` +
         `<polyline fill="none" stroke="currentColor" points="${coords}"/></svg>`;
}
