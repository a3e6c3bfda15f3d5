/**
 * DOM wiring for the console. All numbers rendered here come straight from
 * service payloads through the pure view-model modules; there is no
 * client-side recomputation of scores, shares or ROI.
 */

import { ApiClient } from "./api.js";
import { barModel, segmentWidths } from "./bars.js";
import { drawChart } from "./charts.js";
import { EditorState, beginEdit, reeditFromConflict, submitEdit, withField } from "./editor.js";
import { lit } from "./format.js";
import { roiRows } from "./roi.js";
import { StreamState, applyTick, backoffMs, checkStale, emptyStreamState } from "./stream.js";
import type { Plan, Registry, StreamTick, WhatIfResponse } from "./types.js";
import { whatIfRows } from "./whatif.js";

const api = new ApiClient("");
const stream: StreamState = emptyStreamState();
let registry: Registry | null = null;
let editor: EditorState = { kind: "idle" };
let windowIntervalMs = 3000;
let streamAttempt = 0;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

// -- stream ---------------------------------------------------------------

function connectStream(): void {
  const source = new EventSource("/metrics/stream");
  source.onmessage = (event) => {
    streamAttempt = 0;
    const tick = JSON.parse(event.data) as StreamTick;
    applyTick(stream, tick, Date.now());
    renderLive();
  };
  source.onerror = () => {
    source.close();
    const wait = backoffMs(streamAttempt++);
    setTimeout(connectStream, wait);
  };
}

function renderLive(): void {
  const staleBanner = el<HTMLDivElement>("stale-banner");
  staleBanner.hidden = !stream.stale;
  drawChart(el<HTMLCanvasElement>("chart-shares"), stream.shares, {
    yMin: 0,
    referenceY: targetShare() ?? undefined,
  });
  drawChart(el<HTMLCanvasElement>("chart-bias"), stream.biases, { yMin: 0 });
  drawChart(el<HTMLCanvasElement>("chart-drift"), stream.drift, { yMin: 0 });
  drawChart(
    el<HTMLCanvasElement>("chart-ratio"),
    new Map([["boost/final", stream.boostRatio]]),
    { yMin: 0 },
  );
  const last = stream.ticks[stream.ticks.length - 1];
  if (last) {
    el("live-readout").textContent =
      `window ${lit(last.window_id)}  boost/final ${lit(last.boost_final_ratio)}  ` +
      `events ${lit(last.event_count)}  registry v${lit(last.registry_version)}`;
  }
}

function targetShare(): number | null {
  const pid = registry?.plans.find((p) => p.mode === "pid_delivered");
  return pid?.target_share ?? null;
}

// -- plans ------------------------------------------------------------------

async function refreshPlans(): Promise<void> {
  registry = await api.registry();
  const tbody = el<HTMLTableSectionElement>("plans-body");
  tbody.replaceChildren();
  for (const plan of registry.plans) {
    const tr = document.createElement("tr");
    const cells = [
      plan.plan_id,
      plan.mode,
      lit(plan.weight),
      lit(plan.bias),
      lit(plan.target_share),
      plan.enabled ? "on" : "off",
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    const actions = document.createElement("td");
    const button = document.createElement("button");
    button.textContent = "edit";
    button.onclick = () => {
      editor = beginEdit(plan, registry!.version);
      renderEditor();
    };
    actions.appendChild(button);
    tr.appendChild(actions);
    tbody.appendChild(tr);
  }
  el("registry-version").textContent = `v${lit(registry.version)}`;
}

function renderEditor(): void {
  const panel = el<HTMLDivElement>("editor-panel");
  panel.replaceChildren();
  if (editor.kind === "idle") {
    panel.textContent = "select a plan to edit";
    return;
  }
  if (editor.kind === "applied") {
    panel.textContent = `applied; registry now v${lit(editor.registry.version)}`;
    void refreshPlans();
    return;
  }
  if (editor.kind === "conflict") {
    const note = document.createElement("p");
    note.className = "conflict";
    note.textContent =
      `edit conflict: registry moved to v${lit(editor.serverVersion)} while you were editing; ` +
      "review the newer values and re-apply";
    panel.appendChild(note);
    const retry = document.createElement("button");
    retry.textContent = "re-edit against server version";
    retry.onclick = () => {
      editor = reeditFromConflict(editor);
      renderEditor();
    };
    panel.appendChild(retry);
    return;
  }
  const draft = editor.draft;
  const form = document.createElement("div");
  form.appendChild(document.createTextNode(`editing ${draft.plan_id} (expected v${editor.kind === "editing" || editor.kind === "rejected" ? editor.expectedVersion : "?"}) `));
  const fields: Array<[keyof Plan, string]> = [
    ["weight", "weight"],
    ["bias", "bias"],
    ["target_share", "target share"],
  ];
  for (const [field, label] of fields) {
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.01";
    input.title = label;
    const value = draft[field];
    input.value = value === null || value === undefined ? "" : String(value);
    input.onchange = () => {
      const parsed = input.value === "" ? null : Number(input.value);
      editor = withField(editor, field, parsed);
      renderEditor();
    };
    const wrapper = document.createElement("label");
    wrapper.textContent = `${label}: `;
    wrapper.appendChild(input);
    form.appendChild(wrapper);
  }
  const enabled = document.createElement("input");
  enabled.type = "checkbox";
  enabled.checked = draft.enabled;
  enabled.onchange = () => {
    editor = withField(editor, "enabled", enabled.checked);
    renderEditor();
  };
  const enabledLabel = document.createElement("label");
  enabledLabel.textContent = "enabled ";
  enabledLabel.appendChild(enabled);
  form.appendChild(enabledLabel);
  if (editor.kind === "editing" || editor.kind === "rejected") {
    const errors = editor.kind === "editing" ? editor.errors : editor.errors;
    if (errors.length > 0) {
      const list = document.createElement("ul");
      list.className = "errors";
      for (const message of errors) {
        const li = document.createElement("li");
        li.textContent = message;
        list.appendChild(li);
      }
      form.appendChild(list);
    }
  }
  const submit = document.createElement("button");
  submit.textContent = "apply";
  submit.onclick = async () => {
    editor = await submitEdit(editor, api.putPlan);
    renderEditor();
  };
  form.appendChild(submit);
  panel.appendChild(form);
}

// -- ROI table ----------------------------------------------------------------

async function refreshReports(): Promise<void> {
  const status = await api.status();
  if (status.closed_window < 0) {
    return;
  }
  const { reports } = await api.reports(status.closed_window);
  const tbody = el<HTMLTableSectionElement>("roi-body");
  tbody.replaceChildren();
  for (const row of roiRows(reports)) {
    const tr = document.createElement("tr");
    for (const text of [row.planId, row.exposureShare, row.boostSpend, row.cost, row.vvLift, row.roi]) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  el("roi-window").textContent = `window ${lit(status.closed_window)}`;
}

// -- what-if -------------------------------------------------------------------

async function runWhatIf(): Promise<void> {
  const planId = (el<HTMLInputElement>("whatif-plan")).value;
  const field = (el<HTMLSelectElement>("whatif-field")).value as keyof Plan;
  const value = Number((el<HTMLInputElement>("whatif-value")).value);
  const overrides: Record<string, Partial<Plan>> = { [planId]: { [field]: value } };
  let response: WhatIfResponse;
  try {
    response = await api.whatif(overrides);
  } catch (error) {
    el("whatif-error").textContent = String(error);
    return;
  }
  el("whatif-error").textContent = "";
  const container = el<HTMLDivElement>("whatif-rows");
  container.replaceChildren();
  const rows = whatIfRows(response);
  const maxFinal = Math.max(
    ...response.current.ranked.map((r) => r.final),
    ...response.hypothetical.ranked.map((r) => r.final),
    1e-9,
  );
  for (const row of rows) {
    const div = document.createElement("div");
    div.className = "whatif-row" + (row.change ? ` ${row.change}` : "");
    const label = document.createElement("span");
    label.className = "cid";
    label.textContent =
      `${row.candidateId}` +
      (row.change === "gained" ? " (newly exposed)" : row.change === "lost" ? " (dropped)" : "");
    div.appendChild(label);
    for (const model of [row.current, row.hypothetical]) {
      const bar = document.createElement("span");
      bar.className = "bar";
      if (model) {
        const widths = segmentWidths(model, 220, maxFinal);
        model.segments.forEach((segment, i) => {
          const span = document.createElement("span");
          span.className = "segment";
          span.style.width = `${widths[i]}px`;
          span.title = `${segment.label}: ${lit(segment.value)}`;
          bar.appendChild(span);
        });
        const total = document.createElement("span");
        total.className = "total";
        total.textContent = lit(model.final);
        bar.appendChild(total);
      }
      div.appendChild(bar);
    }
    container.appendChild(div);
  }
}

// -- boot -----------------------------------------------------------------------

async function boot(): Promise<void> {
  const status = await api.status();
  windowIntervalMs = Math.max(1000, status.control_tick * 5);
  await refreshPlans();
  renderEditor();
  connectStream();
  setInterval(() => {
    checkStale(stream, Date.now(), windowIntervalMs);
    renderLive();
  }, 1000);
  setInterval(() => void refreshReports(), 5000);
  void refreshReports();
  el<HTMLButtonElement>("whatif-run").onclick = () => void runWhatIf();
  el<HTMLButtonElement>("plans-refresh").onclick = () => void refreshPlans();
}

void boot();
