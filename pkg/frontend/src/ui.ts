/**
 * DOM wiring for the group explorer. All numbers on screen come from the
 * service payloads via display.ts; this file only moves them around.
 */

import { ApiError, SessionApi } from "./api.js";
import { renderResult } from "./display.js";
import { ExplorerState } from "./state.js";
import type { SessionSummary } from "./types.js";

const api = new SessionApi("");
const state = new ExplorerState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message;
  banner.hidden = false;
}

function clearError(): void {
  el<HTMLDivElement>("error-banner").hidden = true;
}

async function loadSessions(): Promise<void> {
  const picker = el<HTMLSelectElement>("session-picker");
  const { sessions } = await api.listSessions();
  picker.innerHTML = "";
  for (const s of sessions) {
    const opt = document.createElement("option");
    opt.value = s.id;
    opt.textContent = `${s.id} — ${s.nu} variables, n=${s.n} (${s.mode})`;
    picker.appendChild(opt);
  }
  if (sessions.length) {
    await selectSession(sessions[0]);
  } else {
    el<HTMLDivElement>("session-info").textContent =
      "No sessions in the store. Upload one with the CLI or POST /sessions.";
  }
}

async function selectSession(summary: SessionSummary): Promise<void> {
  state.setSession(summary.id, summary.names);
  el<HTMLDivElement>("session-info").textContent =
    `mu=${summary.hyper.mu}, h=${summary.hyper.h}, tau=${summary.hyper.tau}, ` +
    `n=${summary.n}, models=${summary.n_models}` +
    (summary.mode === "sub-analysis"
      ? ` — sub-analysis over ${summary.declared_nu} declared variables`
      : "");
  state.tau = summary.hyper.tau;
  el<HTMLInputElement>("tau-input").value = String(state.tau);
  await refreshBlocks();
  renderSelection();
}

let blocksRequest = 0;

async function refreshBlocks(): Promise<void> {
  if (!state.sessionId) return;
  const token = ++blocksRequest;
  const payload = await api.getGroups(state.sessionId, state.rho);
  if (token !== blocksRequest) return; // a newer rho superseded this request
  state.setBlocks(payload.blocks);
  renderBlocks();
  renderSelection();
}

function renderBlocks(): void {
  const host = el<HTMLDivElement>("variables");
  host.innerHTML = "";
  for (const block of state.blocks) {
    const box = document.createElement("div");
    box.className = block.indices.length > 1 ? "block indivisible" : "block";
    if (block.indices.length > 1) {
      const label = document.createElement("span");
      label.className = "block-label";
      label.textContent = "indivisible";
      box.appendChild(label);
    }
    for (const j of block.indices) {
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = state.selected.has(j) ? "chip on" : "chip";
      chip.textContent = state.names[j];
      chip.addEventListener("click", () => {
        state.toggle(j);
        renderBlocks();
        renderSelection();
      });
      box.appendChild(chip);
    }
    host.appendChild(box);
  }
}

function renderSelection(): void {
  const warn = el<HTMLDivElement>("admissibility-warning");
  const submit = el<HTMLButtonElement>("submit-btn");
  submit.disabled = !state.queryEnabled;
  if (!state.queryEnabled) {
    warn.hidden = true;
    return;
  }
  const block = state.violatedBlock;
  if (block) {
    warn.hidden = false;
    warn.textContent =
      `Splits the indivisible group {${block.names.join(", ")}} at ρ=${state.rho}: ` +
      "the familywise guarantee does not cover this selection.";
  } else {
    warn.hidden = true;
  }
}

async function submitGroup(): Promise<void> {
  if (!state.sessionId || !state.queryEnabled) return;
  clearError();
  const group = state.selectedNames;
  const rho = state.rho;
  const token = state.beginQuery();
  try {
    const resp = await api.testGroup(state.sessionId, group, {
      rho,
      tau: state.tau,
      alpha: state.alpha,
      force: !state.admissible,
    });
    if (state.acceptResult(token, group, rho, resp)) {
      renderLatest();
      renderHistory();
    }
  } catch (err) {
    state.failQuery(token);
    if (err instanceof ApiError) {
      showError(`${err.payload.error}: ${err.payload.detail}`);
    } else {
      showError(`network failure: ${String(err)} — history preserved`);
    }
  }
}

function renderLatest(): void {
  const entry = state.latest;
  if (!entry) return;
  const view = renderResult(entry.response);
  el<HTMLDivElement>("result-group").textContent = view.group;
  el<HTMLSpanElement>("result-po").textContent = view.po;
  el<HTMLSpanElement>("result-punadj").textContent = view.pUnadjusted;
  el<HTMLSpanElement>("result-padj").textContent = view.pAdjusted;
  el<HTMLSpanElement>("result-padjraw").textContent = view.pAdjustedRaw;
  el<HTMLSpanElement>("result-fdr").textContent = view.fdrBound;
  el<HTMLSpanElement>("result-bayes").textContent = view.bayesVerdict;
  el<HTMLSpanElement>("result-fwer").textContent = view.fwerVerdict;
  const flag = el<HTMLDivElement>("result-admissible");
  flag.textContent = view.admissible
    ? "admissible under the current grouping"
    : "inadmissible: interpret outside the familywise guarantee";
  flag.className = view.admissible ? "ok" : "warn";
  el<HTMLDivElement>("result-mode").textContent = view.modeNote;
  el<HTMLDivElement>("result-panel").hidden = false;
}

function renderHistory(): void {
  const body = el<HTMLTableSectionElement>("history-body");
  body.innerHTML = "";
  for (const entry of [...state.history].reverse()) {
    const view = renderResult(entry.response);
    const tr = document.createElement("tr");
    for (const cell of [
      String(entry.seq),
      view.group,
      `ρ=${entry.rho}`,
      view.po,
      view.pUnadjusted,
      view.pAdjusted,
      view.admissible ? "yes" : "no",
    ]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
}

function wireControls(): void {
  const rho = el<HTMLInputElement>("rho-slider");
  const rhoLabel = el<HTMLSpanElement>("rho-value");
  rho.addEventListener("input", async () => {
    state.rho = Number(rho.value);
    rhoLabel.textContent = rho.value;
    await refreshBlocks();   // admissibility updates live with the slider
  });
  el<HTMLInputElement>("tau-input").addEventListener("change", (ev) => {
    state.tau = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("alpha-input").addEventListener("change", (ev) => {
    state.alpha = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLButtonElement>("submit-btn").addEventListener("click", () => {
    void submitGroup();
  });
  el<HTMLButtonElement>("select-all").addEventListener("click", () => {
    state.selectAll();
    renderBlocks();
    renderSelection();
  });
  el<HTMLButtonElement>("clear-selection").addEventListener("click", () => {
    state.clearSelection();
    renderBlocks();
    renderSelection();
  });
  el<HTMLSelectElement>("session-picker").addEventListener("change", async (ev) => {
    const id = (ev.target as HTMLSelectElement).value;
    const summary = await api.getSession(id);
    await selectSession(summary);
  });
}

export async function boot(): Promise<void> {
  wireControls();
  try {
    await loadSessions();
  } catch (err) {
    showError(`could not reach the session service: ${String(err)}`);
  }
}

if (typeof document !== "undefined" && document.getElementById("explorer-root")) {
  void boot();
}
