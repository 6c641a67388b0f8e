/** Page wiring: one poll loop, one render pass, no state of its own. */

import { MonitorApi, resolveApiBase } from "./api.js";
import { DashboardModel } from "./model.js";
import { renderSeriesSVG } from "./charts.js";
import type { ControlAction, ParamRow } from "./types.js";

const fallback = location.protocol.startsWith("http")
  ? location.origin
  : "http://127.0.0.1:8080";
const api = new MonitorApi(resolveApiBase(location.search, fallback));
const model = new DashboardModel();

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el;
};

let tick = 0;
let paramsBuilt = false;
let timersHtml = "";
let logHtml = "";

async function refreshSide(): Promise<void> {
  try {
    const [params, timers, log] = await Promise.all([
      api.params(),
      api.timers(),
      api.log(),
    ]);
    model.setParams(params.body.params);
    model.noteLog(log.body.events);
    timersHtml = renderTimers(timers.body);
    logHtml = renderLog(log.body.events, log.body.steering);
  } catch {
    // banner state is owned by the /status poll
  }
}

async function poll(): Promise<void> {
  if (model.beginPoll()) {
    try {
      const r = await api.status();
      model.recordStatus(r.body);
      if (tick % 3 === 0) await refreshSide();
    } catch {
      model.recordPollFailure();
    }
    tick += 1;
    render();
  }
  setTimeout(poll, model.nextPollDelayMs());
}

function esc(s: unknown): string {
  return String(s)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderBanner(): void {
  const b = model.banner();
  const el = $("banner");
  if (b.kind === "connected") {
    el.className = "banner ok";
    el.textContent = `connected to ${api.base}`;
  } else if (b.kind === "terminated") {
    el.className = "banner done";
    el.textContent = "run terminated; dashboard idle (history retained)";
  } else {
    el.className = "banner bad";
    el.textContent =
      `disconnected from ${api.base} (attempt ${b.failures}); retrying`;
  }
}

function renderStatus(): void {
  const s = model.latest();
  if (s === undefined) return;
  const rows: [string, string][] = [
    ["iteration", String(s.iteration)],
    ["time", s.time.toPrecision(8)],
    ["dt", s.dt.toPrecision(6)],
    ["state", s.state + (s.terminating ? " (terminating)" : "")],
    ["driver", `${s.driver} (${s.nlevels} level${s.nlevels > 1 ? "s" : ""})`],
    ["scheme", s.scheme],
    ["ranks", String(s.nranks)],
    ["bin", s.bin],
    ["uptime", `${s.uptime.toFixed(1)} s`],
  ];
  $("status").innerHTML = rows
    .map(([k, v]) => `<div class="stat"><span class="k">${esc(k)}</span>` +
      `<span class="v">${esc(v)}</span></div>`)
    .join("");
}

function renderCharts(): void {
  const parts: string[] = [];
  for (const name of model.normNames()) {
    parts.push(renderSeriesSVG(`l2 ${name}`, model.series(name)));
  }
  const latest = model.latest();
  for (const name of Object.keys(latest?.observables ?? {}).sort()) {
    parts.push(renderSeriesSVG(name, model.observableSeries(name)));
  }
  $("charts").innerHTML =
    parts.join("") || '<p class="hint">waiting for first snapshot</p>';
}

function buildParams(): void {
  const names = model.formNames();
  if (names.length === 0) return;
  const rows = names.map((name) => {
    const f = model.form(name)!;
    const r = f.row;
    const input = r.steerable
      ? `<input data-param="${esc(name)}" value="${esc(f.input)}" ` +
        `title="${esc(r.description)}">` +
        `<button data-steer="${esc(name)}">set</button>`
      : `<span class="locked" title="not steerable">locked</span>`;
    return (
      `<tr><td class="pname">${esc(name)}</td>` +
      `<td>${esc(r.kind)}</td>` +
      `<td class="pvalue" data-value="${esc(name)}">${esc(r.value)}</td>` +
      `<td>${input}</td>` +
      `<td class="pnote" data-note="${esc(name)}"></td></tr>`
    );
  });
  $("params").innerHTML =
    `<table><thead><tr><th>parameter</th><th>kind</th><th>value</th>` +
    `<th>steer</th><th></th></tr></thead><tbody>` +
    rows.join("") +
    `</tbody></table>`;
  for (const inp of $("params").querySelectorAll("input[data-param]")) {
    inp.addEventListener("input", () => {
      const name = (inp as HTMLInputElement).dataset.param!;
      model.setInput(name, (inp as HTMLInputElement).value);
      updateParamRow(name);
    });
  }
  for (const btn of $("params").querySelectorAll("button[data-steer]")) {
    btn.addEventListener("click", () => {
      void submitSteer((btn as HTMLButtonElement).dataset.steer!);
    });
  }
  paramsBuilt = true;
}

function updateParamRow(name: string): void {
  const f = model.form(name);
  if (f === undefined) return;
  const value = $("params").querySelector(`[data-value="${name}"]`);
  if (value !== null) value.textContent = String(f.row.value);
  const note = $("params").querySelector(`[data-note="${name}"]`);
  if (note !== null) {
    const msg =
      f.inputError ?? f.serverError ?? (f.pending ? "pending..." : "");
    note.textContent = msg;
    note.className =
      "pnote " +
      (f.inputError !== null || f.serverError !== null
        ? "err"
        : f.pending
          ? "pending"
          : "");
  }
  const btn = $("params").querySelector(
    `button[data-steer="${name}"]`,
  ) as HTMLButtonElement | null;
  if (btn !== null) btn.disabled = !model.canSubmit(name);
}

async function submitSteer(name: string): Promise<void> {
  const f = model.form(name);
  if (f === undefined || !model.canSubmit(name)) return;
  const value = f.input.trim();
  model.steerRequested(name, value);
  try {
    const r = await api.steer(name, value);
    model.steerResult(name, r.code, r.body);
  } catch {
    model.steerResult(name, 0, { error: "network failure" });
  }
  updateParamRow(name);
}

async function sendControl(action: ControlAction): Promise<void> {
  model.controlRequested(action);
  try {
    const r = await api.control(action);
    model.controlResult(r.code, r.body);
  } catch {
    model.controlResult(0, { error: "network failure" });
  }
  render();
}

function renderControls(): void {
  const s = model.latest();
  const pending = model.pendingControl;
  for (const btn of $("controls").querySelectorAll("button[data-action]")) {
    const b = btn as HTMLButtonElement;
    const action = b.dataset.action as ControlAction;
    b.classList.toggle("pending", pending === action);
    if (s !== undefined) {
      if (action === "pause") b.disabled = s.paused;
      if (action === "resume") b.disabled = !s.paused;
    }
  }
  const err = $("control-error");
  err.textContent = model.inlineError ?? "";
}

function renderTimers(timers: Record<string, { calls: number; seconds: number }>): string {
  const rows = Object.entries(timers)
    .sort((a, b) => b[1].seconds - a[1].seconds)
    .slice(0, 12)
    .map(
      ([name, t]) =>
        `<tr><td>${esc(name)}</td><td>${t.calls}</td>` +
        `<td>${t.seconds.toFixed(3)}</td></tr>`,
    );
  return (
    `<table><thead><tr><th>timer</th><th>calls</th><th>seconds</th>` +
    `</tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}

function renderLog(events: string[], steering: string[]): string {
  const fmt = (lines: string[]): string =>
    lines
      .slice(-12)
      .map((l) => `<div>${esc(l)}</div>`)
      .join("") || '<div class="hint">empty</div>';
  return (
    `<div class="logcol"><h3>events</h3>${fmt(events)}</div>` +
    `<div class="logcol"><h3>steering</h3>${fmt(steering)}</div>`
  );
}

function render(): void {
  renderBanner();
  renderStatus();
  renderCharts();
  if (!paramsBuilt) buildParams();
  for (const name of model.formNames()) updateParamRow(name);
  renderControls();
  $("timers").innerHTML = timersHtml;
  $("log").innerHTML = logHtml;
}

for (const btn of $("controls").querySelectorAll("button[data-action]")) {
  btn.addEventListener("click", () => {
    void sendControl((btn as HTMLButtonElement).dataset.action as ControlAction);
  });
}

void refreshSide().then(() => {
  render();
  void poll();
});
