/** Dashboard state, kept free of DOM and network concerns.
 *
 * The page layer feeds poll results and form events in; everything the
 * page renders (history, banner, form states, pending flags) is read
 * back out. That keeps the behaviour unit-testable without a browser.
 */

import type {
  ControlAction,
  ParamRow,
  SeriesPoint,
  Status,
} from "./types.js";

export interface FormState {
  row: ParamRow;
  /** text currently in the input box */
  input: string;
  /** last client-side validation failure, or null */
  inputError: string | null;
  /** server rejection rendered inline (403/400/404), or null */
  serverError: string | null;
  /** a steer was accepted (202) and not yet visible in a snapshot */
  pending: boolean;
  /** raw value sent with the pending steer */
  pendingValue: string | null;
}

export interface ModelOptions {
  pollIntervalMs?: number;
  backoffMaxMs?: number;
  historyLimit?: number;
}

export type Banner =
  | { kind: "connected" }
  | { kind: "disconnected"; failures: number }
  | { kind: "terminated" };

export class DashboardModel {
  readonly pollIntervalMs: number;
  readonly backoffMaxMs: number;
  readonly historyLimit: number;

  private history: Status[] = [];
  private failures = 0;
  private inFlight = false;
  private expectingTermination = false;
  private sawTermination = false;
  private forms = new Map<string, FormState>();
  private pendingAction: ControlAction | null = null;
  private lastError: string | null = null;

  constructor(opts: ModelOptions = {}) {
    this.pollIntervalMs = opts.pollIntervalMs ?? 1000;
    this.backoffMaxMs = opts.backoffMaxMs ?? 15000;
    this.historyLimit = opts.historyLimit ?? 600;
  }

  // -- polling -------------------------------------------------------------

  /** Claim the poll slot; false means a poll is already in flight. */
  beginPoll(): boolean {
    if (this.inFlight) return false;
    this.inFlight = true;
    return true;
  }

  /** Record a successful /status response (releases the poll slot). */
  recordStatus(s: Status): void {
    this.inFlight = false;
    this.failures = 0;
    if (s.terminating) this.expectingTermination = true;
    const last = this.history[this.history.length - 1];
    if (last !== undefined && s.iteration === last.iteration) {
      // same iteration polled twice: one history entry, freshest payload
      this.history[this.history.length - 1] = s;
    } else if (last !== undefined && s.iteration < last.iteration) {
      // iteration went backwards: a different run is behind the URL now
      this.history = [s];
    } else {
      this.history.push(s);
      if (this.history.length > this.historyLimit) {
        this.history.splice(0, this.history.length - this.historyLimit);
      }
    }
    if (this.pendingAction !== null && this.actionReflected(s)) {
      this.pendingAction = null;
    }
    this.ackPendingFromSnapshot();
  }

  /** Record a failed poll; history is kept for post-mortem reading. */
  recordPollFailure(): void {
    this.inFlight = false;
    this.failures += 1;
    if (this.expectingTermination) this.sawTermination = true;
  }

  /** Delay before the next poll: fixed cadence, doubled per failure. */
  nextPollDelayMs(): number {
    if (this.failures === 0) return this.pollIntervalMs;
    const scaled = this.pollIntervalMs * 2 ** (this.failures - 1);
    return Math.min(scaled, this.backoffMaxMs);
  }

  banner(): Banner {
    if (this.failures === 0) return { kind: "connected" };
    if (this.sawTermination) return { kind: "terminated" };
    return { kind: "disconnected", failures: this.failures };
  }

  get connected(): boolean {
    return this.failures === 0;
  }

  // -- history and series --------------------------------------------------

  latest(): Status | undefined {
    return this.history[this.history.length - 1];
  }

  iterations(): number[] {
    return this.history.map((s) => s.iteration);
  }

  historyEntries(): readonly Status[] {
    return this.history;
  }

  normNames(): string[] {
    const latest = this.latest();
    return latest === undefined ? [] : Object.keys(latest.norms).sort();
  }

  /** Chart input for one norm; values come verbatim from /status. */
  series(norm: string): SeriesPoint[] {
    const out: SeriesPoint[] = [];
    for (const s of this.history) {
      const v = s.norms[norm];
      if (v !== undefined) out.push({ iteration: s.iteration, value: v });
    }
    return out;
  }

  observableSeries(name: string): SeriesPoint[] {
    const out: SeriesPoint[] = [];
    for (const s of this.history) {
      const v = s.observables[name];
      if (v !== undefined) out.push({ iteration: s.iteration, value: v });
    }
    return out;
  }

  // -- parameter steering --------------------------------------------------

  setParams(rows: ParamRow[]): void {
    const next = new Map<string, FormState>();
    for (const row of rows) {
      const prev = this.forms.get(row.name);
      next.set(row.name, {
        row,
        input: prev?.input ?? String(row.value),
        inputError: prev?.inputError ?? null,
        serverError: prev?.serverError ?? null,
        pending: prev?.pending ?? false,
        pendingValue: prev?.pendingValue ?? null,
      });
    }
    this.forms = next;
    this.ackPendingFromSnapshot();
  }

  form(name: string): FormState | undefined {
    return this.forms.get(name);
  }

  formNames(): string[] {
    return [...this.forms.keys()].sort();
  }

  steerableNames(): string[] {
    return this.formNames().filter((n) => this.forms.get(n)!.row.steerable);
  }

  setInput(name: string, text: string): void {
    const f = this.forms.get(name);
    if (f === undefined) return;
    f.input = text;
    f.inputError = this.validate(f.row, text);
    f.serverError = null;
  }

  private validate(row: ParamRow, text: string): string | null {
    const t = text.trim();
    if (t === "") return "value required";
    if (row.kind === "int") {
      if (!/^[+-]?\d+$/.test(t)) return "not an integer";
      const v = Number(t);
      if (row.low !== null && v < row.low) return `below minimum ${row.low}`;
      if (row.high !== null && v > row.high) return `above maximum ${row.high}`;
    } else if (row.kind === "real") {
      const v = Number(t);
      if (!Number.isFinite(v)) return "not a number";
      if (row.low !== null && v < row.low) return `below minimum ${row.low}`;
      if (row.high !== null && v > row.high) return `above maximum ${row.high}`;
    } else if (row.kind === "bool") {
      if (!/^(true|false|yes|no|0|1)$/i.test(t)) return "not a boolean";
    } else if (row.kind === "keyword") {
      if (!row.choices.includes(t.toLowerCase())) {
        return `not one of: ${row.choices.join(", ")}`;
      }
    }
    return null;
  }

  /** Whether the submit button should be live (and a request allowed). */
  canSubmit(name: string): boolean {
    const f = this.forms.get(name);
    return (
      f !== undefined &&
      f.row.steerable &&
      f.inputError === null &&
      !f.pending
    );
  }

  /** Mark a steer as sent; call with the value actually POSTed. */
  steerRequested(name: string, value: string): void {
    const f = this.forms.get(name);
    if (f === undefined) return;
    f.pendingValue = value;
    f.serverError = null;
  }

  /** Feed back the HTTP result of a steer POST. */
  steerResult(
    name: string,
    code: number,
    body: { error?: string } | null,
  ): void {
    const f = this.forms.get(name);
    if (f === undefined) return;
    if (code === 202) {
      f.pending = true;
      f.serverError = null;
    } else {
      f.pending = false;
      f.pendingValue = null;
      f.serverError = body?.error ?? `request failed (${code})`;
    }
  }

  /** Clear pending once a later /params refresh shows the new value. */
  private ackPendingFromSnapshot(): void {
    for (const f of this.forms.values()) {
      if (!f.pending || f.pendingValue === null) continue;
      if (String(f.row.value) === f.pendingValue) {
        f.pending = false;
        f.pendingValue = null;
      }
    }
  }

  /** A rejection line in the steering area of /log also ends pending. */
  noteLog(events: string[]): void {
    for (const f of this.forms.values()) {
      if (!f.pending) continue;
      const hit = events.find((e) =>
        e.includes(`steer-reject ${f.row.name}`),
      );
      if (hit !== undefined) {
        f.pending = false;
        f.pendingValue = null;
        f.serverError = hit;
      }
    }
  }

  anyPending(): boolean {
    if (this.pendingAction !== null) return true;
    for (const f of this.forms.values()) if (f.pending) return true;
    return false;
  }

  // -- run control ---------------------------------------------------------

  controlRequested(action: ControlAction): void {
    this.pendingAction = action;
    if (action === "terminate") this.expectingTermination = true;
  }

  controlResult(code: number, body: { error?: string } | null): void {
    if (code !== 202) {
      this.pendingAction = null;
      this.lastError = body?.error ?? `control failed (${code})`;
    }
  }

  get pendingControl(): ControlAction | null {
    return this.pendingAction;
  }

  get inlineError(): string | null {
    return this.lastError;
  }

  clearInlineError(): void {
    this.lastError = null;
  }

  private actionReflected(s: Status): boolean {
    switch (this.pendingAction) {
      case "pause":
        return s.paused;
      case "resume":
        return !s.paused;
      case "terminate":
        return s.terminating;
      case "checkpoint":
        return true; // confirmed via /log, not /status
      default:
        return false;
    }
  }
}
