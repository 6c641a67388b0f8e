import { describe, expect, it } from "vitest";

import { DashboardModel } from "../src/model.js";
import type { ParamRow, Status } from "../src/types.js";

function snap(iteration: number, over: Partial<Status> = {}): Status {
  return {
    iteration,
    time: iteration * 0.01,
    dt: 0.01,
    uptime: 1 + iteration * 0.1,
    bin: "OUTPUT",
    state: "running",
    paused: false,
    terminating: false,
    driver: "unigrid",
    nranks: 2,
    scheme: "rk4",
    nlevels: 1,
    norms: { "wave::phi": 0.5 + iteration, "wave::pi": 2.0 },
    observables: { "wave::energy": 19.7 },
    ...over,
  };
}

function row(name: string, over: Partial<ParamRow> = {}): ParamRow {
  return {
    name,
    kind: "int",
    value: 0,
    default: 0,
    steerable: true,
    choices: [],
    low: 0,
    high: null,
    description: "",
    ...over,
  };
}

describe("status history", () => {
  it("appends in iteration order", () => {
    const m = new DashboardModel();
    m.beginPoll();
    m.recordStatus(snap(0));
    m.beginPoll();
    m.recordStatus(snap(1));
    m.beginPoll();
    m.recordStatus(snap(3));
    expect(m.iterations()).toEqual([0, 1, 3]);
  });

  it("two polls within one iteration make one entry", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(4, { uptime: 1.0 }));
    m.recordStatus(snap(4, { uptime: 1.5 }));
    expect(m.iterations()).toEqual([4]);
    expect(m.latest()?.uptime).toBe(1.5); // freshest payload kept
  });

  it("a lower iteration means a new run: history restarts", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(40));
    m.recordStatus(snap(41));
    m.recordStatus(snap(2));
    expect(m.iterations()).toEqual([2]);
  });

  it("ring buffer drops the oldest beyond the limit", () => {
    const m = new DashboardModel({ historyLimit: 5 });
    for (let i = 0; i < 12; i++) m.recordStatus(snap(i));
    expect(m.iterations()).toEqual([7, 8, 9, 10, 11]);
  });

  it("series points equal the payload values verbatim", () => {
    const m = new DashboardModel();
    const sent: Status[] = [snap(0), snap(1), snap(2)];
    for (const s of sent) m.recordStatus(s);
    const pts = m.series("wave::phi");
    expect(pts).toEqual(
      sent.map((s) => ({ iteration: s.iteration, value: s.norms["wave::phi"] })),
    );
    expect(m.observableSeries("wave::energy")).toHaveLength(3);
    expect(m.series("wave::nope")).toEqual([]);
  });
});

describe("polling discipline", () => {
  it("allows only one in-flight poll", () => {
    const m = new DashboardModel();
    expect(m.beginPoll()).toBe(true);
    expect(m.beginPoll()).toBe(false);
    m.recordStatus(snap(0));
    expect(m.beginPoll()).toBe(true);
    m.recordPollFailure();
    expect(m.beginPoll()).toBe(true);
  });

  it("keeps a 1 s default cadence while connected", () => {
    const m = new DashboardModel();
    expect(m.pollIntervalMs).toBe(1000);
    m.recordStatus(snap(0));
    expect(m.nextPollDelayMs()).toBe(1000);
  });

  it("backs off exponentially on failures, capped", () => {
    const m = new DashboardModel({ pollIntervalMs: 1000, backoffMaxMs: 6000 });
    const delays: number[] = [];
    for (let i = 0; i < 5; i++) {
      m.recordPollFailure();
      delays.push(m.nextPollDelayMs());
    }
    expect(delays).toEqual([1000, 2000, 4000, 6000, 6000]);
    m.recordStatus(snap(0));
    expect(m.nextPollDelayMs()).toBe(1000); // recovery resets
  });

  it("failure raises the banner but keeps history", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(0));
    m.recordStatus(snap(1));
    m.recordPollFailure();
    expect(m.banner()).toEqual({ kind: "disconnected", failures: 1 });
    expect(m.iterations()).toEqual([0, 1]);
    m.recordStatus(snap(2));
    expect(m.banner()).toEqual({ kind: "connected" });
  });

  it("disconnect after terminate is expected, not an error", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(5));
    m.controlRequested("terminate");
    m.controlResult(202, { queued: true });
    m.recordPollFailure();
    expect(m.banner()).toEqual({ kind: "terminated" });
  });

  it("a terminating snapshot also arms the terminated banner", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(5, { terminating: true }));
    m.recordPollFailure();
    expect(m.banner()).toEqual({ kind: "terminated" });
  });
});

describe("steering forms", () => {
  it("tracks rows and exposes steerables", () => {
    const m = new DashboardModel();
    m.setParams([
      row("io::out_every"),
      row("grid::npoints", { kind: "string", value: "16", steerable: false }),
    ]);
    expect(m.formNames()).toEqual(["grid::npoints", "io::out_every"]);
    expect(m.steerableNames()).toEqual(["io::out_every"]);
    expect(m.canSubmit("grid::npoints")).toBe(false); // no request possible
  });

  it("validates numeric input client-side", () => {
    const m = new DashboardModel();
    m.setParams([row("io::out_every", { low: 0 })]);
    m.setInput("io::out_every", "zebra");
    expect(m.form("io::out_every")?.inputError).toBe("not an integer");
    expect(m.canSubmit("io::out_every")).toBe(false);
    m.setInput("io::out_every", "-3");
    expect(m.form("io::out_every")?.inputError).toBe("below minimum 0");
    m.setInput("io::out_every", "10");
    expect(m.form("io::out_every")?.inputError).toBeNull();
    expect(m.canSubmit("io::out_every")).toBe(true);
  });

  it("validates keyword and real kinds", () => {
    const m = new DashboardModel();
    m.setParams([
      row("mol::scheme", { kind: "keyword", choices: ["rk2", "rk4"] }),
      row("flesh::tfinal", { kind: "real", low: null }),
    ]);
    m.setInput("mol::scheme", "rk7");
    expect(m.form("mol::scheme")?.inputError).toContain("not one of");
    m.setInput("mol::scheme", "rk2");
    expect(m.form("mol::scheme")?.inputError).toBeNull();
    m.setInput("flesh::tfinal", "1.5e2");
    expect(m.form("flesh::tfinal")?.inputError).toBeNull();
  });

  it("202 marks pending until a snapshot reflects the change", () => {
    const m = new DashboardModel();
    m.setParams([row("io::out_every")]);
    m.setInput("io::out_every", "10");
    m.steerRequested("io::out_every", "10");
    m.steerResult("io::out_every", 202, { error: undefined });
    expect(m.form("io::out_every")?.pending).toBe(true);
    expect(m.anyPending()).toBe(true);
    // a later /params refresh still shows 0: stays pending
    m.setParams([row("io::out_every", { value: 0 })]);
    expect(m.form("io::out_every")?.pending).toBe(true);
    // now the server reports the new value
    m.setParams([row("io::out_every", { value: 10 })]);
    expect(m.form("io::out_every")?.pending).toBe(false);
    expect(m.anyPending()).toBe(false);
  });

  it("renders a 403 inline and clears pending", () => {
    const m = new DashboardModel();
    m.setParams([row("grid::npoints", { kind: "string", steerable: false })]);
    m.steerRequested("grid::npoints", "64");
    m.steerResult("grid::npoints", 403, {
      error: "grid::npoints is not steerable",
    });
    const f = m.form("grid::npoints");
    expect(f?.serverError).toBe("grid::npoints is not steerable");
    expect(f?.pending).toBe(false);
  });

  it("renders 400/404 bodies inline too", () => {
    const m = new DashboardModel();
    m.setParams([row("io::out_every")]);
    m.steerResult("io::out_every", 400, { error: "bad value" });
    expect(m.form("io::out_every")?.serverError).toBe("bad value");
    m.steerResult("io::out_every", 404, null);
    expect(m.form("io::out_every")?.serverError).toBe("request failed (404)");
  });

  it("a steer-reject event in /log ends pending with the reason", () => {
    const m = new DashboardModel();
    m.setParams([row("flesh::itlast")]);
    m.steerRequested("flesh::itlast", "5");
    m.steerResult("flesh::itlast", 202, {});
    m.noteLog(["12 steer-reject flesh::itlast: below minimum"]);
    const f = m.form("flesh::itlast");
    expect(f?.pending).toBe(false);
    expect(f?.serverError).toContain("steer-reject");
  });

  it("typing again clears a stale server error", () => {
    const m = new DashboardModel();
    m.setParams([row("io::out_every")]);
    m.steerResult("io::out_every", 400, { error: "bad value" });
    m.setInput("io::out_every", "4");
    expect(m.form("io::out_every")?.serverError).toBeNull();
  });
});

describe("run control", () => {
  it("pause is pending until a paused snapshot arrives", () => {
    const m = new DashboardModel();
    m.recordStatus(snap(3));
    m.controlRequested("pause");
    m.controlResult(202, { queued: true });
    expect(m.pendingControl).toBe("pause");
    m.recordStatus(snap(3, { uptime: 99, paused: false }));
    expect(m.pendingControl).toBe("pause"); // not reflected yet
    m.recordStatus(snap(3, { paused: true, state: "paused" }));
    expect(m.pendingControl).toBeNull();
  });

  it("a failed control surfaces an inline error", () => {
    const m = new DashboardModel();
    m.controlRequested("pause");
    m.controlResult(400, { error: "unknown action 'pose'" });
    expect(m.pendingControl).toBeNull();
    expect(m.inlineError).toContain("unknown action");
    m.clearInlineError();
    expect(m.inlineError).toBeNull();
  });
});
