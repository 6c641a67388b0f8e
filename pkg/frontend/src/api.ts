/** Thin fetch wrappers for the run monitor; the only endpoints the
 * dashboard ever calls are the five documented ones. */

import type {
  ControlAction,
  LogPayload,
  ParamRow,
  Status,
  TimerRow,
} from "./types.js";

export interface ApiResult<T> {
  code: number;
  body: T;
}

/** Base URL from `?api=...`, else same-origin default. */
export function resolveApiBase(search: string, fallback: string): string {
  const q = new URLSearchParams(search);
  const api = q.get("api");
  if (api === null || api.trim() === "") return stripSlash(fallback);
  return stripSlash(api.trim());
}

function stripSlash(u: string): string {
  return u.endsWith("/") ? u.slice(0, -1) : u;
}

export class MonitorApi {
  constructor(readonly base: string) {}

  private async get<T>(path: string): Promise<ApiResult<T>> {
    const r = await fetch(this.base + path);
    return { code: r.status, body: (await r.json()) as T };
  }

  private async post<T>(path: string, payload: unknown): Promise<ApiResult<T>> {
    const r = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return { code: r.status, body: (await r.json()) as T };
  }

  status(): Promise<ApiResult<Status>> {
    return this.get<Status>("/status");
  }

  params(): Promise<ApiResult<{ params: ParamRow[] }>> {
    return this.get<{ params: ParamRow[] }>("/params");
  }

  timers(): Promise<ApiResult<Record<string, TimerRow>>> {
    return this.get<Record<string, TimerRow>>("/timers");
  }

  log(): Promise<ApiResult<LogPayload>> {
    return this.get<LogPayload>("/log");
  }

  steer(
    name: string,
    value: string,
  ): Promise<ApiResult<{ error?: string; queued?: boolean }>> {
    return this.post("/params", { name, value });
  }

  control(
    action: ControlAction,
  ): Promise<ApiResult<{ error?: string; queued?: boolean }>> {
    return this.post("/control", { action });
  }
}
