/** Payload shapes served by the run's HTTP monitor. */

export interface Status {
  iteration: number;
  time: number;
  dt: number;
  uptime: number;
  bin: string;
  state: "running" | "paused";
  paused: boolean;
  terminating: boolean;
  driver: string;
  nranks: number;
  scheme: string;
  nlevels: number;
  norms: Record<string, number>;
  observables: Record<string, number>;
}

export interface ParamRow {
  name: string;
  kind: "int" | "real" | "bool" | "keyword" | "string";
  value: unknown;
  default: unknown;
  steerable: boolean;
  choices: string[];
  low: number | null;
  high: number | null;
  description: string;
}

export interface LogPayload {
  steering: string[];
  events: string[];
}

export interface TimerRow {
  calls: number;
  seconds: number;
}

export type ControlAction = "pause" | "resume" | "checkpoint" | "terminate";

export interface SeriesPoint {
  iteration: number;
  value: number;
}
