// Message schema of the engine's NDJSON stream. Field shapes mirror the
// server exactly; the UI must not re-derive any geometry from them.

export type Rect = [number, number, number, number]; // x, y, w, h
export type Point = [number, number];

export type PhaseName = "block" | "direction" | "cursor" | "action" | "done";

export interface StateUpdate {
  kind: "StateUpdate";
  seq: number;
  t_ms: number;
  task_id: number;
  target: Rect | null;
  phase: PhaseName;
  depth: number;
  highlight: number;
  active: Rect;
  highlight_region: Rect | null;
  direction: [number, number] | null;
  cursor: Point | null;
  action: string | null;
  actions: string[];
  interval_ms: number;
}

export interface TargetSet {
  kind: "TargetSet";
  seq: number;
  t_ms: number;
  task_id: number;
  target: Rect;
}

export interface TaskLogRow {
  task_id: number;
  completed: boolean;
  time_s: number;
  wrong_selection: boolean;
}

export interface MetricsReport {
  kind: "MetricsReport";
  seq: number;
  t_ms: number;
  final: boolean;
  tp: number;
  fp: number;
  fn: number;
  sa: number | null;
  far: number | null;
  sr: number | null;
  avg_time_s: number | null;
  task_log: TaskLogRow[];
}

export type EngineMessage = StateUpdate | TargetSet | MetricsReport;

export interface BlinkIn {
  kind: "BlinkIn";
  t_ms: number;
}

export interface SessionControl {
  kind: "SessionControl";
  op: "end_of_input" | "finish";
  t_ms?: number;
}

export type ClientMessage = BlinkIn | SessionControl;

const ENGINE_KINDS = new Set(["StateUpdate", "TargetSet", "MetricsReport"]);

export function parseEngineMessage(line: string): EngineMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new Error(`not JSON: ${line.slice(0, 80)}`);
  }
  if (typeof obj !== "object" || obj === null) {
    throw new Error("message is not an object");
  }
  const kind = (obj as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !ENGINE_KINDS.has(kind)) {
    throw new Error(`unknown engine message kind: ${String(kind)}`);
  }
  if (typeof (obj as { seq?: unknown }).seq !== "number") {
    throw new Error("engine message missing seq");
  }
  return obj as EngineMessage;
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
