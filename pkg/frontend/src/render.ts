// StateUpdate -> drawable scene. The model copies payload geometry
// verbatim: what the engine sent is exactly what gets drawn.

import type { Point, Rect, StateUpdate } from "./protocol.js";

export type Highlight =
  | { kind: "quadrant"; rect: Rect }
  | { kind: "direction"; vector: [number, number] }
  | { kind: "cursor-motion"; vector: [number, number] }
  | { kind: "action"; index: number; label: string }
  | { kind: "done"; action: string; point: Point };

export interface RenderModel {
  phase: StateUpdate["phase"];
  depth: number;
  active: Rect;
  target: Rect | null;
  cursor: Point | null;
  highlight: Highlight | null;
  actions: string[];
  actionIndex: number | null;
  taskId: number;
  intervalMs: number;
}

export function toRenderModel(u: StateUpdate): RenderModel {
  let highlight: Highlight | null = null;
  let actionIndex: number | null = null;
  if (u.phase === "block" && u.highlight_region) {
    highlight = { kind: "quadrant", rect: u.highlight_region };
  } else if (u.phase === "direction" && u.direction) {
    highlight = { kind: "direction", vector: u.direction };
  } else if (u.phase === "cursor" && u.direction) {
    highlight = { kind: "cursor-motion", vector: u.direction };
  } else if (u.phase === "action") {
    actionIndex = u.highlight;
    highlight = { kind: "action", index: u.highlight, label: u.actions[u.highlight] };
  } else if (u.phase === "done" && u.action && u.cursor) {
    highlight = { kind: "done", action: u.action, point: u.cursor };
  }
  return {
    phase: u.phase,
    depth: u.depth,
    active: u.active,
    target: u.target,
    cursor: u.cursor,
    highlight,
    actions: u.actions,
    actionIndex,
    taskId: u.task_id,
    intervalMs: u.interval_ms,
  };
}

// ---------------------------------------------------------------------------
// Canvas painting

export interface Palette {
  screenFill: string;
  activeFill: string;
  highlightFill: string;
  targetStroke: string;
  cursor: string;
  doneMark: string;
  arrow: string;
}

export const DEFAULT_PALETTE: Palette = {
  screenFill: "#10141c",
  activeFill: "rgba(90, 140, 255, 0.18)",
  highlightFill: "rgba(120, 200, 255, 0.45)",
  targetStroke: "#ffb454",
  cursor: "#ff5470",
  doneMark: "#7cff6b",
  arrow: "#e8ecf4",
};

function rectPath(
  ctx: CanvasRenderingContext2D,
  [x, y, w, h]: Rect,
  scale: number,
): [number, number, number, number] {
  return [x * scale, y * scale, w * scale, h * scale];
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  model: RenderModel,
  screen: Rect,
  scale: number,
  palette: Palette = DEFAULT_PALETTE,
): void {
  const [sx, sy, sw, sh] = rectPath(ctx, screen, scale);
  ctx.clearRect(sx, sy, sw, sh);
  ctx.fillStyle = palette.screenFill;
  ctx.fillRect(sx, sy, sw, sh);

  ctx.fillStyle = palette.activeFill;
  ctx.fillRect(...rectPath(ctx, model.active, scale));

  if (model.highlight?.kind === "quadrant") {
    ctx.fillStyle = palette.highlightFill;
    ctx.fillRect(...rectPath(ctx, model.highlight.rect, scale));
  }

  if (model.target) {
    ctx.strokeStyle = palette.targetStroke;
    ctx.lineWidth = 2;
    ctx.strokeRect(...rectPath(ctx, model.target, scale));
  }

  if (
    model.highlight?.kind === "direction" ||
    model.highlight?.kind === "cursor-motion"
  ) {
    const [dx, dy] = model.highlight.vector;
    const origin = model.cursor ?? centerOf(model.active);
    drawArrow(ctx, origin, [dx, dy], scale, palette.arrow);
  }

  if (model.cursor) {
    ctx.fillStyle = palette.cursor;
    ctx.beginPath();
    ctx.arc(model.cursor[0] * scale, model.cursor[1] * scale, 4, 0, Math.PI * 2);
    ctx.fill();
  }

  if (model.highlight?.kind === "done") {
    const [px, py] = model.highlight.point;
    ctx.strokeStyle = palette.doneMark;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px * scale, py * scale, 9, 0, Math.PI * 2);
    ctx.stroke();
  }
}

function centerOf(r: Rect): Point {
  return [r[0] + Math.floor(r[2] / 2), r[1] + Math.floor(r[3] / 2)];
}

function drawArrow(
  ctx: CanvasRenderingContext2D,
  from: Point,
  dir: [number, number],
  scale: number,
  color: string,
): void {
  const len = 36;
  const mag = Math.hypot(dir[0], dir[1]) || 1;
  const ux = dir[0] / mag;
  const uy = dir[1] / mag;
  const x0 = from[0] * scale;
  const y0 = from[1] * scale;
  const x1 = x0 + ux * len;
  const y1 = y0 + uy * len;
  ctx.strokeStyle = color;
  ctx.lineWidth = 2.5;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  // arrowhead
  const a = Math.atan2(uy, ux);
  for (const side of [-1, 1]) {
    ctx.moveTo(x1, y1);
    ctx.lineTo(
      x1 - 9 * Math.cos(a + (side * Math.PI) / 7),
      y1 - 9 * Math.sin(a + (side * Math.PI) / 7),
    );
  }
  ctx.stroke();
}
