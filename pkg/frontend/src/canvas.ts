// Projection planner for the trajectory views. Produces pure draw commands
// from service arrays; the only client-side computation is the affine
// world-to-pixel mapping and splitting the node list at the phase boundaries
// the plan's durations define. No dynamics are evaluated here.

import type { PlanWire, SolveRecord } from "./types.js";

export type ViewAxis = "TR" | "TN";

export interface WorldPoint {
  x: number; // tangential, m
  y: number; // radial (TR) or normal (TN), m
}

export interface Polyline {
  phase: number;
  failed: boolean;
  points: WorldPoint[];
}

export interface Circle {
  kind: "koz" | "shell";
  radius: number;
}

export interface DrawPlan {
  axis: ViewAxis;
  circles: Circle[];
  polylines: Polyline[];
  nodes: WorldPoint[];
  toPixel: (p: WorldPoint) => { px: number; py: number };
  bounds: { xMin: number; xMax: number; yMin: number; yMax: number };
}

/** Node index ranges per phase: phase i covers nodes [starts[i], starts[i+1]]. */
export function phaseNodeSpans(plan: PlanWire): [number, number][] {
  const spans: [number, number][] = [];
  let at = 0;
  for (const steps of plan.durations) {
    spans.push([at, at + steps]);
    at += steps;
  }
  return spans;
}

function axisColumns(axis: ViewAxis): [number, number] {
  // rtn_states rows are [r_R, r_T, r_N, v_R, v_T, v_N]
  return axis === "TR" ? [1, 0] : [1, 2];
}

export function worldPoints(solve: SolveRecord, axis: ViewAxis): WorldPoint[] {
  const [cx, cy] = axisColumns(axis);
  return solve.rtn_states.map((row) => ({ x: row[cx]!, y: row[cy]! }));
}

export function planView(
  solve: SolveRecord,
  axis: ViewAxis,
  rKoz: number,
  deltaRObs: number,
  width: number,
  height: number,
  pad = 20,
): DrawPlan {
  const nodes = worldPoints(solve, axis);
  const shell = rKoz + deltaRObs;
  let xMin = -shell;
  let xMax = shell;
  let yMin = -shell;
  let yMax = shell;
  for (const p of nodes) {
    xMin = Math.min(xMin, p.x);
    xMax = Math.max(xMax, p.x);
    yMin = Math.min(yMin, p.y);
    yMax = Math.max(yMax, p.y);
  }
  const scale = Math.min((width - 2 * pad) / (xMax - xMin), (height - 2 * pad) / (yMax - yMin));
  const toPixel = (p: WorldPoint) => ({
    px: pad + (p.x - xMin) * scale,
    // screen y grows downward; radial/normal grow upward
    py: height - pad - (p.y - yMin) * scale,
  });

  const polylines: Polyline[] = phaseNodeSpans(solve.plan).map(([a, b], i) => ({
    phase: i,
    failed: solve.failed_phase === i,
    points: nodes.slice(a, b + 1),
  }));

  return {
    axis,
    circles: [
      { kind: "koz", radius: rKoz },
      { kind: "shell", radius: shell },
    ],
    polylines,
    nodes,
    toPixel,
    bounds: { xMin, xMax, yMin, yMax },
  };
}

/** Execute a draw plan on a 2-D canvas context. */
export function drawOnCanvas(ctx: CanvasRenderingContext2D, plan: DrawPlan, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  const origin = plan.toPixel({ x: 0, y: 0 });
  const unit = plan.toPixel({ x: 1, y: 0 }).px - origin.px;

  for (const circle of plan.circles) {
    ctx.beginPath();
    ctx.arc(origin.px, origin.py, circle.radius * unit, 0, 2 * Math.PI);
    if (circle.kind === "koz") {
      ctx.fillStyle = "rgba(214, 69, 65, 0.25)";
      ctx.fill();
      ctx.strokeStyle = "#d64541";
    } else {
      ctx.strokeStyle = "rgba(107, 185, 240, 0.8)";
      ctx.setLineDash([6, 4]);
    }
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const line of plan.polylines) {
    ctx.beginPath();
    line.points.forEach((p, i) => {
      const { px, py } = plan.toPixel(p);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.lineWidth = line.failed ? 3 : 1.5;
    ctx.strokeStyle = line.failed ? "#ff4d4f" : ["#7bd88f", "#ffd866", "#ab9df2"][line.phase % 3]!;
    ctx.stroke();
  }

  ctx.fillStyle = "#e0e0e0";
  for (const p of plan.nodes) {
    const { px, py } = plan.toPixel(p);
    ctx.fillRect(px - 1.5, py - 1.5, 3, 3);
  }
}
