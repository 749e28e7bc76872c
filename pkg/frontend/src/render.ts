// Canvas renderer for a draw list. Kept as thin as possible: all geometry
// lives in scene.ts.

import { DrawList, Stroke } from "./scene.js";

export function renderDrawList(ctx: CanvasRenderingContext2D, list: DrawList, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#f7f8fa";
  ctx.fillRect(0, 0, width, height);
  for (const tube of list.tubes) {
    strokePath(ctx, tube);
  }
  if (list.reference) strokePath(ctx, list.reference);
  if (list.estimate) strokePath(ctx, list.estimate);
  if (list.tip) {
    const { at, heading } = list.tip;
    ctx.fillStyle = "#d03a1f";
    ctx.beginPath();
    ctx.arc(at[0], at[1], 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = "#d03a1f";
    ctx.lineWidth = 2;
    ctx.setLineDash([]);
    ctx.beginPath();
    ctx.moveTo(at[0], at[1]);
    ctx.lineTo(at[0] + 14 * heading[0], at[1] + 14 * heading[1]);
    ctx.stroke();
  }
  if (list.stale) {
    ctx.fillStyle = "#c02020";
    ctx.font = "bold 14px sans-serif";
    ctx.fillText("STALE", 12, 22);
  }
}

function strokePath(ctx: CanvasRenderingContext2D, s: Stroke): void {
  if (s.points.length < 2) return;
  ctx.strokeStyle = s.color;
  ctx.lineWidth = s.width;
  ctx.lineCap = "round";
  ctx.setLineDash(s.dashed ? [6, 5] : []);
  ctx.beginPath();
  ctx.moveTo(s.points[0][0], s.points[0][1]);
  for (let i = 1; i < s.points.length; i++) {
    ctx.lineTo(s.points[i][0], s.points[i][1]);
  }
  ctx.stroke();
}
