// 3D-to-screen projection and draw-list construction. Pure computation so
// the rendering geometry (including the estimate/reference coincidence at
// default zoom) is testable without a canvas.

import { NetworkSpec } from "./protocol.js";
import { TrajectorySample } from "./session.js";

export interface Camera {
  yawDeg: number; // rotation about the world z axis
  pitchDeg: number; // elevation of the view direction
  zoom: number; // pixels per meter
  cx: number; // screen center x
  cy: number; // screen center y
  target: [number, number, number];
}

export const DEFAULT_CAMERA: Camera = {
  yawDeg: -35,
  pitchDeg: 25,
  zoom: 420,
  cx: 480,
  cy: 360,
  target: [0.4, 0.2, 0.0],
};

export interface Stroke {
  points: [number, number][]; // screen px
  color: string;
  width: number;
  dashed: boolean;
}

export interface DrawList {
  tubes: Stroke[];
  reference: Stroke | null;
  estimate: Stroke | null;
  tip: { at: [number, number]; heading: [number, number] } | null;
  stale: boolean;
}

// orthographic view: rotate world points into the camera frame, drop depth
export function project(camera: Camera, p: [number, number, number] | number[]): [number, number] {
  const yaw = (camera.yawDeg * Math.PI) / 180;
  const pitch = (camera.pitchDeg * Math.PI) / 180;
  const x = p[0] - camera.target[0];
  const y = p[1] - camera.target[1];
  const z = p[2] - camera.target[2];
  const x1 = x * Math.cos(yaw) + y * Math.sin(yaw);
  const y1 = -x * Math.sin(yaw) + y * Math.cos(yaw);
  const y2 = y1 * Math.cos(pitch) + z * Math.sin(pitch);
  return [camera.cx + camera.zoom * x1, camera.cy - camera.zoom * y2];
}

export function projectPolyline(camera: Camera, points: number[][]): [number, number][] {
  return points.map((p) => project(camera, p as [number, number, number]));
}

export function buildDrawList(
  camera: Camera,
  network: NetworkSpec | null,
  reference: number[][] | null,
  trajectory: TrajectorySample[],
  stale: boolean
): DrawList {
  const tubes: Stroke[] = [];
  if (network) {
    for (const seg of network.segments) {
      tubes.push({
        points: [project(camera, seg.start), project(camera, seg.end)],
        color: "rgba(120, 140, 160, 0.35)",
        width: Math.max(2, seg.diameter * camera.zoom),
        dashed: false,
      });
    }
  }
  const ref: Stroke | null = reference
    ? {
        points: projectPolyline(camera, reference),
        color: "#222222",
        width: 1.5,
        dashed: true,
      }
    : null;
  const est: Stroke | null = trajectory.length
    ? {
        points: projectPolyline(
          camera,
          trajectory.map((s) => s.p as unknown as number[])
        ),
        color: "#1f5fd0",
        width: 2,
        dashed: false,
      }
    : null;
  let tip: DrawList["tip"] = null;
  if (trajectory.length >= 1) {
    const last = trajectory[trajectory.length - 1].p;
    const at = project(camera, last);
    let heading: [number, number] = [1, 0];
    if (trajectory.length >= 2) {
      const prev = project(camera, trajectory[trajectory.length - 2].p);
      const dx = at[0] - prev[0];
      const dy = at[1] - prev[1];
      const n = Math.hypot(dx, dy) || 1;
      heading = [dx / n, dy / n];
    }
    tip = { at, heading };
  }
  return { tubes, reference: ref, estimate: est, tip, stale };
}

// largest screen-space gap between two polylines' endpoints; the noiseless
// run must keep this under a pixel at the default zoom
export function endpointGapPx(a: [number, number][], b: [number, number][]): number {
  if (!a.length || !b.length) return Infinity;
  const pa = a[a.length - 1];
  const pb = b[b.length - 1];
  return Math.hypot(pa[0] - pb[0], pa[1] - pb[1]);
}

// worst distance from each vertex of a to the polyline b, in px
export function maxDeviationPx(a: [number, number][], b: [number, number][]): number {
  let worst = 0;
  for (const p of a) {
    let best = Infinity;
    for (let i = 0; i + 1 < b.length; i++) {
      best = Math.min(best, pointSegmentDistance(p, b[i], b[i + 1]));
    }
    worst = Math.max(worst, best);
  }
  return worst;
}

function pointSegmentDistance(
  p: [number, number],
  a: [number, number],
  b: [number, number]
): number {
  const abx = b[0] - a[0];
  const aby = b[1] - a[1];
  const denom = abx * abx + aby * aby;
  let t = denom === 0 ? 0 : ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / denom;
  t = Math.max(0, Math.min(1, t));
  const cx = a[0] + t * abx;
  const cy = a[1] + t * aby;
  return Math.hypot(p[0] - cx, p[1] - cy);
}
