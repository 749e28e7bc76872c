// Cockpit session state: latest telemetry, a bounded trajectory replay
// buffer, the pending command echo list, and staleness tracking. The
// session never touches simulation truth except by emitting command lines.

import {
  SceneFrame,
  ServerFrame,
  TelemetryMessage,
  parseServerFrame,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "closed";

export interface PendingCommand {
  wire: string;
  sentWallMs: number;
}

export interface TrajectorySample {
  t: number;
  p: [number, number, number];
}

export class CockpitSession {
  state: ConnectionState = "connecting";
  latest: TelemetryMessage | null = null;
  scene: SceneFrame | null = null;
  trajectory: TrajectorySample[] = [];
  pending: PendingCommand[] = [];
  errors: string[] = [];
  telemetryHz = 10;
  lastTelemetryWallMs: number | null = null;

  constructor(public bufferCap = 5000) {}

  markConnected(): void {
    this.state = "connected";
  }

  markClosed(): void {
    this.state = "closed";
  }

  commandSent(wire: string, wallMs: number): void {
    this.pending.push({ wire, sentWallMs: wallMs });
  }

  onLine(line: string, wallMs: number): ServerFrame | null {
    const frame = parseServerFrame(line);
    if (frame === null) return null;
    switch (frame.kind) {
      case "scene":
        this.scene = frame.msg;
        if (frame.msg.telemetry_hz) this.telemetryHz = frame.msg.telemetry_hz;
        break;
      case "telemetry": {
        const msg = frame.msg;
        this.latest = msg;
        this.lastTelemetryWallMs = wallMs;
        const last = this.trajectory[this.trajectory.length - 1];
        if (!last || msg.t > last.t) {
          this.trajectory.push({ t: msg.t, p: msg.tip_position });
          if (this.trajectory.length > this.bufferCap) {
            this.trajectory.splice(0, this.trajectory.length - this.bufferCap);
          }
        }
        break;
      }
      case "ack": {
        // a command stays pending until its ack sequence number arrives
        const idx = this.pending.findIndex((p) => p.wire === frame.msg.command);
        if (idx >= 0) this.pending.splice(idx, 1);
        break;
      }
      case "error":
        this.errors.push(`${frame.msg.kind}: ${frame.msg.detail}`);
        break;
    }
    return frame;
  }

  // stale when no telemetry arrived for two broadcast periods
  isStale(nowWallMs: number): boolean {
    if (this.state !== "connected") return true;
    if (this.lastTelemetryWallMs === null) return false;
    const periodMs = 1000 / this.telemetryHz;
    return nowWallMs - this.lastTelemetryWallMs > 2 * periodMs;
  }

  exportReplay(): string {
    return JSON.stringify({
      trajectory: this.trajectory,
      telemetry_hz: this.telemetryHz,
    });
  }

  importReplay(data: string): void {
    const rec = JSON.parse(data);
    this.trajectory = rec.trajectory ?? [];
    if (rec.telemetry_hz) this.telemetryHz = rec.telemetry_hz;
  }
}
