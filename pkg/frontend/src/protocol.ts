// Wire protocol shared with the teleop service: commands are ASCII
// `motor,pwm,duration` lines, replies and telemetry are JSON lines.

export interface CommandMessage {
  motor: number;
  pwm: number;
  duration: number;
}

export interface TelemetryMessage {
  t: number;
  tip_position: [number, number, number];
  orientation: [number, number, number, number];
  everted_length: number;
  braced: boolean;
  temperature?: number;
  humidity?: number;
}

export interface AckFrame {
  type: "ack";
  seq: number;
  command: string;
}

export interface ErrorFrame {
  type: "error";
  kind: string;
  detail: string;
}

export interface SceneFrame {
  type: "scene";
  network?: NetworkSpec;
  reference?: number[][];
  telemetry_hz?: number;
}

export interface NetworkSpec {
  segments: { id: string; start: number[]; end: number[]; diameter: number }[];
  junctions: {
    id: string;
    position: number[];
    branch_ids: string[];
    branch_labels?: string[];
  }[];
  entry: string;
}

export type ServerFrame =
  | { kind: "telemetry"; msg: TelemetryMessage }
  | { kind: "ack"; msg: AckFrame }
  | { kind: "error"; msg: ErrorFrame }
  | { kind: "scene"; msg: SceneFrame };

export function formatCommand(cmd: CommandMessage): string {
  return `${cmd.motor},${cmd.pwm},${formatNumber(cmd.duration)}`;
}

// matches the service's %g-style rendering: no trailing zeros, "10" not "10.0"
export function formatNumber(x: number): string {
  if (Number.isInteger(x)) return String(x);
  return String(parseFloat(x.toPrecision(6)));
}

export function parseServerFrame(line: string): ServerFrame | null {
  let rec: any;
  try {
    rec = JSON.parse(line);
  } catch {
    return null;
  }
  if (rec && typeof rec === "object") {
    if (rec.type === "ack") return { kind: "ack", msg: rec as AckFrame };
    if (rec.type === "error") return { kind: "error", msg: rec as ErrorFrame };
    if (rec.type === "scene") return { kind: "scene", msg: rec as SceneFrame };
    if (typeof rec.t === "number" && Array.isArray(rec.tip_position)) {
      return { kind: "telemetry", msg: rec as TelemetryMessage };
    }
  }
  return null;
}
