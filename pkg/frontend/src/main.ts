// Cockpit wiring: WebSocket connection, keyboard handlers, sliders, canvas
// loop, telemetry panel. Configure with ?host=127.0.0.1:8732&hz=10.

import { keyToWire, DEFAULT_SETTINGS, ControlSettings } from "./keymap.js";
import { CockpitSession } from "./session.js";
import { buildDrawList, DEFAULT_CAMERA } from "./scene.js";
import { renderDrawList } from "./render.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? "127.0.0.1:8732";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const panel = document.getElementById("panel")!;
const pendingList = document.getElementById("pending")!;

const session = new CockpitSession();
const settings: ControlSettings = { ...DEFAULT_SETTINGS };
let bracingEngaged = false;

function bindSlider(id: string, apply: (v: number) => void): void {
  const el = document.getElementById(id) as HTMLInputElement | null;
  if (!el) return;
  apply(parseFloat(el.value));
  el.addEventListener("input", () => apply(parseFloat(el.value)));
}

bindSlider("steer-duty", (v) => (settings.steerDuty = v));
bindSlider("steer-duration", (v) => (settings.steerDuration = v));
bindSlider("growth-duty", (v) => (settings.growthDuty = v));
bindSlider("growth-duration", (v) => (settings.growthDuration = v));

const ws = new WebSocket(`ws://${host}/`);

ws.onopen = () => session.markConnected();
ws.onclose = () => session.markClosed();
ws.onerror = () => session.markClosed();
ws.onmessage = (ev: MessageEvent) => {
  session.onLine(String(ev.data), performance.now());
};

window.addEventListener("keydown", (ev) => {
  const wire = keyToWire(ev.key, { bracingEngaged }, settings);
  if (wire === null || ws.readyState !== WebSocket.OPEN) return;
  ev.preventDefault();
  ws.send(wire + "\n");
  session.commandSent(wire, performance.now());
  if (ev.key === "b" || ev.key === "B") bracingEngaged = !bracingEngaged;
});

const exportBtn = document.getElementById("export");
exportBtn?.addEventListener("click", () => {
  const blob = new Blob([session.exportReplay()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "replay.json";
  a.click();
});

function tick(): void {
  const now = performance.now();
  const list = buildDrawList(
    DEFAULT_CAMERA,
    session.scene?.network ?? null,
    session.scene?.reference ?? null,
    session.trajectory,
    session.isStale(now)
  );
  renderDrawList(ctx, list, canvas.width, canvas.height);

  const t = session.latest;
  const lines = [
    `state: ${session.state}${session.isStale(now) ? " (stale)" : ""}`,
    t ? `t = ${t.t.toFixed(2)} s` : "waiting for telemetry",
    t ? `tip = (${t.tip_position.map((v) => v.toFixed(3)).join(", ")}) m` : "",
    t ? `everted = ${t.everted_length.toFixed(3)} m` : "",
    t ? `braced = ${t.braced}` : "",
  ];
  if (t?.temperature !== undefined && t.temperature !== null) {
    lines.push(`temperature = ${t.temperature.toFixed(1)} C`);
  }
  if (t?.humidity !== undefined && t.humidity !== null) {
    lines.push(`humidity = ${t.humidity.toFixed(1)} %RH`);
  }
  if (session.errors.length) {
    lines.push(`last error: ${session.errors[session.errors.length - 1]}`);
  }
  panel.textContent = lines.filter(Boolean).join("\n");
  pendingList.textContent = session.pending.length
    ? "pending: " + session.pending.map((p) => p.wire).join("  ")
    : "pending: none";
  requestAnimationFrame(tick);
}

requestAnimationFrame(tick);
