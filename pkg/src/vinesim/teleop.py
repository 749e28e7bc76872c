"""Teleoperation wire protocol and session service.

Operator commands travel as newline-delimited ASCII `motor,pwm,duration`
triples; telemetry and control frames are newline-delimited JSON.  The
service accepts any number of concurrent clients over plain TCP and (for
browsers) a minimal WebSocket endpoint carrying the same line protocol.
All client commands funnel through one FIFO into the single-owner
simulation loop; acknowledgments echo a globally increasing sequence number.
"""

import asyncio
import base64
import hashlib
import itertools
import json
import os
import struct
from dataclasses import dataclass

from .environment import network_to_spec, centerline
from .localization import StreamingLocalizer, SensorFrame, EncoderSample
from .simulator import MotorCommand, Simulator, synth_imu, synth_encoder, NoiseModel

BIND_ENV_VAR = "VINESIM_BIND"
DEFAULT_TELEMETRY_HZ = 10.0
WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class CommandError(ValueError):
    """Base for operator command parse failures."""


class CommandFieldCountError(CommandError):
    pass


class CommandNumericError(CommandError):
    pass


class CommandRangeError(CommandError):
    pass


@dataclass(frozen=True)
class CommandMessage:
    """Validated operator command."""

    motor: int
    pwm: int
    duration: float

    def __post_init__(self):
        if not 0 <= self.motor <= 4:
            raise CommandRangeError(f"motor {self.motor} outside 0..4")
        if not -100 <= self.pwm <= 100:
            raise CommandRangeError(f"pwm {self.pwm} outside -100..100")
        if not 0 < self.duration <= 60:
            raise CommandRangeError(f"duration {self.duration} outside (0, 60] s")


@dataclass(frozen=True)
class TelemetryMessage:
    """One telemetry broadcast record."""

    t: float
    tip_position: tuple
    orientation: tuple
    everted_length: float
    braced: bool
    temperature: float = None
    humidity: float = None


def parse_command(line: str) -> CommandMessage:
    """Parse `motor,pwm,duration` with whitespace tolerance.

    Raises CommandFieldCountError, CommandNumericError or CommandRangeError
    so callers can report the precise failure.
    """
    parts = [p.strip() for p in line.strip().split(",")]
    if len(parts) != 3:
        raise CommandFieldCountError(f"expected 3 fields, got {len(parts)}")
    try:
        motor = int(parts[0])
        pwm = int(parts[1])
        duration = float(parts[2])
    except ValueError as e:
        raise CommandNumericError(str(e)) from None
    return CommandMessage(motor, pwm, duration)


def format_command(msg: CommandMessage) -> str:
    """Wire form of a command; inverse of parse_command."""
    return f"{msg.motor},{msg.pwm},{_fmt_num(msg.duration)}"


def _fmt_num(x: float) -> str:
    return format(x, "g")


def serialize_telemetry(msg: TelemetryMessage) -> str:
    """One JSON line per message; key order fixed, optional keys omitted."""
    rec = {
        "t": msg.t,
        "tip_position": list(msg.tip_position),
        "orientation": list(msg.orientation),
        "everted_length": msg.everted_length,
        "braced": msg.braced,
    }
    if msg.temperature is not None:
        rec["temperature"] = msg.temperature
    if msg.humidity is not None:
        rec["humidity"] = msg.humidity
    return json.dumps(rec, separators=(",", ":"))


def parse_telemetry(line: str) -> TelemetryMessage:
    rec = json.loads(line)
    return TelemetryMessage(
        t=rec["t"],
        tip_position=tuple(rec["tip_position"]),
        orientation=tuple(rec["orientation"]),
        everted_length=rec["everted_length"],
        braced=rec["braced"],
        temperature=rec.get("temperature"),
        humidity=rec.get("humidity"),
    )


def resolve_bind(bind: str = None) -> tuple:
    """host:port from the argument or the environment override."""
    raw = bind or os.environ.get(BIND_ENV_VAR) or "127.0.0.1:8731"
    host, _, port = raw.rpartition(":")
    return host or "127.0.0.1", int(port)


class TeleopServer:
    """Socket session service bridging operator clients to the simulator.

    One acceptor, one reader task per client, one broadcaster, one stepper;
    the simulator is touched only from this event loop.  speedup scales
    simulated time against wall time for tests and demos.
    """

    def __init__(self, sim: Simulator, bind: str = None, telemetry_hz: float = DEFAULT_TELEMETRY_HZ,
                 speedup: float = 1.0, noise: NoiseModel = None):
        self.sim = sim
        self.host, self.port = resolve_bind(bind)
        self.ws_port = None
        self.telemetry_hz = telemetry_hz
        self.speedup = speedup
        self.noise = noise or NoiseModel.noiseless()
        self._seq = itertools.count(1)
        self._clients = set()
        self._server = None
        self._ws_server = None
        self._tasks = []
        snap = sim.snapshot()
        self.localizer = StreamingLocalizer(q0=snap.orientation, start=snap.tip_position)
        self._started = asyncio.Event()

    # -- frames ----------------------------------------------------------

    def _scene_frame(self) -> str:
        rec = {"type": "scene"}
        if self.sim.network is not None:
            rec["network"] = network_to_spec(self.sim.network)
            rec["reference"] = [list(p) for p in centerline(self.sim.network)]
        rec["telemetry_hz"] = self.telemetry_hz
        return json.dumps(rec, separators=(",", ":"))

    def _telemetry_frame(self) -> str:
        t, pos, q = self.localizer.snapshot
        snap = self.sim.snapshot()
        msg = TelemetryMessage(
            t=round(snap.t, 9),
            tip_position=tuple(pos),
            orientation=tuple(q),
            everted_length=snap.everted_length,
            braced=snap.braced,
        )
        return serialize_telemetry(msg)

    # -- client handling ---------------------------------------------------

    async def _handle_line(self, line: str, client) -> str:
        try:
            msg = parse_command(line)
        except CommandError as e:
            return json.dumps(
                {"type": "error", "kind": type(e).__name__, "detail": str(e)},
                separators=(",", ":"),
            )
        seq = next(self._seq)
        self.sim.enqueue_command(MotorCommand(msg.motor, msg.pwm, msg.duration))
        return json.dumps(
            {"type": "ack", "seq": seq, "command": format_command(msg)},
            separators=(",", ":"),
        )

    async def _client_task(self, reader, writer, framer):
        client = (writer, framer)
        self._clients.add(client)
        try:
            await framer.send(writer, self._scene_frame())
            while True:
                line = await framer.recv(reader)
                if line is None:
                    break
                if not line.strip():
                    continue
                reply = await self._handle_line(line, client)
                await framer.send(writer, reply)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            self._clients.discard(client)
            writer.close()

    async def _broadcaster(self):
        period = 1.0 / self.telemetry_hz
        loop = asyncio.get_running_loop()
        next_t = loop.time() + period
        while True:
            await asyncio.sleep(max(0.0, next_t - loop.time()))
            next_t += period
            frame = self._telemetry_frame()
            for writer, framer in list(self._clients):
                try:
                    await framer.send(writer, frame)
                except (ConnectionResetError, RuntimeError):
                    self._clients.discard((writer, framer))

    async def _stepper(self):
        # sensors for step k are emitted after step k+1 exists, so the gyro
        # difference and the velocity window stay consistent with a batch run
        dt = self.sim.config.dt
        loop = asyncio.get_running_loop()
        next_t = loop.time()
        u_before = (0.0, 0.0, 0.0)
        while True:
            await asyncio.sleep(max(0.0, next_t - loop.time()))
            next_t += dt / self.speedup
            n = len(self.sim.step_lengths)
            self.sim.step()
            if n < 1:
                continue
            k = n - 1
            qs = self.sim.orient_history[k : k + 2]
            ps = self.sim.pos_history[k : k + 3]
            frames = synth_imu(qs, ps, dt, self.noise, seed=k, initial_velocity=u_before)
            u_before = tuple((b - a) / dt for a, b in zip(ps[0], ps[1]))
            enc = synth_encoder([self.sim.step_lengths[k]], dt, self.noise)
            t_k = k * dt
            self.localizer.feed(
                SensorFrame(t_k, frames[0].omega_B, frames[0].a_B, frames[0].m_B),
                EncoderSample(t_k, enc[0].delta_theta),
            )
            self.localizer.process()

    # -- lifecycle -----------------------------------------------------------

    async def start(self):
        self._server = await asyncio.start_server(self._tcp_client, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        ws = await asyncio.start_server(self._ws_client, self.host, 0)
        self._ws_server = ws
        self.ws_port = ws.sockets[0].getsockname()[1]
        self._tasks = [
            asyncio.create_task(self._broadcaster()),
            asyncio.create_task(self._stepper()),
        ]
        self._started.set()

    async def stop(self):
        for t in self._tasks:
            t.cancel()
        for srv in (self._server, self._ws_server):
            if srv is not None:
                srv.close()
                await srv.wait_closed()

    async def serve_forever(self):
        await self.start()
        await asyncio.gather(*(s.serve_forever() for s in (self._server, self._ws_server)))

    async def _tcp_client(self, reader, writer):
        await self._client_task(reader, writer, _LineFramer())

    async def _ws_client(self, reader, writer):
        framer = _WebSocketFramer()
        if not await framer.handshake(reader, writer):
            writer.close()
            return
        await self._client_task(reader, writer, framer)


class _LineFramer:
    """Newline-delimited text over a plain stream."""

    async def recv(self, reader):
        line = await reader.readline()
        if not line:
            return None
        return line.decode("utf-8", errors="replace")

    async def send(self, writer, text: str):
        writer.write(text.encode("utf-8") + b"\n")
        await writer.drain()


class _WebSocketFramer:
    """Minimal RFC 6455 server-side framing (text frames only)."""

    async def handshake(self, reader, writer) -> bool:
        request = await reader.readuntil(b"\r\n\r\n")
        headers = {}
        for raw in request.decode("latin-1").split("\r\n")[1:]:
            if ":" in raw:
                k, v = raw.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key")
        if key is None:
            return False
        accept = base64.b64encode(hashlib.sha1((key + WS_MAGIC).encode()).digest()).decode()
        writer.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode()
        )
        await writer.drain()
        return True

    async def recv(self, reader):
        while True:
            try:
                head = await reader.readexactly(2)
            except asyncio.IncompleteReadError:
                return None
            fin_opcode, len7 = head
            opcode = fin_opcode & 0x0F
            masked = bool(len7 & 0x80)
            length = len7 & 0x7F
            if length == 126:
                length = struct.unpack(">H", await reader.readexactly(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", await reader.readexactly(8))[0]
            mask = await reader.readexactly(4) if masked else b"\x00" * 4
            payload = bytearray(await reader.readexactly(length))
            if masked:
                for i in range(length):
                    payload[i] ^= mask[i % 4]
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping: ignored, clients re-ping
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8", errors="replace")

    async def send(self, writer, text: str):
        data = text.encode("utf-8")
        n = len(data)
        if n < 126:
            head = struct.pack(">BB", 0x81, n)
        elif n < 65536:
            head = struct.pack(">BBH", 0x81, 126, n)
        else:
            head = struct.pack(">BBQ", 0x81, 127, n)
        writer.write(head + data)
        await writer.drain()


def serve(sim: Simulator, bind: str = None, telemetry_hz: float = DEFAULT_TELEMETRY_HZ,
          speedup: float = 1.0, noise: NoiseModel = None) -> TeleopServer:
    """Run the session service until cancelled (blocking entry point)."""
    server = TeleopServer(sim, bind, telemetry_hz, speedup, noise)

    async def _main():
        await server.serve_forever()

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
    return server
