import asyncio
import base64
import hashlib
import json
import socket
import struct
import threading
import time

import numpy as np
import pytest

from vinesim import teleop
from vinesim.simulator import SimConfig, Simulator
from vinesim.environment import build_course
from vinesim.teleop import (
    CommandFieldCountError,
    CommandMessage,
    CommandNumericError,
    CommandRangeError,
    TelemetryMessage,
    TeleopServer,
    format_command,
    parse_command,
    parse_telemetry,
    resolve_bind,
    serialize_telemetry,
)


class TestCommandParsing:
    def test_reference_line(self):
        msg = parse_command("1,100,10")
        assert msg == CommandMessage(1, 100, 10.0)

    def test_zero_duty_noop(self):
        assert parse_command("0,0,1") == CommandMessage(0, 0, 1.0)

    def test_whitespace_tolerance(self):
        assert parse_command("  1 , 100 ,\t10 \n") == CommandMessage(1, 100, 10.0)

    def test_field_count_error(self):
        with pytest.raises(CommandFieldCountError):
            parse_command("1,100")
        with pytest.raises(CommandFieldCountError):
            parse_command("1,100,10,4")

    def test_numeric_error(self):
        with pytest.raises(CommandNumericError):
            parse_command("one,100,10")
        with pytest.raises(CommandNumericError):
            parse_command("1,1e2x,10")

    def test_range_errors(self):
        with pytest.raises(CommandRangeError):
            parse_command("7,100,10")
        with pytest.raises(CommandRangeError):
            parse_command("1,150,10")
        with pytest.raises(CommandRangeError):
            parse_command("1,100,0")
        with pytest.raises(CommandRangeError):
            parse_command("1,100,61")

    def test_format_parse_roundtrip(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            msg = CommandMessage(
                int(rng.integers(0, 5)),
                int(rng.integers(-100, 101)),
                float(np.round(rng.uniform(0.1, 60.0), 3)),
            )
            assert parse_command(format_command(msg)) == msg

    def test_reference_format(self):
        assert format_command(CommandMessage(1, 100, 10.0)) == "1,100,10"


class TestTelemetrySerialization:
    def test_golden_stationary_line(self):
        msg = TelemetryMessage(
            t=0.0,
            tip_position=(0.0, 0.0, 0.0),
            orientation=(1.0, 0.0, 0.0, 0.0),
            everted_length=0.0,
            braced=False,
        )
        golden = (
            '{"t":0.0,"tip_position":[0.0,0.0,0.0],'
            '"orientation":[1.0,0.0,0.0,0.0],"everted_length":0.0,"braced":false}'
        )
        assert serialize_telemetry(msg) == golden

    def test_roundtrip_random(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            msg = TelemetryMessage(
                t=float(rng.uniform(0, 100)),
                tip_position=tuple(float(v) for v in rng.uniform(-1, 1, 3)),
                orientation=tuple(float(v) for v in q),
                everted_length=float(rng.uniform(0, 2)),
                braced=bool(rng.integers(0, 2)),
                temperature=float(rng.uniform(0, 30)),
                humidity=float(rng.uniform(0, 100)),
            )
            back = parse_telemetry(serialize_telemetry(msg))
            assert abs(back.t - msg.t) < 1e-9
            assert np.allclose(back.tip_position, msg.tip_position, atol=1e-9)
            assert np.allclose(back.orientation, msg.orientation, atol=1e-9)

    def test_optional_fields_omitted(self):
        msg = TelemetryMessage(0.0, (0, 0, 0), (1, 0, 0, 0), 0.0, False)
        line = serialize_telemetry(msg)
        assert "temperature" not in line and "humidity" not in line
        assert parse_telemetry(line).temperature is None


def test_resolve_bind_env_override(monkeypatch):
    monkeypatch.setenv(teleop.BIND_ENV_VAR, "0.0.0.0:9999")
    assert resolve_bind(None) == ("0.0.0.0", 9999)
    assert resolve_bind("10.0.0.1:55") == ("10.0.0.1", 55)
    monkeypatch.delenv(teleop.BIND_ENV_VAR)
    assert resolve_bind(None)[0] == "127.0.0.1"


# -- live service -------------------------------------------------------------


def _sim():
    net = build_course(
        {
            "segments": [
                {"id": "a", "start": [0, 0, 0], "end": [3.0, 0, 0], "diameter": 0.053}
            ],
            "entry": "a",
        }
    )
    return Simulator(net, SimConfig())


class Harness:
    def __init__(self, hz=20.0, speedup=100.0):
        self.started = threading.Event()
        self.server = None
        self.loop = None
        self._stop = None
        self.thread = threading.Thread(target=self._run, args=(hz, speedup), daemon=True)
        self.thread.start()
        if not self.started.wait(10):
            raise RuntimeError("server failed to start")

    def _run(self, hz, speedup):
        async def main():
            self.server = TeleopServer(_sim(), bind="127.0.0.1:0", telemetry_hz=hz, speedup=speedup)
            await self.server.start()
            self.loop = asyncio.get_running_loop()
            self._stop = asyncio.Event()
            self.started.set()
            await self._stop.wait()
            await self.server.stop()

        asyncio.run(main())

    def stop(self):
        self.loop.call_soon_threadsafe(self._stop.set)
        self.thread.join(timeout=10)


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.file = self.sock.makefile("rwb")
        scene = json.loads(self.read_line())
        assert scene["type"] == "scene"
        self.scene = scene

    def send(self, line):
        self.file.write(line.encode() + b"\n")
        self.file.flush()

    def read_line(self):
        line = self.file.readline()
        if not line:
            raise ConnectionError("closed")
        return line.decode()

    def read_json(self):
        return json.loads(self.read_line())

    def next_of_type(self, kind, limit=400):
        for _ in range(limit):
            rec = self.read_json()
            if kind == "telemetry" and "t" in rec and "type" not in rec:
                return rec
            if rec.get("type") == kind:
                return rec
        raise AssertionError(f"no {kind} frame seen")

    def close(self):
        self.sock.close()


@pytest.fixture()
def harness():
    h = Harness()
    yield h
    h.stop()


class TestService:
    def test_command_ack_and_growth(self, harness):
        c = Client(harness.server.port)
        c.send("4,100,10")
        ack = c.next_of_type("ack")
        assert ack["seq"] == 1
        assert ack["command"] == "4,100,10"
        t0 = c.next_of_type("telemetry")
        deadline = time.time() + 10
        grew = False
        while time.time() < deadline:
            t1 = c.next_of_type("telemetry")
            if t1["everted_length"] > t0["everted_length"] + 1e-6:
                grew = True
                break
        assert grew
        c.close()

    def test_steering_changes_orientation(self, harness):
        c = Client(harness.server.port)
        base = parse_telemetry(json.dumps(c.next_of_type("telemetry")))
        c.send("2,100,10")
        c.next_of_type("ack")
        deadline = time.time() + 10
        moved = False
        while time.time() < deadline:
            rec = parse_telemetry(json.dumps(c.next_of_type("telemetry")))
            dot = abs(sum(a * b for a, b in zip(rec.orientation, base.orientation)))
            if dot < 0.996:  # > ~10 deg of rotation
                moved = True
                break
        assert moved
        c.close()

    def test_malformed_line_isolated(self, harness):
        a = Client(harness.server.port)
        b = Client(harness.server.port)
        a.send("not,a")
        err = a.next_of_type("error")
        assert err["kind"] == "CommandFieldCountError"
        a.send("9,0,1")
        assert a.next_of_type("error")["kind"] == "CommandRangeError"
        a.send("x,0,1")
        assert a.next_of_type("error")["kind"] == "CommandNumericError"
        # session still alive for both clients
        a.send("0,0,1")
        assert a.next_of_type("ack")["command"] == "0,0,1"
        b.send("1,50,1")
        assert b.next_of_type("ack")["command"] == "1,50,1"
        a.close()
        b.close()

    def test_disconnect_mid_command(self, harness):
        a = Client(harness.server.port)
        b = Client(harness.server.port)
        a.send("4,100,10")
        a.next_of_type("ack")
        a.close()
        t0 = b.next_of_type("telemetry")
        deadline = time.time() + 10
        grew = False
        while time.time() < deadline:
            t1 = b.next_of_type("telemetry")
            if t1["everted_length"] > t0["everted_length"] + 1e-6:
                grew = True
                break
        assert grew  # the command kept executing after the sender left
        b.close()

    def test_eight_client_fifo_ordering(self, harness):
        clients = [Client(harness.server.port) for _ in range(8)]
        per_client = 10
        acks = {i: [] for i in range(8)}

        def pump(i):
            c = clients[i]
            for k in range(per_client):
                c.send(f"0,0,{0.1 + 0.001 * k:.3f}")
                acks[i].append(c.next_of_type("ack")["seq"])

        threads = [threading.Thread(target=pump, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=30)
        seen = [s for i in range(8) for s in acks[i]]
        assert len(seen) == 8 * per_client
        assert sorted(seen) == list(range(1, 8 * per_client + 1))
        for i in range(8):
            assert acks[i] == sorted(acks[i])  # per-connection FIFO
        for c in clients:
            c.close()

    def test_broadcast_jitter(self, harness):
        c = Client(harness.server.port)
        period = 1.0 / harness.server.telemetry_hz
        stamps = []
        c.next_of_type("telemetry")
        t_prev = time.perf_counter()
        for _ in range(20):
            c.next_of_type("telemetry")
            now = time.perf_counter()
            stamps.append(now - t_prev)
            t_prev = now
        gaps = np.array(stamps)
        assert abs(np.median(gaps) - period) < 0.5 * period
        c.close()


class TestWebSocket:
    @staticmethod
    def _ws_connect(port):
        sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        key = base64.b64encode(b"0123456789abcdef").decode()
        req = (
            f"GET / HTTP/1.1\r\nHost: localhost:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        sock.sendall(req.encode())
        resp = b""
        while b"\r\n\r\n" not in resp:
            resp += sock.recv(4096)
        head, _, rest = resp.partition(b"\r\n\r\n")
        assert b"101" in head.split(b"\r\n")[0]
        accept = base64.b64encode(
            hashlib.sha1((key + teleop.WS_MAGIC).encode()).digest()
        ).decode()
        assert accept.encode() in head
        return sock, bytearray(rest)

    @staticmethod
    def _ws_send(sock, text):
        data = text.encode()
        mask = b"\x12\x34\x56\x78"
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        header = struct.pack(">BB", 0x81, 0x80 | len(data)) if len(data) < 126 else struct.pack(
            ">BBH", 0x81, 0x80 | 126, len(data)
        )
        sock.sendall(header + mask + masked)

    @classmethod
    def _ws_recv(cls, sock, buf):
        def need(n):
            while len(buf) < n:
                chunk = sock.recv(4096)
                if not chunk:
                    raise ConnectionError
                buf.extend(chunk)

        need(2)
        length = buf[1] & 0x7F
        offset = 2
        if length == 126:
            need(4)
            length = struct.unpack(">H", bytes(buf[2:4]))[0]
            offset = 4
        need(offset + length)
        payload = bytes(buf[offset : offset + length])
        del buf[: offset + length]
        return payload.decode()

    def test_ws_command_and_telemetry(self, harness):
        sock, buf = self._ws_connect(harness.server.ws_port)
        scene = json.loads(self._ws_recv(sock, buf))
        assert scene["type"] == "scene"
        assert "network" in scene and "reference" in scene
        self._ws_send(sock, "1,100,10")
        for _ in range(50):
            rec = json.loads(self._ws_recv(sock, buf))
            if rec.get("type") == "ack":
                assert rec["command"] == "1,100,10"
                break
        else:
            raise AssertionError("no ack over websocket")
        for _ in range(50):
            rec = json.loads(self._ws_recv(sock, buf))
            if "t" in rec and "type" not in rec:
                parse_telemetry(json.dumps(rec))
                break
        else:
            raise AssertionError("no telemetry over websocket")
        sock.close()
