"""A short teleoperation session against the live service.

Starts the session service on an ephemeral port with time compression,
connects a plain TCP client, steers with wire-format commands, and prints
the acknowledgment and telemetry transcript.
"""

import asyncio
import json
import socket
import threading

from vinesim.environment import build_course
from vinesim.simulator import SimConfig, Simulator
from vinesim.teleop import TeleopServer, parse_telemetry

course = build_course(
    {
        "segments": [
            {"id": "run", "start": [0, 0, 0], "end": [2.0, 0, 0], "diameter": 0.053}
        ],
        "entry": "run",
    }
)

started = threading.Event()
holder = {}


def _serve():
    async def main():
        server = TeleopServer(Simulator(course, SimConfig()), bind="127.0.0.1:0",
                              telemetry_hz=20.0, speedup=50.0)
        await server.start()
        holder["server"] = server
        holder["loop"] = asyncio.get_running_loop()
        holder["stop"] = asyncio.Event()
        started.set()
        await holder["stop"].wait()
        await server.stop()

    asyncio.run(main())


thread = threading.Thread(target=_serve, daemon=True)
thread.start()
started.wait(5)
server = holder["server"]
print(f"service on tcp {server.host}:{server.port} (ws {server.ws_port}), 50x time compression")

sock = socket.create_connection(("127.0.0.1", server.port), timeout=10)
f = sock.makefile("rwb")

scene = json.loads(f.readline())
print(f"scene frame: {len(scene['network']['segments'])} pipe segments, "
      f"reference with {len(scene['reference'])} vertices")


def send(line):
    print(f">> {line}")
    f.write(line.encode() + b"\n")
    f.flush()


def pump(n=40, want_ack=False):
    for _ in range(n):
        rec = json.loads(f.readline())
        if rec.get("type") == "ack":
            print(f"<< ack seq={rec['seq']} command={rec['command']}")
            if want_ack:
                return rec
        elif rec.get("type") == "error":
            print(f"<< error {rec['kind']}: {rec['detail']}")
        elif "t" in rec:
            msg = parse_telemetry(json.dumps(rec))
            print(f"<< t={msg.t:7.2f}  tip=({msg.tip_position[0]:.3f}, "
                  f"{msg.tip_position[1]:.3f}, {msg.tip_position[2]:.3f})  "
                  f"everted={msg.everted_length:.3f} m")
    return None


send("4,100,10")          # grow for ten simulated seconds
pump(want_ack=True)
pump(12)
send("2,100,3")           # wind the up tendon
pump(want_ack=True)
send("oops")              # malformed line: typed error, session survives
pump(3)
send("0,0,1")
pump(want_ack=True)

sock.close()
holder["loop"].call_soon_threadsafe(holder["stop"].set)
thread.join(timeout=5)
print("session closed")
