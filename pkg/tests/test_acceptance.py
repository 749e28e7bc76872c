"""Acceptance suite: every criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from vinesim import environment, localization as loc
from vinesim.cli import pct_err
from vinesim.dynamics import blocked_tendon_force
from vinesim.kinematics import (
    DeviceGeometry,
    effective_radius,
    joint_to_tendon,
    tendon_to_joint,
    workspace_surface,
)
from vinesim.simulator import (
    MOTOR_BRACE,
    MOTOR_GROW,
    NoiseModel,
    SimConfig,
    default_script,
    run_scenario,
    synth_encoder,
    synth_imu,
)
from vinesim.teleop import (
    CommandError,
    CommandFieldCountError,
    CommandMessage,
    CommandNumericError,
    CommandRangeError,
    format_command,
    parse_command,
)

from test_teleop import Client, Harness


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\nFAIL  {name}")
        raise
    print(f"\nPASS  {name}")


def test_workspace_geometry():
    with criterion("workspace geometry: truncated quarter sphere at r_eff, 52.5 deg cap, < 1 s"):
        t0 = time.perf_counter()
        geom = DeviceGeometry()
        res = math.radians(0.5)
        theta, beta, pts = workspace_surface(geom, res)
        r = effective_radius(geom)
        norms = np.linalg.norm(pts, axis=1)
        assert np.max(np.abs(norms - r)) <= 1e-9
        polar = np.degrees(np.arccos(np.clip(pts[:, 2] / r, -1.0, 1.0)))
        assert abs(np.max(polar) - 52.5) <= 0.01
        # quarter sphere: upward-only elevation, both lateral half-planes
        assert np.min(pts[:, 0]) >= -1e-12
        assert np.any(pts[:, 1] > 0.01) and np.any(pts[:, 1] < -0.01)
        assert time.perf_counter() - t0 < 1.0


def test_percentage_error_reproduction():
    with criterion("percentage errors: 6.67 +/- 0.01 and 1.52 +/- 0.05"):
        assert abs(pct_err(56.0, 52.5) - 6.67) <= 0.01
        assert abs(pct_err(51.7, 52.5) - 1.52) <= 0.05


def test_blocked_force():
    with criterion("blocked force: 7.40 N +/- 1e-6 and torque back-solve < 0.01%"):
        geom = DeviceGeometry()
        tau_m = 13.0e-3
        peak = blocked_tendon_force(tau_m, geom.r_m)
        assert abs(peak - 7.40) <= 1e-6
        back = peak * geom.r_m
        assert abs(back - tau_m) / tau_m * 100.0 < 0.01


def test_tendon_map_identities():
    with criterion("tendon map: q(0) exactly zero, round trip < 1e-10 over 1000 samples"):
        geom = DeviceGeometry()
        for j in (0, 1, 2):
            assert tendon_to_joint(0.0, j, geom) == 0.0
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            j = int(rng.integers(0, 3))
            q = float(rng.uniform(-geom.alpha_max, geom.alpha_max))
            worst = max(worst, abs(tendon_to_joint(joint_to_tendon(q, j, geom), j, geom) - q))
        assert worst < 1e-10


def test_dead_reckoning_oracle_equivalence():
    with criterion(
        "dead reckoning: noiseless error < 1e-6 m, path = growth sum +/- 1e-9, "
        "heading beats velocity in >= 95/100 seeded runs, < 30 s"
    ):
        t0 = time.perf_counter()
        # 20 Hz sampling at 5 cm/s keeps the Monte Carlo within budget; the
        # course geometry and noise defaults are fixed by the criterion
        cfg = SimConfig(dt=0.05, growth_rate=0.05)
        res = run_scenario("pipe3d-45", config=cfg)

        est = loc.run_pipeline(
            res.frames, res.encoder, q0=res.initial_orientation, start=res.start_position
        )
        rep = loc.tracking_error(est, res.ground_truth)
        assert rep.mean < 1e-6
        growth_sum = sum(loc.spool_to_length(e.delta_theta, 0.02) for e in res.encoder)
        assert abs(est.path_length - growth_sum) <= 1e-9

        wins = 0
        for seed in range(100):
            frames = synth_imu(res.orientations, res.pos_history, res.dt, NoiseModel(), seed=seed)
            enc = synth_encoder(res.step_lengths, res.dt, NoiseModel())
            err_h = loc.tracking_error(
                loc.run_pipeline(frames, enc, mode="heading",
                                 q0=res.initial_orientation, start=res.start_position),
                res.ground_truth,
            ).mean
            err_v = loc.tracking_error(
                loc.run_pipeline(frames, enc, mode="velocity",
                                 q0=res.initial_orientation, start=res.start_position),
                res.ground_truth,
            ).mean
            wins += err_h < err_v
        assert wins >= 95
        assert time.perf_counter() - t0 < 30.0


def _body_passes_through(network, body_path, branch_id, t_after):
    seg = network.segments[branch_id]
    pts = np.asarray(body_path)
    rel = pts - seg.start
    t = np.clip(rel @ seg.direction, 0.0, seg.length)
    closest = seg.start + t[:, None] * seg.direction
    dist = np.linalg.norm(pts - closest, axis=1)
    interior = (t > 0.01) & (dist <= 0.5 * seg.diameter)
    return bool(np.any(interior))


def test_branch_steering():
    with criterion("branch steering: 7/7 turns, body follows the chosen branches, < 10 s"):
        t0 = time.perf_counter()
        res = run_scenario("branch2d-7")
        labels = [e["label"] for e in res.junction_events]
        assert labels == ["turn"] * 7
        for ev in res.junction_events:
            assert _body_passes_through(res.network, res.ground_truth, ev["branch"], ev["t"])

        straight = {"schedule": [{"t_start": 0.0, "motor": MOTOR_GROW, "duty": 100, "duration": 25.0}]}
        null_res = run_scenario("branch2d-7", script=straight)
        null_labels = [e["label"] for e in null_res.junction_events]
        assert null_labels.count("turn") == 0
        assert null_labels == ["forward"]
        assert time.perf_counter() - t0 < 10.0


def test_anti_gravity_climb():
    with criterion("climb: braced run enters the upward branch, unbraced fails >= 95/100"):
        cfg = SimConfig(dt=0.02)
        braced = run_scenario("climb45", seed=0, config=cfg, sensors=False)
        assert [e["label"] for e in braced.junction_events] == ["up"]
        net = braced.network
        j = net.junctions["j000"]
        up_id = j.branch_ids[j.branch_labels.index("up")]
        assert braced.states[-1].segment_id == up_id

        script = default_script("climb45", cfg)
        script["schedule"] = [e for e in script["schedule"] if e.get("motor") != MOTOR_BRACE]
        failures = 0
        for seed in range(100):
            res = run_scenario("climb45", script=script, seed=seed, config=cfg, sensors=False)
            if [e["label"] for e in res.junction_events] != ["up"]:
                failures += 1
        assert failures >= 95


def test_burrow_summary():
    with criterion(
        "burrow: displacement (-0.425, 0.797, 0.073), bend 61.9 +/- 0.1 deg, 17.2 C, 39.4 %RH"
    ):
        res = run_scenario("burrow-field")
        est = loc.run_pipeline(
            res.frames, res.encoder, q0=res.initial_orientation, start=res.start_position
        )
        profile = environment.reconstruct_burrow(
            est,
            temperature=np.append(res.temperature, res.temperature[-1]),
            humidity=np.append(res.humidity, res.humidity[-1]),
        )
        s = profile.summary()
        assert np.allclose(s["displacement_m"], [-0.425, 0.797, 0.073], atol=1e-3)
        assert abs(s["bending_angle_deg"] - 61.9) <= 0.1
        assert s["temperature_C"] == pytest.approx(17.2, abs=1e-9)
        assert s["humidity_pct"] == pytest.approx(39.4, abs=1e-9)


def test_protocol():
    with criterion(
        "protocol: reference line parses, round trip is identity, typed errors "
        "preserve the session, 8-client FIFO holds"
    ):
        msg = parse_command("1,100,10")
        assert msg == CommandMessage(1, 100, 10.0)
        assert format_command(msg) == "1,100,10"
        rng = np.random.default_rng(77)
        for _ in range(300):
            m = CommandMessage(
                int(rng.integers(0, 5)), int(rng.integers(-100, 101)),
                float(np.round(rng.uniform(0.05, 60.0), 4)),
            )
            assert parse_command(format_command(m)) == m
        for bad, kind in [
            ("1,100", CommandFieldCountError),
            ("a,100,10", CommandNumericError),
            ("1,101,10", CommandRangeError),
        ]:
            with pytest.raises(kind):
                parse_command(bad)
            assert issubclass(kind, CommandError)

        import threading

        harness = Harness()
        try:
            clients = [Client(harness.server.port) for _ in range(8)]
            # one malformed line must not take the session down
            clients[0].send("garbage,line")
            assert clients[0].next_of_type("error")["kind"] == "CommandFieldCountError"
            acks = {i: [] for i in range(8)}

            def pump(i):
                for k in range(10):
                    clients[i].send(f"0,0,{0.1 + 0.001 * k:.3f}")
                    acks[i].append(clients[i].next_of_type("ack")["seq"])

            threads = [threading.Thread(target=pump, args=(i,)) for i in range(8)]
            for t in threads:
                t.start()
            for t in threads:
                t.join(timeout=30)
            seen = sorted(s for i in range(8) for s in acks[i])
            assert len(seen) == 80 and len(set(seen)) == 80
            for i in range(8):
                assert acks[i] == sorted(acks[i])
        finally:
            harness.stop()
