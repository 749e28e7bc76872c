import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vinesim import localization as loc
from vinesim import quat
from vinesim import simulator as simmod
from vinesim.environment import build_course, polyline_length, preset_course
from vinesim.simulator import (
    MOTOR_BRACE,
    MOTOR_GROW,
    MOTOR_RIGHT,
    MOTOR_UP,
    MotorCommand,
    NoiseModel,
    SimConfig,
    Simulator,
    default_script,
    run_scenario,
    synth_encoder,
    synth_imu,
)


def _straight_course(length=1.0, diameter=0.05):
    return build_course(
        {
            "segments": [
                {"id": "a", "start": [0, 0, 0], "end": [length, 0, 0], "diameter": diameter}
            ],
            "entry": "a",
        }
    )


class TestCommands:
    def test_validation(self):
        MotorCommand(1, 100, 10)
        with pytest.raises(ValueError):
            MotorCommand(5, 50, 1)
        with pytest.raises(ValueError):
            MotorCommand(1, 150, 1)
        with pytest.raises(ValueError):
            MotorCommand(1, 50, 0)

    def test_superseding_same_motor(self):
        sim = Simulator(_straight_course())
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 100.0), 0.0)
        sim.schedule(MotorCommand(MOTOR_GROW, 0, 5.0), 1.0)
        sim.run(1.0)
        grown_first = sim.everted
        assert grown_first > 0
        sim.run(2.0)  # superseded by the zero-duty command
        assert sim.everted == pytest.approx(grown_first, abs=1e-12)


class TestGrowth:
    def test_uniform_motion_to_pipe_end(self):
        cfg = SimConfig()
        sim = Simulator(_straight_course(length=0.5), cfg)
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 0.5 / cfg.growth_rate), 0.0)
        snap = sim.run(0.5 / cfg.growth_rate)
        assert snap.everted_length == pytest.approx(0.5, abs=1e-9)
        assert_allclose(snap.tip_position, [0.5, 0, 0], atol=1e-6)

    def test_body_path_arc_length_invariant(self):
        cfg = SimConfig()
        sim = Simulator(preset_course("pipe3d-45"), cfg)
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 30.0), 0.0)
        sim.run(30.0)
        assert polyline_length(np.array(sim.body_path)) == pytest.approx(sim.everted, abs=1e-9)

    def test_pressure_gates_growth(self):
        sim = Simulator(_straight_course())
        sim.schedule_pressure(0.0, 0.0)
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 5.0), 0.0)
        snap = sim.run(5.0)
        assert snap.everted_length == 0.0
        sim.schedule_pressure(5500.0, sim.t)
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 5.0), sim.t)
        snap = sim.run(5.0)
        assert snap.everted_length > 0.05

    def test_dead_end_blocks_and_flags(self):
        cfg = SimConfig()
        sim = Simulator(_straight_course(length=0.1), cfg)
        sim.schedule(MotorCommand(MOTOR_GROW, 100, 10.0), 0.0)
        snap = sim.run(10.0)
        assert snap.motion_blocked
        assert snap.everted_length == pytest.approx(0.1, abs=2 * cfg.growth_rate * cfg.dt)

    def test_body_stays_inside_network(self):
        net = preset_course("branch2d-7")
        res = run_scenario("branch2d-7", seed=3)
        for p in res.ground_truth[:: min(50, len(res.ground_truth))]:
            inside, _ = net.contains(p)
            assert inside

    def test_joint_always_within_workspace(self):
        res = run_scenario("branch2d-7", seed=1)
        amax = Simulator(None).geometry.alpha_max + 1e-9
        for s in res.states:
            assert abs(s.joint.theta) <= amax
            assert 0.0 <= s.joint.beta <= amax


class TestBracing:
    def test_contact_in_53mm_pipe(self):
        sim = Simulator(_straight_course(diameter=0.053))
        snap = sim.set_bracing(True)
        assert snap.braced and not snap.partial_grip

    def test_no_contact_in_80mm_pipe(self):
        sim = Simulator(_straight_course(diameter=0.080))
        snap = sim.set_bracing(True)
        assert snap.braced and snap.partial_grip

    def test_disengage_restores_envelope(self):
        sim = Simulator(_straight_course(diameter=0.053))
        sim.set_bracing(True)
        snap = sim.set_bracing(False)
        assert not snap.braced and snap.partial_grip

    def test_brace_motor_command(self):
        sim = Simulator(_straight_course(diameter=0.053))
        sim.schedule(MotorCommand(MOTOR_BRACE, 100, 0.5), 0.0)
        snap = sim.run(1.0)
        assert snap.braced


class TestRollDisturbance:
    def test_unbraced_up_steering_rolls(self):
        sim = Simulator(_straight_course(diameter=0.053), seed=7)
        sim.schedule(MotorCommand(MOTOR_UP, 100, 6.0), 0.0)
        snap = sim.run(30.0)
        assert abs(snap.roll) > math.radians(20)

    def test_braced_up_steering_does_not_roll(self):
        sim = Simulator(_straight_course(diameter=0.053), seed=7)
        sim.set_bracing(True)
        sim.schedule(MotorCommand(MOTOR_UP, 100, 6.0), 0.0)
        snap = sim.run(30.0)
        assert snap.roll == 0.0

    def test_in_plane_steering_does_not_roll(self):
        sim = Simulator(_straight_course(diameter=0.053), seed=7)
        sim.schedule(MotorCommand(MOTOR_RIGHT, 100, 6.0), 0.0)
        snap = sim.run(30.0)
        assert snap.roll == 0.0

    def test_paired_headings_deviate(self):
        def final_heading(braced):
            sim = Simulator(_straight_course(diameter=0.053), seed=11)
            if braced:
                sim.set_bracing(True)
            sim.schedule(MotorCommand(MOTOR_UP, 100, 6.0), 0.0)
            sim.run(40.0)
            snap = sim.snapshot()
            return np.array(quat.rotate(snap.orientation, (0, 0, 1.0)))

        free = final_heading(False)
        held = final_heading(True)
        assert np.linalg.norm(free - held) > 0.3


class TestTendonRelaxation:
    def test_release_relaxes_joint(self):
        sim = Simulator(_straight_course())
        sim.schedule(MotorCommand(MOTOR_RIGHT, 100, 5.0), 0.0)
        sim.run(5.5)
        bent = sim.snapshot().joint.theta
        assert bent > math.radians(40)
        sim.schedule(MotorCommand(MOTOR_RIGHT, -100, 6.0), sim.t)
        sim.run(6.0)   # unwind
        sim.run(3.0)   # then relax
        assert abs(sim.snapshot().joint.theta) < math.radians(1)

    def test_spool_saturates_at_full_bend(self):
        sim = Simulator(_straight_course())
        sim.schedule(MotorCommand(MOTOR_UP, 100, 30.0), 0.0)
        snap = sim.run(30.0)
        assert snap.tendons.phi[2] == pytest.approx(sim.geometry.phi_full_bend, abs=1e-9)
        assert snap.joint.beta == pytest.approx(sim.geometry.alpha_max, abs=1e-9)


class TestSynthSensors:
    def test_stationary_history(self):
        n = 50
        qs = [quat.IDENTITY] * n
        pos = [(0.0, 0.0, 0.0)] * (n + 1)
        frames = synth_imu(qs, pos, 0.01)
        for f in frames[1:]:
            assert f.omega_B == (0.0, 0.0, 0.0)
            assert_allclose(f.a_B, (0, 0, -9.81), atol=1e-12)
            assert_allclose(f.m_B, loc.DEFAULT_MAG_REF, atol=1e-12)

    def test_pure_z_rotation_rate(self):
        dt = 0.01
        n = 200
        qs = [quat.from_rotvec((0, 0, 0.1 * k * dt)) for k in range(n)]
        pos = [(0.0, 0.0, 0.0)] * (n + 1)
        frames = synth_imu(qs, pos, dt)
        for f in frames[:-1]:
            assert_allclose(f.omega_B, (0, 0, 0.1), atol=1e-6)

    def test_noise_scaling_quadruples_variance(self):
        n = 10_000
        qs = [quat.IDENTITY] * n
        pos = [(0.0, 0.0, 0.0)] * (n + 1)
        base = NoiseModel.noiseless()
        n1 = NoiseModel(0.0, 0.0, 0.05, 0.0, 0.0)
        n2 = NoiseModel(0.0, 0.0, 0.10, 0.0, 0.0)
        f1 = synth_imu(qs, pos, 0.01, n1, seed=5)
        f2 = synth_imu(qs, pos, 0.01, n2, seed=6)
        clean = synth_imu(qs, pos, 0.01, base)
        v1 = np.var([f.a_B[0] - c.a_B[0] for f, c in zip(f1, clean)])
        v2 = np.var([f.a_B[0] - c.a_B[0] for f, c in zip(f2, clean)])
        assert v2 / v1 == pytest.approx(4.0, rel=0.2)

    def test_short_history_rejected(self):
        with pytest.raises(ValueError):
            synth_imu([], [(0, 0, 0)], 0.01)

    def test_encoder_quantization_preserves_total(self):
        rng = np.random.default_rng(2)
        dls = rng.uniform(0, 3e-4, 500)
        noisy = synth_encoder(dls, 0.01, NoiseModel(encoder_quantization=0.01))
        exact = synth_encoder(dls, 0.01)
        total_noisy = sum(s.delta_theta for s in noisy)
        total_exact = sum(s.delta_theta for s in exact)
        assert abs(total_noisy - total_exact) <= 0.01
        quanta = [s.delta_theta / 0.01 for s in noisy]
        assert all(abs(q - round(q)) < 1e-9 for q in quanta)


class TestScenarios:
    def test_pipe3d_noiseless_roundtrip(self):
        res = run_scenario("pipe3d-45")
        est = loc.run_pipeline(
            res.frames, res.encoder,
            q0=res.initial_orientation, start=res.start_position,
        )
        rep = loc.tracking_error(est, res.ground_truth)
        assert rep.mean < 1e-6
        assert np.linalg.norm(est.endpoint - res.ground_truth[-1]) < 1e-6

    def test_determinism_bit_identical(self):
        a = run_scenario("pipe3d-45", noise=NoiseModel(), seed=9, duration=20.0)
        b = run_scenario("pipe3d-45", noise=NoiseModel(), seed=9, duration=20.0)
        assert a.frames == b.frames
        assert a.encoder == b.encoder
        assert np.array_equal(a.ground_truth, b.ground_truth)

    def test_branch2d_takes_all_turns(self):
        res = run_scenario("branch2d-7")
        labels = [e["label"] for e in res.junction_events]
        assert labels == ["turn"] * 7

    def test_branch2d_null_script_goes_straight(self):
        net = preset_course("branch2d-7")
        total = 0.15 + 0.15 + 1.0
        script = {"schedule": [{"t_start": 0.0, "motor": MOTOR_GROW, "duty": 100, "duration": 20.0}]}
        res = run_scenario("branch2d-7", script=script)
        labels = [e["label"] for e in res.junction_events]
        assert labels == ["forward"]
        assert res.states[-1].motion_blocked

    def test_climb_braced_enters_up_branch(self):
        res = run_scenario("climb45", seed=0)
        net = res.network
        j = net.junctions["j000"]
        up_id = j.branch_ids[j.branch_labels.index("up")]
        assert res.states[-1].segment_id == up_id
        labels = [e["label"] for e in res.junction_events]
        assert labels == ["up"]

    def test_climb_unbraced_misses_up_branch(self):
        script = default_script("climb45")
        script["schedule"] = [
            e for e in script["schedule"] if e.get("motor") != MOTOR_BRACE
        ]
        res = run_scenario("climb45", script=script, seed=0)
        labels = [e["label"] for e in res.junction_events]
        assert labels != ["up"]

    def test_zero_length_script_stationary(self):
        res = run_scenario("pipe3d-45", script={"schedule": []}, duration=1.0)
        assert res.states[-1].everted_length == 0.0
        assert all(s.delta_theta == 0.0 for s in res.encoder)
        for f in res.frames[1:]:
            assert f.omega_B == (0.0, 0.0, 0.0)

    def test_burrow_reaches_field_endpoint(self):
        res = run_scenario("burrow-field")
        assert res.temperature is not None
        assert np.all(res.temperature == 17.2)
        assert np.all(res.humidity == 39.4)
        endpoint = res.ground_truth[-1]
        assert np.linalg.norm(endpoint - np.array([-0.425, 0.797, 0.073])) < 5e-3

    def test_script_json_roundtrip(self, tmp_path):
        script = default_script("climb45")
        p = tmp_path / "script.json"
        p.write_text(json.dumps(script))
        loaded = simmod.load_script(p)
        assert loaded == json.loads(json.dumps(script))

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            run_scenario("warp-drive")
