import json
from pathlib import Path

import pytest

from vinesim import cli
from vinesim.cli import config_digest, pct_err


class TestPctErr:
    def test_reference_values(self):
        assert pct_err(56.0, 52.5) == pytest.approx(6.67, abs=0.01)
        assert pct_err(51.7, 52.5) == pytest.approx(1.52, abs=0.05)

    def test_exact_match(self):
        assert pct_err(52.5, 52.5) == 0.0


def test_config_digest_stable():
    a = {"geometry": {"r": 0.018}, "sim": {"dt": 0.01}}
    b = {"sim": {"dt": 0.01}, "geometry": {"r": 0.018}}
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest({"sim": {"dt": 0.02}})


def _run(argv):
    return cli.main(argv)


def _read_manifest(out_dir, command):
    path = Path(out_dir) / command / "manifest.json"
    return json.loads(path.read_text())


class TestWorkspaceCommand:
    def test_runs_and_reports(self, tmp_path, capsys):
        rc = _run(["--out-dir", str(tmp_path), "workspace", "--resolution-deg", "1.0"])
        assert rc == 0
        man = _read_manifest(tmp_path, "workspace")
        m = man["metrics"]
        assert m["alpha_max_deg"] == pytest.approx(52.5, abs=0.01)
        assert m["pct_err_theta"] == pytest.approx(6.67, abs=0.01)
        assert m["pct_err_alpha"] == pytest.approx(1.52, abs=0.05)
        for out in man["outputs"]:
            assert Path(out).exists()
        assert "workspace" in capsys.readouterr().out

    def test_measured_equals_theoretical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"measured": {"alpha_deg": 52.5, "theta_deg": 52.5}}))
        _run(["--config", str(cfg), "--out-dir", str(tmp_path), "workspace",
              "--resolution-deg", "2.0"])
        m = _read_manifest(tmp_path, "workspace")["metrics"]
        assert m["pct_err_alpha"] == pytest.approx(0.0, abs=1e-9)

    def test_bounds_violation_nonzero_exit(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bounds": {"alpha_max_deg": [0.0, 10.0]}}))
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "workspace",
                   "--resolution-deg", "2.0"])
        assert rc == 1

    def test_bounds_pass_zero_exit(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bounds": {"alpha_max_deg": [52.0, 53.0]}}))
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "workspace",
                   "--resolution-deg", "2.0"])
        assert rc == 0


class TestBlockedForceCommand:
    def test_peak_and_backsolve(self, tmp_path):
        rc = _run(["--out-dir", str(tmp_path), "blocked-force", "--pulses", "2"])
        assert rc == 0
        m = _read_manifest(tmp_path, "blocked-force")["metrics"]
        assert m["peak_force_N"] == pytest.approx(7.40, abs=1e-6)
        assert m["back_solved_torque_pct_dev"] < 0.01
        assert m["fx_peak_N"] == 0.0 and m["fy_peak_N"] == 0.0

    def test_zero_torque_flat(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"stall_torque": 0.0}))
        _run(["--config", str(cfg), "--out-dir", str(tmp_path), "blocked-force"])
        m = _read_manifest(tmp_path, "blocked-force")["metrics"]
        assert m["peak_force_N"] == 0.0


class TestScenarioCommands:
    def test_localize_noiseless(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sim": {"dt": 0.02, "growth_rate": 0.04}}))
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "localize"])
        assert rc == 0
        m = _read_manifest(tmp_path, "localize")["metrics"]
        assert m["mean_error_m"] < 1e-6
        assert m["path_length_m"] == pytest.approx(m["growth_sum_m"], abs=1e-9)
        assert (tmp_path / "localize" / "trajectory.ndjson").exists()

    def test_steer2d_default_script(self, tmp_path):
        rc = _run(["--out-dir", str(tmp_path), "steer2d"])
        assert rc == 0
        m = _read_manifest(tmp_path, "steer2d")["metrics"]
        assert m["turns_taken"] == 7
        assert m["junctions_crossed"] == 7

    def test_steer2d_null_script(self, tmp_path):
        rc = _run(["--out-dir", str(tmp_path), "steer2d", "--null-script"])
        assert rc == 0
        m = _read_manifest(tmp_path, "steer2d")["metrics"]
        assert m["turns_taken"] == 0

    def test_climb_braced_and_unbraced(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sim": {"dt": 0.02}}))
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "climb3d"])
        assert rc == 0
        assert _read_manifest(tmp_path, "climb3d")["metrics"]["climb_success"] == 1
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "climb3d", "--no-bracing"])
        assert _read_manifest(tmp_path, "climb3d")["metrics"]["climb_success"] == 0

    def test_burrow_summary(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sim": {"dt": 0.02, "growth_rate": 0.04}}))
        rc = _run(["--config", str(cfg), "--out-dir", str(tmp_path), "burrow"])
        assert rc == 0
        m = _read_manifest(tmp_path, "burrow")["metrics"]
        assert m["displacement_x_m"] == pytest.approx(-0.425, abs=1e-3)
        assert m["displacement_y_m"] == pytest.approx(0.797, abs=1e-3)
        assert m["vertical_rise_m"] == pytest.approx(0.073, abs=1e-3)
        assert m["bending_angle_deg"] == pytest.approx(61.9, abs=0.1)
        assert m["temperature_C"] == pytest.approx(17.2)
        assert m["humidity_pct"] == pytest.approx(39.4)
        assert (tmp_path / "burrow" / "burrow_profile.csv").exists()

    def test_determinism_same_seed(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sim": {"dt": 0.02, "growth_rate": 0.04},
                                   "noise": {}}))
        _run(["--config", str(cfg), "--out-dir", str(tmp_path / "a"), "--seed", "4", "localize"])
        _run(["--config", str(cfg), "--out-dir", str(tmp_path / "b"), "--seed", "4", "localize"])
        ma = _read_manifest(tmp_path / "a", "localize")["metrics"]
        mb = _read_manifest(tmp_path / "b", "localize")["metrics"]
        assert ma == mb
