import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from teleokin.cli import main, run_batch
from teleokin.config import ConfigError, load_config, build_sim, make_sphere, load_robot_model
from teleokin.telemetry import COLUMNS, read_csv

from conftest import CONFIG_DIR


def write_config(tmp_path, **overrides):
    base = yaml.safe_load((CONFIG_DIR / "default.yaml").read_text())
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            base[k].update(v)
        else:
            base[k] = v
    for arm in base["arms"]:
        arm["model"] = str(CONFIG_DIR / arm["model"])
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(base))
    return path


class TestConfigLoading:
    def test_defaults_applied(self, tmp_path):
        path = write_config(tmp_path)
        cfg = load_config(path)
        assert cfg.controller.alpha == 0.9999
        assert cfg.controller.eta == 120.0
        assert cfg.controller.lam_r == 0.01
        assert cfg.controller.lam_f == 0.0
        assert cfg.operator.eta_f == 100.0
        assert cfg.operator.eta_v == 10.0
        assert cfg.operator.motion_scaling == 1.0
        assert cfg.arms[0].sphere["d_safe"] == pytest.approx(0.005 ** 2)
        assert cfg.arms[0].sphere["eta_d"] == 1.0

    def test_partial_override(self, tmp_path):
        path = write_config(tmp_path, controller={"eta": 60.0})
        cfg = load_config(path)
        assert cfg.controller.eta == 60.0
        assert cfg.controller.alpha == 0.9999   # untouched default

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/cfg.yaml")

    def test_corrupt_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("arms: [unclosed")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_missing_model_file(self, tmp_path):
        path = write_config(tmp_path)
        data = yaml.safe_load(path.read_text())
        data["arms"][0]["model"] = "does_not_exist.yaml"
        path.write_text(yaml.safe_dump(data))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_q0_outside_limits_rejected(self, tmp_path):
        path = write_config(tmp_path)
        data = yaml.safe_load(path.read_text())
        data["arms"][0]["q0"] = [9.0] * 9
        path.write_text(yaml.safe_dump(data))
        with pytest.raises(ConfigError):
            build_sim(load_config(path))

    def test_auto_sphere_center_on_line(self, tmp_path):
        from teleokin.kinematics import shaft_line, line_point_sq_distance
        path = write_config(tmp_path)
        cfg = load_config(path)
        ac = cfg.arms[0]
        model = load_robot_model(ac.model_path, base_r=ac.base_r,
                                 base_t=ac.base_t)
        sphere = make_sphere(model, ac.q0, ac.sphere)
        d0 = line_point_sq_distance(shaft_line(model, ac.q0), sphere.center)
        assert d0 < 1e-12

    def test_explicit_sphere_center(self, tmp_path):
        path = write_config(tmp_path, entry_sphere={"center": [0.1, 0.2, 0.3]})
        cfg = load_config(path)
        ac = cfg.arms[0]
        model = load_robot_model(ac.model_path)
        sphere = make_sphere(model, ac.q0, ac.sphere)
        assert np.allclose(sphere.center, [0.1, 0.2, 0.3])


class TestCheckConfig:
    def test_ok(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["check-config", str(path)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_corrupt_exits_2(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("{nope")
        assert main(["check-config", str(p)]) == 2


class TestRunBatch:
    def test_hold_one_second(self, tmp_path, capsys):
        path = write_config(tmp_path, duration=1.0,
                            out=str(tmp_path / "out.csv"))
        code = main(["run", "--config", str(path)])
        assert code == 0
        rows = read_csv(tmp_path / "out.csv")
        assert len(rows) == 2000           # 1000 ticks x 2 arms
        d = [r["d_es_sq"] for r in rows]
        assert max(d) < 1e-12              # hold: distance never grows
        out = capsys.readouterr().out
        assert "max sqrt(D_ES)" in out

    def test_pivot_sweep_safety_summary(self, tmp_path):
        path = write_config(tmp_path, duration=10.0,
                            trajectory={"id": "pivot-sweep", "params": {}},
                            out=str(tmp_path / "out.csv"))
        code = main(["run", "--config", str(path)])
        assert code == 0
        rows = read_csv(tmp_path / "out.csv")
        d_max = max(r["d_es_sq"] for r in rows)
        assert np.sqrt(d_max) <= 0.00505

    def test_corrupt_config_exit_2_no_output(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("arms: [")
        out = tmp_path / "out.csv"
        code = main(["run", "--config", str(bad), "--out", str(out)])
        assert code == 2
        assert not out.exists()

    def test_csv_header_and_columns(self, tmp_path):
        path = write_config(tmp_path, duration=0.01,
                            out=str(tmp_path / "o.csv"))
        assert main(["run", "--config", str(path)]) == 0
        lines = (tmp_path / "o.csv").read_text().splitlines()
        assert lines[0].startswith("# teleokin-telemetry-csv v1")
        assert lines[1] == ",".join(COLUMNS)

    def test_batch_rerun_byte_identical(self, tmp_path):
        path = write_config(tmp_path, duration=0.5, seed=3,
                            trajectory={"id": "random-smooth", "params": {}})
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", str(path), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(path), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_trajectory_override(self, tmp_path):
        path = write_config(tmp_path, duration=0.2,
                            out=str(tmp_path / "o.csv"))
        assert main(["run", "--config", str(path),
                     "--trajectory", "circle-about-entry"]) == 0

    def test_unknown_trajectory_exit_2(self, tmp_path):
        path = write_config(tmp_path, duration=0.2,
                            out=str(tmp_path / "o.csv"))
        assert main(["run", "--config", str(path),
                     "--trajectory", "wobble"]) == 2

    def test_invariant_violation_exit_1(self, tmp_path):
        # an impossible sphere (tiny, far away) puts the start state outside
        # the safe set; the run completes but reports the violation
        path = write_config(tmp_path, duration=0.05,
                            entry_sphere={"center": [10.0, 10.0, 10.0],
                                          "d_safe": 1e-6},
                            out=str(tmp_path / "o.csv"))
        code = main(["run", "--config", str(path)])
        assert code == 1


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        exe = shutil.which("teleokin")
        if exe is None:
            pytest.skip("console script not on PATH")
        path = write_config(tmp_path, duration=0.02,
                            out=str(tmp_path / "o.csv"))
        proc = subprocess.run([exe, "run", "--config", str(path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
