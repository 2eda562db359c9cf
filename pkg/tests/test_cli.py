import json

import pytest

from hyperns import io
from hyperns.cli import main


@pytest.fixture
def eq_config_file(tmp_path):
    path = tmp_path / "eq.json"
    path.write_text(json.dumps({
        "grid": {"lo": [0.0], "hi": [1.0], "cells": [16],
                 "bc": ["periodic"]},
        "solver": {"t_end": 0.1},
        "diagnostics": {"snapshots": 3},
    }))
    return path


class TestSimulateCommand:
    def test_happy_path(self, tmp_path, eq_config_file, capsys):
        out = tmp_path / "run"
        rc = main(["simulate", "--config", str(eq_config_file),
                   "--out", str(out)])
        assert rc == 0
        assert "completed" in capsys.readouterr().out
        assert (out / "summary.json").exists()
        assert (out / "diagnostics.csv").exists()

    def test_until_flag_truncates(self, tmp_path, eq_config_file):
        out = tmp_path / "run"
        rc = main(["simulate", "--config", str(eq_config_file),
                   "--out", str(out), "--until", "0.05"])
        assert rc == 0
        assert io.read_summary(out / "summary.json")["run"]["t_final"] == 0.05

    def test_resume_flag(self, tmp_path, eq_config_file):
        first = tmp_path / "first"
        rest = tmp_path / "rest"
        main(["simulate", "--config", str(eq_config_file), "--out",
              str(first), "--until", "0.05"])
        rc = main(["simulate", "--config", str(eq_config_file), "--out",
                   str(rest), "--resume",
                   str(first / "checkpoint_final.bin")])
        assert rc == 0
        assert io.read_summary(rest / "summary.json")["run"]["t_final"] == 0.1

    def test_threads_flag_accepted(self, tmp_path, eq_config_file):
        rc = main(["simulate", "--config", str(eq_config_file),
                   "--out", str(tmp_path / "run"), "--threads", "2"])
        assert rc == 0

    def test_env_override_reaches_the_run(self, tmp_path, eq_config_file,
                                          monkeypatch):
        monkeypatch.setenv("HYPERNS_SOLVER__T_END", "0.05")
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(eq_config_file),
                     "--out", str(out)]) == 0
        assert io.read_summary(out / "summary.json")["run"]["t_final"] == 0.05


class TestErrorReporting:
    def test_rejected_config_exits_2_and_names_paths(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"model": {"tau1": -1, "WAT": 0}}))
        rc = main(["simulate", "--config", str(bad)])
        assert rc == 2
        err = capsys.readouterr().err
        assert "model.tau1" in err
        assert "model.WAT" in err

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        rc = main(["simulate", "--config", str(tmp_path / "nope.json")])
        assert rc == 2
        assert "nope.json" in capsys.readouterr().err

    def test_unknown_subcommand_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            main(["explode"])

    def test_gamma_warning_is_printed(self, tmp_path, capsys):
        cfgf = tmp_path / "g.json"
        cfgf.write_text(json.dumps({
            "grid": {"lo": [-8.0] * 3, "hi": [8.0] * 3, "cells": [8] * 3,
                     "bc": ["constant-state"] * 3},
            "model": {"cv": 1.2},
            "scenario": {"kind": "blowup"},
        }))
        with pytest.warns(Warning):
            rc = main(["ledger", "--config", str(cfgf),
                       "--out", str(tmp_path / "out")])
        assert rc == 1
        assert "inapplicable" in capsys.readouterr().err


class TestOtherCommands:
    def test_hypercheck(self, tmp_path, eq_config_file, capsys):
        out = tmp_path / "hc"
        rc = main(["hypercheck", "--config", str(eq_config_file),
                   "--out", str(out)])
        assert rc == 0
        assert "hyperbolic" in capsys.readouterr().out
        assert io.read_summary(out / "hypercheck.json")["all_hyperbolic"]

    def test_sweep(self, tmp_path, capsys):
        cfgf = tmp_path / "sw.json"
        cfgf.write_text(json.dumps({
            "grid": {"lo": [0.0], "hi": [1.0], "cells": [64],
                     "bc": ["periodic"]},
            "model": {"tau1": 1e-1, "tau3": 1e-1, "kappa": 1e-3,
                      "lam": 1e-3, "mu": 0.0,
                      "box": {"rho_min": 0.5, "rho_max": 2.0,
                              "theta_min": 0.5, "theta_max": 2.0,
                              "u_max": 1.0, "q_max": 0.02,
                              "s2_max": 0.004}},
            "sweep": {"taus": [1e-1, 1e-2], "t_end": 0.05},
        }))
        out = tmp_path / "sw"
        rc = main(["sweep", "--config", str(cfgf), "--out", str(out)])
        assert rc == 0
        assert (out / "sweep.csv").exists()
        assert io.read_summary(out / "sweep.json")["ok"] is True

    def test_audit_round_trip(self, tmp_path, eq_config_file, capsys):
        out = tmp_path / "run"
        main(["simulate", "--config", str(eq_config_file), "--out", str(out)])
        rc = main(["audit", "--out", str(out)])
        assert rc == 0
        assert io.read_summary(out / "audit.json")["matches"] is True

    def test_ledger(self, tmp_path, capsys):
        cfgf = tmp_path / "bl.json"
        cfgf.write_text(json.dumps({
            "grid": {"lo": [-8.0] * 3, "hi": [8.0] * 3, "cells": [32] * 3,
                     "bc": ["constant-state"] * 3},
            "model": {"tau1": 1e-8, "tau3": 1e-8, "kappa": 1e-8,
                      "lam": 1e-8, "mu": 0.0, "cv": 2.5,
                      "box": {"rho_min": 0.5, "rho_max": 2.0,
                              "theta_min": 0.5, "theta_max": 2.0,
                              "u_max": 400.0, "q_max": 0.1, "s2_max": 0.1}},
            "scenario": {"kind": "blowup", "m_support": 5.0,
                         "amplitude": 300.0, "mollifier_width": 0.5,
                         "rho_inside": 1.2, "theta_inside": 1.0},
        }))
        out = tmp_path / "led"
        rc = main(["ledger", "--config", str(cfgf), "--out", str(out)])
        assert rc == 0
        assert "all conditions hold" in capsys.readouterr().out
        assert io.read_summary(out / "ledger.json")["applicable"] is True
