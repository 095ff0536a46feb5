import csv
import json

import pytest

from trimsindy.cli import main, parse_config_file, SCHEMAS, ConfigError
from trimsindy.systems import TimeSeries


def _read(path):
    return list(csv.reader(open(path)))


class TestSimulate:
    def test_lorenz_clean(self, tmp_path):
        assert main(["simulate", "--T", "1", "--out", str(tmp_path)]) == 0
        ts = TimeSeries.from_csv(tmp_path / "data.csv")
        assert ts.names == ["x", "y", "z", "dx", "dy", "dz"] and ts.M == 101
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["command"] == "simulate" and "data.csv" in man["outputs"]

    def test_noisy_output_is_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert main(["simulate", "--T", "1", "--noise", "awgn:2", "--seed", "3",
                         "--out", str(tmp_path / d)]) == 0
        a = (tmp_path / "a" / "data.csv").read_bytes()
        assert a == (tmp_path / "b" / "data.csv").read_bytes()
        assert a != (tmp_path / "a" / "clean.csv").read_bytes()

    def test_chatter_reports_stability(self, tmp_path):
        assert main(["simulate", "--system", "chatter", "--T", "0.05",
                     "--out", str(tmp_path)]) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert "unstable" in man

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_exit_code(self, tmp_path):
        assert main(["simulate", "--system", "lorenz", "--dt", "0.5", "--T", "50",
                     "--out", str(tmp_path)]) == 2


class TestIdentify:
    def test_noiseless_lorenz(self, tmp_path):
        assert main(["identify", "--T", "4", "--estimator", "stls", "--out", str(tmp_path)]) == 0
        assert "exact support recovery: 1" in (tmp_path / "report.txt").read_text()
        rows = _read(tmp_path / "coefficients.csv")
        assert rows[0] == ["term", "dx", "dy", "dz"]
        assert {"selection_dx.csv", "selection_dy.csv", "selection_dz.csv"} <= {
            p.name for p in tmp_path.iterdir()}

    def test_from_data_file_with_truth(self, tmp_path):
        assert main(["simulate", "--T", "4", "--out", str(tmp_path / "sim")]) == 0
        truth = tmp_path / "truth.csv"
        truth.write_text("term,dx,dy,dz\nx,-10,28,0\ny,10,-1,0\nz,0,0,-2.6666666666666665\n"
                         "x*y,0,0,1\nx*z,0,-1,0\n")
        assert main(["identify", "--data", str(tmp_path / "sim" / "data.csv"), "--truth",
                     str(truth), "--estimator", "trim", "--grid", "1,2,3,4",
                     "--out", str(tmp_path / "id")]) == 0
        man = json.loads((tmp_path / "id" / "manifest.json").read_text())
        assert man["metrics"]["E_S"] == 1

    def test_irl1_grid(self, tmp_path):
        assert main(["identify", "--T", "2", "--estimator", "irl1", "--grid", "1e-6,1e-3,1",
                     "--out", str(tmp_path)]) == 0
        assert _read(tmp_path / "selection_dx.csv")[0][:2] == ["grid_0", "grid_1"]

    def test_deterministic(self, tmp_path):
        args = ["identify", "--T", "2", "--noise", "awgn:2", "--seed", "5", "--grid", "1,2,3"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert ((tmp_path / "a" / "coefficients.csv").read_bytes()
                == (tmp_path / "b" / "coefficients.csv").read_bytes())

    @pytest.mark.parametrize("flags", [["--estimator", "lasso"], ["--degree", "0"],
                                       ["--select", "xyz"], ["--grid", ""],
                                       ["--data", "/nonexistent.csv"], ["--T", "-1"]])
    def test_invalid_flags(self, tmp_path, flags):
        assert main(["identify", *flags, "--out", str(tmp_path)]) == 1

    def test_missing_channel(self, tmp_path):
        assert main(["simulate", "--T", "1", "--out", str(tmp_path / "sim")]) == 0
        assert main(["identify", "--data", str(tmp_path / "sim" / "data.csv"), "--states", "x,w",
                     "--out", str(tmp_path / "id")]) == 1


class TestConfigFile:
    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("# comment\nsystem = lorenz\nT = 2  # inline\n")
        assert main(["simulate", "--config", str(cfg), "--T", "1", "--out", str(tmp_path)]) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["config"]["T"] == 1.0 and man["samples"] == 101

    def test_unknown_key_cites_line(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("system = lorenz\nbogus = 1\n")
        with pytest.raises(ConfigError, match=":2:"):
            parse_config_file(cfg, SCHEMAS["simulate"])
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none"), "--out",
                     str(tmp_path)]) == 1

    def test_bad_command(self):
        assert main(["frobnicate"]) == 1


class TestBootstrap:
    def test_lorenz(self, tmp_path):
        assert main(["bootstrap", "--system", "lorenz", "--B", "5", "--T", "2",
                     "--k_max", "3", "--out", str(tmp_path)]) == 0
        rows = _read(tmp_path / "quantiles_dy.csv")
        assert rows[0] == ["term", "p5", "p50", "p95"]
        assert len(_read(tmp_path / "ensemble_dy.csv")) == 6

    def test_single_draw(self, tmp_path):
        assert main(["bootstrap", "--system", "lorenz", "--B", "1", "--T", "2",
                     "--k_max", "3", "--out", str(tmp_path)]) == 0
        rows = _read(tmp_path / "quantiles_dx.csv")[1:]
        assert all(r[1] == r[2] == r[3] for r in rows)

    def test_invalid_mode(self, tmp_path):
        assert main(["bootstrap", "--mode", "jackknife", "--out", str(tmp_path)]) == 1
        assert main(["bootstrap", "--B", "0", "--out", str(tmp_path)]) == 1


class TestLobes:
    def test_true_coefficients(self, tmp_path):
        assert main(["lobes", "--n_omega", "300", "--lobes", "3", "--out", str(tmp_path)]) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["max_residual"] < 1e-6
        assert {r[0] for r in _read(tmp_path / "lobes.csv")[1:]} == {"0", "1", "2"}

    def test_with_quantile_band(self, tmp_path):
        q = tmp_path / "q.csv"
        q.write_text("term,p5,p50,p95\n1,6.8e4,6.8e4,6.9e4\nx,-5.25e6,-5.21e6,-5.18e6\n"
                     "xdot,-158,-157,-156\nx_tau,6.7e5,6.8e5,6.9e5\n")
        assert main(["lobes", "--n_omega", "300", "--lobes", "2", "--quantiles", str(q),
                     "--out", str(tmp_path / "o")]) == 0
        rows = _read(tmp_path / "o" / "lobes.csv")
        assert rows[0][-2:] == ["kappa_lower", "kappa_upper"]

    def test_empty_grid(self, tmp_path):
        assert main(["lobes", "--n_omega", "0", "--out", str(tmp_path)]) == 1
        assert main(["lobes", "--omega_min", "3000", "--omega_max", "2000",
                     "--out", str(tmp_path)]) == 1

    def test_bad_coefficients(self, tmp_path):
        c = tmp_path / "c.csv"
        c.write_text("term,value\nx,-1\n")
        assert main(["lobes", "--coefficients", str(c), "--out", str(tmp_path)]) == 1


class TestBench:
    ARGS = ["bench", "--noise_levels", "0,1", "--lengths", "2", "--trials", "2",
            "--estimators", "stls,trim"]

    def test_summary_and_resume(self, tmp_path):
        out = str(tmp_path)
        assert main(self.ARGS + ["--out", out]) == 0
        rows = list(csv.DictReader(open(tmp_path / "summary.csv")))
        assert len(rows) == 4 and all(r["trials"] == "2" for r in rows)
        first = (tmp_path / "summary.csv").read_bytes()
        assert main(self.ARGS + ["--resume", "--out", out]) == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert len(man["skipped_cells"]) == 2
        assert (tmp_path / "summary.csv").read_bytes() == first

    def test_unknown_estimator(self, tmp_path):
        assert main(["bench", "--estimators", "stls,magic", "--out", str(tmp_path)]) == 1

    def test_no_temporary_files_left(self, tmp_path):
        assert main(self.ARGS + ["--out", str(tmp_path)]) == 0
        assert not [p for p in tmp_path.rglob(".*") if p.is_file()]
