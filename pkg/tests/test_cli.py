import numpy as np
import pytest

from botl.cli import main

SCENARIO = """
[track]
kind = "linear"
samples = 50
start_m = [0.0, 0.0]
end_m = [30000.0, 0.0]

[[targets]]
x_m = 14500.0
y_m = 15000.0
gamma_deg = 30.0
eta_deg = -20.0

[[targets]]
x_m = 20500.0
y_m = 15000.0
gamma_deg = 70.0
eta_deg = 20.0
"""


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(SCENARIO)
    return str(path)


class TestSimulate:
    def test_csv_columns(self, scenario, tmp_path, capsys):
        out = tmp_path / "obs.csv"
        code = main(["simulate", "--scenario", scenario, "--seed", "3",
                     "-o", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "trial,step,slot,theta_hat_rad,gamma_hat_rad,eta_hat_rad"
        assert len(lines) == 1 + 50 * 2

    def test_reveal_labels(self, scenario, tmp_path):
        out = tmp_path / "obs.csv"
        main(["simulate", "--scenario", scenario, "--seed", "3",
              "--reveal-labels", "-o", str(out)])
        assert out.read_text().splitlines()[0].endswith(",truth_label")

    def test_deterministic(self, scenario, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", "--scenario", scenario, "--seed", "5", "-o", str(a)])
        main(["simulate", "--scenario", scenario, "--seed", "5", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_override(self, scenario, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("BOTL_SEED", "123")
        main(["simulate", "--scenario", scenario, "-o", str(a)])
        monkeypatch.delenv("BOTL_SEED")
        main(["simulate", "--scenario", scenario, "--seed", "123", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_scenario_key_named(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text(SCENARIO.replace("samples = 50\n", ""))
        code = main(["simulate", "--scenario", str(bad)])
        assert code == 2
        assert "samples" in capsys.readouterr().err


class TestLocalize:
    def _write_stream(self, path, receivers, theta):
        rows = ["x_r_m,y_r_m,theta_rad"]
        for (x, y), t in zip(receivers, theta):
            rows.append(f"{x},{y},{t}")
        path.write_text("\n".join(rows) + "\n")

    def test_noiseless_intersection(self, tmp_path, capsys):
        path = tmp_path / "stream.csv"
        self._write_stream(path, [(0, 0), (10, 0)], [np.pi / 4, 3 * np.pi / 4])
        code = main(["localize", "--method", "nls", "--input", str(path)])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        x, y = map(float, out[1].split(",")[:2])
        assert abs(x - 5) < 1e-6 and abs(y - 5) < 1e-6

    @pytest.mark.parametrize("method", ["nls", "ov", "tls"])
    def test_colinear_exit_code(self, tmp_path, capsys, method):
        path = tmp_path / "stream.csv"
        self._write_stream(path, [(0, 0), (1, 0), (2, 0)], [0.0, 0.0, 0.0])
        code = main(["localize", "--method", method, "--input", str(path)])
        assert code == 2
        err = capsys.readouterr().err
        if method in ("nls", "ov"):
            assert "Assumption 2" in err

    def test_stdout_has_no_diagnostics(self, tmp_path, capsys):
        path = tmp_path / "stream.csv"
        self._write_stream(path, [(0, 0), (10, 0)], [np.pi / 4, 3 * np.pi / 4])
        main(["localize", "--input", str(path)])
        captured = capsys.readouterr()
        assert captured.err == ""
        assert captured.out.startswith("x_m,y_m,")


class TestCluster:
    def test_labels_and_estimates_files(self, scenario, tmp_path):
        out = tmp_path / "labels.csv"
        code = main(["cluster", "--scenario", scenario, "--algorithm",
                     "polarization", "--seed", "2", "-o", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "trial,step,slot,assigned_target,true_target"
        assert len(lines) == 1 + 50 * 2
        est = (tmp_path / "labels_estimates.csv").read_text().splitlines()
        assert est[0] == "target,x_m,y_m,final_cost,iterations,converged"
        assert len(est) == 3

    def test_bearing_algorithm_stdout(self, scenario, capsys):
        code = main(["cluster", "--scenario", scenario, "--seed", "2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "assigned_target" in out
        assert "final_cost" in out


class TestExperiment:
    def test_smoke_contract(self, tmp_path):
        out = tmp_path / "cmp.csv"
        code = main(["experiment", "estimator-comparison", "--seed", "7",
                     "--trials", "5", "-o", str(out)])
        assert code == 0
        text = out.read_text()
        header = [l for l in text.splitlines() if not l.startswith("#")][0]
        for col in ("rmse_nls_m", "rmse_ov_m", "rmse_tls_m",
                    "crlb_position_m", "crlb_paper"):
            assert col in header

    def test_determinism_with_threads(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["experiment", "y-sweep", "--seed", "11", "--trials", "4",
                "--threads", "8"]
        main(args + ["-o", str(a)])
        main(args + ["-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_per_trial_and_figure(self, tmp_path):
        out = tmp_path / "ns.csv"
        pt = tmp_path / "pt.csv"
        code = main(["experiment", "noise-sweep", "--seed", "1", "--trials", "2",
                     "-o", str(out), "--per-trial", str(pt), "--figure"])
        assert code == 0
        assert pt.exists() and pt.read_text().startswith("sweep_index,trial")
        assert (tmp_path / "ns.png").stat().st_size > 0

    def test_unknown_preset_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["experiment", "does-not-exist"])
        assert exc.value.code == 1


class TestCrlb:
    def test_both_bounds_per_target(self, scenario, capsys):
        code = main(["crlb", "--scenario", scenario, "--sigma-deg", "2"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "target,crlb_position_m,crlb_paper"
        assert len(lines) == 3
        for line in lines[1:]:
            _, pos, paper = line.split(",")
            assert float(pos) > 0 and float(paper) > 0


class TestUsage:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
