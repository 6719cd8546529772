import json

import numpy as np
import pytest

import selpde.cli as cli
from selpde.cli import (ConfigError, ERROR_CSV_HEADER, _fmt, _load_run,
                        build_config, load_config, main, parse_config_file)

DESK_INI = """\
[problem]
problem = elliptic_nl
d = 2
method = {method}

[network]
m = 8
L = 2
m_s = 6
L_s = 2

[training]
N1 = 20
N2 = 20
n = 3
eval_every = 1
n_test = 50
seed = 1
lambda = 1.5
"""


@pytest.fixture
def desk_ini(tmp_path):
    def write(method="basic", extra=""):
        path = tmp_path / f"{method}.ini"
        path.write_text(DESK_INI.format(method=method) + extra)
        return str(path)
    return write


class TestConfigParsing:
    def test_sections_are_organizational(self, desk_ini):
        flat = parse_config_file(desk_ini())
        assert flat["problem"] == "elliptic_nl"
        assert flat["m"] == "8"
        assert flat["lambda"] == "1.5"

    def test_case_sensitive_keys(self, tmp_path):
        # N1 (batch size) and n1 (ascent steps) are distinct
        path = tmp_path / "c.ini"
        path.write_text("[a]\nproblem = wave\nd = 3\nN1 = 40\nn1 = 2\n")
        config, _ = load_config(str(path))
        assert config.N1 == 40 and config.n1 == 2

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[a]\nproblem = wave\n[b]\nproblem = wave\nd = 3\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(path))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            build_config({"problem": "wave", "d": "3", "learning_rate": "0.1"})

    def test_unparsable_value_rejected(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            build_config({"problem": "wave", "d": "three"})

    def test_required_keys(self):
        with pytest.raises(ConfigError, match="must set"):
            build_config({"d": "3"})
        with pytest.raises(ConfigError, match="must set"):
            build_config({"problem": "wave"})

    def test_lambda_maps_to_lam(self):
        config, _ = build_config({"problem": "wave", "d": "3", "lambda": "2.5"})
        assert config.lam == 2.5

    def test_extras_split_out(self):
        config, extras = build_config({
            "problem": "wave", "d": "3", "trials": "4", "methods": "basic",
            "grid": "11",
        })
        assert extras == {"trials": 4, "methods": "basic", "grid": 11}

    def test_invalid_training_config_becomes_config_error(self):
        with pytest.raises(ConfigError):
            build_config({"problem": "wave", "d": "3", "method": "drm"})

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            parse_config_file("/nonexistent/config.ini")

    def test_seventeen_digit_roundtrip(self):
        for x in (1 / 3, 0.29468541261011555, 1e-300, -7.25, 0.0):
            assert float(_fmt(x)) == x


class TestRunCommand:
    def test_artifacts_and_exit_code(self, desk_ini, tmp_path, capsys):
        out = tmp_path / "run1"
        assert main(["run", desk_ini(), "--out-dir", str(out)]) == 0
        assert (out / "manifest.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["artifacts"]) == {"errors.csv", "params.npz",
                                              "metadata.json"}
        lines = (out / "errors.csv").read_text().splitlines()
        assert lines[0] == ERROR_CSV_HEADER
        assert len(lines) == 1 + 3  # eval_every=1, n=3
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["problem"] == "elliptic_nl"
        assert meta["config"]["lam"] == 1.5
        assert meta["rng"] == {"algorithm": "philox", "seed": 1}
        assert not meta["diverged"]
        assert "final relative l2 error" in capsys.readouterr().out

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[a]\nproblem = wave\nd = 3\nwidth = 30\n")
        assert main(["run", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_seed_flag_overrides(self, desk_ini, tmp_path):
        out = tmp_path / "seeded"
        main(["run", desk_ini(), "--out-dir", str(out), "--seed", "9"])
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["seed"] == 9
        assert meta["rng"]["seed"] == 9

    def test_determinism_modulo_seconds(self, desk_ini, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", desk_ini(), "--out-dir", str(out_a)])
        main(["run", desk_ini(), "--out-dir", str(out_b)])
        rows_a = (out_a / "errors.csv").read_text().splitlines()
        rows_b = (out_b / "errors.csv").read_text().splitlines()
        for ra, rb in zip(rows_a[1:], rows_b[1:]):
            ca, cb = ra.split(","), rb.split(",")
            assert ca[:1] == cb[:1] and ca[2:] == cb[2:]  # seconds may differ

    def test_saved_parameters_reproduce_network(self, desk_ini, tmp_path, rng):
        out = tmp_path / "roundtrip"
        main(["run", desk_ini("selectnet"), "--out-dir", str(out)])
        config, ansatz, sels = _load_run(str(out))
        assert config.method == "selectnet"
        pts = rng.uniform(-0.5, 0.5, (20, 2))
        from selpde.trainer import train
        direct = train(config)
        np.testing.assert_array_equal(ansatz.values(pts), direct.ansatz.values(pts))
        np.testing.assert_array_equal(sels["sel_interior"].values(pts),
                                      direct.sel_interior.values(pts))
        assert sels["sel_interior"].m0 == 0.8
        assert sels["sel_interior"].M0 == 5.0

    def test_diverged_run_exits_3(self, desk_ini, tmp_path, monkeypatch):
        import selpde.trainer as trainer_mod
        from selpde.loss import LossComponents

        def exploding_loss(ansatz, problem, batch, lam, config):
            components = LossComponents(
                np.inf, 0.0, 0.0, np.inf, np.full(len(batch.interior), np.inf),
                np.zeros(batch.n_boundary))
            return components, []

        monkeypatch.setattr(trainer_mod, "basic_loss", exploding_loss)
        out = tmp_path / "boom"
        assert main(["run", desk_ini(), "--out-dir", str(out)]) == 3
        # partial artifacts are still written
        assert (out / "errors.csv").exists()
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["diverged"]


class TestSliceCommand:
    def run_once(self, desk_ini, tmp_path, method="basic"):
        out = tmp_path / f"run_{method}"
        main(["run", desk_ini(method), "--out-dir", str(out)])
        return out

    @staticmethod
    def read_slice(path):
        lines = path.read_text().splitlines()
        assert lines[0] == "coord1,coord2,value"
        return np.array([[float(v) for v in line.split(",")] for line in lines[1:]])

    def test_ball_slice_drops_outside_points(self, desk_ini, tmp_path):
        out = self.run_once(desk_ini, tmp_path)
        assert main(["slice", str(out), "--grid", "3"]) == 0
        rows = self.read_slice(out / "slice_solution.csv")
        # 3x3 plane grid minus the four corners outside the unit disk
        assert len(rows) == 5
        assert (rows[:, 0] ** 2 + rows[:, 1] ** 2 <= 1.0 + 1e-12).all()
        assert not (out / "slice_selection.csv").exists()

    def test_cube_slice_keeps_corners(self, tmp_path):
        path = tmp_path / "p.ini"
        path.write_text("[a]\nproblem = poisson2d\nd = 2\nm = 8\nL = 2\n"
                        "N1 = 20\nN2 = 20\nn = 2\neval_every = 1\nn_test = 50\n")
        out = tmp_path / "poisson"
        main(["run", str(path), "--out-dir", str(out)])
        main(["slice", str(out), "--grid", "2"])
        rows = self.read_slice(out / "slice_solution.csv")
        assert len(rows) == 4
        np.testing.assert_array_equal(np.abs(rows[:, :2]), np.ones((4, 2)))

    def test_time_slice_axes(self, tmp_path):
        path = tmp_path / "w.ini"
        path.write_text("[a]\nproblem = wave\nd = 3\nm = 8\nL = 2\nN1 = 20\n"
                        "N2 = 20\nn = 2\neval_every = 1\nn_test = 50\n")
        out = tmp_path / "wave"
        main(["run", str(path), "--out-dir", str(out)])
        main(["slice", str(out), "--grid", "4"])
        rows = self.read_slice(out / "slice_solution.csv")
        assert len(rows) == 16  # (t, x1) plane never leaves the cylinder
        assert rows[:, 0].min() == 0.0 and rows[:, 0].max() == 1.0

    def test_selection_slice_for_selectnet_runs(self, desk_ini, tmp_path):
        out = self.run_once(desk_ini, tmp_path, "selectnet")
        main(["slice", str(out), "--grid", "3"])
        sel = self.read_slice(out / "slice_selection.csv")
        assert ((sel[:, 2] > 0.8) & (sel[:, 2] < 5.0)).all()

    def test_residual_slice_values(self, desk_ini, tmp_path):
        out = self.run_once(desk_ini, tmp_path)
        main(["slice", str(out), "--grid", "3"])
        res = self.read_slice(out / "slice_residual.csv")
        assert (res[:, 2] >= 0).all()

    def test_small_grid_rejected(self, desk_ini, tmp_path):
        out = self.run_once(desk_ini, tmp_path)
        assert main(["slice", str(out), "--grid", "1"]) == 2

    def test_missing_run_dir(self, tmp_path):
        assert main(["slice", str(tmp_path / "nope")]) == 2

    def test_separate_out_dir(self, desk_ini, tmp_path):
        out = self.run_once(desk_ini, tmp_path)
        target = tmp_path / "slices"
        main(["slice", str(out), "--grid", "3", "--out-dir", str(target)])
        assert (target / "slice_solution.csv").exists()


class TestCompareCommand:
    def test_stats_csv(self, desk_ini, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = main(["compare", desk_ini(), "--trials", "2",
                     "--methods", "basic,binary", "--out-dir", str(out)])
        assert code == 0
        lines = (out / "stats.csv").read_text().splitlines()
        assert lines[0] == "method,trials,mean_error,stdev,cv"
        methods = [line.split(",")[0] for line in lines[1:]]
        assert methods == ["basic", "binary"]
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[1] == "2"
            assert all(np.isfinite(float(c)) for c in cells[2:])
        assert "basic" in capsys.readouterr().out
        assert json.loads((out / "manifest.json").read_text())["artifacts"] == [
            "stats.csv"]

    def test_extras_supply_defaults(self, desk_ini, tmp_path):
        ini = desk_ini(extra="\n[compare]\ntrials = 2\nmethods = basic\n")
        out = tmp_path / "cmp2"
        assert main(["compare", ini, "--out-dir", str(out)]) == 0
        lines = (out / "stats.csv").read_text().splitlines()
        assert len(lines) == 2 and lines[1].startswith("basic,2,")

    def test_unknown_method_exits_2(self, desk_ini, tmp_path):
        assert main(["compare", desk_ini(), "--methods", "basic,drm",
                     "--out-dir", str(tmp_path / "x")]) == 2

    def test_bad_trials_exits_2(self, desk_ini, tmp_path):
        assert main(["compare", desk_ini(), "--trials", "0",
                     "--out-dir", str(tmp_path / "x")]) == 2

    def test_diverged_trial_exits_3(self, desk_ini, tmp_path, monkeypatch):
        def explode(config, trials):
            raise RuntimeError("trial 0 (seed 1) did not produce a usable error")

        monkeypatch.setattr(cli, "run_trials", explode)
        assert main(["compare", desk_ini(),
                     "--out-dir", str(tmp_path / "x")]) == 3
