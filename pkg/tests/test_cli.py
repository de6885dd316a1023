import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pytest import approx, mark

import gisdesign as gd
from gisdesign.cli import (
    ExperimentConfig,
    build_grid,
    cmd_compare,
    cmd_estimate,
    cmd_select,
    main,
    read_skeleton,
    resolve_function,
    resolve_threads,
    trace_path,
)
from gisdesign.settings import threads_env_var


@mark.cli
class TestExperimentConfig:
    def test_comments_and_case(self):
        config = ExperimentConfig.from_text("# experiment\nModel.Family = gaussian  # family\n\nseed = 3\n")
        assert "model.family" in config
        assert config.get_str("model.family") == "gaussian"
        assert config.get_int("seed") == 3
        assert config.line("seed") == 4

    def test_missing_equals(self):
        with pytest.raises(gd.ConfigError, match="line 2: expected 'key = value'"):
            ExperimentConfig.from_text("seed = 1\nmodel.family gaussian\n")

    def test_unknown_key(self):
        with pytest.raises(gd.ConfigError, match="line 1, key 'design.budget': unknown key"):
            ExperimentConfig.from_text("design.budget = 10")

    def test_duplicate_key(self):
        with pytest.raises(gd.ConfigError, match="first set on line 1") as error:
            ExperimentConfig.from_text("seed = 1\nseed = 2")
        assert error.value.line == 2
        assert error.value.key == "seed"

    def test_empty_value(self):
        with pytest.raises(gd.ConfigError, match="empty value"):
            ExperimentConfig.from_text("seed =")

    def test_typed_getters(self):
        config = ExperimentConfig.from_text("design.k = three\ndesign.t0 = 2.5\ndesign.scaled_entropy = no")
        with pytest.raises(gd.ConfigError, match="line 1, key 'design.k'"):
            config.get_int("design.k")
        assert config.get_float("design.t0") == 2.5
        assert config.get_bool("design.scaled_entropy", True) is False
        assert config.get_int("design.b", 10) == 10
        with pytest.raises(gd.ConfigError, match="required key is missing"):
            config.get_str("design.method")

    def test_choice(self):
        config = ExperimentConfig.from_text("design.method = random")
        with pytest.raises(gd.ConfigError, match="is not one of"):
            config.get_str("design.method", choices=gd.design.METHODS)

    def test_range_axis(self):
        values = ExperimentConfig.from_text("grid.gamma = -4:4:0.4").get_axis("grid.gamma")
        assert len(values) == 21
        assert values[0] == -4.0
        assert values[10] == approx(0.0, abs=1e-12)
        assert values[-1] == approx(4.0)

    def test_list_axis(self):
        assert_array_equal(ExperimentConfig.from_text("grid.sd = 1, 1.5, 2").get_axis("grid.sd"), [1.0, 1.5, 2.0])

    @mark.parametrize("text, message", [("1:0:1", "start <= stop"), ("0:1", "start:stop:step"), ("1, 1", "distinct")])
    def test_bad_axis(self, text, message):
        config = ExperimentConfig.from_text(f"grid.mean = {text}")
        with pytest.raises(gd.ConfigError, match=message):
            config.get_axis("grid.mean")

    def test_points(self):
        config = ExperimentConfig.from_text("design.fixed = 0, 1; 2, 1.5")
        points = config.get_points("design.fixed")
        assert len(points) == 2
        assert_array_equal(points[1], [2.0, 1.5])

    def test_build_grid(self):
        grid = build_grid(ExperimentConfig.from_text("model.family = autologistic\nmodel.rows = 4\ngrid.gamma = 0, 1"))
        assert len(grid) == 2
        assert grid.state_dim == 16


@mark.cli
class TestResolvers:
    def test_functions(self):
        x = np.array([[1.0, 3.0], [2.0, 6.0]])
        assert_allclose(resolve_function("identity", 2)(x), [2.0, 4.0])
        assert_allclose(resolve_function("one", 2)(x), [1.0, 1.0])
        assert_allclose(resolve_function("1", 2)(x), [3.0, 6.0])

    @mark.parametrize("name", ["5", "square"])
    def test_unknown_function(self, name):
        with pytest.raises(gd.ConfigError, match="estimate.function"):
            resolve_function(name, 2)

    def test_threads(self, monkeypatch):
        monkeypatch.delenv(threads_env_var, raising=False)
        assert resolve_threads(None) == 1
        assert resolve_threads(2) == 2
        monkeypatch.setenv(threads_env_var, "3")
        assert resolve_threads(None) == 3
        monkeypatch.setenv(threads_env_var, "many")
        with pytest.raises(gd.ConfigError, match="not an integer"):
            resolve_threads(None)
        with pytest.raises(gd.ConfigError, match="positive"):
            resolve_threads(0)

    def test_trace_path(self, tmp_path):
        assert trace_path(tmp_path / "skeleton.csv") == tmp_path / "skeleton_trace.csv"


@mark.cli
@mark.usefixtures("_init_config_files")
class TestCommands:
    def test_select_writes_skeleton(self, tmp_path):
        out = tmp_path / "sfe.csv"
        result = cmd_select(self.config_sfe, out)
        assert result.method == "sfe"
        grid = build_grid(ExperimentConfig.from_file(self.config_sfe))
        skeleton, meta = read_skeleton(out, grid)
        assert skeleton == result.skeleton
        assert skeleton.reference == 0
        assert meta["method"] == "sfe"
        assert meta["seed"] == "5"
        assert trace_path(out).exists()

    def test_select_is_reproducible(self, tmp_path):
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        cmd_select(self.config_sfe, first)
        cmd_select(self.config_sfe, second)
        assert first.read_bytes() == second.read_bytes()

    def test_estimate_nis(self, tmp_path):
        skeleton = tmp_path / "nis.csv"
        profile = tmp_path / "profile.csv"
        cmd_select(self.config_nis, skeleton)
        table = cmd_estimate(self.config_nis, skeleton, profile)
        assert list(table.columns) == ["xi_1", "xi_2", "log_u_hat", "se_u", "rel_se", "eta_hat", "se_eta"]
        written = pd.read_csv(profile)
        assert len(written) == 10
        row = written[(written["xi_1"] == 1.0) & (written["xi_2"] == 1.0)].iloc[0]
        assert row["log_u_hat"] == 0.0
        assert row["se_u"] == 0.0

    def test_estimate_is_reproducible(self, tmp_path):
        skeleton = tmp_path / "sfe.csv"
        cmd_select(self.config_sfe, skeleton)
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        cmd_estimate(self.config_sfe, skeleton, first)
        cmd_estimate(self.config_sfe, skeleton, second, threads=2)
        assert first.read_bytes() == second.read_bytes()

    def test_estimate_reports_unused_budget(self, tmp_path, caplog):
        config = tmp_path / "odd.cfg"
        config.write_text(self.config_sfe.read_text() + "\nbudget.total = 1201\n")
        skeleton = tmp_path / "sfe.csv"
        cmd_select(config, skeleton)
        with caplog.at_level("WARNING", logger="gisdesign.cli"):
            cmd_estimate(config, skeleton, tmp_path / "profile.csv")
        assert "of the 1201 draws in budget.total" in caplog.text

    def test_skeleton_from_another_grid(self, tmp_path):
        skeleton = tmp_path / "sfe.csv"
        cmd_select(self.config_sfe, skeleton)
        other = build_grid(ExperimentConfig.from_text("model.family = gaussian\ngrid.mean = 5, 6, 7, 8, 9, 10"))
        with pytest.raises(gd.InputError, match="skeleton file"):
            read_skeleton(skeleton, other)

    def test_compare(self, tmp_path):
        skeleton = tmp_path / "nis.csv"
        profile = tmp_path / "profile.csv"
        cmd_select(self.config_nis, skeleton)
        cmd_estimate(self.config_nis, skeleton, profile)
        summary = cmd_compare([profile, profile], tmp_path / "summary.csv")
        assert list(summary.columns) == ["profile", "max_rel_se", "argmax", "mean_rel_se", "ratio"]
        assert_allclose(summary["ratio"], [1.0, 1.0])
        assert (tmp_path / "summary.csv").exists()

    def test_compare_rejects_other_tables(self, tmp_path):
        path = tmp_path / "other.csv"
        pd.DataFrame({"a": [1.0]}).to_csv(path, index=False)
        with pytest.raises(gd.InputError, match="not a profile table"):
            cmd_compare([path])

    def test_main(self, tmp_path, capsys):
        skeleton = tmp_path / "sfe.csv"
        assert main(["select", "--config", str(self.config_sfe), "--out", str(skeleton)]) == 0
        assert "sfe: skeleton" in capsys.readouterr().out
        profile = tmp_path / "profile.csv"
        assert main(["estimate", "--config", str(self.config_sfe), "--skeleton", str(skeleton), "--out", str(profile)]) == 0
        assert main(["compare", str(profile)]) == 0
        assert "max_rel_se" in capsys.readouterr().out

    def test_main_config_error(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("model.family = gaussian\ngrid.mean = 0, 1\ndesign.size = 2\n")
        assert main(["select", "--config", str(config), "--out", str(tmp_path / "out.csv")]) == 2
        assert "gisdesign: error: line 3, key 'design.size': unknown key" in capsys.readouterr().err

    def test_main_missing_config(self, tmp_path, capsys):
        assert main(["select", "--config", str(tmp_path / "missing.cfg")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_main_usage_error(self):
        with pytest.raises(SystemExit) as error:
            main(["select"])
        assert error.value.code == 2
