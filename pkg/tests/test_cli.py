import json
import pathlib

import pytest
from click.testing import CliRunner

from chi2atom.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path: pathlib.Path, payload: dict) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


class TestPreset:
    def test_preset_prints_config(self, runner):
        result = runner.invoke(main, ["preset", "fig1b"])
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["experiment"] == "spectroscopy"
        assert body["params"]["g_values"] == [4.0, 8.0]

    def test_unknown_preset_exits_1(self, runner):
        result = runner.invoke(main, ["preset", "nope"])
        assert result.exit_code == 1

    def test_presets_listing(self, runner):
        result = runner.invoke(main, ["presets"])
        assert result.exit_code == 0
        assert "fig2" in result.output.split()


class TestRun:
    def test_levels_run_writes_artifacts(self, runner, tmp_path):
        config = write_config(tmp_path, {"experiment": "levels", "params": {"g": 4.0}})
        out = tmp_path / "out"
        result = runner.invoke(main, ["run", "--config", config, "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "levels.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "levels"
        assert manifest["summary"]["two_excitation_gap"] == pytest.approx(4 * 2 ** 1.5)

    def test_unknown_key_exits_1_and_names_it(self, runner, tmp_path):
        config = write_config(tmp_path, {"experiment": "levels", "params": {"kapa0": 1.0}})
        result = runner.invoke(main, ["run", "--config", config, "--out", str(tmp_path / "o")])
        assert result.exit_code == 1
        assert "kapa0" in result.output

    def test_invalid_json_exits_1(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        result = runner.invoke(main, ["run", "--config", str(path), "--out", str(tmp_path / "o")])
        assert result.exit_code == 1

    def test_numerical_failure_exits_2(self, runner, tmp_path):
        config = write_config(tmp_path, {"experiment": "spectroscopy",
                                         "params": {"g_values": [0.0], "kappa_c": 0.0, "n_delta": 16}})
        result = runner.invoke(main, ["run", "--config", config, "--out", str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_jobs_flag_only_for_sweep(self, runner, tmp_path):
        config = write_config(tmp_path, {"experiment": "levels", "params": {}})
        result = runner.invoke(main, ["run", "--config", config, "--jobs", "2",
                                      "--out", str(tmp_path / "o")])
        assert result.exit_code == 1

    def test_default_out_dir_from_env(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("CHI2ATOM_OUT", str(tmp_path / "envout"))
        config = write_config(tmp_path, {"experiment": "levels", "params": {}})
        result = runner.invoke(main, ["run", "--config", config])
        assert result.exit_code == 0
        assert (tmp_path / "envout" / "levels.csv").exists()


class TestDeterminism:
    def test_repeated_runs_byte_identical(self, runner, tmp_path):
        config = write_config(tmp_path, {
            "experiment": "spectroscopy",
            "params": {"g_values": [4.0], "n_delta": 41, "delta_max": 5.0}})
        bodies = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            result = runner.invoke(main, ["run", "--config", config, "--out", str(out)])
            assert result.exit_code == 0, result.output
            bodies.append((out / "spectroscopy.csv").read_bytes())
        assert bodies[0] == bodies[1]

    def test_json_format_rendering(self, runner, tmp_path):
        config = write_config(tmp_path, {"experiment": "levels", "params": {}})
        out = tmp_path / "jsonout"
        result = runner.invoke(main, ["run", "--config", config, "--out", str(out),
                                      "--format", "json"])
        assert result.exit_code == 0
        records = json.loads((out / "levels.json").read_text())
        assert isinstance(records, list)
