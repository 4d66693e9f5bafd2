"""
Tests for the heatnet CLI
"""
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from cli.ctl import cli


@pytest.fixture
def runner():
    # click >= 8.2 always keeps stderr separate and dropped mix_stderr
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()


def stability_doc(static_config):
    static_config["model"]["two_oscillator"]["v1"] = 0.1
    static_config["model"]["omega_d"] = 1.5
    static_config["sweep"] = {"axes": [
        {"path": "model.omega_d", "start": 1.4, "stop": 1.6, "num": 3},
        {"path": "model.two_oscillator.c0", "start": 0.1, "stop": 0.2, "num": 2},
    ]}
    return static_config


class TestStaticCurrents:
    def test_writes_csv_and_json(self, runner, write_config, static_config):
        path = write_config(static_config)
        result = runner.invoke(cli, ["--config", path, "static-currents"])
        assert result.exit_code == 0, result.stderr
        out = Path(static_config["output"]["directory"])
        csv = (out / "static-currents.csv").read_text().splitlines()
        header = [line for line in csv if not line.startswith("#")][0]
        assert header == "bath,node,temperature,heat_current,quad_error,reason"
        assert any(line.startswith("# config_hash: ") for line in csv)
        report = json.loads((out / "static-currents.json").read_text())
        assert report["command"] == "static-currents"
        assert report["report"]["heat_currents"][0] > 0
        print("✓ static-currents wrote CSV and JSON")

    def test_out_option_overrides_directory(self, runner, write_config, static_config, tmp_path):
        path = write_config(static_config)
        target = tmp_path / "elsewhere"
        result = runner.invoke(cli, ["--config", path, "--out", str(target), "static-currents"])
        assert result.exit_code == 0, result.stderr
        assert (target / "static-currents.csv").exists()


class TestExitCodes:
    def test_missing_config_option(self, runner):
        result = runner.invoke(cli, ["static-currents"])
        assert result.exit_code == 2
        assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "config_parse"

    def test_unparseable_config(self, runner, write_config):
        path = write_config("baths: [oops", "bad.yaml")
        result = runner.invoke(cli, ["--config", path, "static-currents"])
        assert result.exit_code == 2

    def test_invalid_parameters(self, runner, write_config, static_config):
        static_config["baths"][0]["gamma"] = -0.01
        result = runner.invoke(cli, ["--config", write_config(static_config), "static-currents"])
        assert result.exit_code == 3
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert error["error"] == "validation"
        assert error["exit_code"] == 3

    def test_solver_failure(self, runner, write_config, static_config):
        """A driven command on a static network is a solver-side parameter error"""
        result = runner.invoke(cli, ["--config", write_config(static_config), "driven-currents"])
        assert result.exit_code == 4
        assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "parameter"

    def test_unwritable_output(self, runner, write_config, static_config, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        static_config["output"]["directory"] = str(blocker / "out")
        result = runner.invoke(cli, ["--config", write_config(static_config), "static-currents"])
        assert result.exit_code == 5


class TestSweeps:
    def test_output_independent_of_worker_count(self, runner, write_config, static_config, tmp_path):
        path = write_config(stability_doc(static_config))
        texts = []
        for workers in (1, 2):
            target = tmp_path / f"w{workers}"
            result = runner.invoke(cli, ["--config", path, "--out", str(target), "--workers", str(workers), "stability-map"])
            assert result.exit_code == 0, result.stderr
            texts.append((target / "stability-map.csv").read_bytes())
        assert texts[0] == texts[1]
        data = [line for line in texts[0].decode().splitlines() if not line.startswith("#")]
        assert len(data) == 1 + 6

    def test_emit_gnuplot(self, runner, write_config, static_config, tmp_path):
        path = write_config(stability_doc(static_config))
        target = tmp_path / "plots"
        result = runner.invoke(cli, ["--config", path, "--out", str(target), "--emit-gnuplot", "stability-map"])
        assert result.exit_code == 0, result.stderr
        script = (target / "stability-map.gp").read_text()
        assert "stability-map.csv" in script
        assert "splot" in script
