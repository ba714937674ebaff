"""
Integration tests for sisguard.

Tests complete command-line workflows from configuration files to artifacts,
and that identical runs produce identical files.
"""

import csv
import json
import os
import shutil
import tempfile
from pathlib import Path

from click.testing import CliRunner

from sisguard.cli import cli

MODEL = {
    "name": "ref",
    "alpha": 0.5,
    "beta_P": 0.6,
    "beta_U": 0.7,
    "gamma": 0.3,
    "L": 20,
    "c_P": 10,
    "distribution": {"kind": "uniform", "d_max": 4},
    "initial": {"y": 0.1, "z_S": 0.5},
    "record_every": 10,
}


class TestEndToEndWorkflows:
    """Configuration file to artifacts."""

    def setup_method(self):
        """Set up a temporary working directory."""
        self.temp_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.temp_dir, "results")
        self.runner = CliRunner()

    def teardown_method(self):
        """Clean up the temporary directory."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _config(self, name, payload):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w") as f:
            json.dump(payload, f)
        return path

    def test_simulate_writes_all_artifacts(self):
        """Test simulate: trajectory CSV, equilibrium and summary JSON."""
        config = self._config("ref.json", {**MODEL, "horizon": 3000})

        result = self.runner.invoke(cli, ["simulate", config, "-o", self.out_dir])

        assert result.exit_code == 0
        assert "✅ Simulated limit agrees" in result.output
        out = Path(self.out_dir)
        with open(out / "ref_trajectory.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][:2] == ["t", "y_1"]
        assert rows[0][-2:] == ["theta", "y_avg"]
        assert abs(float(rows[-1][-2]) - 0.4231) < 1e-3
        equilibrium = json.loads((out / "ref_equilibrium.json").read_text())
        assert equilibrium["regime"] == "endemic-interior"
        summary = json.loads((out / "ref_summary.json").read_text())
        assert summary["agreement"] is True

    def test_switched_mode_adds_regime_column(self):
        """Test simulate --mode switched on the boundary case."""
        config = self._config("ref8.json", {**MODEL, "name": "ref8", "c_P": 8, "horizon": 1000})

        result = self.runner.invoke(cli, ["simulate", config, "--mode", "switched", "-o", self.out_dir])

        assert result.exit_code == 0
        with open(Path(self.out_dir) / "ref8_trajectory.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][-1] == "regime"
        assert rows[-1][-1] == "3"

    def test_equilibrium_out_writes_json(self):
        """Test that equilibrium --out writes the same JSON it prints."""
        config = self._config("ref.json", MODEL)

        result = self.runner.invoke(cli, ["equilibrium", config, "-o", self.out_dir])

        assert result.exit_code == 0
        written = json.loads((Path(self.out_dir) / "ref_equilibrium.json").read_text())
        assert written["d_eq"] == 3
        assert f'"theta_star": {written["theta_star"]}' in result.output

    def test_sweep_file_is_deterministic(self):
        """Test that running the same sweep twice gives byte-identical CSV files."""
        config = self._config(
            "sweep.json", {**MODEL, "sweep": {"parameter": "c_P", "start": 2, "stop": 20, "points": 7}}
        )
        first = os.path.join(self.temp_dir, "first")
        second = os.path.join(self.temp_dir, "second")

        for out in (first, second):
            result = self.runner.invoke(cli, ["sweep", config, "--spot-checks", "0", "-o", out])
            assert result.exit_code == 0

        a = (Path(first) / "ref_c_P.csv").read_bytes()
        b = (Path(second) / "ref_c_P.csv").read_bytes()
        assert a == b
        assert len(a.decode().splitlines()) == 8

    def test_sweep_with_spot_check(self):
        """Test that a spot check runs and passes on a c_P sweep."""
        config = self._config(
            "sweep.json", {**MODEL, "sweep": {"parameter": "c_P", "values": [8, 10]}}
        )

        result = self.runner.invoke(cli, ["sweep", config, "--spot-checks", "1", "-o", self.out_dir])

        assert result.exit_code == 0
        assert "✅ c_P=" in result.output

    def test_bad_config_then_recovery(self):
        """Test that a broken file fails cleanly and a fixed one then succeeds."""
        path = os.path.join(self.temp_dir, "model.json")
        with open(path, "w") as f:
            f.write('{"alpha": 0.5,')

        broken = self.runner.invoke(cli, ["equilibrium", path])
        assert broken.exit_code == 1
        assert "Malformed JSON in model.json" in broken.output

        with open(path, "w") as f:
            json.dump(MODEL, f)
        fixed = self.runner.invoke(cli, ["equilibrium", path])
        assert fixed.exit_code == 0
