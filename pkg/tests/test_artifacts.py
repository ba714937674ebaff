"""Tests for the artifact writer and graph files."""

import json
import os
import shutil
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from sisguard.artifacts import (
    ArtifactWriter,
    format_value,
    read_graph,
    trajectory_header,
)
from sisguard.dynamics import initial_state, integrate_coupled
from sisguard.exceptions import ArtifactError, ConfigurationError
from sisguard.nimfa import DirectedWeightedGraph, build_abar
from sisguard.reduced import integrate_switched


class TestFormatValue:
    """CSV cell rendering."""

    def test_float_significant_digits(self):
        """Test that floats keep 10 significant digits."""
        assert format_value(1 / 3) == "0.3333333333"
        assert format_value(np.float64(0.4)) == "0.4"

    def test_other_types(self):
        """Test booleans, integers and missing values."""
        assert format_value(True) == "true"
        assert format_value(np.int64(3)) == "3"
        assert format_value(None) == ""
        assert format_value("endemic-interior") == "endemic-interior"

    def test_trajectory_header(self):
        """Test the column order for two degrees."""
        assert trajectory_header(2, with_regime=True) == [
            "t", "y_1", "y_2", "zS_1", "zS_2", "zI_1", "zI_2", "theta", "y_avg", "regime"
        ]


class TestArtifactWriter:
    """Test cases for ArtifactWriter."""

    def setup_method(self):
        """Set up a temporary output directory for each test."""
        self.temp_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.temp_dir, "results", "nested")
        self.writer = ArtifactWriter(self.out_dir)

    def teardown_method(self):
        """Clean up the temporary directory."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_creates_directory(self):
        """Test that the output directory is created on first write."""
        path = self.writer.write_rows("t.csv", ["a"], [[1]])

        assert Path(self.out_dir).is_dir()
        assert path.read_text() == "a\n1\n"

    def test_default_directory(self):
        """Test that the default directory is ./results."""
        assert ArtifactWriter().out_dir == Path.cwd() / "results"

    def test_trajectory_is_deterministic(self, params10, uniform4):
        """Test that two identical runs produce byte-identical files."""
        first = integrate_coupled(initial_state(uniform4), params10, uniform4, T=2.0)
        second = integrate_coupled(initial_state(uniform4), params10, uniform4, T=2.0)

        a = self.writer.write_trajectory("a.csv", first).read_bytes()
        b = self.writer.write_trajectory("b.csv", second).read_bytes()

        assert a == b
        lines = a.decode().splitlines()
        assert lines[0].startswith("t,y_1,y_2,y_3,y_4,zS_1")
        assert len(lines) == len(first) + 1

    def test_switched_trajectory_has_regime(self, params10, uniform4):
        """Test that switched runs add the regime column."""
        trajectory = integrate_switched(np.full(4, 0.1), params10, uniform4, T=1.0)
        lines = self.writer.write_trajectory("s.csv", trajectory).read_text().splitlines()

        assert lines[0].endswith(",theta,y_avg,regime")
        assert lines[1].endswith(",5")

    def test_json_sorted_with_numpy(self):
        """Test that numpy values serialize and keys are sorted."""
        path = self.writer.write_json("s.json", {"b": np.float64(0.5), "a": np.arange(2)})

        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [0, 1], "b": 0.5}

    def test_json_unserializable(self):
        """Test that unknown objects raise ArtifactError."""
        with pytest.raises(ArtifactError, match="Failed to write"):
            self.writer.write_json("bad.json", {"x": object()})

    @patch("sisguard.artifacts.os.access")
    def test_unwritable_directory(self, mock_access):
        """Test that an unwritable directory raises ArtifactError."""
        mock_access.return_value = False

        with pytest.raises(ArtifactError, match="not writable"):
            self.writer.write_rows("t.csv", ["a"], [])

    def test_directory_creation_failure(self):
        """Test that a file in place of the directory raises ArtifactError."""
        blocker = os.path.join(self.temp_dir, "blocker")
        Path(blocker).write_text("")

        with pytest.raises(ArtifactError, match="Cannot create output directory"):
            ArtifactWriter(os.path.join(blocker, "out")).write_rows("t.csv", ["a"], [])


class TestGraphFiles:
    """Edge-list files for NIMFA graphs."""

    def setup_method(self):
        """Set up a temporary directory for each test."""
        self.temp_dir = tempfile.mkdtemp()
        self.writer = ArtifactWriter(self.temp_dir)

    def teardown_method(self):
        """Clean up the temporary directory."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_written_graph_reloads(self, params10, uniform4):
        """Test that a degree-class digraph survives a write and a read."""
        graph, _ = build_abar(3, params10, uniform4)
        path = self.writer.write_graph("abar", graph)

        loaded = read_graph(str(path))

        np.testing.assert_allclose(loaded.adjacency, graph.adjacency, rtol=1e-9)
        np.testing.assert_allclose(loaded.recovery, graph.recovery)

    def test_zero_weights_omitted(self):
        """Test that absent edges are not listed."""
        graph = DirectedWeightedGraph(adjacency=[[0, 0.5], [0, 0]], recovery=[1, 2])
        lines = self.writer.write_graph("g", graph).read_text().splitlines()

        assert lines == ["i,j,weight", "1,2,0.5"]

    def test_missing_sidecar(self):
        """Test that a missing recovery file raises ConfigurationError."""
        edge_path = os.path.join(self.temp_dir, "lonely.csv")
        Path(edge_path).write_text("i,j,weight\n1,2,0.5\n")

        with pytest.raises(ConfigurationError, match="Cannot read graph files"):
            read_graph(edge_path)

    def test_unknown_node(self):
        """Test that an edge to an unlisted node is rejected."""
        Path(self.temp_dir, "g.csv").write_text("i,j,weight\n1,3,0.5\n")
        Path(self.temp_dir, "g.recovery.csv").write_text("i,gamma\n1,1\n2,1\n")

        with pytest.raises(ConfigurationError, match="unknown node"):
            read_graph(os.path.join(self.temp_dir, "g.csv"))
