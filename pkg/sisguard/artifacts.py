"""
Artifact layer for sisguard.

Writes trajectories, sweep tables and equilibrium summaries to an output
directory, and reads/writes NIMFA graphs as edge lists.
"""

import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from .exceptions import ArtifactError, ConfigurationError
from .models import Trajectory
from .nimfa import DirectedWeightedGraph

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 10


def format_value(value: Any) -> str:
    """Render a CSV cell: floats with 10 significant digits, everything else as text."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{SIGNIFICANT_DIGITS}g")
    if value is None:
        return ""
    return str(value)


def trajectory_header(d_max: int, with_regime: bool) -> List[str]:
    header = ["t"]
    for prefix in ("y", "zS", "zI"):
        header += [f"{prefix}_{d}" for d in range(1, d_max + 1)]
    header += ["theta", "y_avg"]
    if with_regime:
        header.append("regime")
    return header


def trajectory_rows(trajectory: Trajectory) -> Iterable[list]:
    """One row per recorded time, in the column order of :func:`trajectory_header`."""
    zeros = np.zeros(trajectory.y.shape[1])
    for i in range(len(trajectory)):
        row = [trajectory.times[i]]
        row += list(trajectory.y[i])
        row += list(trajectory.z_S[i] if trajectory.has_strategies else zeros)
        row += list(trajectory.z_I[i] if trajectory.has_strategies else zeros)
        row += [trajectory.theta[i], trajectory.y_avg[i]]
        if trajectory.regime is not None:
            row.append(int(trajectory.regime[i]))
        yield row


class ArtifactWriter:
    """Writes run artifacts below a single output directory."""

    def __init__(self, out_dir: Optional[str] = None):
        """
        Initialize ArtifactWriter with an output directory.

        Args:
            out_dir: Optional output directory. Defaults to ./results
        """
        self.out_dir = Path(out_dir) if out_dir is not None else Path.cwd() / "results"
        self._ready = False

    def _ensure_dir(self) -> Path:
        """Create the output directory on first use."""
        if not self._ready:
            try:
                self.out_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                raise ArtifactError(
                    f"Cannot create output directory: {e}",
                    f"Please check permissions for: {self.out_dir}",
                )
            if not os.access(self.out_dir, os.W_OK):
                raise ArtifactError(
                    "Output directory is not writable", f"Directory: {self.out_dir}"
                )
            self._ready = True
        return self.out_dir

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Write a CSV table with a header row and return its path."""
        path = self._ensure_dir() / name
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, delimiter=",", lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_value(v) for v in row])
        except OSError as e:
            raise ArtifactError(f"Failed to write {name}: {e}", f"Path: {path}")
        logger.info("Wrote %s", path)
        return path

    def write_trajectory(self, name: str, trajectory: Trajectory) -> Path:
        header = trajectory_header(trajectory.y.shape[1], trajectory.regime is not None)
        return self.write_rows(name, header, trajectory_rows(trajectory))

    def write_json(self, name: str, payload: Any) -> Path:
        """Write a JSON document with sorted keys and return its path."""
        path = self._ensure_dir() / name
        try:
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
                handle.write("\n")
        except (OSError, TypeError) as e:
            raise ArtifactError(f"Failed to write {name}: {e}", f"Path: {path}")
        logger.info("Wrote %s", path)
        return path

    def write_graph(self, name: str, graph: DirectedWeightedGraph) -> Path:
        """Write a graph as an (i, j, weight) edge list plus a recovery-rate sidecar.

        Nodes are numbered from 1; zero-weight edges are omitted.
        """
        rows = [
            (i + 1, j + 1, graph.adjacency[i, j])
            for i in range(graph.n)
            for j in range(graph.n)
            if graph.adjacency[i, j] > 0
        ]
        path = self.write_rows(f"{name}.csv", ["i", "j", "weight"], rows)
        self.write_rows(
            f"{name}.recovery.csv",
            ["i", "gamma"],
            [(i + 1, rate) for i, rate in enumerate(graph.recovery)],
        )
        return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def read_graph(edge_path: str, recovery_path: Optional[str] = None) -> DirectedWeightedGraph:
    """Load a graph written by :meth:`ArtifactWriter.write_graph`.

    Raises:
        ConfigurationError: If the files are missing or malformed
    """
    edge_path = Path(edge_path)
    if recovery_path is None:
        recovery_path = edge_path.with_name(edge_path.stem + ".recovery.csv")
    try:
        with open(recovery_path, newline="", encoding="utf-8") as handle:
            recovery = {int(r["i"]): float(r["gamma"]) for r in csv.DictReader(handle)}
        with open(edge_path, newline="", encoding="utf-8") as handle:
            edges = [(int(r["i"]), int(r["j"]), float(r["weight"])) for r in csv.DictReader(handle)]
    except OSError as e:
        raise ConfigurationError(f"Cannot read graph files: {e}")
    except (KeyError, ValueError) as e:
        raise ConfigurationError("Malformed graph file", str(e))

    n = len(recovery)
    if sorted(recovery) != list(range(1, n + 1)):
        raise ConfigurationError("Recovery sidecar must list nodes 1..n exactly once")
    adjacency = np.zeros((n, n))
    for i, j, weight in edges:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ConfigurationError("Edge refers to an unknown node", f"({i}, {j})")
        adjacency[i - 1, j - 1] = weight
    try:
        return DirectedWeightedGraph(
            adjacency=adjacency, recovery=np.array([recovery[i] for i in range(1, n + 1)])
        )
    except ValueError as e:
        raise ConfigurationError("Invalid graph", str(e))
