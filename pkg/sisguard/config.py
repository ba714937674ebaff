"""
JSON configuration loading for sisguard.

A model configuration holds the parameters, a ``distribution`` section and
optional run settings. Sweep and comparison configurations add a ``sweep``
or ``grid`` section on top of a model configuration.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .exceptions import ConfigurationError, ValidationError
from .experiments import (
    COMPARISON_GRIDS,
    DEFAULT_GRID_POINTS,
    ComparisonSpec,
    Scenario,
    SweepSpec,
    comparison_distributions,
    linear_grid,
)
from .models import DegreeDistribution, ModelParams, SocialState, make_distribution

logger = logging.getLogger(__name__)

REQUIRED_PARAMS = ("alpha", "beta_P", "beta_U", "gamma", "L", "c_P")
OPTIONAL_PARAMS = ("c_IU", "c_IP", "epsilon")
DEFAULT_INITIAL = {"y": 0.1, "z_S": 0.5, "z_I": 0.5}


def read_json(path: str) -> Dict[str, Any]:
    """Read a JSON object from disk.

    Raises:
        ConfigurationError: If the file is missing, unreadable or not a JSON object
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigurationError("Configuration file not found", str(path))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Malformed JSON in {path.name}", f"line {e.lineno}: {e.msg}")
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration: {e}", str(path))
    if not isinstance(data, dict):
        raise ConfigurationError("Configuration must be a JSON object", str(path))
    return data


def _require(data: Dict[str, Any], key: str, section: str = "configuration") -> Any:
    if key not in data:
        raise ConfigurationError(f"Missing key '{key}' in {section}")
    return data[key]


def _rate_vector(value: Any, name: str, d_max: int) -> np.ndarray:
    if np.ndim(value) == 0:
        return np.full(d_max, float(value))
    vector = np.array(value, dtype=float)
    if vector.shape != (d_max,):
        raise ConfigurationError(
            f"{name} must have one entry per degree", f"Expected {d_max}, received {vector.size}"
        )
    return vector


def parse_distribution(section: Any) -> DegreeDistribution:
    """Build a distribution from ``{kind, d_max, n, p, masses}``."""
    if not isinstance(section, dict):
        raise ConfigurationError("'distribution' must be an object")
    kind = _require(section, "kind", "distribution")
    masses = section.get("masses")
    if "d_max" in section:
        d_max = section["d_max"]
    elif masses is not None:
        d_max = len(masses)
    else:
        raise ConfigurationError("Missing key 'd_max' in distribution")
    try:
        return make_distribution(kind, d_max, n=section.get("n"), p=section.get("p"), masses=masses)
    except (TypeError, ValueError) as e:
        raise ConfigurationError("Invalid distribution", str(e))


def parse_params(data: Dict[str, Any], d_max: int) -> ModelParams:
    """Build parameters for ``d_max`` degrees; scalar rates are broadcast."""
    values = {key: _require(data, key) for key in REQUIRED_PARAMS}
    values.update({key: data[key] for key in OPTIONAL_PARAMS if key in data})
    try:
        values["beta_P"] = _rate_vector(values["beta_P"], "beta_P", d_max)
        values["beta_U"] = _rate_vector(values["beta_U"], "beta_U", d_max)
        return ModelParams(**values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError("Invalid parameter value", str(e))


def parse_initial(section: Optional[Dict[str, Any]], d_max: int) -> SocialState:
    """Initial state from scalars or per-degree vectors; z_I defaults to z_S."""
    section = dict(section or {})
    unknown = set(section) - set(DEFAULT_INITIAL)
    if unknown:
        raise ConfigurationError("Unknown keys in 'initial'", ", ".join(sorted(unknown)))
    if "z_S" in section and "z_I" not in section:
        section["z_I"] = section["z_S"]
    merged = {**DEFAULT_INITIAL, **section}
    try:
        return SocialState(**{key: _rate_vector(merged[key], key, d_max) for key in DEFAULT_INITIAL})
    except (TypeError, ValueError) as e:
        raise ConfigurationError("Invalid initial state", str(e))


def parse_scenario(data: Dict[str, Any], default_name: str = "scenario") -> Scenario:
    """Scenario from an already-parsed model configuration."""
    dist = parse_distribution(_require(data, "distribution"))
    params = parse_params(data, dist.d_max)
    options = {key: data[key] for key in ("run", "horizon", "step", "record_every") if key in data}
    try:
        return Scenario(
            name=str(data.get("name", default_name)),
            params=params,
            dist=dist,
            initial=parse_initial(data.get("initial"), dist.d_max),
            **options,
        )
    except (TypeError, ValueError) as e:
        raise ConfigurationError("Invalid run settings", str(e))


def load_model_config(path: str) -> Scenario:
    """
    Load a model configuration file.

    Args:
        path: JSON file with the model keys and a ``distribution`` section

    Returns:
        Scenario named after the ``name`` key or the file stem

    Raises:
        ConfigurationError: If the file cannot be read or is incomplete
        ValidationError: If the distribution cannot be built
    """
    data = read_json(path)
    scenario = parse_scenario(data, default_name=Path(path).stem)
    logger.debug("Loaded scenario '%s' from %s", scenario.name, path)
    return scenario


def _grid_values(section: Dict[str, Any], points: Optional[int], name: str):
    if "values" in section:
        if points is not None:
            logger.warning("Ignoring grid point override for an explicit value list")
        return section["values"]
    start = _require(section, "start", name)
    stop = _require(section, "stop", name)
    count = points if points is not None else int(section.get("points", DEFAULT_GRID_POINTS))
    return linear_grid(float(start), float(stop), count)


def load_sweep_config(path: str, points: Optional[int] = None) -> SweepSpec:
    """
    Load a sweep configuration: a model configuration plus ``sweep``
    {parameter, values} or {parameter, start, stop, points}.

    Raises:
        ConfigurationError: If the file or the sweep section is malformed
    """
    data = read_json(path)
    section = _require(data, "sweep")
    if not isinstance(section, dict):
        raise ConfigurationError("'sweep' must be an object")
    base = parse_scenario(data, default_name=Path(path).stem)
    parameter = _require(section, "parameter", "sweep")
    try:
        values = _grid_values(section, points, "sweep")
        return SweepSpec(
            base=base,
            parameter=parameter,
            values=values,
            output=section.get("output", f"{base.name}_{parameter}.csv"),
        )
    except (TypeError, ValueError, ValidationError) as e:
        raise ConfigurationError("Invalid sweep", str(e))


def load_comparison_config(
    path: str, parameter: Optional[str] = None, points: Optional[int] = None
) -> ComparisonSpec:
    """
    Load a distribution-comparison configuration: model parameters plus
    ``grid`` {parameter, start, stop, points}. Only ``d_max`` is read from
    the distribution section; the compared distributions are built from it.

    Raises:
        ConfigurationError: If the file or the grid section is malformed
    """
    data = read_json(path)
    section = data.get("grid", {})
    if not isinstance(section, dict):
        raise ConfigurationError("'grid' must be an object")
    distribution = data.get("distribution", {})
    if not isinstance(distribution, dict):
        raise ConfigurationError("'distribution' must be an object")
    try:
        d_max = int(distribution.get("d_max", 20))
    except (TypeError, ValueError):
        raise ConfigurationError("Invalid distribution", f"d_max must be an integer, got {distribution['d_max']!r}")
    params = parse_params(data, d_max)
    parameter = parameter or _require(section, "parameter", "grid")
    if "start" not in section and "values" not in section:
        if parameter not in COMPARISON_GRIDS:
            raise ConfigurationError(f"Unknown comparison parameter '{parameter}'")
        start, stop = COMPARISON_GRIDS[parameter]
        section = {**section, "start": start, "stop": stop}
    try:
        return ComparisonSpec(
            params=params,
            parameter=parameter,
            values=_grid_values(section, points, "grid"),
            distributions=comparison_distributions(d_max),
        )
    except (TypeError, ValueError, ValidationError) as e:
        raise ConfigurationError("Invalid comparison grid", str(e))
