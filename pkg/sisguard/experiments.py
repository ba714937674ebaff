"""
Experiment layer for sisguard.

Runs named scenarios (coupled or switched trajectories checked against the
analytic equilibrium), parameter sweeps over the equilibrium engine, the
degree-distribution comparison, and the NIMFA consistency check.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .artifacts import ArtifactWriter
from .dynamics import DEFAULT_STEP, initial_state, integrate_coupled
from .equilibrium import EquilibriumResult, Regime, find_equilibrium, reproduction_number
from .exceptions import NumericalError, ValidationError
from .models import (
    MASS_TOLERANCE,
    DegreeDistribution,
    ModelParams,
    SocialState,
    Trajectory,
    make_distribution,
    validate,
)
from .nimfa import build_abar, equivalence_check, rank_one_radius, spectral_radius
from .reduced import integrate_switched

logger = logging.getLogger(__name__)

RUN_MODES = ("coupled", "switched", "equilibrium")
SWEEP_PARAMETERS = ("alpha", "beta_P", "c_P", "m_4")
COMPARISON_PARAMETERS = ("alpha", "beta_P", "c_P")

DEFAULT_GRID_POINTS = 33
THETA_AGREEMENT = 1e-3
Y_AGREEMENT = 5e-3
SPOT_CHECK_POINTS = 3
SPOT_CHECK_HORIZON = 1000.0

# the heterogeneous-rate sweep fixes m_2 and m_3 and lets m_1 absorb m_4
HETERO_FIXED_MASS = 0.05
HETERO_GRID = (0.05, 0.85)

COMPARISON_GRIDS = {
    "alpha": (0.05, 0.95),
    "beta_P": (0.05, 0.95),
    "c_P": (0.5, 50.0),
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully specified run.

    Attributes:
        name: Scenario name, used for artifact file names
        params: Model parameters
        dist: Degree distribution
        initial: Starting social state
        run: ``coupled``, ``switched`` or ``equilibrium``
        horizon: Integration horizon in time units
        step: Euler step
        record_every: Keep every n-th integration step in the trajectory
    """

    name: str
    params: ModelParams
    dist: DegreeDistribution
    initial: SocialState
    run: str = "coupled"
    horizon: float = 1500.0
    step: float = DEFAULT_STEP
    record_every: int = 1

    def __post_init__(self):
        """Check that the pieces fit together."""
        if not self.name or not isinstance(self.name, str):
            raise ValueError("Scenario name cannot be empty")
        if self.run not in RUN_MODES:
            raise ValueError(f"Unknown run mode '{self.run}'; expected one of {', '.join(RUN_MODES)}")
        if self.params.n_degrees != self.dist.d_max:
            raise ValueError(
                f"beta vectors have {self.params.n_degrees} entries for {self.dist.d_max} degrees"
            )
        if self.initial.n_degrees != self.dist.d_max:
            raise ValueError(
                f"Initial state has {self.initial.n_degrees} entries for {self.dist.d_max} degrees"
            )
        if not self.step > 0:
            raise ValueError("Step must be positive")
        if not self.horizon >= self.step:
            raise ValueError("Horizon must be at least one step")
        if not isinstance(self.record_every, int) or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    def with_overrides(
        self,
        step: Optional[float] = None,
        horizon: Optional[float] = None,
        epsilon: Optional[float] = None,
        run: Optional[str] = None,
    ) -> "Scenario":
        """Copy with command-line overrides applied; None keeps the current value."""
        changes: Dict[str, Any] = {}
        if step is not None:
            changes["step"] = float(step)
        if horizon is not None:
            changes["horizon"] = float(horizon)
        if run is not None:
            changes["run"] = run
        if epsilon is not None:
            changes["params"] = self.params.with_updates(epsilon=float(epsilon))
        return replace(self, **changes) if changes else self


def linear_grid(start: float, stop: float, points: int) -> np.ndarray:
    if not isinstance(points, int) or points < 2:
        raise ValidationError("A grid needs at least two points", f"Received value: {points}")
    if not stop > start:
        raise ValidationError("Grid stop must exceed start", f"start={start}, stop={stop}")
    return np.linspace(start, stop, points)


def _check_grid(parameter: str, values: np.ndarray, dist: DegreeDistribution) -> None:
    if values.ndim != 1 or values.size == 0:
        raise ValueError("Grid must be a non-empty list of numbers")
    if values.size > 1 and np.any(np.diff(values) <= 0):
        raise ValueError("Grid values must be strictly increasing")
    if parameter in ("alpha", "beta_P") and (values.min() <= 0 or values.max() >= 1):
        raise ValueError(f"{parameter} grid must lie in (0, 1)")
    if parameter == "c_P" and values.min() <= 0:
        raise ValueError("c_P grid must be positive")
    if parameter == "m_4":
        if dist.d_max != 4:
            raise ValueError("The m_4 sweep needs a distribution over degrees 1..4")
        if values.min() < 0 or values.max() > 1:
            raise ValueError("m_4 grid must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """One-parameter sweep over the equilibrium engine.

    Attributes:
        base: Scenario providing the fixed parameters and distribution
        parameter: One of alpha, beta_P (uniform across degrees), c_P, m_4
        values: Strictly increasing grid
        output: CSV file name for the rows
    """

    base: Scenario
    parameter: str
    values: np.ndarray
    output: str = "sweep.csv"

    def __post_init__(self):
        """Validate the parameter name and its grid."""
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(
                f"Unknown sweep parameter '{self.parameter}'; expected one of {', '.join(SWEEP_PARAMETERS)}"
            )
        values = np.array(self.values, dtype=float)
        _check_grid(self.parameter, values, self.base.dist)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class ComparisonSpec:
    """Sweep of one parameter repeated over several degree distributions.

    Attributes:
        params: Base parameters (beta vectors sized to the distributions)
        parameter: One of alpha, beta_P, c_P
        values: Strictly increasing grid
        distributions: Named distributions sharing the same degree set
    """

    params: ModelParams
    parameter: str
    values: np.ndarray
    distributions: Dict[str, DegreeDistribution] = field(default_factory=dict)

    def __post_init__(self):
        """Validate the grid and fill in the default distributions."""
        if self.parameter not in COMPARISON_PARAMETERS:
            raise ValueError(
                f"Unknown comparison parameter '{self.parameter}'; "
                f"expected one of {', '.join(COMPARISON_PARAMETERS)}"
            )
        distributions = dict(self.distributions) or comparison_distributions(self.params.n_degrees)
        for name, dist in distributions.items():
            if dist.d_max != self.params.n_degrees:
                raise ValueError(f"Distribution '{name}' does not match the parameter vectors")
        values = np.array(self.values, dtype=float)
        _check_grid(self.parameter, values, next(iter(distributions.values())))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "distributions", distributions)


@dataclass
class SweepRow:
    """Equilibrium summary at one grid point; ``flag`` marks skipped points."""

    value: float
    y_avg: float
    theta_star: float
    regime: str
    d_eq: Optional[int] = None
    flag: Optional[str] = None

    HEADER = ("value", "y_avg", "theta_star", "regime", "d_eq", "flag")

    @property
    def valid(self) -> bool:
        return self.flag is None

    def as_row(self) -> Tuple:
        return (self.value, self.y_avg, self.theta_star, self.regime, self.d_eq, self.flag)


@dataclass
class SpotCheck:
    """Long-horizon switched simulation compared against a sweep row."""

    value: float
    theta_star: float
    theta_simulated: float

    @property
    def gap(self) -> float:
        return abs(self.theta_simulated - self.theta_star)

    @property
    def passed(self) -> bool:
        return self.gap < THETA_AGREEMENT


@dataclass
class ScenarioResult:
    """Everything a scenario run produced."""

    name: str
    equilibrium: EquilibriumResult
    trajectory: Optional[Trajectory]
    summary: Dict[str, Any]
    paths: Dict[str, str] = field(default_factory=dict)


def comparison_distributions(d_max: int = 20) -> Dict[str, DegreeDistribution]:
    """Binomial, uniform and bimodal distributions over 1..d_max with average degree near (d_max + 1) / 2."""
    return {
        "binomial": make_distribution("binomial", d_max, n=d_max, p=(d_max + 1) / (2 * d_max)),
        "uniform": make_distribution("uniform", d_max),
        "bimodal": make_distribution("bimodal", d_max),
    }


def hetero_masses(m_4: float) -> np.ndarray:
    """Masses (m_1, m_2, m_3, m_4) with m_2 = m_3 fixed and m_1 absorbing the rest; m_1 may be negative."""
    m_1 = 1.0 - 2 * HETERO_FIXED_MASS - m_4
    return np.array([m_1, HETERO_FIXED_MASS, HETERO_FIXED_MASS, m_4])


def sweep_variant(
    params: ModelParams, dist: DegreeDistribution, parameter: str, value: float
) -> Tuple[ModelParams, DegreeDistribution]:
    """Parameters and distribution at one grid point.

    Raises:
        ValidationError: If the m_4 value leaves m_1 negative
    """
    if parameter == "m_4":
        masses = hetero_masses(value)
        if masses[0] < -MASS_TOLERANCE:
            raise ValidationError("invalid distribution (m_1 < 0)", f"m_4={value}")
        return params, DegreeDistribution(masses=np.clip(masses, 0.0, None))
    if parameter == "beta_P":
        return params.with_updates(beta_P=float(value)), dist
    return params.with_updates(**{parameter: float(value)}), dist


def sweep_point(
    params: ModelParams, dist: DegreeDistribution, parameter: str, value: float
) -> SweepRow:
    """Equilibrium row for one grid point; invalid distributions give a flagged row."""
    try:
        point_params, point_dist = sweep_variant(params, dist, parameter, value)
    except ValidationError as e:
        logger.warning("Skipping %s=%g: %s", parameter, value, e.message)
        return SweepRow(value=float(value), y_avg=np.nan, theta_star=np.nan, regime="invalid", flag=e.message)
    result = find_equilibrium(point_params, point_dist)
    return SweepRow(
        value=float(value),
        y_avg=result.y_avg,
        theta_star=result.theta_star,
        regime=result.regime.value,
        d_eq=result.d_eq,
    )


def _sweep_task(args) -> SweepRow:
    return sweep_point(*args)


def _check_model(name: str, params: ModelParams, dist: DegreeDistribution) -> None:
    report = validate(params, dist)
    for warning in report.warnings:
        logger.warning("%s: %s", name, warning)
    if not report.ok:
        raise ValidationError(f"Invalid parameters for '{name}'", "; ".join(report.errors))


class ExperimentRunner:
    """Runs scenarios, sweeps and checks, writing artifacts when a writer is attached."""

    def __init__(self, writer: Optional[ArtifactWriter] = None, workers: int = 1):
        """
        Initialize ExperimentRunner.

        Args:
            writer: Optional ArtifactWriter. Nothing is written when None.
            workers: Number of processes used for sweeps
        """
        if not isinstance(workers, int) or workers < 1:
            raise ValidationError("workers must be a positive integer", f"Received value: {workers}")
        self.writer = writer
        self.workers = workers

    def _write_rows(self, name: str, rows: Sequence[SweepRow]) -> Optional[str]:
        if self.writer is None:
            return None
        return str(self.writer.write_rows(name, SweepRow.HEADER, [r.as_row() for r in rows]))

    def run_scenario(self, scenario: Scenario) -> ScenarioResult:
        """
        Run a scenario and compare its end state with the analytic equilibrium.

        Returns:
            ScenarioResult with the trajectory (None for equilibrium-only runs),
            the equilibrium and a summary dict

        Raises:
            ValidationError: If the parameters violate the model's assumptions
            NumericalError: If the integration diverges; the message names the scenario
        """
        _check_model(scenario.name, scenario.params, scenario.dist)
        params, dist = scenario.params, scenario.dist
        logger.info("Running scenario '%s' (%s)", scenario.name, scenario.run)

        try:
            equilibrium = find_equilibrium(params, dist)
            trajectory = None
            if scenario.run == "coupled":
                trajectory = integrate_coupled(
                    scenario.initial,
                    params,
                    dist,
                    h=scenario.step,
                    T=scenario.horizon,
                    record_every=scenario.record_every,
                    stop_on_convergence=True,
                )
            elif scenario.run == "switched":
                trajectory = integrate_switched(
                    scenario.initial.y,
                    params,
                    dist,
                    h=scenario.step,
                    T=scenario.horizon,
                    record_every=scenario.record_every,
                    stop_on_convergence=True,
                )
        except NumericalError as e:
            raise NumericalError(f"Scenario '{scenario.name}': {e.message}", e.details)

        summary = self._summarize(scenario, equilibrium, trajectory)
        result = ScenarioResult(
            name=scenario.name, equilibrium=equilibrium, trajectory=trajectory, summary=summary
        )
        if self.writer is not None:
            if trajectory is not None:
                path = self.writer.write_trajectory(f"{scenario.name}_trajectory.csv", trajectory)
                result.paths["trajectory"] = str(path)
            path = self.writer.write_json(f"{scenario.name}_equilibrium.json", equilibrium.to_dict())
            result.paths["equilibrium"] = str(path)
            path = self.writer.write_json(f"{scenario.name}_summary.json", summary)
            result.paths["summary"] = str(path)
        return result

    def _summarize(
        self, scenario: Scenario, equilibrium: EquilibriumResult, trajectory: Optional[Trajectory]
    ) -> Dict[str, Any]:
        summary: Dict[str, Any] = {
            "name": scenario.name,
            "run": scenario.run,
            "regime": equilibrium.regime.value,
            "theta_star": equilibrium.theta_star,
            "d_eq": equilibrium.d_eq,
            "y_avg_star": equilibrium.y_avg,
        }
        if trajectory is None:
            return summary

        final_y = trajectory.y[-1]
        theta_gap = abs(float(trajectory.theta[-1]) - equilibrium.theta_star)
        y_gap = float(np.max(np.abs(final_y - equilibrium.y_star)))
        summary.update(
            {
                "final_time": float(trajectory.times[-1]),
                "final_theta": float(trajectory.theta[-1]),
                "final_y_avg": float(trajectory.y_avg[-1]),
                "converged_at": trajectory.converged_at(),
                "theta_gap": theta_gap,
                "y_gap": y_gap,
                "agreement": bool(theta_gap < THETA_AGREEMENT and y_gap < Y_AGREEMENT),
                "max_clamp": trajectory.max_clamp,
            }
        )
        if not summary["agreement"]:
            logger.warning(
                "Scenario '%s' ended %.3e away from the analytic theta", scenario.name, theta_gap
            )
        return summary

    def _map_points(self, tasks: List[tuple]) -> List[SweepRow]:
        if self.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                # map keeps grid order whatever the completion order
                return list(pool.map(_sweep_task, tasks))
        return [_sweep_task(task) for task in tasks]

    def run_sweep(self, spec: SweepSpec) -> List[SweepRow]:
        """
        Equilibrium row per grid point of a one-parameter sweep.

        Grid points whose distribution is invalid come back flagged instead of
        aborting the sweep.
        """
        base = spec.base
        _check_model(base.name, base.params, base.dist)
        logger.info("Sweeping %s over %d points", spec.parameter, spec.values.size)
        tasks = [(base.params, base.dist, spec.parameter, float(v)) for v in spec.values]
        rows = self._map_points(tasks)
        flagged = sum(1 for r in rows if not r.valid)
        if flagged:
            logger.warning("%d of %d grid points were flagged", flagged, len(rows))
        self._write_rows(spec.output, rows)
        return rows

    def spot_check(
        self,
        spec: SweepSpec,
        rows: Sequence[SweepRow],
        points: int = SPOT_CHECK_POINTS,
        seed: int = 0,
        horizon: float = SPOT_CHECK_HORIZON,
    ) -> List[SpotCheck]:
        """Re-derive theta at randomly chosen sweep rows by simulating the switched system."""
        candidates = [i for i, r in enumerate(rows) if r.valid]
        if not candidates:
            return []
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(candidates, size=min(points, len(candidates)), replace=False))
        base = spec.base
        checks = []
        for i in chosen:
            row = rows[int(i)]
            params, dist = sweep_variant(base.params, base.dist, spec.parameter, row.value)
            trajectory = integrate_switched(
                base.initial.y,
                params,
                dist,
                h=base.step,
                T=horizon,
                record_every=max(1, int(round(1.0 / base.step))),
                stop_on_convergence=True,
            )
            check = SpotCheck(
                value=row.value, theta_star=row.theta_star, theta_simulated=float(trajectory.theta[-1])
            )
            if not check.passed:
                logger.warning(
                    "Spot check at %s=%g missed by %.3e", spec.parameter, row.value, check.gap
                )
            checks.append(check)
        return checks

    def compare_distributions(self, spec: ComparisonSpec) -> Dict[str, List[SweepRow]]:
        """Equilibrium rows per distribution for the same parameter grid."""
        results: Dict[str, List[SweepRow]] = {}
        for name, dist in spec.distributions.items():
            _check_model(name, spec.params, dist)
            tasks = [(spec.params, dist, spec.parameter, float(v)) for v in spec.values]
            rows = self._map_points(tasks)
            results[name] = rows
            self._write_rows(f"compare_{spec.parameter}_{name}.csv", rows)
        return results

    def nimfa_check(
        self,
        scenario: Scenario,
        d_stars: Optional[Sequence[int]] = None,
        horizon: float = 50.0,
    ) -> List[Dict[str, Any]]:
        """
        Compare each regime's reproduction number with the spectral radius of
        its degree-class digraph and integrate both dynamics side by side.

        Returns:
            One dict per regime with R, both radii, connectivity and the
            sup-norm trajectory deviation
        """
        params, dist = scenario.params, scenario.dist
        _check_model(scenario.name, params, dist)
        if d_stars is None:
            d_stars = range(1, dist.d_max + 2)
        report = []
        for d_star in d_stars:
            graph, factors = build_abar(int(d_star), params, dist)
            entry = {
                "d_star": int(d_star),
                "R": reproduction_number(int(d_star), params, dist),
                "spectral_radius": spectral_radius(graph),
                "rank_one_radius": rank_one_radius(factors),
                "strongly_connected": graph.is_strongly_connected(),
                "deviation": equivalence_check(
                    int(d_star), params, dist, scenario.initial.y, h=scenario.step, T=horizon
                ),
            }
            report.append(entry)
            if self.writer is not None:
                self.writer.write_graph(f"{scenario.name}_abar_d{int(d_star)}", graph)
        if self.writer is not None:
            self.writer.write_json(f"{scenario.name}_nimfa.json", report)
        return report


TABLE_I = {"alpha": 0.5, "beta_P": 0.6, "beta_U": 0.7, "gamma": 0.3, "L": 20.0}
TABLE_III = {"alpha": 0.5, "beta_U": 0.6, "gamma": 0.2, "L": 15.0, "c_P": 15.0}
TABLE_IV = {"alpha": 0.5, "beta_P": 0.5, "beta_U": 0.9, "gamma": 0.4, "L": 10.0, "c_P": 10.0}
HETERO_RATES = {"hetero-case1": (0.1, 0.1, 0.6, 0.6), "hetero-case2": (0.6, 0.6, 0.1, 0.1)}


def _table1(name: str, c_P: float, beta_P: float = TABLE_I["beta_P"]) -> Scenario:
    dist = make_distribution("uniform", 4)
    params = ModelParams.uniform(
        4,
        beta_P=beta_P,
        beta_U=TABLE_I["beta_U"],
        alpha=TABLE_I["alpha"],
        gamma=TABLE_I["gamma"],
        L=TABLE_I["L"],
        c_P=c_P,
    )
    return Scenario(
        name=name,
        params=params,
        dist=dist,
        initial=initial_state(dist),
        run="coupled",
        horizon=5000.0,
        record_every=10,
    )


def _hetero(name: str, m_4: float = 0.45) -> Scenario:
    dist = DegreeDistribution(masses=hetero_masses(m_4))
    params = ModelParams(
        beta_P=np.array(HETERO_RATES[name]),
        beta_U=np.full(4, TABLE_III["beta_U"]),
        alpha=TABLE_III["alpha"],
        gamma=TABLE_III["gamma"],
        L=TABLE_III["L"],
        c_P=TABLE_III["c_P"],
    )
    return Scenario(
        name=name,
        params=params,
        dist=dist,
        initial=initial_state(dist),
        run="switched",
        horizon=SPOT_CHECK_HORIZON,
        record_every=10,
    )


def _comparison_base(d_max: int = 20) -> Scenario:
    dist = make_distribution("uniform", d_max)
    params = ModelParams.uniform(
        d_max,
        beta_P=TABLE_IV["beta_P"],
        beta_U=TABLE_IV["beta_U"],
        alpha=TABLE_IV["alpha"],
        gamma=TABLE_IV["gamma"],
        L=TABLE_IV["L"],
        c_P=TABLE_IV["c_P"],
    )
    return Scenario(
        name="compare-base", params=params, dist=dist, initial=initial_state(dist), run="equilibrium"
    )


BUILTIN_SCENARIOS = {
    "table1-cp10": lambda: _table1("table1-cp10", c_P=10.0),
    "table1-cp8": lambda: _table1("table1-cp8", c_P=8.0),
    "table1-dfe": lambda: _table1("table1-dfe", c_P=10.0, beta_P=0.01),
    "hetero-case1": lambda: _hetero("hetero-case1"),
    "hetero-case2": lambda: _hetero("hetero-case2"),
    "compare-base": _comparison_base,
}


def builtin_scenario(name: str) -> Scenario:
    """Scenario reproducing one of the reference experiments by name.

    Raises:
        ValidationError: If the name is unknown
    """
    try:
        factory = BUILTIN_SCENARIOS[name]
    except KeyError:
        raise ValidationError(
            f"Unknown scenario '{name}'", f"Available: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        )
    return factory()


def builtin_sweep(name: str, points: int = DEFAULT_GRID_POINTS) -> SweepSpec:
    """m_4 sweep of a heterogeneous-rate scenario."""
    if name not in HETERO_RATES:
        raise ValidationError(f"No built-in sweep for '{name}'", f"Available: {', '.join(sorted(HETERO_RATES))}")
    return SweepSpec(
        base=builtin_scenario(name),
        parameter="m_4",
        values=linear_grid(*HETERO_GRID, points),
        output=f"{name}_m_4.csv",
    )


def builtin_comparison(
    parameter: str, points: int = DEFAULT_GRID_POINTS, base: Optional[Scenario] = None
) -> ComparisonSpec:
    """Distribution comparison over the default grid of ``parameter``."""
    if parameter not in COMPARISON_GRIDS:
        raise ValidationError(
            f"Unknown comparison parameter '{parameter}'",
            f"Expected one of {', '.join(COMPARISON_PARAMETERS)}",
        )
    base = base or _comparison_base()
    return ComparisonSpec(
        params=base.params,
        parameter=parameter,
        values=linear_grid(*COMPARISON_GRIDS[parameter], points),
        distributions=comparison_distributions(base.dist.d_max),
    )
