"""Data models for the sisguard epidemic game solver.

Parameter and degree-distribution containers, the per-degree social state,
trajectories, and the population-level aggregation helpers that act on them.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.stats import binom

from .exceptions import ValidationError

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12
STATE_TOLERANCE = 1e-9

ArrayLike = Union[Sequence[float], np.ndarray]


def _as_vector(values: ArrayLike, name: str) -> np.ndarray:
    """Convert to a read-only 1-D float vector, raising the models' TypeError/ValueError."""
    try:
        vector = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise TypeError(f"{name} must be a sequence of numbers")
    if vector.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if vector.size == 0:
        raise ValueError(f"{name} cannot be empty")
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{name} must be finite")
    vector.setflags(write=False)
    return vector


def _as_scalar(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise TypeError(f"{name} must be a number")
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return float(value)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Scalar game and epidemic parameters plus per-degree transmission rates.

    Attributes:
        alpha: Protection effectiveness multiplier in (0, 1)
        beta_P: Per-degree transmission probability of a protected infected node
        beta_U: Per-degree transmission probability of an unprotected infected node
        gamma: Recovery rate in (0, 1)
        L: Loss upon infection
        c_P: Cost of adopting protection
        c_IU: Penalty for an unprotected infected agent
        c_IP: Inconvenience for a protected infected agent
        epsilon: Timescale separation factor in (0, 1]

    Construction only checks types and shapes; ranges are checked by
    :func:`validate`, which reports instead of raising.
    """

    alpha: float
    beta_P: np.ndarray
    beta_U: np.ndarray
    gamma: float
    L: float
    c_P: float
    c_IU: float = 2.0
    c_IP: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        """Normalize numeric fields after initialization."""
        for name in ("alpha", "gamma", "L", "c_P", "c_IU", "c_IP", "epsilon"):
            object.__setattr__(self, name, _as_scalar(getattr(self, name), name))
        object.__setattr__(self, "beta_P", _as_vector(self.beta_P, "beta_P"))
        object.__setattr__(self, "beta_U", _as_vector(self.beta_U, "beta_U"))
        if self.beta_P.shape != self.beta_U.shape:
            raise ValueError("beta_P and beta_U must have the same length")

    @classmethod
    def uniform(cls, n_degrees: int, beta_P: float, beta_U: float, **kwargs) -> "ModelParams":
        """Build parameters with the same transmission rates for every degree."""
        if not isinstance(n_degrees, int) or n_degrees < 1:
            raise ValueError("Number of degrees must be a positive integer")
        return cls(
            beta_P=np.full(n_degrees, float(beta_P)),
            beta_U=np.full(n_degrees, float(beta_U)),
            **kwargs,
        )

    @property
    def n_degrees(self) -> int:
        return int(self.beta_P.size)

    def with_updates(self, **changes) -> "ModelParams":
        """Return a copy with some fields replaced; scalar rates are broadcast."""
        for name in ("beta_P", "beta_U"):
            if name in changes and np.ndim(changes[name]) == 0:
                changes[name] = np.full(self.n_degrees, float(changes[name]))
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Proportion of nodes per degree over the contiguous degree set 1..d_max.

    Attributes:
        masses: m_d for d = 1..d_max (non-negative, expected to sum to 1)
    """

    masses: np.ndarray
    d_avg: float = field(init=False)

    def __post_init__(self):
        """Validate the masses and cache the average degree."""
        masses = _as_vector(self.masses, "masses")
        if np.any(masses < 0):
            raise ValueError("Degree masses cannot be negative")
        if masses.sum() <= 0:
            raise ValueError("Degree masses must have a positive sum")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "d_avg", float(self.degrees @ masses))

    @property
    def d_max(self) -> int:
        return int(self.masses.size)

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(1, self.masses.size + 1, dtype=float)

    @property
    def is_strictly_positive(self) -> bool:
        """True when every degree carries positive mass."""
        return bool(np.all(self.masses > 0))

    @property
    def neighbor_weights(self) -> np.ndarray:
        """Probability that a random neighbor has degree d (configuration model)."""
        return self.degrees * self.masses / self.d_avg


@dataclass(frozen=True, eq=False)
class SocialState:
    """Per-degree infected fraction and unprotected fractions.

    Attributes:
        y: Infected fraction per degree
        z_S: Unprotected fraction among susceptible agents per degree
        z_I: Unprotected fraction among infected agents per degree
    """

    y: np.ndarray
    z_S: np.ndarray
    z_I: np.ndarray

    def __post_init__(self):
        """Validate the state vectors after initialization."""
        for name in ("y", "z_S", "z_I"):
            vector = _as_vector(getattr(self, name), name)
            if np.any(vector < -STATE_TOLERANCE) or np.any(vector > 1 + STATE_TOLERANCE):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            object.__setattr__(self, name, vector)
        if not (self.y.shape == self.z_S.shape == self.z_I.shape):
            raise ValueError("State vectors must have the same length")

    @classmethod
    def uniform(cls, n_degrees: int, y: float, z_S: float, z_I: float = 0.0) -> "SocialState":
        """Same infected and unprotected fractions for every degree."""
        return cls(
            y=np.full(n_degrees, float(y)),
            z_S=np.full(n_degrees, float(z_S)),
            z_I=np.full(n_degrees, float(z_I)),
        )

    @property
    def n_degrees(self) -> int:
        return int(self.y.size)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed record of an integration run.

    Attributes:
        times: Simulation times (constant step)
        y: Infected fractions, one row per time
        theta: Neighbor transmission probability per time
        y_avg: Expected fraction of infected nodes per time
        z_S: Unprotected susceptible fractions (None for infection-only runs)
        z_I: Unprotected infected fractions (None for infection-only runs)
        regime: Active regime index per time (switched runs only)
        sliding_weight: Filippov sliding weight per time, NaN when not sliding
        max_clamp: Largest correction applied by [0, 1] clamping
    """

    times: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    y_avg: np.ndarray
    z_S: Optional[np.ndarray] = None
    z_I: Optional[np.ndarray] = None
    regime: Optional[np.ndarray] = None
    sliding_weight: Optional[np.ndarray] = None
    max_clamp: float = 0.0

    def __post_init__(self):
        """Validate that all series share the same length."""
        length = len(self.times)
        series = [self.y, self.theta, self.y_avg, self.z_S, self.z_I, self.regime, self.sliding_weight]
        for values in series:
            if values is not None and len(values) != length:
                raise ValueError("All trajectory series must share the same length")
        if length > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def has_strategies(self) -> bool:
        return self.z_S is not None

    def state_at(self, index: int) -> SocialState:
        """Social state recorded at a given index (zero strategies for infection-only runs)."""
        zeros = np.zeros_like(self.y[index])
        return SocialState(
            y=np.clip(self.y[index], 0.0, 1.0),
            z_S=np.clip(self.z_S[index], 0.0, 1.0) if self.has_strategies else zeros,
            z_I=np.clip(self.z_I[index], 0.0, 1.0) if self.has_strategies else zeros,
        )

    @property
    def states(self) -> List[SocialState]:
        return [self.state_at(i) for i in range(len(self))]

    @property
    def final_state(self) -> SocialState:
        return self.state_at(len(self) - 1)

    def converged_at(self, tolerance: float = 1e-6, window: float = 1.0) -> Optional[float]:
        """First time at which the state moved less than ``tolerance`` over ``window`` time units.

        Returns None when the run never meets the criterion.
        """
        if len(self) < 2:
            return None
        lag = max(1, int(round(window / self.step)))
        if lag >= len(self):
            return None
        blocks = [self.y]
        if self.has_strategies:
            blocks += [self.z_S, self.z_I]
        stacked = np.hstack(blocks)
        movement = np.abs(stacked[lag:] - stacked[:-lag]).max(axis=1)
        hits = np.flatnonzero(movement < tolerance)
        if hits.size == 0:
            return None
        return float(self.times[hits[0] + lag])


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`.

    Attributes:
        errors: Violated constraints
        warnings: Tolerated deviations from the standing assumptions
    """

    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_open_unit(report: ValidationReport, name: str, values: ArrayLike) -> None:
    values = np.atleast_1d(values)
    if np.any(values <= 0) or np.any(values >= 1):
        report.errors.append(f"{name} must lie in (0, 1)")


def validate(params: ModelParams, dist: DegreeDistribution) -> ValidationReport:
    """Check the standing assumptions of the model.

    Args:
        params: Model parameters
        dist: Degree distribution the parameters are paired with

    Returns:
        ValidationReport listing range violations, ordering violations,
        length mismatches and mass-sum errors; zero masses become warnings.
    """
    report = ValidationReport()

    _check_open_unit(report, "alpha", params.alpha)
    _check_open_unit(report, "beta_P", params.beta_P)
    _check_open_unit(report, "beta_U", params.beta_U)
    _check_open_unit(report, "gamma", params.gamma)

    for name in ("L", "c_P", "c_IU", "c_IP"):
        if getattr(params, name) <= 0:
            report.errors.append(f"{name} must be positive")

    if not 0 < params.epsilon <= 1:
        report.errors.append("epsilon must lie in (0, 1]")

    if params.c_IU <= params.c_IP:
        report.errors.append("c_IU > c_IP required")

    if params.n_degrees != dist.d_max:
        report.errors.append(
            f"beta_P/beta_U have {params.n_degrees} entries but the distribution has {dist.d_max} degrees"
        )

    mass_error = abs(float(dist.masses.sum()) - 1.0)
    if mass_error > MASS_TOLERANCE:
        report.errors.append(f"masses must sum to 1 (off by {mass_error:.3e})")

    zero_degrees = [int(d) for d, m in zip(dist.degrees, dist.masses) if m == 0]
    if zero_degrees:
        report.warnings.append(f"degrees with zero mass: {zero_degrees}")

    return report


def make_distribution(
    kind: str,
    d_max: int,
    n: Optional[int] = None,
    p: Optional[float] = None,
    masses: Optional[ArrayLike] = None,
) -> DegreeDistribution:
    """Build a normalized degree distribution over 1..d_max.

    Args:
        kind: One of ``uniform``, ``binomial``, ``bimodal`` or ``custom``
        d_max: Largest degree
        n: Number of trials for ``binomial`` (defaults to d_max)
        p: Success probability for ``binomial``
        masses: Unnormalized masses for ``custom``

    Returns:
        DegreeDistribution whose masses sum to 1

    Raises:
        ValidationError: If the inputs cannot produce a distribution
    """
    if isinstance(d_max, bool) or not isinstance(d_max, (int, np.integer)) or d_max < 1:
        raise ValidationError("d_max must be a positive integer", f"Received value: {d_max}")
    d_max = int(d_max)
    degrees = np.arange(1, d_max + 1)

    if kind == "uniform":
        raw = np.ones(d_max)
    elif kind == "binomial":
        if p is None or not 0 < p < 1:
            raise ValidationError("Binomial p must lie in (0, 1)", f"Received value: {p}")
        trials = d_max if n is None else int(n)
        if trials < 1:
            raise ValidationError("Binomial n must be positive", f"Received value: {n}")
        # d = 0 is outside the degree set; the remaining pmf is renormalized
        raw = binom.pmf(degrees, trials, p)
    elif kind == "bimodal":
        if d_max < 3:
            raise ValidationError("Bimodal distribution needs d_max >= 3", f"Received value: {d_max}")
        raw = np.zeros(d_max)
        np.add.at(raw, np.array([1, 2, d_max - 1, d_max]) - 1, 0.25)
    elif kind == "custom":
        if masses is None:
            raise ValidationError("Custom distribution requires masses")
        raw = np.array(masses, dtype=float)
        if raw.shape != (d_max,):
            raise ValidationError(
                "Custom masses must have one entry per degree",
                f"Expected {d_max}, received {raw.size}",
            )
        if np.any(raw < 0):
            raise ValidationError("Custom masses cannot be negative")
    else:
        raise ValidationError(f"Unknown distribution kind: {kind}")

    total = raw.sum()
    if not total > 0:
        raise ValidationError("Distribution masses sum to zero", f"kind={kind}")

    dist = DegreeDistribution(masses=raw / total)
    if not dist.is_strictly_positive:
        logger.warning("Distribution %s has degrees with zero mass", kind)
    return dist


def average_infection(y: ArrayLike, dist: DegreeDistribution) -> float:
    """Expected fraction of infected nodes, sum over d of m_d * y^d."""
    y = np.asarray(y, dtype=float)
    if y.shape != dist.masses.shape:
        raise ValidationError(
            "Infection vector length does not match the degree distribution",
            f"Expected {dist.d_max}, received {y.size}",
        )
    return float(dist.masses @ y)
