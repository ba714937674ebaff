"""
Exact equilibrium engine.

Degree-specific protection thresholds, the regime reproduction number,
the endemic neighbor-transmission level of each fixed-regime system, the
mixing fraction on a threshold surface, and the full classifier that picks
the unique equilibrium of the reduced dynamics.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .dynamics import (
    protection_factor,
    solve_stationary_theta,
    stationary_infection,
    stationary_sum,
)
from .exceptions import NumericalError, ValidationError
from .models import DegreeDistribution, ModelParams, average_infection

logger = logging.getLogger(__name__)

COMPARISON_SLACK = 1e-12
MIXING_NOISE = 1e-9


class Regime(str, Enum):
    """Equilibrium outcome classes."""

    DFE_ONLY = "dfe-only"
    ENDEMIC_INTERIOR = "endemic-interior"
    ENDEMIC_BOUNDARY = "endemic-boundary"


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """Per-degree protection thresholds and the regime intervals they induce.

    Attributes:
        theta_th: Threshold for d = 1..d_max (infinite when protection never pays)
        d_min: Smallest degree whose threshold is below 1, None if there is none
        intervals: Bounds (lower, upper) of the regime interval for each d_star
    """

    theta_th: np.ndarray
    d_min: Optional[int]
    intervals: Dict[int, Tuple[float, float]] = field(default_factory=dict)

    @property
    def d_max(self) -> int:
        return int(self.theta_th.size)

    @property
    def no_protection(self) -> bool:
        """True when no degree ever prefers protection (no threshold below 1)."""
        return self.d_min is None

    def bound(self, degree: int) -> float:
        """Threshold of a degree with the conventions 0 above d_max and +inf below 1."""
        if degree > self.d_max:
            return 0.0
        if degree < 1:
            return np.inf
        return float(self.theta_th[degree - 1])


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Unique equilibrium of the reduced dynamics.

    Attributes:
        regime: Outcome class
        theta_star: Neighbor transmission probability at equilibrium
        d_eq: Pivot degree (None for the disease-free outcome)
        y_star: Per-degree infected fractions
        z_S_star: Per-degree unprotected share among susceptible agents
        R_max: Reproduction number with every susceptible agent unprotected
        y_avg: Expected fraction of infected nodes
        mixing_fraction: Unprotected share at the boundary degree (boundary case only)
    """

    regime: Regime
    theta_star: float
    d_eq: Optional[int]
    y_star: np.ndarray
    z_S_star: np.ndarray
    R_max: float
    y_avg: float
    mixing_fraction: Optional[float] = None

    @property
    def is_endemic(self) -> bool:
        return self.regime is not Regime.DFE_ONLY

    @property
    def boundary_degree(self) -> Optional[int]:
        if self.regime is Regime.ENDEMIC_BOUNDARY:
            return self.d_eq - 1
        return None

    def to_dict(self) -> dict:
        """JSON-ready representation."""
        return {
            "regime": self.regime.value,
            "theta_star": self.theta_star,
            "d_eq": self.d_eq,
            "y": [float(v) for v in self.y_star],
            "zS": [float(v) for v in self.z_S_star],
            "R_max": self.R_max,
            "y_avg": self.y_avg,
            "mixing_fraction": self.mixing_fraction,
        }


def _check_d_star(d_star: int, dist: DegreeDistribution) -> int:
    if isinstance(d_star, bool) or not isinstance(d_star, (int, np.integer)):
        raise ValidationError("d_star must be an integer", f"Received type: {type(d_star).__name__}")
    if not 1 <= d_star <= dist.d_max + 1:
        raise ValidationError(
            "d_star out of range", f"Expected 1..{dist.d_max + 1}, received {d_star}"
        )
    return int(d_star)


def thresholds(params: ModelParams, dist: DegreeDistribution) -> ThresholdSet:
    """Degree-specific thresholds c_P / (L (1 - alpha) d), d_min and the regime intervals."""
    with np.errstate(divide="ignore"):
        theta_th = params.c_P / (params.L * (1.0 - params.alpha) * dist.degrees)
    theta_th = np.where(np.isfinite(theta_th) & (theta_th >= 0), theta_th, np.inf)
    theta_th.setflags(write=False)

    below_one = np.flatnonzero(theta_th < 1.0)
    if below_one.size == 0:
        logger.info("No degree ever adopts protection (all thresholds >= 1)")
        return ThresholdSet(theta_th=theta_th, d_min=None, intervals={dist.d_max + 1: (0.0, 1.0)})

    d_min = int(below_one[0]) + 1
    d_max = dist.d_max
    intervals = {d_max + 1: (0.0, float(theta_th[d_max - 1]))}
    for d in range(d_max, d_min, -1):
        intervals[d] = (float(theta_th[d - 1]), float(theta_th[d - 2]))
    intervals[d_min] = (float(theta_th[d_min - 1]), 1.0)
    return ThresholdSet(theta_th=theta_th, d_min=d_min, intervals=intervals)


def regime_protection(d_star: int, params: ModelParams, dist: DegreeDistribution) -> np.ndarray:
    """Risk multiplier per degree in regime d_star: 1 below d_star, alpha from d_star on."""
    return np.where(dist.degrees < d_star, 1.0, params.alpha)


def reproduction_number(d_star: int, params: ModelParams, dist: DegreeDistribution) -> float:
    """Reproduction number of the fixed-regime system for d_star."""
    d_star = _check_d_star(d_star, dist)
    protection = regime_protection(d_star, params, dist)
    return float(
        np.sum(dist.degrees**2 * dist.masses * params.beta_P * protection)
        / (dist.d_avg * params.gamma)
    )


def theta_ee(d_star: int, params: ModelParams, dist: DegreeDistribution) -> float:
    """Endemic neighbor-transmission level of the fixed-regime system, 0 when R(d_star) <= 1."""
    d_star = _check_d_star(d_star, dist)
    protection = regime_protection(d_star, params, dist)
    return solve_stationary_theta(protection, params.beta_P, params, dist)


def best_response(
    theta: float, params: ModelParams, dist: DegreeDistribution, tie: float = 1.0
) -> np.ndarray:
    """Optimal unprotected share of susceptible agents per degree at a given theta.

    Degrees whose threshold exceeds theta stay unprotected (1), degrees whose
    threshold is below theta protect (0), and an exact tie takes ``tie``.
    """
    theta_th = thresholds(params, dist).theta_th
    return np.where(theta_th > theta, 1.0, np.where(theta_th < theta, 0.0, tie))


def stationary_identity(
    theta: float, z_S: np.ndarray, params: ModelParams, dist: DegreeDistribution
) -> float:
    """Bracketed sum of the stationary identity with every infected agent protected."""
    return stationary_sum(theta, protection_factor(z_S, params.alpha), params.beta_P, params, dist)


def solve_mixing_fraction(
    remainder: float, degree: int, theta: float, params: ModelParams, dist: DegreeDistribution
) -> float:
    """Unprotected share at ``degree`` whose identity term equals ``remainder``.

    The degree's term c w / (gamma + degree w theta) is a Moebius map of the
    risk multiplier w = z + alpha (1 - z), so it inverts in closed form.
    """
    i = degree - 1
    coefficient = dist.neighbor_weights[i] * params.beta_P[i] * degree
    denominator = coefficient - remainder * degree * theta
    if denominator <= 0:
        raise NumericalError(
            "Mixing fraction is undefined",
            f"remainder {remainder:.6g} exceeds the term's supremum at degree {degree}",
        )
    weight = remainder * params.gamma / denominator
    return (weight - params.alpha) / (1.0 - params.alpha)


def boundary_mixing_fraction(d_eq: int, params: ModelParams, dist: DegreeDistribution) -> float:
    """Unprotected share at degree d_eq - 1 that puts the equilibrium on its threshold.

    Raises:
        NumericalError: If the fraction falls outside [0, 1], which means the
            boundary case does not hold for these parameters
    """
    d_eq = _check_d_star(d_eq, dist)
    boundary = d_eq - 1
    if boundary < 1:
        raise ValidationError("Boundary case requires d_eq >= 2", f"Received value: {d_eq}")

    theta = thresholds(params, dist).bound(boundary)
    exposure = dist.degrees * np.where(dist.degrees < boundary, 1.0, params.alpha)
    terms = dist.neighbor_weights * params.beta_P * exposure / (params.gamma + exposure * theta)
    remainder = 1.0 - float(np.sum(np.delete(terms, boundary - 1)))

    fraction = solve_mixing_fraction(remainder, boundary, theta, params, dist)
    if -MIXING_NOISE <= fraction < 0:
        fraction = 0.0
    elif 1 < fraction <= 1 + MIXING_NOISE:
        fraction = 1.0
    if not 0 <= fraction <= 1:
        raise NumericalError(
            "Inconsistent boundary classification",
            f"mixing fraction {fraction:.6g} at degree {boundary} lies outside [0, 1]",
        )
    logger.debug("Mixing fraction %.9f at degree %d", fraction, boundary)
    return float(fraction)


def find_equilibrium(params: ModelParams, dist: DegreeDistribution) -> EquilibriumResult:
    """Classify and compute the unique equilibrium of the reduced dynamics.

    1. R(d_max + 1) <= 1: the disease-free state is the only equilibrium.
    2. Otherwise d_eq is the smallest regime whose endemic level exceeds its
       own threshold; the level either lies inside the regime interval
       (interior case) or reaches the next threshold up, in which case the
       equilibrium sits on that threshold with a mixed strategy.
    """
    if params.n_degrees != dist.d_max:
        raise ValidationError(
            "Parameter vectors do not match the degree distribution",
            f"{params.n_degrees} rates for {dist.d_max} degrees",
        )
    ths = thresholds(params, dist)
    d_max = dist.d_max
    R_max = reproduction_number(d_max + 1, params, dist)

    if R_max <= 1:
        logger.info("R(d_max+1) = %.4f <= 1: disease-free equilibrium only", R_max)
        return EquilibriumResult(
            regime=Regime.DFE_ONLY,
            theta_star=0.0,
            d_eq=None,
            y_star=np.zeros(d_max),
            z_S_star=np.ones(d_max),
            R_max=R_max,
            y_avg=0.0,
        )

    first = d_max + 1 if ths.no_protection else ths.d_min
    d_eq, level = None, 0.0
    for d in range(first, d_max + 2):
        level = theta_ee(d, params, dist)
        if level > ths.bound(d) + COMPARISON_SLACK:
            d_eq = d
            break
    if d_eq is None:
        raise NumericalError("Equilibrium scan did not terminate", f"R_max = {R_max:.6g}")

    upper = min(1.0, ths.bound(d_eq - 1))
    if level < upper - COMPARISON_SLACK:
        theta_star = level
        z_S = best_response(theta_star, params, dist)
        regime, fraction = Regime.ENDEMIC_INTERIOR, None
    else:
        theta_star = ths.bound(d_eq - 1)
        fraction = boundary_mixing_fraction(d_eq, params, dist)
        z_S = best_response(theta_star, params, dist, tie=fraction)
        regime = Regime.ENDEMIC_BOUNDARY

    y_star = stationary_infection(theta_star, protection_factor(z_S, params.alpha), params, dist)
    logger.info("Equilibrium %s: d_eq=%d theta=%.6f", regime.value, d_eq, theta_star)
    return EquilibriumResult(
        regime=regime,
        theta_star=float(theta_star),
        d_eq=d_eq,
        y_star=y_star,
        z_S_star=z_S,
        R_max=R_max,
        y_avg=average_infection(y_star, dist),
        mixing_fraction=fraction,
    )


@dataclass(frozen=True)
class OracleResult:
    """Grid-search estimate of the equilibrium."""

    theta: float
    regime: Regime


def oracle_theta(
    params: ModelParams, dist: DegreeDistribution, resolution: float = 1e-4
) -> OracleResult:
    """Brute-force equilibrium search over a theta grid.

    At every grid point the susceptible strategy is the best response to that
    theta, and the stationary identity residual is evaluated. The first sign
    change locates the equilibrium; a change that happens only by jumping
    across a threshold marks the boundary case.
    """
    grid = np.arange(1, int(round(1.0 / resolution)) + 1) * resolution
    theta_th = thresholds(params, dist).theta_th

    def residual(theta_values, profiles):
        protection = profiles + params.alpha * (1.0 - profiles)
        exposure = protection * dist.degrees
        terms = dist.neighbor_weights * params.beta_P * exposure
        return np.sum(terms / (params.gamma + exposure * theta_values[:, None]), axis=1) - 1.0

    if stationary_identity(0.0, np.ones(dist.d_max), params, dist) <= 1.0:
        return OracleResult(theta=0.0, regime=Regime.DFE_ONLY)

    profiles = (theta_th[None, :] > grid[:, None]).astype(float)
    values = residual(grid, profiles)
    negative = np.flatnonzero(values <= 0)
    if negative.size == 0:
        raise NumericalError("Oracle found no sign change on (0, 1]")

    crossing = int(negative[0])
    lower = grid[crossing - 1] if crossing > 0 else 0.0
    upper = grid[crossing]
    inside = theta_th[(theta_th > lower) & (theta_th <= upper)]
    for t in inside:
        below = (theta_th >= t).astype(float)
        above = (theta_th > t).astype(float)
        left = residual(np.array([t]), below[None, :])[0]
        right = residual(np.array([t]), above[None, :])[0]
        if left > 0 and right < 0:
            return OracleResult(theta=float(t), regime=Regime.ENDEMIC_BOUNDARY)
    return OracleResult(theta=float(upper), regime=Regime.ENDEMIC_INTERIOR)
