"""
Coupled epidemic and replicator dynamics.

Holds the two neighbor-transmission aggregators, the payoffs that drive
strategy revision, the slow-fast right-hand side, its explicit Euler
integrator, and the stationary infection level for a fixed strategy profile.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit, logit

from .exceptions import NumericalError, ValidationError
from .models import (
    DegreeDistribution,
    ModelParams,
    SocialState,
    Trajectory,
    ArrayLike,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP = 0.01
ROOT_TOLERANCE = 1e-10
CONVERGENCE_TOLERANCE = 1e-6
CLAMP_WARNING_LEVEL = 1e-9


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of a social state, one vector per component."""

    y: np.ndarray
    z_S: np.ndarray
    z_I: np.ndarray


@dataclass(frozen=True)
class Payoffs:
    """Per-degree payoffs of the four agent types.

    Attributes:
        F_SU: Susceptible, unprotected
        F_SP: Susceptible, protected
        F_IU: Infected, unprotected
        F_IP: Infected, protected
    """

    F_SU: np.ndarray
    F_SP: np.ndarray
    F_IU: np.ndarray
    F_IP: np.ndarray


@dataclass(frozen=True)
class StationaryPoint:
    """Stationary infection level of the epidemic for a fixed strategy profile."""

    theta: float
    y: np.ndarray

    @property
    def is_endemic(self) -> bool:
        return self.theta > 0


def _check_length(values: np.ndarray, dist: DegreeDistribution, name: str) -> None:
    if values.shape != (dist.d_max,):
        raise ValidationError(
            f"{name} length does not match the degree distribution",
            f"Expected {dist.d_max}, received {values.size}",
        )


def protection_factor(z_S: ArrayLike, alpha: float) -> np.ndarray:
    """Infection-risk multiplier of a susceptible class: z_S + alpha (1 - z_S)."""
    z_S = np.asarray(z_S, dtype=float)
    return z_S + alpha * (1.0 - z_S)


def transmission_rate(z_I: ArrayLike, params: ModelParams) -> np.ndarray:
    """Per-degree transmission probability of an infected class given its unprotected share."""
    z_I = np.asarray(z_I, dtype=float)
    return params.beta_U * z_I + params.beta_P * (1.0 - z_I)


def theta_full(state: SocialState, params: ModelParams, dist: DegreeDistribution) -> float:
    """Probability that a random neighbor transmits infection, with both strategy shares."""
    _check_length(state.y, dist, "State")
    return float(dist.neighbor_weights @ (transmission_rate(state.z_I, params) * state.y))


def theta_reduced(y: ArrayLike, params: ModelParams, dist: DegreeDistribution) -> float:
    """Neighbor transmission probability when every infected agent is protected."""
    y = np.asarray(y, dtype=float)
    _check_length(y, dist, "Infection vector")
    return float(dist.neighbor_weights @ (params.beta_P * y))


def payoffs(state: SocialState, params: ModelParams, dist: DegreeDistribution) -> Payoffs:
    """Payoffs of susceptible and infected agents at the current social state."""
    theta = theta_full(state, params, dist)
    exposure = params.L * dist.degrees * theta
    ones = np.ones(dist.d_max)
    return Payoffs(
        F_SU=-exposure,
        F_SP=-params.c_P - params.alpha * exposure,
        F_IU=-params.c_IU * ones,
        F_IP=-params.c_IP * ones,
    )


def _coupled_step_rhs(y, z_S, z_I, params, dist, weights):
    """Epidemic derivative, log-odds velocities of both strategy shares, and theta."""
    theta = float(weights @ ((params.beta_U * z_I + params.beta_P * (1.0 - z_I)) * y))
    dy = -params.gamma * y + (1.0 - y) * (z_S + params.alpha * (1.0 - z_S)) * dist.degrees * theta
    advantage = params.c_P - params.L * (1.0 - params.alpha) * dist.degrees * theta
    drift_S = advantage / params.epsilon
    drift_I = np.full(dist.d_max, (params.c_IP - params.c_IU) / params.epsilon)
    return dy, drift_S, drift_I, theta


def coupled_rhs(state: SocialState, params: ModelParams, dist: DegreeDistribution) -> StateDerivative:
    """Right-hand side of the slow-fast epidemic and replicator system.

    The replicator components are divided by the timescale factor epsilon.
    """
    _check_length(state.y, dist, "State")
    if params.epsilon <= 0:
        raise ValidationError("epsilon must be positive", f"Received value: {params.epsilon}")
    dy, drift_S, drift_I, _ = _coupled_step_rhs(
        state.y, state.z_S, state.z_I, params, dist, dist.neighbor_weights
    )
    return StateDerivative(
        y=dy,
        z_S=state.z_S * (1.0 - state.z_S) * drift_S,
        z_I=state.z_I * (1.0 - state.z_I) * drift_I,
    )


def _clamp(values: np.ndarray):
    clipped = np.clip(values, 0.0, 1.0)
    return clipped, float(np.max(np.abs(clipped - values)))


def integrate_coupled(
    state0: SocialState,
    params: ModelParams,
    dist: DegreeDistribution,
    h: float = DEFAULT_STEP,
    T: float = 1500.0,
    clamp: bool = True,
    record_every: int = 1,
    stop_on_convergence: bool = False,
) -> Trajectory:
    """Explicit Euler integration of the coupled dynamics.

    Args:
        state0: Initial social state
        params: Model parameters
        dist: Degree distribution
        h: Euler step
        T: Horizon in time units
        clamp: Clip the infected fractions to [0, 1] after each step
        record_every: Record one state every this many steps
        stop_on_convergence: End the run once the state moved less than
            1e-6 over one time unit

    Returns:
        Trajectory with strategies, theta and y_avg series

    Raises:
        ValidationError: If the step, horizon or state are invalid
        NumericalError: If the state becomes non-finite
    """
    _check_horizon(h, T, record_every)
    _check_length(state0.y, dist, "Initial state")
    if params.epsilon <= 0:
        raise ValidationError("epsilon must be positive", f"Received value: {params.epsilon}")

    n_steps = int(round(T / h))
    weights = dist.neighbor_weights
    y, z_S, z_I = state0.y.copy(), state0.z_S.copy(), state0.z_I.copy()
    # shares evolve in log-odds so a rounded 0 or 1 is never absorbing
    odds_S, odds_I = logit(z_S), logit(z_I)

    recorder = _Recorder(n_steps, record_every, dist.d_max, with_strategies=True)
    theta = float(weights @ (transmission_rate(z_I, params) * y))
    recorder.record(0, 0.0, y, theta, dist, z_S=z_S, z_I=z_I)

    unit = max(1, int(round(1.0 / h)))
    checkpoint = np.concatenate([y, z_S, z_I])
    max_clamp = 0.0
    stopping = False
    logger.debug("Coupled run: h=%g T=%g epsilon=%g c_P=%g", h, T, params.epsilon, params.c_P)

    for step in range(1, n_steps + 1):
        dy, drift_S, drift_I, _ = _coupled_step_rhs(y, z_S, z_I, params, dist, weights)
        y = y + h * dy
        odds_S = odds_S + h * drift_S
        odds_I = odds_I + h * drift_I

        if not np.all(np.isfinite(y)) or np.any(np.isnan(odds_S)) or np.any(np.isnan(odds_I)):
            raise NumericalError("Non-finite state in coupled integration", f"step {step}")
        z_S, z_I = expit(odds_S), expit(odds_I)

        if clamp:
            y, correction = _clamp(y)
            max_clamp = max(max_clamp, correction)

        theta = float(weights @ (transmission_rate(z_I, params) * y))
        recorder.record(step, step * h, y, theta, dist, z_S=z_S, z_I=z_I)

        if step % unit == 0:
            current = np.concatenate([y, z_S, z_I])
            settled = np.max(np.abs(current - checkpoint)) < CONVERGENCE_TOLERANCE
            checkpoint = current
            if settled and stop_on_convergence and not stopping:
                logger.info("Coupled dynamics converged at t=%.2f", step * h)
                stopping = True
        if stopping and recorder.on_lattice(step):
            break

    if max_clamp > CLAMP_WARNING_LEVEL:
        logger.warning("Clamping corrected the state by up to %.3e", max_clamp)
    return recorder.trajectory(max_clamp)


def _check_horizon(h: float, T: float, record_every: int) -> None:
    if not h > 0:
        raise ValidationError("Step must be positive", f"Received value: {h}")
    if not T >= h:
        raise ValidationError("Horizon must be at least one step", f"h={h}, T={T}")
    if not isinstance(record_every, int) or record_every < 1:
        raise ValidationError("record_every must be a positive integer", f"Received value: {record_every}")


class _Recorder:
    """Preallocated storage for every ``record_every``-th Euler state."""

    def __init__(self, n_steps: int, record_every: int, n_degrees: int, with_strategies: bool):
        self.record_every = record_every
        size = n_steps // record_every + 1
        self.times = np.empty(size)
        self.y = np.empty((size, n_degrees))
        self.theta = np.empty(size)
        self.y_avg = np.empty(size)
        self.z_S = np.empty((size, n_degrees)) if with_strategies else None
        self.z_I = np.empty((size, n_degrees)) if with_strategies else None
        self.regime = None
        self.sliding_weight = None
        self.count = 0

    def enable_regimes(self) -> None:
        size = len(self.times)
        self.regime = np.empty(size, dtype=int)
        self.sliding_weight = np.empty(size)

    def on_lattice(self, step: int) -> bool:
        return step % self.record_every == 0

    def record(self, step, t, y, theta, dist, z_S=None, z_I=None, regime=None, weight=None):
        if not self.on_lattice(step):
            return
        if self.count == len(self.times):
            return
        i = self.count
        self.times[i] = t
        self.y[i] = y
        self.theta[i] = theta
        self.y_avg[i] = float(dist.masses @ y)
        if self.z_S is not None:
            self.z_S[i] = z_S
            self.z_I[i] = z_I
        if self.regime is not None:
            self.regime[i] = regime
            self.sliding_weight[i] = np.nan if weight is None else weight
        self.count += 1

    def trajectory(self, max_clamp: float) -> Trajectory:
        n = self.count

        def cut(values):
            return None if values is None else values[:n]

        return Trajectory(
            times=self.times[:n],
            y=self.y[:n],
            theta=self.theta[:n],
            y_avg=self.y_avg[:n],
            z_S=cut(self.z_S),
            z_I=cut(self.z_I),
            regime=cut(self.regime),
            sliding_weight=cut(self.sliding_weight),
            max_clamp=max_clamp,
        )


def stationary_sum(
    theta: float,
    protection: np.ndarray,
    transmission: np.ndarray,
    params: ModelParams,
    dist: DegreeDistribution,
) -> float:
    """Bracketed sum of the stationary identity; a positive root satisfies sum == 1.

    Args:
        theta: Candidate neighbor transmission probability
        protection: Per-degree risk multiplier z_S + alpha (1 - z_S)
        transmission: Per-degree transmission probability of infected agents
    """
    exposure = protection * dist.degrees
    return float(
        np.sum(dist.neighbor_weights * transmission * exposure / (params.gamma + exposure * theta))
    )


def stationary_infection(
    theta: float, protection: np.ndarray, params: ModelParams, dist: DegreeDistribution
) -> np.ndarray:
    """Per-degree infected fraction at a stationary point with the given theta."""
    pressure = protection * dist.degrees * theta
    return pressure / (params.gamma + pressure)


def solve_stationary_theta(
    protection: np.ndarray,
    transmission: np.ndarray,
    params: ModelParams,
    dist: DegreeDistribution,
) -> float:
    """Positive root of the stationary identity, or 0 when none exists.

    The bracketed sum is strictly decreasing in theta, so bisection on (0, 1)
    converges whenever the sum exceeds one at theta = 0.

    Raises:
        NumericalError: If the sum is still >= 1 at theta = 1 (parameters
            outside the model's ranges)
    """
    if stationary_sum(0.0, protection, transmission, params, dist) <= 1.0:
        return 0.0

    def residual(theta):
        return stationary_sum(theta, protection, transmission, params, dist) - 1.0

    if residual(1.0) >= 0:
        raise NumericalError(
            "Stationary identity has no root in (0, 1)",
            "check that gamma and transmission rates lie in (0, 1)",
        )
    root = bisect(residual, 0.0, 1.0, xtol=ROOT_TOLERANCE, rtol=4 * np.finfo(float).eps, maxiter=200)
    logger.debug("Stationary theta %.12f", root)
    return float(root)


def stationary_theta_for_profile(
    z_S: ArrayLike, z_I: ArrayLike, params: ModelParams, dist: DegreeDistribution
) -> StationaryPoint:
    """Stationary infection level of the epidemic under a fixed strategy profile.

    Returns theta = 0 with y = 0 when the positive-root condition fails,
    otherwise the positive root and the matching per-degree y.
    """
    z_S = np.asarray(z_S, dtype=float)
    z_I = np.asarray(z_I, dtype=float)
    _check_length(z_S, dist, "z_S")
    _check_length(z_I, dist, "z_I")
    if np.any((z_S < 0) | (z_S > 1) | (z_I < 0) | (z_I > 1)):
        raise ValidationError("Strategy profile entries must lie in [0, 1]")

    protection = protection_factor(z_S, params.alpha)
    transmission = transmission_rate(z_I, params)
    theta = solve_stationary_theta(protection, transmission, params, dist)
    if theta == 0.0:
        return StationaryPoint(theta=0.0, y=np.zeros(dist.d_max))
    return StationaryPoint(theta=theta, y=stationary_infection(theta, protection, params, dist))


def endemic_condition(
    z_S: ArrayLike, z_I: ArrayLike, params: ModelParams, dist: DegreeDistribution
) -> float:
    """Value of the stationary sum at theta = 0; a positive root exists iff it exceeds 1."""
    protection = protection_factor(z_S, params.alpha)
    transmission = transmission_rate(z_I, params)
    return stationary_sum(0.0, protection, transmission, params, dist)


def initial_state(
    dist: DegreeDistribution, y: float = 0.1, z_S: float = 0.5, z_I: Optional[float] = None
) -> SocialState:
    """Homogeneous starting state used by the experiments."""
    return SocialState.uniform(dist.d_max, y=y, z_S=z_S, z_I=z_S if z_I is None else z_I)
