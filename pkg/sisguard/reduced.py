"""
Reduced (slow) epidemic dynamics in the fast-strategy limit.

Every susceptible class plays its best response to the current neighbor
transmission level, which turns the epidemic into a switched system whose
switching surfaces are the protection thresholds. Trajectories that hit a
surface from both sides slide along it with the equivalent-control mixing
weight (Filippov convention).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .dynamics import (
    CONVERGENCE_TOLERANCE,
    DEFAULT_STEP,
    _check_horizon,
    _check_length,
    _clamp,
    _Recorder,
    protection_factor,
    theta_reduced,
)
from .equilibrium import ThresholdSet, regime_protection, thresholds
from .exceptions import NumericalError
from .models import ArrayLike, DegreeDistribution, ModelParams, Trajectory

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-8


@dataclass(frozen=True)
class RegimeIndex:
    """Position of theta relative to the protection thresholds.

    Attributes:
        d_star: Regime whose interval contains theta; on a surface this is the
            regime just below it (d' + 1)
        on_boundary: Degree d' whose threshold theta sits on, if any
    """

    d_star: int
    on_boundary: Optional[int] = None


def _threshold_vector(values: Union[ThresholdSet, ArrayLike]) -> np.ndarray:
    if isinstance(values, ThresholdSet):
        return values.theta_th
    return np.asarray(values, dtype=float)


def boundary_tolerance(threshold: float) -> float:
    return BOUNDARY_TOLERANCE * max(1.0, threshold)


def classify_regime(theta: float, theta_th: Union[ThresholdSet, ArrayLike]) -> RegimeIndex:
    """Regime interval containing ``theta``, or the surface it sits on.

    Thresholds must be non-increasing in the degree.
    """
    theta_th = _threshold_vector(theta_th)
    finite = np.isfinite(theta_th)
    gaps = np.abs(theta - np.where(finite, theta_th, 0.0))
    tolerance = BOUNDARY_TOLERANCE * np.maximum(1.0, np.where(finite, theta_th, 1.0))
    touching = np.flatnonzero(finite & (gaps <= tolerance))
    if touching.size:
        # coinciding thresholds merge into one surface
        degree = int(touching[-1]) + 1
        return RegimeIndex(d_star=degree + 1, on_boundary=degree)
    return RegimeIndex(d_star=int(np.count_nonzero(theta_th > theta)) + 1)


def implied_strategy(d_star: int, dist: DegreeDistribution) -> np.ndarray:
    """Unprotected share per degree in regime d_star (best response off the surfaces)."""
    return np.where(dist.degrees < d_star, 1.0, 0.0)


def regime_rhs(y: ArrayLike, d_star: int, params: ModelParams, dist: DegreeDistribution) -> np.ndarray:
    """Fixed-regime dynamics: degrees below d_star unprotected, the rest protected."""
    y = np.asarray(y, dtype=float)
    theta = theta_reduced(y, params, dist)
    protection = regime_protection(d_star, params, dist)
    return -params.gamma * y + (1.0 - y) * protection * dist.degrees * theta


def sliding_weight(
    y: ArrayLike, degree: int, params: ModelParams, dist: DegreeDistribution
) -> float:
    """Unprotected share at ``degree`` that keeps theta constant (equivalent control).

    Theta is linear in y, so d(theta)/dt is affine in the share; the
    returned value solves d(theta)/dt = 0 and may fall outside [0, 1].
    """
    y = np.asarray(y, dtype=float)
    theta = theta_reduced(y, params, dist)
    slopes = dist.neighbor_weights * params.beta_P
    protection = np.where(dist.degrees < degree, 1.0, params.alpha)
    base = float(slopes @ (-params.gamma * y + (1.0 - y) * protection * dist.degrees * theta))
    i = degree - 1
    gain = float(slopes[i] * (1.0 - y[i]) * degree * theta * (1.0 - params.alpha))
    if gain <= 0:
        return np.inf if base < 0 else -np.inf
    return -base / gain


def _switched_eval(y, params, dist, ths) -> Tuple[np.ndarray, RegimeIndex, Optional[float], np.ndarray]:
    """Active field, regime position, sliding weight and the implied unprotected shares."""
    theta = theta_reduced(y, params, dist)
    index = classify_regime(theta, ths)
    if index.on_boundary is None:
        share = implied_strategy(index.d_star, dist)
        return regime_rhs(y, index.d_star, params, dist), index, None, share

    degree = index.on_boundary
    weight = sliding_weight(y, degree, params, dist)
    if 0.0 <= weight <= 1.0:
        share = implied_strategy(degree, dist)
        share[degree - 1] = weight
        protection = protection_factor(share, params.alpha)
        dy = -params.gamma * y + (1.0 - y) * protection * dist.degrees * theta
        return dy, index, weight, share
    if weight > 1.0:
        # both one-sided fields point down: leave with the unprotected field
        return regime_rhs(y, degree + 1, params, dist), index, None, implied_strategy(degree + 1, dist)
    return regime_rhs(y, degree, params, dist), index, None, implied_strategy(degree, dist)


def switched_rhs(y: ArrayLike, params: ModelParams, dist: DegreeDistribution) -> np.ndarray:
    """Right-hand side of the switched system with Filippov selection on surfaces."""
    y = np.asarray(y, dtype=float)
    _check_length(y, dist, "Infection vector")
    dy, _, _, _ = _switched_eval(y, params, dist, thresholds(params, dist))
    return dy


def _crossed_threshold(theta0: float, theta1: float, theta_th: np.ndarray) -> Optional[float]:
    finite = theta_th[np.isfinite(theta_th)]
    lo, hi = min(theta0, theta1), max(theta0, theta1)
    candidates = [
        t for t in finite if lo < t < hi and abs(theta0 - t) > boundary_tolerance(t)
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda t: abs(t - theta0))


def _switched_step(y, h, params, dist, ths):
    """One Euler step that stops on any threshold it would jump across."""
    remaining = h
    index, weight, share = None, None, None
    for _ in range(dist.d_max + 2):
        dy, index, weight, share = _switched_eval(y, params, dist, ths)
        candidate = y + remaining * dy
        theta0 = theta_reduced(y, params, dist)
        theta1 = theta_reduced(candidate, params, dist)
        surface = _crossed_threshold(theta0, theta1, ths.theta_th)
        if surface is None:
            return candidate, index, weight, share
        fraction = (surface - theta0) / (theta1 - theta0)
        y = y + fraction * remaining * dy
        remaining *= 1.0 - fraction
        if remaining <= 0:
            break
    return y, index, weight, share


def integrate_switched(
    y0: ArrayLike,
    params: ModelParams,
    dist: DegreeDistribution,
    h: float = DEFAULT_STEP,
    T: float = 1500.0,
    record_every: int = 1,
    stop_on_convergence: bool = False,
) -> Trajectory:
    """Euler integration of the switched system.

    Steps that would jump across a threshold are split at the surface so the
    sliding test runs on it. Records theta, y_avg, the active regime and the
    sliding weight (NaN when not sliding), with the unprotected shares the
    regimes imply as z_S and zero z_I.

    Raises:
        NumericalError: If the state becomes non-finite
    """
    _check_horizon(h, T, record_every)
    y = np.array(y0, dtype=float)
    _check_length(y, dist, "Initial infection vector")
    ths = thresholds(params, dist)
    n_steps = int(round(T / h))

    recorder = _Recorder(n_steps, record_every, dist.d_max, with_strategies=True)
    recorder.enable_regimes()
    infected_unprotected = np.zeros(dist.d_max)
    _, index, weight, share = _switched_eval(y, params, dist, ths)
    recorder.record(
        0, 0.0, y, theta_reduced(y, params, dist), dist,
        z_S=share, z_I=infected_unprotected, regime=index.d_star, weight=weight,
    )

    unit = max(1, int(round(1.0 / h)))
    checkpoint = y.copy()
    max_clamp = 0.0
    stopping = False
    logger.debug("Switched run: h=%g T=%g c_P=%g", h, T, params.c_P)

    for step in range(1, n_steps + 1):
        y, index, weight, share = _switched_step(y, h, params, dist, ths)
        if not np.all(np.isfinite(y)):
            raise NumericalError("Non-finite state in switched integration", f"step {step}")
        y, correction = _clamp(y)
        max_clamp = max(max_clamp, correction)

        theta = theta_reduced(y, params, dist)
        recorder.record(
            step, step * h, y, theta, dist,
            z_S=share, z_I=infected_unprotected, regime=index.d_star, weight=weight,
        )

        if step % unit == 0:
            settled = np.max(np.abs(y - checkpoint)) < CONVERGENCE_TOLERANCE
            checkpoint = y.copy()
            if settled and stop_on_convergence and not stopping:
                logger.info("Switched dynamics converged at t=%.2f", step * h)
                stopping = True
        if stopping and recorder.on_lattice(step):
            break

    return recorder.trajectory(max_clamp)


def integrate_regime(
    y0: ArrayLike,
    d_star: int,
    params: ModelParams,
    dist: DegreeDistribution,
    h: float = DEFAULT_STEP,
    T: float = 50.0,
) -> Trajectory:
    """Euler integration of the fixed-regime dynamics (no switching)."""
    _check_horizon(h, T, 1)
    y = np.array(y0, dtype=float)
    _check_length(y, dist, "Initial infection vector")
    n_steps = int(round(T / h))
    recorder = _Recorder(n_steps, 1, dist.d_max, with_strategies=False)
    recorder.record(0, 0.0, y, theta_reduced(y, params, dist), dist)
    max_clamp = 0.0
    for step in range(1, n_steps + 1):
        y = y + h * regime_rhs(y, d_star, params, dist)
        if not np.all(np.isfinite(y)):
            raise NumericalError("Non-finite state in regime integration", f"step {step}")
        y, correction = _clamp(y)
        max_clamp = max(max_clamp, correction)
        recorder.record(step, step * h, y, theta_reduced(y, params, dist), dist)
    return recorder.trajectory(max_clamp)
