"""
N-intertwined mean-field (NIMFA) SIS dynamics on a weighted digraph.

Each fixed regime of the reduced dynamics is a NIMFA epidemic on a complete
digraph whose nodes are the degree classes; its normalized adjacency is
rank one, so the epidemic threshold has a closed form that matches the
regime reproduction number.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .dynamics import DEFAULT_STEP, _check_horizon
from .equilibrium import regime_protection
from .exceptions import NumericalError, ValidationError
from .models import ArrayLike, DegreeDistribution, ModelParams
from .reduced import integrate_regime

logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-10
POWER_MAX_ITERATIONS = 100_000


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    """Weighted digraph for NIMFA.

    Attributes:
        adjacency: a_ij >= 0, probability that node i is infected by node j
        recovery: Per-node recovery rate, strictly positive
    """

    adjacency: np.ndarray
    recovery: np.ndarray

    def __post_init__(self):
        """Validate weights and recovery rates."""
        adjacency = np.array(self.adjacency, dtype=float)
        recovery = np.array(self.recovery, dtype=float)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError("Adjacency must be a square matrix")
        if recovery.shape != (adjacency.shape[0],):
            raise ValueError("Recovery rates must have one entry per node")
        if not (np.all(np.isfinite(adjacency)) and np.all(np.isfinite(recovery))):
            raise ValueError("Graph weights must be finite")
        if np.any(adjacency < 0):
            raise ValueError("Edge weights cannot be negative")
        if np.any(recovery <= 0):
            raise ValueError("Recovery rates must be positive")
        adjacency.setflags(write=False)
        recovery.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "recovery", recovery)

    @property
    def n(self) -> int:
        return int(self.recovery.size)

    @property
    def normalized(self) -> np.ndarray:
        """D^-1 A with D the diagonal matrix of recovery rates."""
        return self.adjacency / self.recovery[:, None]

    def is_strongly_connected(self) -> bool:
        count, _ = connected_components(self.adjacency > 0, directed=True, connection="strong")
        return count == 1


@dataclass(frozen=True, eq=False)
class RankOneFactors:
    """Vectors whose outer product v1 v2^T equals D^-1 A-hat."""

    v1: np.ndarray
    v2: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.outer(self.v1, self.v2)


@dataclass(frozen=True, eq=False)
class NodeTrajectory:
    """Per-node infection probabilities over time."""

    times: np.ndarray
    p: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.p[-1]


def build_abar(
    d_star: int, params: ModelParams, dist: DegreeDistribution
) -> Tuple[DirectedWeightedGraph, RankOneFactors]:
    """Degree-class digraph whose NIMFA dynamics equal the fixed-regime dynamics for d_star."""
    if not 1 <= d_star <= dist.d_max + 1:
        raise ValidationError("d_star out of range", f"Expected 1..{dist.d_max + 1}, received {d_star}")
    protection = regime_protection(d_star, params, dist)
    v1 = protection * dist.degrees / (dist.d_avg * params.gamma)
    v2 = dist.degrees * dist.masses * params.beta_P
    factors = RankOneFactors(v1=v1, v2=v2)
    adjacency = params.gamma * factors.matrix()
    graph = DirectedWeightedGraph(adjacency=adjacency, recovery=np.full(dist.d_max, params.gamma))
    return graph, factors


def spectral_radius(graph: DirectedWeightedGraph, tolerance: float = POWER_TOLERANCE) -> float:
    """Spectral radius of D^-1 A by power iteration.

    Raises:
        NumericalError: If the estimate has not settled after 1e5 iterations
    """
    matrix = graph.normalized
    vector = np.ones(graph.n) / graph.n
    estimate = 0.0
    for iteration in range(1, POWER_MAX_ITERATIONS + 1):
        image = matrix @ vector
        norm = float(np.abs(image).sum())
        if norm == 0.0:
            return 0.0
        if abs(norm - estimate) <= tolerance * norm:
            logger.debug("Power iteration settled after %d iterations", iteration)
            return norm
        estimate = norm
        vector = image / norm
    raise NumericalError(
        "Power iteration did not converge", f"{POWER_MAX_ITERATIONS} iterations, last estimate {estimate:.6g}"
    )


def rank_one_radius(factors: RankOneFactors) -> float:
    """Spectral radius of a rank-one matrix v1 v2^T, i.e. v2^T v1."""
    return float(factors.v1 @ factors.v2)


def nimfa_rhs(p: ArrayLike, graph: DirectedWeightedGraph) -> np.ndarray:
    """dp_i/dt = -gamma_i p_i + (1 - p_i) sum_j a_ij p_j."""
    p = np.asarray(p, dtype=float)
    return -graph.recovery * p + (1.0 - p) * (graph.adjacency @ p)


def integrate_nimfa(
    p0: ArrayLike, graph: DirectedWeightedGraph, h: float = DEFAULT_STEP, T: float = 50.0
) -> NodeTrajectory:
    """Euler integration of NIMFA with [0, 1] clamping.

    Raises:
        NumericalError: If the state becomes non-finite
    """
    _check_horizon(h, T, 1)
    p = np.array(p0, dtype=float)
    if p.shape != (graph.n,):
        raise ValidationError("Initial state length does not match the graph", f"Expected {graph.n}, received {p.size}")
    n_steps = int(round(T / h))
    times = np.arange(n_steps + 1) * h
    history = np.empty((n_steps + 1, graph.n))
    history[0] = p
    for step in range(1, n_steps + 1):
        p = p + h * nimfa_rhs(p, graph)
        if not np.all(np.isfinite(p)):
            raise NumericalError("Non-finite state in NIMFA integration", f"step {step}")
        p = np.clip(p, 0.0, 1.0)
        history[step] = p
    return NodeTrajectory(times=times, p=history)


def fixed_point_residual(p: ArrayLike, graph: DirectedWeightedGraph) -> float:
    """Largest deviation from p_i = (A p)_i / (gamma_i + (A p)_i)."""
    p = np.asarray(p, dtype=float)
    pressure = graph.adjacency @ p
    return float(np.max(np.abs(p - pressure / (graph.recovery + pressure))))


def equivalence_check(
    d_star: int,
    params: ModelParams,
    dist: DegreeDistribution,
    p0: ArrayLike,
    h: float = DEFAULT_STEP,
    T: float = 50.0,
) -> float:
    """Sup-norm gap between NIMFA on the degree-class digraph and the fixed-regime dynamics."""
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (dist.d_max,):
        raise ValidationError("p0 must have one entry per degree", f"Expected {dist.d_max}, received {p0.size}")
    graph, _ = build_abar(d_star, params, dist)
    nodes = integrate_nimfa(p0, graph, h=h, T=T)
    regime = integrate_regime(p0, d_star, params, dist, h=h, T=T)
    deviation = float(np.max(np.abs(nodes.p - regime.y)))
    logger.info("NIMFA equivalence for d_star=%d: max deviation %.3e", d_star, deviation)
    return deviation
