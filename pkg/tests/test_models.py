"""Unit tests for data models."""

import numpy as np
import pytest

from sisguard.exceptions import ValidationError
from sisguard.models import (
    DegreeDistribution,
    ModelParams,
    SocialState,
    Trajectory,
    average_infection,
    make_distribution,
    validate,
)

from .conftest import table1_params


class TestModelParams:
    """Test cases for ModelParams dataclass."""

    def test_uniform_broadcasts_rates(self):
        """Test that scalar rates become one entry per degree."""
        params = table1_params()

        assert params.n_degrees == 4
        np.testing.assert_array_equal(params.beta_P, [0.6] * 4)
        np.testing.assert_array_equal(params.beta_U, [0.7] * 4)

    def test_defaults(self):
        """Test default costs and timescale."""
        params = table1_params()

        assert params.c_IU == 2.0
        assert params.c_IP == 1.0
        assert params.epsilon == 1.0

    def test_with_updates_broadcasts_scalar_beta(self):
        """Test that with_updates broadcasts a scalar beta_P."""
        params = table1_params().with_updates(beta_P=0.2, c_P=8.0)

        np.testing.assert_array_equal(params.beta_P, [0.2] * 4)
        assert params.c_P == 8.0

    def test_mismatched_rate_lengths(self):
        """Test that beta_P and beta_U must match."""
        with pytest.raises(ValueError, match="same length"):
            ModelParams(
                alpha=0.5, beta_P=[0.6, 0.6], beta_U=[0.7], gamma=0.3, L=20, c_P=10
            )

    def test_invalid_scalar_type(self):
        """Test that a non-numeric scalar raises TypeError."""
        with pytest.raises(TypeError, match="alpha must be a number"):
            ModelParams(alpha="high", beta_P=[0.6], beta_U=[0.7], gamma=0.3, L=20, c_P=10)

    def test_rates_are_read_only(self):
        """Test that the stored vectors cannot be modified in place."""
        params = table1_params()
        with pytest.raises(ValueError):
            params.beta_P[0] = 0.9


class TestDegreeDistribution:
    """Test cases for DegreeDistribution dataclass."""

    def test_average_degree(self, uniform4):
        """Test d_avg of the uniform distribution over 1..4."""
        assert uniform4.d_avg == pytest.approx(2.5)
        assert uniform4.d_max == 4

    def test_neighbor_weights_sum_to_one(self, uniform4):
        """Test the configuration-model neighbor weights."""
        np.testing.assert_allclose(uniform4.neighbor_weights, [0.1, 0.2, 0.3, 0.4])
        assert uniform4.neighbor_weights.sum() == pytest.approx(1.0)

    def test_negative_mass_rejected(self):
        """Test that negative masses raise ValueError."""
        with pytest.raises(ValueError, match="cannot be negative"):
            DegreeDistribution(masses=[0.5, -0.1, 0.6])

    def test_zero_sum_rejected(self):
        """Test that all-zero masses raise ValueError."""
        with pytest.raises(ValueError, match="positive sum"):
            DegreeDistribution(masses=[0.0, 0.0])

    def test_strict_positivity(self):
        """Test is_strictly_positive with a zero-mass degree."""
        assert not DegreeDistribution(masses=[0.5, 0.0, 0.5]).is_strictly_positive


class TestMakeDistribution:
    """Test cases for the distribution builders."""

    def test_binomial_matches_average_degree(self):
        """Test that Binomial(20, 0.525) over 1..20 has average degree close to 10.5."""
        dist = make_distribution("binomial", 20, n=20, p=0.525)

        assert dist.masses.sum() == pytest.approx(1.0, abs=1e-12)
        assert dist.d_avg == pytest.approx(10.5, abs=1e-4)

    def test_bimodal_masses(self):
        """Test the four-point bimodal distribution."""
        dist = make_distribution("bimodal", 20)

        nonzero = np.flatnonzero(dist.masses) + 1
        np.testing.assert_array_equal(nonzero, [1, 2, 19, 20])
        assert dist.d_avg == pytest.approx(10.5)

    def test_custom_is_normalized(self):
        """Test that custom masses are normalized."""
        dist = make_distribution("custom", 3, masses=[1, 1, 2])

        np.testing.assert_allclose(dist.masses, [0.25, 0.25, 0.5])

    def test_unknown_kind(self):
        """Test that an unknown kind raises ValidationError."""
        with pytest.raises(ValidationError, match="Unknown distribution kind"):
            make_distribution("powerlaw", 4)

    def test_binomial_requires_p(self):
        """Test that binomial without p raises ValidationError."""
        with pytest.raises(ValidationError, match="Binomial p"):
            make_distribution("binomial", 4)

    def test_bimodal_needs_three_degrees(self):
        """Test the bimodal lower bound on d_max."""
        with pytest.raises(ValidationError, match="d_max >= 3"):
            make_distribution("bimodal", 2)


class TestSocialState:
    """Test cases for SocialState dataclass."""

    def test_uniform_state(self):
        """Test building a homogeneous state."""
        state = SocialState.uniform(4, y=0.1, z_S=0.5, z_I=0.5)

        assert state.n_degrees == 4
        np.testing.assert_array_equal(state.z_I, [0.5] * 4)

    def test_out_of_range_entry(self):
        """Test that entries outside [0, 1] raise ValueError."""
        with pytest.raises(ValueError, match="y entries must lie in"):
            SocialState(y=[0.1, 1.2], z_S=[0.5, 0.5], z_I=[0.5, 0.5])

    def test_length_mismatch(self):
        """Test that the three vectors must share a length."""
        with pytest.raises(ValueError, match="same length"):
            SocialState(y=[0.1, 0.1], z_S=[0.5], z_I=[0.5, 0.5])


class TestTrajectory:
    """Test cases for Trajectory."""

    def _trajectory(self, y):
        times = np.arange(len(y)) * 0.5
        y = np.asarray(y, dtype=float)[:, None]
        return Trajectory(times=times, y=y, theta=y[:, 0], y_avg=y[:, 0])

    def test_converged_at(self):
        """Test that convergence is reported once the state stops moving over one time unit."""
        trajectory = self._trajectory([0.0, 0.5, 0.7, 0.8, 0.8, 0.8, 0.8])

        assert trajectory.converged_at() == pytest.approx(2.5)

    def test_never_converges(self):
        """Test that a moving trajectory reports None."""
        trajectory = self._trajectory([0.0, 0.1, 0.2, 0.3, 0.4])

        assert trajectory.converged_at() is None

    def test_final_state_without_strategies(self):
        """Test that infection-only runs report zero strategies."""
        trajectory = self._trajectory([0.1, 0.2])

        state = trajectory.final_state
        assert state.y[0] == pytest.approx(0.2)
        assert state.z_S[0] == 0.0

    def test_lengths_must_match(self):
        """Test that series lengths are checked."""
        with pytest.raises(ValueError, match="same length"):
            Trajectory(times=np.arange(3.0), y=np.zeros((2, 1)), theta=np.zeros(3), y_avg=np.zeros(3))


class TestValidate:
    """Test cases for validate()."""

    def test_reference_parameters_are_valid(self, params10, uniform4):
        """Test that the reference setup passes."""
        report = validate(params10, uniform4)

        assert report.ok
        assert report.warnings == []

    def test_gamma_out_of_range(self, uniform4):
        """Test that gamma = 1 is reported."""
        report = validate(table1_params(gamma=1.0), uniform4)

        assert not report.ok
        assert "gamma must lie in (0, 1)" in report.errors

    def test_cost_ordering(self, uniform4):
        """Test that c_IU must exceed c_IP."""
        report = validate(table1_params(c_IU=1.0, c_IP=1.0), uniform4)

        assert "c_IU > c_IP required" in report.errors

    def test_mass_sum(self):
        """Test that masses not summing to 1 are reported."""
        report = validate(table1_params(), DegreeDistribution(masses=[0.3, 0.3, 0.3, 0.3]))

        assert any(e.startswith("masses must sum to 1") for e in report.errors)

    def test_length_mismatch(self):
        """Test that a rate vector of the wrong length is reported."""
        report = validate(table1_params(), make_distribution("uniform", 3))

        assert any("4 entries" in e for e in report.errors)

    def test_zero_mass_is_a_warning(self):
        """Test that zero-mass degrees warn without failing."""
        report = validate(table1_params(), DegreeDistribution(masses=[0.5, 0.0, 0.25, 0.25]))

        assert report.ok
        assert report.warnings == ["degrees with zero mass: [2]"]

    def test_average_infection(self, uniform4):
        """Test y_avg as the mass-weighted mean."""
        assert average_infection([0.1, 0.2, 0.3, 0.4], uniform4) == pytest.approx(0.25)
