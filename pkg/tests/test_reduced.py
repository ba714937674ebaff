"""Unit tests for the switched best-response dynamics."""

import numpy as np
import pytest

from sisguard.equilibrium import find_equilibrium, theta_ee, thresholds
from sisguard.exceptions import ValidationError
from sisguard.reduced import (
    RegimeIndex,
    classify_regime,
    implied_strategy,
    integrate_regime,
    integrate_switched,
    regime_rhs,
    sliding_weight,
    switched_rhs,
)

from .conftest import random_model


class TestClassifyRegime:
    """Locating theta among the thresholds."""

    THRESHOLDS = [1.0, 0.5, 1 / 3, 0.25]

    def test_inside_interval(self):
        """Test a theta strictly between two thresholds."""
        assert classify_regime(0.4231, self.THRESHOLDS) == RegimeIndex(d_star=3)

    def test_below_all_thresholds(self):
        """Test that a small theta puts every degree in the unprotected regime."""
        assert classify_regime(0.1, self.THRESHOLDS) == RegimeIndex(d_star=5)

    def test_on_surface(self):
        """Test that theta on the degree-2 threshold reports that surface."""
        assert classify_regime(0.5, self.THRESHOLDS) == RegimeIndex(d_star=3, on_boundary=2)

    def test_within_tolerance(self):
        """Test that a theta within 1e-8 of a threshold counts as on it."""
        index = classify_regime(0.25 + 1e-10, self.THRESHOLDS)

        assert index.on_boundary == 4

    def test_accepts_threshold_set(self, params10, uniform4):
        """Test that a ThresholdSet works in place of a vector."""
        assert classify_regime(0.4231, thresholds(params10, uniform4)).d_star == 3

    def test_infinite_thresholds_ignored(self):
        """Test that infinite thresholds never count as surfaces."""
        assert classify_regime(0.3, [np.inf, 0.5]) == RegimeIndex(d_star=3)


class TestRegimeFields:
    """Fixed-regime and switched right-hand sides."""

    def test_implied_strategy(self, uniform4):
        """Test the unprotected shares implied by regime 3."""
        np.testing.assert_array_equal(implied_strategy(3, uniform4), [1, 1, 0, 0])

    def test_regime_rhs_at_zero(self, params10, uniform4):
        """Test that the disease-free state is stationary in every regime."""
        for d_star in range(1, 6):
            np.testing.assert_array_equal(regime_rhs(np.zeros(4), d_star, params10, uniform4), 0.0)

    def test_switched_matches_active_regime(self, params10, uniform4):
        """Test that off the surfaces the switched field equals the regime field."""
        y = np.full(4, 0.1)
        # theta = 0.06 lies below every threshold
        np.testing.assert_allclose(
            switched_rhs(y, params10, uniform4), regime_rhs(y, 5, params10, uniform4)
        )

    def test_sliding_weight_freezes_theta(self, params8, uniform4):
        """Test that the sliding share makes d(theta)/dt vanish on the surface."""
        equilibrium = find_equilibrium(params8, uniform4)
        weight = sliding_weight(equilibrium.y_star, 2, params8, uniform4)

        assert weight == pytest.approx(equilibrium.mixing_fraction, abs=1e-8)

    def test_equilibria_are_stationary(self, params10, params8, uniform4):
        """Test that the switched field vanishes at the interior and boundary equilibria."""
        for params in (params10, params8):
            y_star = find_equilibrium(params, uniform4).y_star
            np.testing.assert_allclose(switched_rhs(y_star, params, uniform4), 0.0, atol=1e-8)

    def test_random_equilibria_are_stationary(self):
        """Test random draws: the switched field vanishes at every endemic equilibrium."""
        rng = np.random.default_rng(53)
        for _ in range(200):
            params, dist = random_model(rng)
            result = find_equilibrium(params, dist)
            if not result.is_endemic:
                continue
            assert np.max(np.abs(switched_rhs(result.y_star, params, dist))) < 1e-8

    def test_sliding_weight_without_infection(self, params10, uniform4):
        """Test that theta = 0 leaves no control over theta."""
        weight = sliding_weight(np.zeros(4), 2, params10, uniform4)

        assert np.isinf(weight)

    def test_length_mismatch(self, params10, uniform4):
        """Test that a short vector raises ValidationError."""
        with pytest.raises(ValidationError, match="does not match"):
            switched_rhs([0.1, 0.1], params10, uniform4)


class TestIntegrateSwitched:
    """Euler integration of the switched system."""

    def test_converges_to_interior_equilibrium(self, params10, uniform4):
        """Test convergence to theta* = 0.4231 in regime 3."""
        trajectory = integrate_switched(
            np.full(4, 0.1), params10, uniform4, T=1000.0, stop_on_convergence=True
        )

        assert trajectory.theta[-1] == pytest.approx(0.4231, abs=1e-3)
        assert trajectory.regime[-1] == 3
        assert np.isnan(trajectory.sliding_weight[-1])
        np.testing.assert_array_equal(trajectory.z_S[-1], [1, 1, 0, 0])

    def test_slides_on_boundary_surface(self, params8, uniform4):
        """Test that the c_P = 8 run ends sliding on the degree-2 threshold."""
        equilibrium = find_equilibrium(params8, uniform4)
        trajectory = integrate_switched(
            np.full(4, 0.1), params8, uniform4, T=1000.0, stop_on_convergence=True
        )

        assert trajectory.theta[-1] == pytest.approx(0.4, abs=1e-3)
        assert trajectory.sliding_weight[-1] == pytest.approx(0.0931, abs=0.01)
        assert trajectory.z_S[-1][1] == pytest.approx(trajectory.sliding_weight[-1])
        np.testing.assert_allclose(trajectory.y[-1], equilibrium.y_star, atol=5e-3)

    def test_early_stop_ends_on_record_point(self, params10, uniform4):
        """Test that stopping on convergence keeps the recorded times evenly spaced."""
        trajectory = integrate_switched(
            np.full(4, 0.1), params10, uniform4, T=1000.0, record_every=37, stop_on_convergence=True
        )

        assert trajectory.times[-1] < 1000.0
        np.testing.assert_allclose(np.diff(trajectory.times), 0.37, rtol=1e-9)

    def test_records_strategy_columns(self, params10, uniform4):
        """Test that switched runs carry z_S and zero z_I."""
        trajectory = integrate_switched(np.full(4, 0.1), params10, uniform4, T=5.0)

        assert trajectory.has_strategies
        assert np.all(trajectory.z_I == 0)
        assert len(trajectory.regime) == len(trajectory)

    def test_disease_free_start_stays(self, params10, uniform4):
        """Test that y = 0 never moves."""
        trajectory = integrate_switched(np.zeros(4), params10, uniform4, T=5.0)

        assert np.all(trajectory.y == 0)

    def test_invalid_horizon(self, params10, uniform4):
        """Test that a horizon shorter than one step raises ValidationError."""
        with pytest.raises(ValidationError, match="Horizon"):
            integrate_switched(np.full(4, 0.1), params10, uniform4, h=0.1, T=0.01)


class TestIntegrateRegime:
    """Fixed-regime integration."""

    def test_converges_to_regime_level(self, params10, uniform4):
        """Test that the unprotected regime settles at theta_ee(5)."""
        trajectory = integrate_regime(np.full(4, 0.1), 5, params10, uniform4, T=200.0)

        assert trajectory.theta[-1] == pytest.approx(theta_ee(5, params10, uniform4), abs=1e-4)
        assert not trajectory.has_strategies
