"""
Tests for the finite-length inactivation analysis.
"""

import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from analysis.fl_analysis import (
    binomial_approx,
    dp_trajectory,
    exhaustive_inactivation_distribution,
    expected_inactivations_dp,
    inactivation_distribution_dp,
    raptor_expected_inactivations,
    surrogate_lt,
    transition_prob_pu,
)
from codes.degree_dists import DegreeDistribution, point_mass, r10_distribution
from codes.raptor_codes import build_precode

TOY_CASES = [
    (3, 4, DegreeDistribution([0.3, 0.5, 0.2])),
    (4, 4, point_mass(2)),
    (4, 5, DegreeDistribution([0.25, 0.5, 0.25])),
]


class TestTransitionProbability:
    """Test p_u."""

    def test_out_of_range(self):
        """Test that u must lie in [1, k]."""
        with pytest.raises(ValueError, match="u must lie"):
            transition_prob_pu(5, 0, r10_distribution())

    def test_degree_two_at_start(self):
        """Test p_k for Ω = {2: 1}: a degree-two symbol loses one neighbor with probability 2/k."""
        pu = transition_prob_pu(3, 3, point_mass(2))
        assert pu.value == pytest.approx(2 / 3)
        assert not pu.degenerate


class TestExactDp:
    """Test the (cloud, ripple) recursion."""

    @pytest.mark.parametrize("k,m,dist", TOY_CASES)
    def test_mean_matches_exhaustive_oracle(self, k, m, dist):
        """Test E[Y] against enumeration of every graph and decoder choice."""
        pmf = exhaustive_inactivation_distribution(k, m, dist)
        oracle = float(np.dot(np.arange(pmf.size), pmf))
        assert expected_inactivations_dp(k, m, dist).expected_inactivations == pytest.approx(oracle, abs=1e-9)

    @pytest.mark.parametrize("k,m,dist", TOY_CASES)
    def test_distribution_matches_exhaustive_oracle(self, k, m, dist):
        """Test f_Y against enumeration."""
        oracle = exhaustive_inactivation_distribution(k, m, dist)
        result = inactivation_distribution_dp(k, m, dist)
        assert result.total() == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(result.pmf, oracle, atol=1e-9)

    def test_distribution_mean_matches_dp(self):
        """Test that the full distribution reproduces the DP mean."""
        dist = r10_distribution()
        mean = expected_inactivations_dp(40, 45, dist).expected_inactivations
        assert inactivation_distribution_dp(40, 45, dist).mean == pytest.approx(mean, rel=1e-6)

    def test_overflow_mass(self):
        """Test that mass above y_max is reported as overflow."""
        result = inactivation_distribution_dp(6, 6, point_mass(2), y_max=0)
        assert result.pmf.size == 1
        assert result.overflow > 0
        assert result.total() == pytest.approx(1.0, abs=1e-9)

    def test_no_degree_one_forces_inactivation(self):
        """Test that without degree-one symbols the first step always inactivates."""
        result = expected_inactivations_dp(10, 12, point_mass(3))
        assert result.empty_ripple[0] == pytest.approx(1.0)
        assert result.expected_inactivations >= 1.0

    def test_more_receipts_fewer_inactivations(self):
        """Test that E[Y] decreases with overhead for R10."""
        dist = r10_distribution()
        low = expected_inactivations_dp(50, 50, dist).expected_inactivations
        high = expected_inactivations_dp(50, 70, dist).expected_inactivations
        assert high < low

    def test_trajectory_rows(self):
        """Test trajectory columns and the final cumulative value."""
        dist = r10_distribution()
        rows = dp_trajectory(20, 25, dist)
        assert [row[0] for row in rows] == list(range(20, 0, -1))
        assert rows[-1][2] == pytest.approx(expected_inactivations_dp(20, 25, dist).expected_inactivations)

    def test_rejects_negative_m(self):
        """Test the receipt count check."""
        with pytest.raises(ValueError, match="non-negative"):
            expected_inactivations_dp(5, -1, r10_distribution())


class TestBinomialApproximation:
    """Test the binomial approximation."""

    def test_bounded(self):
        """Test that Ê[Y] lies in [0, k]."""
        approx = binomial_approx(100, 110, r10_distribution())
        assert 0 <= approx.expected_inactivations <= 100

    def test_needs_receipts(self):
        """Test that m = 0 is rejected."""
        with pytest.raises(ValueError, match="m >= 1"):
            binomial_approx(10, 0, r10_distribution())

    def test_no_degree_one(self):
        """Test that an empty initial ripple counts one inactivation at the first step."""
        approx = binomial_approx(10, 12, point_mass(3))
        assert approx.empty_ripple[0] == pytest.approx(1.0)


class TestRaptorSurrogate:
    """Test Raptor estimates through the surrogate LT code."""

    def test_surrogate_mixture_weight(self):
        """Test Ω_eq = ((h-k)Θ + mΩ)/(h-k+m)."""
        mixed = surrogate_lt(point_mass(4), point_mass(1), 10, 6, 12)
        assert mixed[4] == pytest.approx(4 / 16)
        assert mixed[1] == pytest.approx(12 / 16)

    def test_surrogate_without_precode(self):
        """Test that h = k returns Ω."""
        assert surrogate_lt(point_mass(4), point_mass(2), 8, 8, 10) == point_mass(2)

    @pytest.mark.parametrize("method", ["dp", "binomial"])
    def test_raptor_estimate(self, method):
        """Test that both methods give a finite non-negative estimate."""
        precode = build_precode("hamming", 11, {"t": 4})
        value = raptor_expected_inactivations(precode, r10_distribution(), 5, method)
        assert 0 <= value <= precode.h

    def test_unknown_method(self):
        """Test method validation."""
        precode = build_precode("hamming", 11, {"t": 4})
        with pytest.raises(ValueError, match="Unknown method"):
            raptor_expected_inactivations(precode, r10_distribution(), 5, "exact")
