"""
Tests for weight enumerators, growth rates and typical minimum distances.
"""

import math
import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from analysis.spectra import (
    EnumeratorError,
    RatePair,
    WeightEnumerator,
    ensemble_we,
    expurgate,
    gilbert_varshamov_distance,
    good_and_bad_ensembles,
    growth_rate,
    ones_probabilities,
    ones_probabilities_by_degree,
    outer_bound_inner_rate,
    region_outer_bound,
    rho,
    typical_min_distance,
    we_exhaustive,
    we_hamming,
    we_linear_random,
)
from codes.degree_dists import DegreeDistribution, point_mass, r10_distribution
from codes.raptor_codes import build_precode


class TestFiniteEnumerators:
    """Test exact and average enumerators."""

    def test_hamming_7_4(self):
        """Test the (7,4) Hamming enumerator."""
        we = we_hamming(3)
        assert [round(we[w]) for w in range(8)] == [1, 0, 0, 7, 7, 0, 0, 1]

    @pytest.mark.parametrize("t", [2, 3, 4])
    def test_hamming_recursion_matches_exhaustive(self, t):
        """Test the recursion against enumeration of all codewords."""
        n = 2**t - 1
        exhaustive = we_exhaustive(build_precode("hamming", n - t, {"t": t}).generator)
        recursion = we_hamming(t)
        assert np.allclose(recursion.coefficients, exhaustive.coefficients)

    def test_hamming_63_57_weight_three(self):
        """Test A_3 = n(n-1)/6 for the (63,57) code."""
        we = we_hamming(6)
        assert round(we[3]) == 63 * 62 // 6
        assert we.total() == pytest.approx(2.0**57, rel=1e-9)

    def test_linear_random_full_space(self):
        """Test that h = k gives the whole space."""
        we = we_linear_random(5, 5, 4)
        assert we[2] == pytest.approx(math.comb(5, 2) * 9)

    def test_linear_random_total(self):
        """Test the sum identity Σ_l A_l = 2^k on average."""
        we = we_linear_random(70, 64)
        assert we.total() == pytest.approx(2.0**64, rel=1e-6)

    def test_linear_random_bad_dimensions(self):
        """Test dimension validation."""
        with pytest.raises(EnumeratorError, match="h >= k"):
            we_linear_random(4, 6)

    def test_rows_are_log2(self):
        """Test emitter rows (w, w/n, log2 A_w)."""
        rows = we_hamming(3).rows()
        assert rows[3][0] == 3
        assert rows[3][1] == pytest.approx(3 / 7)
        assert rows[3][2] == pytest.approx(math.log2(7))


class TestEnsembleEnumerator:
    """Test the fixed-rate Raptor ensemble enumerator."""

    def test_point_mass_one(self):
        """Test p_l = l/h for a single uniform neighbor."""
        p = ones_probabilities(point_mass(1), 10)
        assert np.allclose(p, np.arange(11) / 10)

    def test_odd_degrees_at_full_weight(self):
        """Test p_h = Σ_{odd j} Ω_j."""
        dist = DegreeDistribution([0.3, 0.0, 0.7])
        assert ones_probabilities(dist, 8)[8] == pytest.approx(1.0)
        dist = DegreeDistribution([0.3, 0.5, 0.2])
        assert ones_probabilities(dist, 8)[8] == pytest.approx(0.5)

    def test_both_overlap_forms_agree(self):
        """Test the two hypergeometric forms of p_l."""
        dist = DegreeDistribution([0.2, 0.3, 0.1, 0.4])
        assert np.allclose(ones_probabilities(dist, 20), ones_probabilities_by_degree(dist, 20), atol=1e-12)

    def test_total_multiplicity(self):
        """Test Σ_d A_d = 1 + (2^h - 1)·2^{k-h}."""
        we = ensemble_we(DegreeDistribution([0.2, 0.5, 0.3]), n=16, h=12, k=8)
        assert we.total() == pytest.approx(1 + (2**12 - 1) * 2.0**(8 - 12), rel=1e-9)

    def test_rate_pair_dimensions(self):
        """Test h and k rounding and the exact mode."""
        assert RatePair(2 / 3, 1 / 2).dimensions(12) == (8, 4)
        with pytest.raises(EnumeratorError, match="integers"):
            RatePair(0.7, 0.5).dimensions(12, exact=True)


class TestGrowthAndRegion:
    """Test asymptotic quantities."""

    def test_rho_endpoints(self):
        """Test ϱ(0) = 0 and ϱ(1/2) = 1/2."""
        dist = r10_distribution()
        assert rho(dist, 0.0) == pytest.approx(0.0)
        assert rho(dist, 0.5) == pytest.approx(0.5)

    def test_growth_increasing_below_half(self):
        """Test G'(δ) > 0 on (0, 1/2)."""
        curve = growth_rate(r10_distribution(), RatePair(0.9, 0.9), [0.05, 0.1, 0.2, 0.3, 0.4])
        assert np.all(np.diff(curve.values) > 0)

    def test_outer_bound_below_root(self):
        """Test that r_o <= r_o* leaves only r_i·r_o <= 1."""
        assert outer_bound_inner_rate(4.6, 0.2) == pytest.approx(5.0)

    def test_outer_bound_membership(self):
        """Test the outer region with the R10 mean degree."""
        mean = r10_distribution().mean
        assert region_outer_bound(mean, RatePair(0.9, 0.9))
        assert not region_outer_bound(mean, RatePair(0.98, 0.99))

    def test_gilbert_varshamov(self):
        """Test H_b(δ_GV) = 1 - R at R = 1/2."""
        assert gilbert_varshamov_distance(0.5) == pytest.approx(0.110028, abs=1e-5)


class TestTypicalMinimumDistance:
    """Test d-hat and expurgation."""

    def test_definition_arithmetic(self):
        """Test d-hat for A = [1, 0.4, 0.2, ...]."""
        we = WeightEnumerator.from_counts([1.0, 0.4, 0.2, 5.0])
        assert typical_min_distance(we) == 1

    def test_many_zero_weight_words(self):
        """Test that A_0 > 3/2 gives d-hat = 0."""
        assert typical_min_distance(WeightEnumerator.from_counts([2.0, 0.0, 1.0])) == 0

    def test_expurgation(self):
        """Test that expurgation zeroes low weights and doubles the rest."""
        we = WeightEnumerator.from_counts([1.0, 0.1, 0.1, 3.0])
        ex = expurgate(we, 2)
        assert ex[0] == pytest.approx(1.0)
        assert ex[1] == 0.0
        assert ex[3] == pytest.approx(6.0)

    def test_expurgation_impossible(self):
        """Test that θ >= 1/2 is rejected."""
        with pytest.raises(EnumeratorError, match="theta"):
            expurgate(WeightEnumerator.from_counts([1.0, 0.6, 1.0]), 1)

    @pytest.mark.slow
    def test_good_and_bad_ensembles(self):
        """Test d-hat of the two k=128 ensembles with R10."""
        dist = r10_distribution()
        points = good_and_bad_ensembles()
        good, bad = points["good"], points["bad"]
        assert typical_min_distance(ensemble_we(dist, good.n, good.h, good.k)) >= 1
        assert typical_min_distance(ensemble_we(dist, bad.n, bad.h, bad.k)) == 0
