"""
Tests for the closed-form failure-probability bounds.
"""

import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from analysis.failure_bounds import (
    BoundCurve,
    KrawtchoukKernel,
    block_bounds,
    concat_bounds,
    concat_cowef,
    cowef_exhaustive,
    cowef_linear_random_generator,
    di_bound,
    hamming_cowef,
    krawtchouk,
    lrfc_bounds,
    lrfc_exact,
    lt_ml_lower_bound,
    lt_ml_upper_bound,
    multicast_min_overhead,
    multicast_model,
    overhead_curve,
    precode_shortfall_probability,
    raptor_upper_bound,
    singleton_bound,
    zero_output_probabilities,
    zero_output_probabilities_krawtchouk,
)
from analysis.spectra import we_hamming, we_linear_random
from codes.degree_dists import DegreeDistribution, point_mass
from codes.raptor_codes import build_precode


class TestBoundCurve:
    """Test curve lookup and extrapolation."""

    def _curve(self):
        return BoundCurve("overhead", "upper", [0, 1, 2], [1.0, 0.5, 0.25], "test")

    def test_exact_and_interpolated_lookup(self):
        """Test grid points and linear interpolation between them."""
        curve = self._curve()
        assert curve.value_at(1) == pytest.approx(0.5)
        assert curve.value_at(1.5) == pytest.approx(0.375)

    def test_negative_overhead_fails(self):
        """Test that a negative overhead always fails."""
        assert self._curve().value_at(-1) == 1.0

    def test_log_slope_extrapolation(self):
        """Test extrapolation past the grid with the last log-slope."""
        assert self._curve().value_at(4) == pytest.approx(0.0625)

    def test_rejects_unknown_kind(self):
        """Test kind validation."""
        with pytest.raises(ValueError, match="Unknown bound kind"):
            BoundCurve("overhead", "guess", [0], [1.0])

    def test_clamped_view(self):
        """Test that union bounds above one are clamped."""
        curve = BoundCurve("overhead", "upper", [0, 1], [3.0, 0.2])
        assert curve.clamped().tolist() == [1.0, 0.2]


class TestFountainBounds:
    """Test overhead-indexed bounds."""

    def test_lrfc_two_by_two(self):
        """Test that 10 of the 16 binary 2×2 matrices are singular."""
        assert lrfc_exact(2, 2, 0) == pytest.approx(0.625)

    @pytest.mark.parametrize("q", [2, 4, 16])
    def test_lrfc_bracket(self, q):
        """Test lower <= exact <= upper over a range of overheads."""
        for delta in range(12):
            lower, upper = lrfc_bounds(q, delta)
            exact = lrfc_exact(q, 30, delta)
            assert lower <= exact * (1 + 1e-12)
            assert exact <= upper * (1 + 1e-12)

    def test_lrfc_negative_overhead(self):
        """Test that fewer than k receipts always fail."""
        assert lrfc_exact(2, 10, -1) == 1.0
        with pytest.raises(ValueError, match="non-negative"):
            lrfc_bounds(2, -1)

    def test_lt_lower_bound_degree_one(self):
        """Test the coupon-collector case: two degree-one receipts miss an input half the time."""
        assert lt_ml_lower_bound(2, 0.0, point_mass(1), m=2) == pytest.approx(0.5)

    def test_lt_lower_below_upper(self):
        """Test that the inclusion-exclusion bound lies below the union bound."""
        dist = DegreeDistribution([0.1, 0.5, 0.2, 0.2])
        for delta in (0, 5, 10):
            lower = lt_ml_lower_bound(20, 0.0, dist, m=20 + delta)
            assert lower <= lt_ml_upper_bound(20, 2, dist, delta)

    def test_lt_lower_decreases_with_receipts(self):
        """Test that more receipts never raise the lower bound."""
        dist = DegreeDistribution([0.1, 0.5, 0.2, 0.2])
        values = [lt_ml_lower_bound(30, 0.0, dist, m=m) for m in (30, 35, 40, 50)]
        assert values == sorted(values, reverse=True)

    @pytest.mark.parametrize("q", [2, 4])
    def test_krawtchouk_recurrence(self, q):
        """Test the memoized recurrence against the defining sum."""
        kernel = KrawtchoukKernel(6, q)
        for j in range(7):
            for x in range(7):
                assert kernel.value(j, x) == krawtchouk(j, x, 6, q)

    @pytest.mark.parametrize("q", [2, 4])
    def test_zero_output_forms_agree(self, q):
        """Test the hypergeometric and Krawtchouk forms of pi_l."""
        dist = DegreeDistribution([0.2, 0.3, 0.5])
        direct = zero_output_probabilities(dist, 10, q)
        spectral = zero_output_probabilities_krawtchouk(dist, 10, q)
        assert np.allclose(direct, spectral, atol=1e-12)
        assert direct[0] == pytest.approx(1.0)

    def test_zero_output_needs_room(self):
        """Test that the maximum degree must fit the intermediate block."""
        with pytest.raises(ValueError, match="exceeds"):
            zero_output_probabilities(point_mass(8), 5, 2)

    def test_raptor_bound_decreases(self):
        """Test that the Hamming-precoded Raptor bound falls with overhead."""
        dist = DegreeDistribution([0.1, 0.5, 0.4])
        values = [raptor_upper_bound(we_hamming(3), dist, 2, 4, d) for d in range(8)]
        assert np.all(np.diff(values) < 0)

    def test_tightened_bound_divides_by_q_minus_one(self):
        """Test the nonzero-multiple tightening over GF(4)."""
        dist = DegreeDistribution([0.1, 0.5, 0.4])
        we = we_linear_random(8, 6, 4)
        loose = raptor_upper_bound(we, dist, 4, 6, 3, tightened=False)
        assert raptor_upper_bound(we, dist, 4, 6, 3) == pytest.approx(loose / 3)


class TestBlockBounds:
    """Test erasure-indexed bounds."""

    def test_singleton_extremes(self):
        """Test the perfect and the dead channel."""
        assert singleton_bound(15, 11, 0.0) == 0.0
        assert singleton_bound(15, 11, 1.0) == pytest.approx(1.0)

    def test_berlekamp_above_singleton(self):
        """Test that the random-code bound never beats MDS."""
        for eps in (0.05, 0.1, 0.2, 0.4):
            singleton, berlekamp = block_bounds(20, 10, eps)
            assert singleton <= berlekamp

    def test_singleton_increases_with_eps(self):
        """Test monotonicity in the erasure probability."""
        values = [singleton_bound(20, 10, eps) for eps in np.linspace(0.05, 0.5, 10)]
        assert np.all(np.diff(values) > 0)

    def test_di_bound_above_singleton(self):
        """Test the enumerator bound for a linear random code."""
        we = we_linear_random(20, 10)
        for eps in (0.1, 0.3):
            assert di_bound(we, 20, 10, eps) >= singleton_bound(20, 10, eps)

    def test_di_bound_length_check(self):
        """Test that the enumerator length must match n."""
        with pytest.raises(ValueError, match="does not match"):
            di_bound(we_hamming(3), 15, 11, 0.1)

    def test_block_rejects_bad_eps(self):
        """Test erasure probability validation."""
        with pytest.raises(ValueError, match="Erasure probability"):
            singleton_bound(10, 5, 1.5)


class TestConcatenation:
    """Test the block code + LRFC scheme."""

    def test_no_shortfall_without_erasures(self):
        """Test P(0) = 0 for n_c >= k."""
        assert precode_shortfall_probability(11, 10, 0.0) == pytest.approx(0.0)

    def test_concat_scales_lrfc_bracket(self):
        """Test that the concatenated bracket is the LRFC bracket times P(eps)."""
        lower, upper = concat_bounds(11, 10, 2, 0.1, 4)
        shortfall = precode_shortfall_probability(11, 10, 0.1)
        assert lower == pytest.approx(shortfall * 2.0**-5)
        assert upper == pytest.approx(shortfall * 2.0**-4)

    def test_concat_short_precode(self):
        """Test the precode length check."""
        with pytest.raises(ValueError, match="below k"):
            concat_bounds(8, 10, 2, 0.1, 0)


class TestCoWef:
    """Test conditional output weight enumerators."""

    def test_hamming_closed_form_matches_enumeration(self):
        """Test the (7,4) closed form against every message."""
        exhaustive = cowef_exhaustive(build_precode("hamming", 4, {"t": 3}).generator)
        assert np.allclose(hamming_cowef(3).coefficients, exhaustive.coefficients)

    @pytest.mark.parametrize("t", [3, 4, 5])
    def test_hamming_cowef_sums_to_enumerator(self, t):
        """Test that summing over input weight gives the Hamming enumerator."""
        summed = hamming_cowef(t).weight_enumerator()
        assert np.allclose(summed.coefficients, we_hamming(t).coefficients)

    def test_hamming_needs_t3(self):
        """Test the closed-form range."""
        with pytest.raises(ValueError, match="t >= 3"):
            hamming_cowef(2)

    def test_linear_random_generator_rows(self):
        """Test that row i sums to C(k,i)(q-1)^i."""
        cowef = cowef_linear_random_generator(4, 9, 4)
        assert cowef.coefficients[2].sum() == pytest.approx(6 * 9)
        assert cowef.weight_enumerator().total() == pytest.approx(4.0**4)

    def test_concat_preserves_input_rows(self):
        """Test that appending LRFC symbols keeps the per-input-weight counts."""
        base = hamming_cowef(3)
        joined = concat_cowef(base, 4, 3)
        assert joined.n == 10
        assert np.allclose(joined.coefficients.sum(axis=1), base.coefficients.sum(axis=1))
        assert joined.coefficients[0, 0] == pytest.approx(1.0)

    def test_concat_dimension_mismatch(self):
        """Test the k check."""
        with pytest.raises(ValueError, match="expected"):
            concat_cowef(hamming_cowef(3), 5, 2)


class TestMulticast:
    """Test the multicast model with ideal feedback."""

    K, EPS, RECEIVERS, TARGET = 10, 0.01, 10000, 1e-4

    def _curves(self):
        deltas = range(81)
        plain = overhead_curve(lambda d: lrfc_bounds(2, d)[1], deltas, "upper", "lrfc")
        concat = overhead_curve(
            lambda d: concat_bounds(self.K + 1, self.K, 2, self.EPS, d)[1], deltas, "upper", "concat"
        )
        return plain, concat

    def test_required_overheads(self):
        """Test the transmitter overhead needed for 10^4 receivers at P_e = 10^-4."""
        plain, concat = self._curves()
        plain_delta = multicast_min_overhead(self.RECEIVERS, self.K, self.EPS, plain, self.TARGET)
        concat_delta = multicast_min_overhead(self.RECEIVERS, self.K, self.EPS, concat, self.TARGET)
        assert abs(plain_delta - 27) <= 2
        assert abs(concat_delta - 20) <= 2
        assert concat_delta < plain_delta

    def test_more_receivers_fail_more(self):
        """Test monotonicity in the receiver count."""
        plain, _ = self._curves()
        few = multicast_model(10, self.K, self.EPS, 10, plain)
        many = multicast_model(10000, self.K, self.EPS, 10, plain)
        assert few < many

    def test_needs_a_receiver(self):
        """Test receiver count validation."""
        plain, _ = self._curves()
        with pytest.raises(ValueError, match="At least one receiver"):
            multicast_model(0, self.K, self.EPS, 5, plain)
