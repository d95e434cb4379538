"""
Tests for the inactivation decoder.
"""

import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from codes.degree_dists import r10_distribution
from codes.gf_linalg import FieldError, FieldMatrix, field_spec, gaussian_solve
from codes.inactivation import (
    ALL_STRATEGIES,
    Equation,
    SparseSystem,
    Strategy,
    inactivation_decode,
    strategy_compare,
    trace_to_rows,
    triangulate,
)
from codes.lt_lrfc import encode_columns, lt_columns, received_from_columns, received_to_system


def _cycle_system(rhs):
    """Three pairwise equations plus the all-ones row; no degree-one equation."""
    equations = [Equation((0, 1), (1, 1)), Equation((1, 2), (1, 1)), Equation((0, 2), (1, 1)), Equation((0, 1, 2), (1, 1, 1))]
    return SparseSystem(equations, 3, rhs)


class TestSparseSystem:
    """Test system construction."""

    def test_zero_coefficients_dropped(self):
        """Test that zero coefficients disappear from equations."""
        system = SparseSystem([Equation((0, 1), (0, 1))], 2)
        assert system.equations[0].indices == (1,)
        assert system.payload_width == 0

    def test_rejects_out_of_range_variable(self):
        """Test variable bounds."""
        with pytest.raises(FieldError, match="outside"):
            SparseSystem([Equation((5,), (1,))], 2)

    def test_dense_round_trip(self):
        """Test that dense conversion preserves the structure."""
        matrix = FieldMatrix([[1, 0, 1], [0, 1, 1]])
        assert SparseSystem.from_dense(matrix).to_dense() == matrix


class TestTriangulation:
    """Test the structural phase."""

    @pytest.mark.parametrize("strategy", list(ALL_STRATEGIES))
    def test_one_inactivation_for_cycle(self, strategy):
        """Test that a system without a ripple needs exactly one inactivation."""
        tri = triangulate(_cycle_system(None), strategy, np.random.default_rng(0))
        assert tri.num_inactivations == 1
        assert tri.trace[0].action == "inactivate"
        assert len(tri.trace) == 3

    def test_no_inactivation_for_triangular_system(self):
        """Test that a lower-triangular system peels completely."""
        system = SparseSystem.from_dense(FieldMatrix([[1, 0, 0], [1, 1, 0], [0, 1, 1]]))
        assert triangulate(system).num_inactivations == 0

    def test_trace_rows(self):
        """Test trace export columns."""
        rows = trace_to_rows(triangulate(_cycle_system(None)).trace)
        assert [row[0] for row in rows] == [3, 2, 1]
        assert rows[0][1] == "inactivate"


class TestInactivationDecode:
    """Test full decoding."""

    def test_cycle_system_solution(self):
        """Test that the decoded values satisfy every equation."""
        x = np.array([1, 0, 1])
        rhs = np.array([x[0] ^ x[1], x[1] ^ x[2], x[0] ^ x[2], x[0] ^ x[1] ^ x[2]])
        system = _cycle_system(rhs)
        result = inactivation_decode(system, Strategy.MAX_COMPONENT)
        assert result.success
        assert result.inactivations == 1
        assert np.array_equal(result.solution[:, 0], x)
        assert system.check(result.solution)

    def test_rank_deficient_fails(self):
        """Test that a singular system reports failure."""
        system = SparseSystem([Equation((0, 1), (1, 1)), Equation((0, 1), (1, 1))], 2, [1, 1])
        result = inactivation_decode(system)
        assert not result.success
        assert result.solution is None

    @pytest.mark.parametrize("strategy", list(ALL_STRATEGIES))
    def test_agrees_with_gaussian_elimination(self, strategy):
        """Test success agreement with plain Gaussian elimination over GF(4)."""
        spec = field_spec(2)
        rng = np.random.default_rng(21)
        for _ in range(5):
            source = rng.integers(0, 4, size=(20, 2))
            cols = lt_columns(r10_distribution(), 20, 24, rng, spec)
            rx = received_from_columns(cols, encode_columns(source, cols, spec), 20, spec)
            result = inactivation_decode(received_to_system(rx), strategy, rng)
            report = gaussian_solve(rx.generator().transpose(), rx.values)
            assert result.success == report.unique
            if result.success:
                assert np.array_equal(result.solution, source)


class TestStrategyCompare:
    """Test strategy comparison."""

    def test_summary_per_strategy(self):
        """Test that every strategy gets a summary over the same systems."""
        def make_system(rng):
            cols = lt_columns(r10_distribution(), 30, 33, rng)
            return received_to_system(received_from_columns(cols, np.zeros(33, dtype=int), 30))

        summary = strategy_compare(make_system, list(ALL_STRATEGIES), 10, np.random.default_rng(4))
        assert set(summary) == set(ALL_STRATEGIES)
        for item in summary.values():
            assert item.trials == 10
            assert item.mean >= 0

    def test_rejects_zero_trials(self):
        """Test the trial count check."""
        with pytest.raises(ValueError, match="at least 1"):
            strategy_compare(lambda rng: None, [Strategy.RANDOM], 0, np.random.default_rng(0))
