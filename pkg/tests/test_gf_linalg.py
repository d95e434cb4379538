"""
Tests for finite-field arithmetic and linear algebra.
"""

import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from codes.gf_linalg import (
    GF2,
    FieldError,
    FieldMatrix,
    FieldSpec,
    field_add,
    field_inv,
    field_mul,
    field_spec,
    gaussian_solve,
    inverse,
    matmul,
    null_space,
    packed_matmul,
    rank,
    spec_for_order,
)


class TestFieldSpec:
    """Test field construction."""

    def test_conventional_specs(self):
        """Test that spec_for_order picks the default polynomial."""
        assert spec_for_order(2) == GF2
        assert spec_for_order(4) == field_spec(2)
        assert spec_for_order(256).degree == 8

    def test_rejects_non_power_of_two(self):
        """Test that orders other than 2^m are rejected."""
        with pytest.raises(FieldError, match="power of two"):
            spec_for_order(6)

    def test_rejects_reducible_polynomial(self):
        """Test that x^2 + 1 does not define GF(4)."""
        with pytest.raises(FieldError, match="reducible"):
            FieldSpec(order=4, poly=0b101)


class TestFieldArithmetic:
    """Test element operations."""

    def test_gf4_products(self):
        """Test multiplication modulo x^2 + x + 1."""
        spec = field_spec(2)
        assert field_mul(2, 2, spec) == 3
        assert field_mul(2, 3, spec) == 1
        assert field_inv(2, spec) == 3

    def test_addition_is_xor(self):
        """Test that addition in characteristic 2 is xor."""
        spec = field_spec(4)
        assert field_add(5, 12, spec) == 9
        assert field_add(7, 7, spec) == 0

    def test_every_nonzero_element_has_an_inverse(self):
        """Test inverses over GF(16)."""
        spec = field_spec(4)
        for a in range(1, 16):
            assert field_mul(a, field_inv(a, spec), spec) == 1

    def test_zero_has_no_inverse(self):
        """Test that inverting zero raises."""
        with pytest.raises(FieldError, match="no multiplicative inverse"):
            field_inv(0, GF2)

    def test_element_outside_field(self):
        """Test that out-of-range elements are rejected."""
        with pytest.raises(FieldError, match="outside"):
            field_add(4, 1, field_spec(2))


class TestLinearAlgebra:
    """Test matrix operations."""

    def test_binary_solve(self):
        """Test a unique solution over GF(2)."""
        a = FieldMatrix([[1, 1, 0], [0, 1, 1], [1, 0, 0]])
        x = np.array([1, 0, 1])
        b = matmul(a, FieldMatrix(x.reshape(3, 1))).to_numpy()[:, 0]
        report = gaussian_solve(a, b)
        assert report.consistent
        assert report.unique
        assert np.array_equal(report.solution, x)

    def test_rank_deficient_system(self):
        """Test that a singular system has no unique solution."""
        a = FieldMatrix([[1, 1], [1, 1]])
        report = gaussian_solve(a, [1, 1])
        assert report.consistent
        assert report.rank == 1
        assert not report.unique
        assert report.solution is None

    def test_inconsistent_system(self):
        """Test that contradictory equations are detected."""
        report = gaussian_solve(FieldMatrix([[1, 1], [1, 1]]), [0, 1])
        assert not report.consistent

    def test_nonbinary_inverse(self):
        """Test A·A^-1 = I over GF(16)."""
        spec = field_spec(4)
        rng = np.random.default_rng(3)
        while True:
            a = FieldMatrix.random(4, 4, rng, spec)
            if rank(a) == 4:
                break
        assert matmul(a, inverse(a)) == FieldMatrix.identity(4, spec)

    def test_singular_inverse_raises(self):
        """Test that a singular matrix cannot be inverted."""
        with pytest.raises(FieldError, match="singular"):
            inverse(FieldMatrix([[1, 0], [1, 0]]))

    def test_null_space_is_annihilated(self):
        """Test that every null-space row solves A·x = 0."""
        a = FieldMatrix([[1, 0, 1, 1], [0, 1, 1, 0]])
        basis = null_space(a)
        assert basis.rows == 2
        assert matmul(a, basis.T).is_zero()

    def test_packed_matches_plain_product(self):
        """Test that the bit-packed path agrees with integer arithmetic mod 2."""
        rng = np.random.default_rng(0)
        a = rng.integers(0, 2, size=(7, 19))
        b = rng.integers(0, 2, size=(19, 13))
        assert np.array_equal(packed_matmul(a, b), (a @ b) % 2)

    def test_empty_matrix_rank(self):
        """Test that an empty matrix has rank zero."""
        assert rank(FieldMatrix.zeros(0, 3)) == 0
