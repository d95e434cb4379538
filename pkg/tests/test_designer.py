"""
Tests for the simulated-annealing degree distribution designer.
"""

import math
import os
import sys
from unittest.mock import patch

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from codes.degree_dists import DegreeDistribution
from models.configs import DesignSpec
from simulation.designer import (
    DesignContext,
    DesignResult,
    FreeFamily,
    TruncatedRsdFamily,
    accept,
    anneal,
    objective,
    penalty,
    pick_best,
    run_chains,
    satisfies_constraints,
    should_verify,
)


def _lt_spec(**overrides):
    data = {"version": 1, "k": 20, "target_pf": 0.1, "eps_rel": 0.5, "dmax": 8, "seed": 1, "sweeps": 3}
    data.update(overrides)
    return DesignSpec.model_validate(data)


def _result(feasible, value, chain):
    return DesignResult(DegreeDistribution([1.0]), value, 0.0, 0.0, feasible, chain=chain)


class TestPenaltyAndAcceptance:
    """Test the scoring and Metropolis helpers."""

    def test_penalty_below_target(self):
        """Test that a bound under the target costs nothing."""
        assert penalty(5e-4, 1e-3, 1000) == 0.0

    def test_penalty_above_target(self):
        """Test f_p = b(1 - Pf*/P) at twice the target."""
        assert penalty(2e-3, 1e-3, 1000) == pytest.approx(500.0)

    def test_improvements_always_accepted(self):
        """Test that non-worsening moves are accepted."""
        rng = np.random.default_rng(0)
        assert accept(-1.0, 0.5, rng)
        assert accept(0.0, 0.5, rng)

    def test_hopeless_moves_rejected(self):
        """Test infinite worsening and a frozen chain."""
        rng = np.random.default_rng(0)
        assert not accept(math.inf, 1.0, rng)
        assert not accept(0.1, 0.0, rng)

    def test_acceptance_rate(self):
        """Test that a worsening of T is accepted with probability 1/e."""
        rng = np.random.default_rng(3)
        rate = np.mean([accept(2.0, 2.0, rng) for _ in range(20000)])
        assert rate == pytest.approx(math.exp(-1.0), abs=0.015)


class TestFamilies:
    """Test the search families."""

    def test_pinned_mean_projection(self):
        """Test that projection mixes in the largest degree to raise the mean."""
        family = FreeFamily(_lt_spec(support=[1, 2, 3, 4], pinned_mean=2.5))
        p = family.project(np.array([1.0, 0.0, 0.0, 0.0]))
        assert np.allclose(p, [0.5, 0.0, 0.0, 0.5])
        assert float(p @ family.degrees) == pytest.approx(2.5)

    def test_mean_cap_projection(self):
        """Test that projection mixes in the smallest degree to lower the mean."""
        family = FreeFamily(_lt_spec(support=[1, 2, 3, 4], max_mean=2.0))
        p = family.project(np.array([0.0, 0.0, 0.0, 1.0]))
        assert float(p @ family.degrees) == pytest.approx(2.0)

    def test_unreachable_mean(self):
        """Test that a pinned mean above the largest degree is rejected."""
        with pytest.raises(ValueError, match="unreachable"):
            FreeFamily(_lt_spec(support=[1, 2, 3, 4], pinned_mean=5.0))

    def test_moves_keep_constraints(self):
        """Test that proposals stay on the simplex with the pinned mean."""
        spec = _lt_spec(support=[1, 2, 3, 8], pinned_mean=3.0)
        family = FreeFamily(spec)
        rng = np.random.default_rng(2)
        state = family.initial()
        for _ in range(50):
            state = family.propose(state, rng)
            assert state.sum() == pytest.approx(1.0)
            assert satisfies_constraints(family.distribution(state), spec)

    def test_rsd_family_rejects_mask(self):
        """Test that the truncated robust soliton family takes no support mask."""
        with pytest.raises(ValueError, match="no support mask"):
            TruncatedRsdFamily(_lt_spec(support=[1, 2]))

    def test_support_violation_is_infinite(self):
        """Test that a candidate off the support scores infinity."""
        spec = _lt_spec(support=[1, 2, 4])
        dist = DegreeDistribution([0.5, 0.0, 0.5])
        assert not satisfies_constraints(dist, spec)
        assert objective(dist, spec, DesignContext.from_spec(spec)) == math.inf


class TestAnnealing:
    """Test annealing runs."""

    def test_lt_chain(self):
        """Test a short LT chain: one trajectory row per sweep and a monotone best."""
        spec = _lt_spec()
        context = DesignContext.from_spec(spec)
        result = anneal(spec, context, np.random.default_rng(0), sweeps=3, moves_per_sweep=5)
        assert len(result.trajectory) == 3
        best_column = [row[3] for row in result.trajectory]
        assert best_column == sorted(best_column, reverse=True)
        assert math.isfinite(result.objective)
        assert satisfies_constraints(result.best, spec)

    def test_raptor_context(self):
        """Test scoring with a Hamming outer code."""
        spec = DesignSpec(
            version=1, context="raptor", k=4, target_pf=0.5, delta=4, dmax=7,
            precode="hamming", precode_params={"t": 3}, seed=0,
        )
        context = DesignContext.from_spec(spec)
        assert context.receipts == 8
        inact, bound = context.estimate(DegreeDistribution([0.2, 0.4, 0.4]))
        assert 0 <= inact <= 7
        assert bound > 0

    def test_pick_best_order(self):
        """Test feasible first, then objective, then chain index."""
        results = [_result(False, 1.0, 0), _result(True, 5.0, 1), _result(True, 5.0, 2), _result(True, 6.0, 3)]
        assert pick_best(results).chain == 1

    def test_run_chains_reproducible(self):
        """Test that the same seed gives the same design and a verified E[Y]."""
        spec = _lt_spec(chains=2, sweeps=2)
        first = run_chains(spec, workers=1)
        second = run_chains(spec, workers=1)
        assert first.best.as_dict() == second.best.as_dict()
        assert first.chain == second.chain
        assert first.verified_inactivations is not None


class TestVerification:
    """Test when the final design gets the exact DP check."""

    def test_small_designs_verified_by_default(self):
        """Test that k within DP_VERIFY_MAX_K is verified."""
        spec = _lt_spec()
        assert should_verify(spec, DesignContext.from_spec(spec))

    def test_large_designs_skipped_by_default(self):
        """Test that k above DP_VERIFY_MAX_K is not verified."""
        spec = _lt_spec()
        with patch('simulation.designer.settings.DP_VERIFY_MAX_K', 10):
            assert not should_verify(spec, DesignContext.from_spec(spec))

    def test_explicit_flag_wins(self):
        """Test that verify=true and verify=false override the size rule."""
        forced = _lt_spec(verify=True)
        skipped = _lt_spec(verify=False)
        with patch('simulation.designer.settings.DP_VERIFY_MAX_K', 10):
            assert should_verify(forced, DesignContext.from_spec(forced))
        assert not should_verify(skipped, DesignContext.from_spec(skipped))

    def test_run_chains_skips_dp(self):
        """Test that a skipped check leaves the verified value unset."""
        spec = _lt_spec(sweeps=1, verify=False)
        result = run_chains(spec, workers=1)
        assert result.verified_inactivations is None
        assert math.isfinite(result.expected_inactivations)

    def test_raptor_dp_size_counts_intermediates(self):
        """Test that the Raptor DP size is the precode length h."""
        spec = DesignSpec(
            version=1, context="raptor", k=4, target_pf=0.5, delta=4, dmax=7,
            precode="hamming", precode_params={"t": 3}, seed=0,
        )
        assert DesignContext.from_spec(spec).dp_size == 7
