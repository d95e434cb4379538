"""
Tests for the erasure channel and the Monte Carlo harness.
"""

import os
import sys

import numpy as np
import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from analysis.failure_bounds import lrfc_exact
from models.configs import ChannelSpec, CodeConfig, TrialPlan
from simulation.mc_sim import (
    TrialCode,
    capacity,
    channel_trial,
    chi_square_pvalue,
    erase,
    fixed_receipts_trial,
    receipts_for,
    run_plan,
)


def _plan(**overrides):
    data = {
        "version": 1,
        "code": {"kind": "lrfc", "k": 8},
        "grid": [0, 2],
        "max_trials": 64,
        "batch_size": 16,
        "target_failures": 1000,
        "seed": 3,
    }
    data.update(overrides)
    return TrialPlan.model_validate(data)


class TestChannel:
    """Test the memoryless erasure channel."""

    def test_perfect_channel_keeps_everything(self):
        """Test ε = 0."""
        idx, kept = erase(ChannelSpec(erasure_probability=0.0), np.arange(10), np.random.default_rng(0))
        assert idx.tolist() == list(range(10))
        assert kept.tolist() == list(range(10))

    def test_dead_channel_erases_everything(self):
        """Test ε = 1."""
        idx, kept = erase(ChannelSpec(erasure_probability=1.0), np.arange(10), np.random.default_rng(0))
        assert idx.size == 0
        assert kept.size == 0

    def test_packets_share_one_decision(self):
        """Test that a 1-D input is cut into packets."""
        channel = ChannelSpec(erasure_probability=0.5, packet_len=3)
        idx, kept = erase(channel, np.arange(12), np.random.default_rng(4))
        assert kept.shape == (idx.size, 3)
        for i, row in zip(idx, kept):
            assert row.tolist() == [3 * i, 3 * i + 1, 3 * i + 2]

    def test_partial_packet_rejected(self):
        """Test that symbols must fill whole packets."""
        with pytest.raises(ValueError, match="do not fill packets"):
            erase(ChannelSpec(erasure_probability=0.1, packet_len=4), np.arange(10), np.random.default_rng(0))

    def test_erasure_rate(self):
        """Test that the surviving fraction is close to 1 - ε."""
        idx, _ = erase(ChannelSpec(erasure_probability=0.3), np.zeros(20000), np.random.default_rng(1))
        assert idx.size / 20000 == pytest.approx(0.7, abs=0.02)

    def test_capacity(self):
        """Test capacity in symbols and in bits."""
        symbols, bits = capacity(ChannelSpec(erasure_probability=0.25, q=4, packet_len=2))
        assert symbols == pytest.approx(0.75)
        assert bits == pytest.approx(3.0)


class TestTrials:
    """Test single trials."""

    def test_no_receipts_fail(self):
        """Test that m = 0 is a failure without decoding."""
        code = TrialCode(CodeConfig(kind="lrfc", k=5))
        assert fixed_receipts_trial(code, 0, np.random.default_rng(0)) == (False, 0)

    def test_fewer_than_k_fail(self):
        """Test that m < k never decodes."""
        code = TrialCode(CodeConfig(kind="lt", k=12, dist="r10"))
        rng = np.random.default_rng(2)
        assert not any(fixed_receipts_trial(code, 11, rng)[0] for _ in range(20))

    def test_lrfc_with_large_overhead(self):
        """Test that an LRFC with 30 extra receipts decodes."""
        code = TrialCode(CodeConfig(kind="lrfc", k=10))
        rng = np.random.default_rng(5)
        assert all(fixed_receipts_trial(code, 40, rng)[0] for _ in range(10))

    def test_negative_receipts(self):
        """Test the receipt count check."""
        code = TrialCode(CodeConfig(kind="lrfc", k=5))
        with pytest.raises(ValueError, match="non-negative"):
            fixed_receipts_trial(code, -1, np.random.default_rng(0))

    def test_channel_trial_dead_channel(self):
        """Test that nothing decodes when every symbol is erased."""
        code = TrialCode(CodeConfig(kind="lrfc", k=5))
        assert channel_trial(code, 20, 1.0, np.random.default_rng(0)) == (False, 0)

    def test_receipts_for(self):
        """Test absolute and relative overhead grids."""
        assert receipts_for(_plan(), 3) == 11
        relative = _plan(sweep="relative_overhead", grid=[0.25])
        assert receipts_for(relative, 0.25) == 10

    def test_receipts_for_negative(self):
        """Test that the grid cannot remove more than k receipts."""
        with pytest.raises(ValueError, match="negative number"):
            receipts_for(_plan(), -9)


class TestRunPlan:
    """Test the batched harness."""

    def test_rows_per_point(self):
        """Test one row per grid point with its trial count."""
        rows = run_plan(_plan())
        assert [row.x for row in rows] == [0, 2]
        assert all(row.trials == 64 for row in rows)
        assert all(row.label == "" for row in rows)

    def test_same_seed_same_rows(self):
        """Test that a plan is reproducible."""
        first = [row.model_dump() for row in run_plan(_plan())]
        second = [row.model_dump() for row in run_plan(_plan())]
        assert first == second

    def test_stop_rule_checked_between_batches(self):
        """Test that a batch always completes before the target is checked."""
        rows = run_plan(_plan(grid=[0], target_failures=5, max_trials=1000))
        assert rows[0].trials == 16
        assert rows[0].failures >= 5

    def test_lrfc_estimate_matches_exact(self):
        """Test the estimated Pf of a binary LRFC at zero overhead."""
        rows = run_plan(_plan(code={"kind": "lrfc", "k": 10}, grid=[0], max_trials=1000, batch_size=250))
        row = rows[0]
        assert abs(row.pf - lrfc_exact(2, 10, 0)) < 5 * row.stderr

    def test_erasure_sweep(self):
        """Test the channel receipt mode at both ends of the grid."""
        plan = _plan(sweep="erasure", grid=[0.0, 1.0], transmitted=24, max_trials=32)
        clean, dead = run_plan(plan)
        assert clean.pf <= 0.1
        assert dead.pf == 1.0

    def test_strategy_rows(self):
        """Test that the inactivation kind gives one row per strategy."""
        code = {"kind": "inactivation", "k": 11, "precode": "hamming", "precode_params": {"t": 4}}
        rows = run_plan(_plan(code=code, grid=[6], max_trials=8, batch_size=8))
        assert [row.label for row in rows] == ["random", "max-reduced", "max-accumulated", "max-component"]
        assert all(row.trials == 8 for row in rows)
        assert all(sum(row.histogram) == 8 for row in rows)

    def test_fixed_rate_block_length(self):
        """Test that a fixed-rate Raptor code sends code.n symbols when no length is given."""
        code = {"kind": "fixed_rate_raptor", "k": 11, "dist": "r10", "precode": "hamming",
                "precode_params": {"t": 4}, "n": 40}
        plan = _plan(code=code, sweep="erasure", grid=[1.0], max_trials=8, batch_size=8)
        rows = run_plan(plan)
        assert len(rows) == 1
        assert rows[0].trials == 8
        assert rows[0].pf == 1.0

    @pytest.mark.slow
    def test_worker_count_does_not_change_rows(self):
        """Test that parallel and serial runs agree row for row."""
        serial = [row.model_dump() for row in run_plan(_plan(), workers=1)]
        parallel = [row.model_dump() for row in run_plan(_plan(), workers=2)]
        assert serial == parallel


class TestChiSquare:
    """Test the goodness-of-fit helper."""

    def test_perfect_fit(self):
        """Test that an exact histogram gives p = 1."""
        assert chi_square_pvalue([50, 30, 20], [0.5, 0.3, 0.2]) == pytest.approx(1.0)

    def test_bad_fit(self):
        """Test that a concentrated histogram is rejected."""
        assert chi_square_pvalue([300, 0, 0], [1 / 3, 1 / 3, 1 / 3]) < 1e-6

    def test_sparse_tail_merged(self):
        """Test that low-expectation bins merge into their neighbor."""
        value = chi_square_pvalue([40, 50, 9, 1], [0.4, 0.5, 0.09, 0.01])
        assert value == pytest.approx(1.0)

    def test_empty_histogram(self):
        """Test that an empty histogram is rejected."""
        with pytest.raises(ValueError, match="nonempty"):
            chi_square_pvalue([0, 0], [0.5, 0.5])
