"""Finite-length analysis of inactivation decoding for LT codes.

The exact analysis follows the decoder state (cloud size, ripple size) as
the number of active input symbols u goes from k down to 0; appending the
inactivation count to the state yields the full distribution of Y. The
binomial approximation tracks one success probability per reduced degree
instead and is cheap enough for the degree-distribution designer.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import gammaln
from tqdm import tqdm

from codes.degree_dists import DegreeDistribution
from codes.raptor_codes import Precode, expected_row_weight_profile
from core.config import settings

logger = logging.getLogger(__name__)


def _log_comb(n, r):
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


@dataclass
class TransitionProbability:
    """p_u together with a flag for a vanishing cloud probability."""

    value: float
    degenerate: bool = False


def cloud_probability(k: int, u: int, dist: DegreeDistribution) -> float:
    """Probability that a random output symbol has reduced degree >= 2 with u active inputs."""
    total = 0.0
    for d in dist.support:
        omega = dist[d]
        if d - 1 <= k - u:
            total += omega * u * math.exp(_log_comb(k - u, d - 1) - _log_comb(k, d))
        if d <= k - u:
            total += omega * math.exp(_log_comb(k - u, d) - _log_comb(k, d))
    return 1.0 - total


def transition_prob_pu(k: int, u: int, dist: DegreeDistribution) -> TransitionProbability:
    """Probability that a cloud symbol enters the ripple in the step from u to u-1.

    Args:
        k: Number of input symbols
        u: Active input symbols before the step, 1 <= u <= k
        dist: Output degree distribution

    Returns:
        TransitionProbability; a zero cloud probability gives p_u = 0 flagged degenerate
    """
    if not 1 <= u <= k:
        raise ValueError(f"u must lie in [1, {k}], got {u}")
    numerator = 0.0
    if u > 1 and k > 1:
        for d in dist.support:
            if d < 2 or d > k - u + 2:
                continue
            ratio = math.exp(_log_comb(k - u, d - 2) - _log_comb(k - 2, d - 2))
            numerator += dist[d] * d * (d - 1) / k * (u - 1) / (k - 1) * ratio
    denominator = cloud_probability(k, u, dist)
    if denominator < 1e-12:
        # The cloud is empty almost surely; only a nonzero numerator is suspicious.
        return TransitionProbability(0.0, degenerate=numerator > 1e-12)
    return TransitionProbability(min(max(numerator / denominator, 0.0), 1.0))


@dataclass
class DpResult:
    """Outcome of the exact (cloud, ripple) recursion.

    Attributes:
        expected_inactivations: E[Y]
        empty_ripple: Pr{R_u = 0} for u = k..1 (index 0 is u = k)
        mean_ripple: E[R_u] for u = k..1
        pruned_mass: Total probability discarded by pruning
        degenerate_steps: Values of u whose cloud probability vanished
    """

    k: int
    m: int
    expected_inactivations: float
    empty_ripple: np.ndarray
    mean_ripple: np.ndarray
    pruned_mass: float = 0.0
    degenerate_steps: List[int] = field(default_factory=list)

    def trajectory_rows(self) -> List[List[float]]:
        """Rows (u, E[R_u], cumulative E[inactivations])."""
        cumulative = np.cumsum(self.empty_ripple)
        return [
            [self.k - i, float(self.mean_ripple[i]), float(cumulative[i])]
            for i in range(self.k)
        ]


@dataclass
class InactivationDistribution:
    """f_Y over y = 0..y_max with the mass beyond y_max kept in ``overflow``."""

    pmf: np.ndarray
    overflow: float = 0.0

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def total(self) -> float:
        return float(self.pmf.sum() + self.overflow)

    def rows(self) -> List[List[float]]:
        return [[y, float(p)] for y, p in enumerate(self.pmf)]


def _prune_threshold() -> float:
    return settings.DP_PRUNE_THRESHOLD if settings.DP_PRUNE_ENABLED else 0.0


def _ripple_kernel(r_size: int, u: int) -> np.ndarray:
    """Resolve one ripple symbol; each other ripple symbol leaves with probability 1/u."""
    kernel = np.zeros((r_size, r_size))
    kernel[0, 0] = 1.0
    if r_size > 1:
        rs = np.arange(1, r_size)
        targets = np.arange(r_size)
        kernel[1:, :] = stats.binom.pmf(targets[None, :], (rs - 1)[:, None], 1.0 - 1.0 / u)
    return kernel


def _transition(state: np.ndarray, u: int, p: float, threshold: float) -> np.ndarray:
    """One step u -> u-1 on the bounding box of states that still carry mass.

    Ripple: one symbol is resolved and the others leave with probability 1/u.
    Cloud: Binomial(c, p) symbols move into the ripple.
    """
    size = state.shape[0]
    c_idx = np.flatnonzero(state.any(axis=(1, 2)))
    if c_idx.size == 0:
        return state
    r_idx = np.flatnonzero(state.any(axis=(0, 2)))
    c_lo, c_hi, r_hi = int(c_idx[0]), int(c_idx[-1]), int(r_idx[-1])
    sub = state[c_lo : c_hi + 1, : r_hi + 1]
    sub = np.einsum("crn,rs->csn", sub, _ripple_kernel(r_hi + 1, u))
    if p <= 0.0:
        out = np.zeros_like(state)
        out[c_lo : c_hi + 1, : r_hi + 1] = sub
        return out
    b_max = c_hi
    if threshold > 0:
        b_max = int(min(c_hi, stats.binom.isf(threshold, c_hi, p) + 1))
    out = np.zeros((size, size + b_max, state.shape[2]))
    for b in range(b_max + 1):
        cs = np.arange(max(c_lo, b), c_hi + 1)
        if cs.size == 0:
            break
        weights = stats.binom.pmf(b, cs, p)
        block = weights[:, None, None] * sub[cs - c_lo]
        out[cs[0] - b : cs[-1] - b + 1, b : b + r_hi + 1] += block
    return out[:, :size]


def _trim(state: np.ndarray, threshold: float) -> Tuple[np.ndarray, float]:
    if threshold <= 0:
        return state, 0.0
    mask = state < threshold
    dropped = float(state[mask].sum())
    state = np.where(mask, 0.0, state)
    return state, dropped


def _initial_state(m: int, dist: DegreeDistribution) -> np.ndarray:
    state = np.zeros((m + 1, m + 1, 1))
    rs = np.arange(m + 1)
    state[m - rs, rs, 0] = stats.binom.pmf(rs, m, dist[1])
    return state


def _run_dp(k: int, m: int, dist: DegreeDistribution, y_max: Optional[int]):
    if k < 1:
        raise ValueError("k must be at least 1")
    if m < 0:
        raise ValueError("m must be non-negative")
    if dist.dmax > k:
        dist = dist.with_dmax(k)
    threshold = _prune_threshold()
    state = _initial_state(m, dist)
    cap = None if y_max is None else y_max + 2
    empty = np.zeros(k)
    mean_ripple = np.zeros(k)
    pruned = 0.0
    degenerate: List[int] = []
    r_axis = np.arange(m + 1)

    for i, u in enumerate(tqdm(range(k, 0, -1), disable=not settings.SHOW_PROGRESS, desc="dp")):
        by_ripple = state.sum(axis=(0, 2))
        empty[i] = by_ripple[0]
        mean_ripple[i] = float(np.dot(r_axis, by_ripple))
        if y_max is not None and by_ripple[0] > 0:
            state = _shift_inactivated(state, cap)
        pu = transition_prob_pu(k, u, dist)
        if pu.degenerate:
            degenerate.append(u)
        state = _transition(state, u, pu.value, threshold)
        state, dropped = _trim(state, threshold)
        pruned += dropped

    if degenerate:
        logger.warning("Cloud probability vanished at %d steps; p_u set to 0", len(degenerate))
    if pruned > 1e-9:
        logger.warning("DP pruning discarded %.3g of probability mass", pruned)
    result = DpResult(k, m, float(empty.sum()), empty, mean_ripple, pruned, degenerate)
    return result, state


def _shift_inactivated(state: np.ndarray, cap: int) -> np.ndarray:
    """Increment the inactivation counter of every state with an empty ripple."""
    n_size = state.shape[2]
    if n_size < cap:
        state = np.concatenate([state, np.zeros(state.shape[:2] + (1,))], axis=2)
        n_size += 1
    zero_ripple = state[:, 0, :].copy()
    shifted = np.zeros_like(zero_ripple)
    shifted[:, 1:] = zero_ripple[:, :-1]
    if n_size == cap:
        shifted[:, -1] += zero_ripple[:, -1]
    state = state.copy()
    state[:, 0, :] = shifted
    return state


def expected_inactivations_dp(k: int, m: int, dist: DegreeDistribution) -> DpResult:
    """E[Y] = sum over u of Pr{R_u = 0}, from the exact state recursion."""
    result, _ = _run_dp(k, m, dist, y_max=None)
    logger.debug("DP k=%d m=%d: E[Y]=%.6f", k, m, result.expected_inactivations)
    return result


def dp_trajectory(k: int, m: int, dist: DegreeDistribution) -> List[List[float]]:
    """(u, E[R_u], cumulative inactivations) rows from the exact recursion."""
    return expected_inactivations_dp(k, m, dist).trajectory_rows()


def inactivation_distribution_dp(
    k: int,
    m: int,
    dist: DegreeDistribution,
    y_max: Optional[int] = None,
) -> InactivationDistribution:
    """Distribution of Y from the recursion over (cloud, ripple, inactivations).

    Args:
        y_max: Largest tracked count; mass above it is reported as overflow.
            Defaults to k, which never overflows.
    """
    y_max = k if y_max is None else y_max
    _, state = _run_dp(k, m, dist, y_max=y_max)
    by_count = state.sum(axis=(0, 1))
    pmf = np.zeros(y_max + 1)
    tracked = min(by_count.size, y_max + 1)
    pmf[:tracked] = by_count[:tracked]
    overflow = float(by_count[y_max + 1 :].sum()) if by_count.size > y_max + 1 else 0.0
    return InactivationDistribution(pmf, overflow)


@dataclass
class BinomialApproximation:
    """Ê[Y] and the per-step ripple estimate m·r_{u,1}."""

    k: int
    m: int
    expected_inactivations: float
    empty_ripple: np.ndarray
    ripple: np.ndarray

    def trajectory_rows(self) -> List[List[float]]:
        cumulative = np.cumsum(self.empty_ripple)
        return [[self.k - i, float(self.ripple[i]), float(cumulative[i])] for i in range(self.k)]


def binomial_approx(k: int, m: int, dist: DegreeDistribution) -> BinomialApproximation:
    """Binomial approximation of the expected number of inactivations.

    Each reduced-degree set is modeled as Binomial(m, r_{u,d}) with
    r_{k,d} = Ω_d; a reduced-degree-d symbol drops to d-1 with probability d/u.
    """
    if m < 1:
        raise ValueError("The binomial approximation needs m >= 1")
    if dist.dmax > k:
        dist = dist.with_dmax(k)
    r = np.zeros(dist.dmax + 2)
    r[1 : dist.dmax + 1] = dist.probabilities
    degrees = np.arange(r.size)
    empty = np.zeros(k)
    ripple = np.zeros(k)
    for i, u in enumerate(range(k, 0, -1)):
        p_empty = (1.0 - r[1]) ** m
        empty[i] = p_empty
        ripple[i] = m * r[1]
        nxt = np.zeros_like(r)
        nxt[2:-1] = (1.0 - degrees[2:-1] / u) * r[2:-1] + (degrees[3:] / u) * r[3:]
        nxt[1] = (1.0 - 1.0 / u) * r[1] + (2.0 / u) * r[2] - (1.0 - 1.0 / u) * (1.0 - p_empty) / m
        r = np.clip(nxt, 0.0, 1.0)
    return BinomialApproximation(k, m, float(empty.sum()), empty, ripple)


def surrogate_lt(theta: DegreeDistribution, omega: DegreeDistribution, h: int, k: int, m: int) -> DegreeDistribution:
    """Degree distribution of the LT code whose rows mimic the constraint matrix.

    Ω_eq = ((h-k)·Θ + m·Ω) / (h-k+m), over degrees <= h.
    """
    if h < k:
        raise ValueError(f"Need h >= k, got h={h}, k={k}")
    omega = omega.with_dmax(h) if omega.dmax > h else omega
    if h == k:
        return omega
    theta = theta.with_dmax(h) if theta.dmax > h else theta
    weight = (h - k) / (h - k + m)
    mixed = omega.mix(theta, weight)
    mixed.name = f"surrogate-{omega.name}"
    return mixed


def raptor_expected_inactivations(precode: Precode, dist: DegreeDistribution, delta: int, method: str = "dp") -> float:
    """E[Y] of a Raptor code estimated through its surrogate LT code.

    The constraint matrix has h columns and (h-k) + (k+delta) rows.
    """
    m = precode.k + delta
    if m < 0:
        raise ValueError("Received fewer than zero symbols")
    theta = expected_row_weight_profile(precode)
    surrogate = surrogate_lt(theta, dist, precode.h, precode.k, m)
    rows = precode.h - precode.k + m
    if method == "dp":
        return expected_inactivations_dp(precode.h, rows, surrogate).expected_inactivations
    if method == "binomial":
        return binomial_approx(precode.h, rows, surrogate).expected_inactivations
    raise ValueError(f"Unknown method '{method}'")


# ---------------------------------------------------------------------------
# Exhaustive oracle for toy sizes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _exact_counts(equations: Tuple[Tuple[int, ...], ...], active: frozenset) -> Tuple[Tuple[int, float], ...]:
    if not active:
        return ((0, 1.0),)
    ripple = [e for e in equations if len(e) == 1]
    out: Dict[int, float] = {}
    if ripple:
        weight = 1.0 / len(ripple)
        choices = [(e[0], 0) for e in ripple]
    else:
        weight = 1.0 / len(active)
        choices = [(v, 1) for v in sorted(active)]
    for v, extra in choices:
        reduced = tuple(sorted(tuple(i for i in e if i != v) for e in equations if set(e) != {v}))
        reduced = tuple(e for e in reduced if e)
        for y, p in _exact_counts(reduced, active - {v}):
            out[y + extra] = out.get(y + extra, 0.0) + weight * p
    return tuple(sorted(out.items()))


def exhaustive_inactivation_distribution(k: int, m: int, dist: DegreeDistribution) -> np.ndarray:
    """f_Y by enumerating every LT graph and every random choice of the decoder.

    Only meant for k <= 5 and small m.
    """
    options = []
    for d in dist.support:
        combos = list(itertools.combinations(range(k), d))
        for combo in combos:
            options.append((dist[d] / len(combos), combo))
    pmf = np.zeros(k + 1)
    for graph in itertools.product(options, repeat=m):
        prob = math.prod(p for p, _ in graph)
        equations = tuple(sorted(combo for _, combo in graph))
        for y, p in _exact_counts(equations, frozenset(range(k))):
            pmf[y] += prob * p
    return pmf
