"""Closed-form failure-probability bounds for fountain and block codes.

Overhead-indexed bounds (LRFC, LT, Raptor, concatenated scheme) take the
absolute receiver overhead delta = m - k. Block-code bounds take the channel
erasure probability. Bounds that are union bounds are returned raw and may
exceed one; ``BoundCurve.clamped`` gives the probability view.
"""

import logging
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp

from analysis.spectra import WeightEnumerator, we_linear_random
from codes.degree_dists import DegreeDistribution
from codes.gf_linalg import FieldMatrix, plain

logger = logging.getLogger(__name__)

OVERHEAD = "overhead"
ERASURE = "erasure"
BOUND_KINDS = ("upper", "lower", "exact", "model")
CANCELLATION_GUARD = 1e-13
DECIMAL_PRECISION = 120


def _log_comb(n, r):
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


@dataclass
class BoundCurve:
    """A bound or model evaluated on an overhead or erasure-probability grid."""

    abscissa: str
    kind: str
    x: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.abscissa not in (OVERHEAD, ERASURE):
            raise ValueError(f"Unknown abscissa '{self.abscissa}'")
        if self.kind not in BOUND_KINDS:
            raise ValueError(f"Unknown bound kind '{self.kind}'")
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.shape != self.values.shape:
            raise ValueError("Curve abscissa and values differ in length")

    def clamped(self) -> np.ndarray:
        return np.clip(self.values, 0.0, 1.0)

    def value_at(self, delta: float) -> float:
        """Clamped value at an overhead, extrapolating past the grid with the last log-slope."""
        clamped = self.clamped()
        matches = np.flatnonzero(np.isclose(self.x, delta))
        if matches.size:
            return float(clamped[matches[0]])
        if delta < self.x[0]:
            return 1.0 if self.abscissa == OVERHEAD and delta < 0 else float(clamped[0])
        if delta < self.x[-1]:
            return float(np.interp(delta, self.x, clamped))
        last, previous = clamped[-1], clamped[-2] if clamped.size > 1 else clamped[-1]
        if last <= 0 or previous <= 0 or self.x.size < 2:
            return float(last)
        slope = (math.log(last) - math.log(previous)) / (self.x[-1] - self.x[-2])
        logger.warning("Extrapolating %s beyond %g to %g", self.label or "curve", self.x[-1], delta)
        return float(min(1.0, last * math.exp(slope * (delta - self.x[-1]))))

    def rows(self) -> List[List[float]]:
        return [[float(x), float(v)] for x, v in zip(self.x, self.values)]


def overhead_curve(
    func: Callable[[int], float], deltas: Sequence[int], kind: str, label: str
) -> BoundCurve:
    """Evaluate a per-overhead bound on an integer grid."""
    deltas = [int(d) for d in deltas]
    return BoundCurve(OVERHEAD, kind, deltas, [func(d) for d in deltas], label)


# ---------------------------------------------------------------------------
# Fountain codes as functions of the overhead
# ---------------------------------------------------------------------------

def _check_overhead(delta: int) -> None:
    if delta < 0:
        raise ValueError(f"Overhead must be non-negative, got {delta}")


def lrfc_bounds(q: int, delta: int) -> Tuple[float, float]:
    """q^(-delta-1) <= Pf < q^(-delta)/(q-1) for a linear random fountain code."""
    _check_overhead(delta)
    return float(q) ** (-delta - 1), float(q) ** (-delta) / (q - 1)


def lrfc_exact(q: int, k: int, delta: int) -> float:
    """Probability that a random (k+delta)×k matrix over GF(q) is rank deficient."""
    if delta < 0:
        return 1.0
    exponents = np.arange(delta + 1, k + delta + 1, dtype=float)
    return float(-np.expm1(np.sum(np.log1p(-np.power(float(q), -exponents)))))


def ideal_fountain(delta: int) -> float:
    """Failure probability of an ideal fountain code: any k symbols suffice."""
    return 1.0 if delta < 0 else 0.0


def _exclusion_inner(k: int, dist: DegreeDistribution) -> np.ndarray:
    """Probability that a random output symbol avoids a fixed set of i inputs, for i = 1..k."""
    i = np.arange(1, k + 1)
    inner = np.zeros(k)
    for d in dist.support:
        if d > k:
            continue
        valid = k - i >= d
        ratio = np.zeros(k)
        ratio[valid] = np.exp(_log_comb(k - i[valid], d) - _log_comb(k, d))
        inner += dist[d] * ratio
    return inner


def _exclusion_decimal(k: int, m: int, dist: DegreeDistribution) -> float:
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        total = Decimal(0)
        for i in range(1, k + 1):
            inner = Decimal(0)
            for d in dist.support:
                if d <= k - i:
                    inner += Decimal(dist[d]) * Decimal(math.comb(k - i, d)) / Decimal(math.comb(k, d))
            term = Decimal(math.comb(k, i)) * inner ** m
            total += term if i % 2 else -term
        return float(total)


def lt_ml_lower_bound(
    k: int, eps_rel: float, dist: DegreeDistribution, m: Optional[int] = None
) -> float:
    """Lower bound on the ML failure probability of an LT code.

    Inclusion-exclusion over sets of inputs no received symbol touches.

    Args:
        k: Number of input symbols
        eps_rel: Relative overhead; m = round(k(1 + eps_rel)) unless m is given
        dist: Output degree distribution
        m: Explicit number of received symbols

    Returns:
        The bound, computed with an extended-precision fallback under cancellation
    """
    if m is None:
        m = int(round(k * (1.0 + eps_rel)))
    if m < 0 or k < 1:
        raise ValueError(f"Need k >= 1 and m >= 0, got k={k}, m={m}")
    inner = _exclusion_inner(k, dist)
    i = np.arange(1, k + 1)
    with np.errstate(divide="ignore"):
        log_terms = _log_comb(k, i) + m * np.log(inner)
    terms = np.where(i % 2 == 1, 1.0, -1.0) * np.exp(log_terms)
    result = math.fsum(terms.tolist())
    magnitude = float(np.max(np.abs(terms))) if terms.size else 0.0
    if result < 0 or magnitude * CANCELLATION_GUARD > abs(result):
        logger.debug("Inclusion-exclusion sum cancels (max term %.3g, sum %.3g); using extended precision", magnitude, result)
        result = _exclusion_decimal(k, m, dist)
    return min(max(result, 0.0), 1.0)


def zero_sum_probabilities(q: int, size: int) -> np.ndarray:
    """q_i for i = 0..size-1: probability that i i.i.d. uniform nonzero elements sum to zero."""
    i = np.arange(size, dtype=float)
    if q == 2:
        return np.where(np.arange(size) % 2 == 0, 1.0, 0.0)
    return (1.0 + np.power(-1.0, i) * np.power(float(q - 1), 1.0 - i)) / q


def krawtchouk(j: int, x: int, n: int, q: int) -> int:
    """K_j(x; n, q) by its defining sum, in exact integers."""
    return sum(
        (-1) ** s * math.comb(x, s) * math.comb(n - x, j - s) * (q - 1) ** (j - s)
        for s in range(j + 1)
    )


class KrawtchoukKernel:
    """Memoized ratios K_j(l; h, q)/K_j(0; h, q), built with the three-term recurrence."""

    def __init__(self, h: int, q: int, max_degree: Optional[int] = None):
        self.h = h
        self.q = q
        self.max_degree = h if max_degree is None else min(max_degree, h)
        self._values = self._build()
        ratios = np.empty((self.max_degree + 1, h + 1))
        for j in range(self.max_degree + 1):
            base = self._values[j][0]
            ratios[j] = [value / base for value in self._values[j]]
        self.ratios = ratios
        self.ratios.flags.writeable = False

    def _build(self) -> List[List[int]]:
        h, q = self.h, self.q
        rows = [[1] * (h + 1)]
        if self.max_degree >= 1:
            rows.append([(q - 1) * h - q * x for x in range(h + 1)])
        for j in range(1, self.max_degree):
            nxt = []
            for x in range(h + 1):
                value = (j + (q - 1) * (h - j) - q * x) * rows[j][x] - (q - 1) * (h - j + 1) * rows[j - 1][x]
                nxt.append(value // (j + 1))
            rows.append(nxt)
        return rows

    def value(self, j: int, l: int) -> int:
        return self._values[j][l]


def zero_output_probabilities(dist: DegreeDistribution, h: int, q: int) -> np.ndarray:
    """pi_l for l = 0..h: probability that an LT output symbol is zero given intermediate weight l."""
    if dist.dmax > h:
        raise ValueError(f"dmax={dist.dmax} exceeds the intermediate length h={h}")
    weights = np.arange(h + 1)
    zero_sum = zero_sum_probabilities(q, dist.dmax + 1)
    pi = np.zeros(h + 1)
    for j in dist.support:
        overlap = np.arange(j + 1)
        pmf = stats.hypergeom.pmf(overlap[:, None], h, weights[None, :], j)
        pi += dist[j] * (zero_sum[: j + 1, None] * pmf).sum(axis=0)
    return np.clip(pi, 0.0, 1.0)


def zero_output_probabilities_krawtchouk(
    dist: DegreeDistribution, h: int, q: int, kernel: Optional[KrawtchoukKernel] = None
) -> np.ndarray:
    """pi_l through the Krawtchouk ratio form."""
    if kernel is None:
        kernel = KrawtchoukKernel(h, q, dist.dmax)
    total = np.zeros(h + 1)
    for j in dist.support:
        total += dist[j] * kernel.ratios[j]
    return 1.0 / q + (q - 1) / q * total


def _union_bound(log_weights: np.ndarray, pi: np.ndarray, receipts: int) -> float:
    with np.errstate(divide="ignore"):
        log_terms = log_weights[1:] + receipts * np.log(pi[1:])
    return float(np.exp(logsumexp(log_terms)))


def raptor_upper_bound(
    we_outer: WeightEnumerator,
    dist: DegreeDistribution,
    q: int,
    k: int,
    delta: int,
    tightened: bool = True,
) -> float:
    """Union bound on the ML failure probability of a Raptor code with a fixed outer code.

    Pf <= sum_{l>=1} A_l·pi_l^(k+delta), divided by q-1 when ``tightened``
    (nonzero multiples of a codeword fail together).
    """
    _check_overhead(delta)
    pi = zero_output_probabilities(dist, we_outer.n, q)
    value = _union_bound(we_outer.log_coefficients, pi, k + delta)
    if tightened:
        value /= q - 1
    if value > 1:
        logger.debug("Raptor bound exceeds one at delta=%d (%.3g)", delta, value)
    return value


def raptor_ensemble_upper_bound(
    we_avg: WeightEnumerator,
    dist: DegreeDistribution,
    q: int,
    k: int,
    delta: int,
    tightened: bool = True,
) -> float:
    """Same bound for the average over an outer-code ensemble with enumerator A-bar."""
    return raptor_upper_bound(we_avg, dist, q, k, delta, tightened)


def linear_random_raptor_bound(
    h: int, k: int, q: int, dist: DegreeDistribution, delta: int
) -> float:
    """Ensemble bound for an (h, k) linear random outer code over GF(q)."""
    return raptor_ensemble_upper_bound(we_linear_random(h, k, q), dist, q, k, delta)


def lt_ml_upper_bound(k: int, q: int, dist: DegreeDistribution, delta: int) -> float:
    """Union bound for a plain LT code: every nonzero input word with A_l = C(k,l)(q-1)^(l-1)."""
    _check_overhead(delta)
    weights = np.arange(k + 1)
    log_weights = _log_comb(k, weights) + (weights - 1) * math.log(q - 1)
    pi = zero_output_probabilities(dist, k, q)
    return _union_bound(log_weights, pi, k + delta)


# ---------------------------------------------------------------------------
# Block codes as functions of the erasure probability
# ---------------------------------------------------------------------------

def _check_block(n: int, k: int, eps: float) -> None:
    if not 0 <= eps <= 1:
        raise ValueError(f"Erasure probability must lie in [0, 1], got {eps}")
    if not 0 <= k <= n:
        raise ValueError(f"Need 0 <= k <= n, got n={n}, k={k}")


def singleton_bound(n: int, k: int, eps: float) -> float:
    """Block error probability of an MDS code: more than n-k erasures."""
    _check_block(n, k, eps)
    return float(stats.binom.sf(n - k, n, eps))


def block_bounds(n: int, k: int, eps: float) -> Tuple[float, float]:
    """(Singleton, Berlekamp) block error probabilities over the BEC."""
    singleton = singleton_bound(n, k, eps)
    e = np.arange(1, n - k + 1)
    correction = float(np.sum(stats.binom.pmf(e, n, eps) * np.power(2.0, -(n - k - e))))
    return singleton, singleton + correction


def di_bound(we: WeightEnumerator, n: int, k: int, eps: float, with_A0: bool = False) -> float:
    """Upper bound on the block error probability from a weight enumerator.

    Args:
        we: Enumerator of length n (a code or an ensemble average)
        n, k: Code parameters
        eps: Erasure probability
        with_A0: Add A_0 - 1 for ensembles whose encoder may not be injective
    """
    if we.n != n:
        raise ValueError(f"Enumerator length {we.n} does not match n={n}")
    value = singleton_bound(n, k, eps)
    log_norm = we.log_coefficients - _log_comb(n, np.arange(n + 1))
    for e in range(1, n - k + 1):
        w = np.arange(1, e + 1)
        with np.errstate(divide="ignore"):
            mass = float(np.exp(logsumexp(_log_comb(e, w) + log_norm[w])))
        value += float(stats.binom.pmf(e, n, eps)) * min(1.0, mass)
    if with_A0:
        value += we[0] - 1.0
    return value


# ---------------------------------------------------------------------------
# Parallel concatenation of a block code and an LRFC
# ---------------------------------------------------------------------------

def precode_shortfall_probability(n_c: int, k: int, eps: float) -> float:
    """P(eps): fewer than k of the n_c precode symbols survive the channel."""
    return float(stats.binom.cdf(k - 1, n_c, 1.0 - eps))


def concat_bounds(n_c: int, k: int, q: int, eps: float, delta: int) -> Tuple[float, float]:
    """Bounds for an MDS precode in parallel with an LRFC: the LRFC bracket scaled by P(eps)."""
    if n_c < k:
        raise ValueError(f"Precode length {n_c} is below k={k}")
    lower, upper = lrfc_bounds(q, delta)
    shortfall = precode_shortfall_probability(n_c, k, eps)
    return shortfall * lower, shortfall * upper


@dataclass
class CoWef:
    """Conditional output weight enumerator: coefficients[i, w] for input weight i, output weight w."""

    coefficients: np.ndarray
    name: str = "cowef"

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if np.any(self.coefficients < 0):
            raise ValueError("CO-WEF coefficients must be non-negative")

    @property
    def k(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def n(self) -> int:
        return self.coefficients.shape[1] - 1

    def weight_enumerator(self) -> WeightEnumerator:
        return WeightEnumerator.from_counts(self.coefficients.sum(axis=0), name=self.name)


def cowef_exhaustive(generator: FieldMatrix) -> CoWef:
    """CO-WEF of a small k×n code by enumerating every message."""
    k, n = generator.shape
    q = generator.spec.order
    if q ** k > 1 << 22:
        raise ValueError(f"Exhaustive enumeration of {q}^{k} messages is too large")
    grids = np.indices((q,) * k).reshape(k, -1).T if k else np.zeros((1, 0), dtype=np.int64)
    messages = generator.spec.field(grids.astype(np.int64))
    codewords = plain(messages @ generator.entries)
    table = np.zeros((k + 1, n + 1))
    np.add.at(table, (np.count_nonzero(grids, axis=1), np.count_nonzero(codewords, axis=1)), 1.0)
    return CoWef(table, name="exhaustive")


def _binomial_poly(exponent: int, sign: int = 1) -> List[int]:
    return [math.comb(exponent, j) * sign ** j for j in range(exponent + 1)]


def _poly_mul(a: Dict[Tuple[int, int], int], b: Dict[Tuple[int, int], int]) -> Dict[Tuple[int, int], int]:
    out: Dict[Tuple[int, int], int] = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0) + c1 * c2
    return out


def _in_x(coeffs: List[int]) -> Dict[Tuple[int, int], int]:
    return {(i, 0): c for i, c in enumerate(coeffs) if c}


def _in_y(coeffs: List[int]) -> Dict[Tuple[int, int], int]:
    return {(0, j): c for j, c in enumerate(coeffs) if c}


def hamming_cowef(t: int) -> CoWef:
    """CO-WEF of the (2^t - 1, 2^t - 1 - t) Hamming code from its closed-form generating function.

    The generating function marks input weight with x and parity weight with
    X; the output weight of a codeword is their sum.
    """
    if t < 3:
        raise ValueError(f"The closed form needs t >= 3, got {t}")
    half = 1 << (t - 1)
    a = half - t - 1
    shared = _in_x(_binomial_poly(a))
    parity = _in_y(_binomial_poly(t))
    cross = {(j, j): math.comb(t, j) * (-1) ** j for j in range(t + 1)}
    first = _poly_mul(_poly_mul(shared, _in_x(_binomial_poly(half - t, -1))), cross)
    second = _poly_mul(_poly_mul(shared, _in_x(_binomial_poly(half, -1))), parity)
    third = _poly_mul(_in_x(_binomial_poly(a + half)), parity)
    n = (1 << t) - 1
    k = n - t
    table = np.zeros((k + 1, n + 1))
    for key in set(first) | set(second) | set(third):
        total = (1 << t) * first.get(key, 0) - second.get(key, 0) + third.get(key, 0)
        if total:
            i, j = key
            table[i, i + j] = total >> t
    return CoWef(table, name=f"hamming({n},{k})")


def cowef_linear_random_generator(k: int, n: int, q: int = 2) -> CoWef:
    """Average CO-WEF of the k×n uniform random generator ensemble over GF(q)."""
    table = np.zeros((k + 1, n + 1))
    table[0, 0] = 1.0
    w = np.arange(n + 1)
    for i in range(1, k + 1):
        inputs = math.exp(float(_log_comb(k, i)) + i * math.log(q - 1))
        table[i] = inputs * stats.binom.pmf(w, n, (q - 1) / q)
    return CoWef(table, name=f"linear-random-generator({n},{k},q={q})")


def concat_cowef(precode: CoWef, k: int, h_c: int, q: int = 2) -> CoWef:
    """CO-WEF of a precode in parallel with h_c LRFC symbols, averaged over the LRFC.

    Each of the h_c tail symbols is nonzero with probability (q-1)/q for any
    nonzero input, so every input-weight row is convolved with a binomial.
    """
    if precode.k != k:
        raise ValueError(f"Precode CO-WEF has k={precode.k}, expected {k}")
    if h_c < 0:
        raise ValueError("The LRFC tail length must be non-negative")
    tail = stats.binom.pmf(np.arange(h_c + 1), h_c, (q - 1) / q)
    table = np.zeros((k + 1, precode.n + h_c + 1))
    table[0, : precode.n + 1] = precode.coefficients[0]
    for i in range(1, k + 1):
        table[i] = np.convolve(precode.coefficients[i], tail)
    return CoWef(table, name=f"concat({precode.name},+{h_c})")


# ---------------------------------------------------------------------------
# Multicast with ideal feedback
# ---------------------------------------------------------------------------

def receiver_failure_probability(k: int, eps: float, overhead: int, pf_curve: BoundCurve) -> float:
    """Failure probability of one receiver after k + overhead transmissions."""
    sent = k + overhead
    receipts = np.arange(sent + 1)
    gathered = stats.binom.pmf(receipts, sent, 1.0 - eps)
    value = float(gathered[:k].sum())
    for m in range(k, sent + 1):
        value += float(gathered[m]) * pf_curve.value_at(m - k)
    return min(value, 1.0)


def multicast_model(
    n_receivers: int, k: int, eps: float, overhead: int, pf_curve: BoundCurve
) -> float:
    """Probability that at least one of N independent receivers fails to decode."""
    if n_receivers < 1:
        raise ValueError("At least one receiver is required")
    single = receiver_failure_probability(k, eps, overhead, pf_curve)
    if single >= 1.0:
        return 1.0
    return float(-np.expm1(n_receivers * np.log1p(-single)))


def multicast_min_overhead(
    n_receivers: int,
    k: int,
    eps: float,
    pf_curve: BoundCurve,
    target: float,
    max_overhead: int = 1000,
) -> Optional[int]:
    """Smallest transmitter overhead with P_e <= target, or None within ``max_overhead``."""
    for overhead in range(max_overhead + 1):
        if multicast_model(n_receivers, k, eps, overhead, pf_curve) <= target:
            return overhead
    return None
