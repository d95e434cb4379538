"""Weight enumerators and distance spectra.

Enumerators are kept as natural-log coefficient vectors so ensembles with n in
the thousands do not overflow; ``coefficients`` gives the linear view. The
asymptotic part (growth rate, positive-distance region and its outer bound)
works on normalized weights and always reports rates in bits.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import optimize, stats
from scipy.special import entr, gammaln, logsumexp, xlog1py, xlogy

from codes.degree_dists import DegreeDistribution
from codes.gf_linalg import FieldMatrix, plain

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
OUTER_RATE_ROOT_TOL = 1e-9


class EnumeratorError(ValueError):
    """Raised for invalid enumerator parameters or impossible expurgation."""


def _log_comb(n, r):
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


def binary_entropy(x):
    """H_b(x) in bits, with H_b(0) = H_b(1) = 0."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return (entr(x) + entr(1.0 - x)) / LN2


@dataclass
class WeightEnumerator:
    """Expected multiplicities A_0..A_n stored as natural logarithms.

    Attributes:
        log_coefficients: log A_w for w = 0..n (-inf for zero entries)
        name: Label used in TSV output
    """

    log_coefficients: np.ndarray
    name: str = "enumerator"

    def __post_init__(self):
        self.log_coefficients = np.asarray(self.log_coefficients, dtype=float)
        if self.log_coefficients.ndim != 1 or self.log_coefficients.size == 0:
            raise EnumeratorError("An enumerator needs at least the A_0 coefficient")

    @classmethod
    def from_counts(cls, counts: Sequence[float], name: str = "enumerator") -> "WeightEnumerator":
        values = np.asarray(counts, dtype=float)
        if np.any(values < 0):
            raise EnumeratorError("Weight enumerator coefficients must be non-negative")
        with np.errstate(divide="ignore"):
            return cls(np.log(values), name)

    @property
    def n(self) -> int:
        return self.log_coefficients.size - 1

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(self.log_coefficients)

    def __getitem__(self, w: int) -> float:
        if not 0 <= w <= self.n:
            return 0.0
        return float(math.exp(self.log_coefficients[w]))

    def log2(self, w: int) -> float:
        return float(self.log_coefficients[w] / LN2)

    def total(self) -> float:
        return float(np.exp(logsumexp(self.log_coefficients)))

    def rows(self) -> List[List[float]]:
        """Rows (w, w/n, log2 A_w) for the spectrum emitter."""
        return [
            [w, w / self.n if self.n else 0.0, self.log2(w)]
            for w in range(self.n + 1)
        ]


@dataclass(frozen=True)
class RatePair:
    """Inner (LT) and outer (precode) rates of a fixed-rate Raptor ensemble."""

    r_i: float
    r_o: float

    def __post_init__(self):
        if not 0 < self.r_o <= 1:
            raise EnumeratorError(f"Outer rate must lie in (0, 1], got {self.r_o}")
        if self.r_i <= 0:
            raise EnumeratorError(f"Inner rate must be positive, got {self.r_i}")

    @property
    def rate(self) -> float:
        return self.r_i * self.r_o

    def dimensions(self, n: int, exact: bool = False) -> Tuple[int, int]:
        """Intermediate length h and dimension k for block length n.

        Raises:
            EnumeratorError: If ``exact`` and r_i·n or r_o·h is not an integer
        """
        h_real = self.r_i * n
        h = int(round(h_real))
        k_real = self.r_o * h
        k = int(round(k_real))
        if exact and (abs(h_real - h) > 1e-9 or abs(k_real - k) > 1e-9):
            raise EnumeratorError(
                f"r_i*n = {h_real:g} and r_o*h = {k_real:g} must be integers; "
                "pass rates that divide n or drop exact mode"
            )
        if not 0 <= k <= h:
            raise EnumeratorError(f"Invalid dimensions h={h}, k={k} for n={n}")
        return h, k


# ---------------------------------------------------------------------------
# Finite enumerators
# ---------------------------------------------------------------------------

def we_linear_random(h: int, k: int, q: int = 2) -> WeightEnumerator:
    """Average enumerator of the (h, k) linear random ensemble over GF(q).

    A_l = C(h,l)·q^{-(h-k)}·(q-1)^l for l >= 1 and A_0 = 1.
    """
    if not 0 <= k <= h:
        raise EnumeratorError(f"Need h >= k >= 0, got h={h}, k={k}")
    weights = np.arange(h + 1)
    logs = _log_comb(h, weights) - (h - k) * math.log(q) + weights * math.log(q - 1)
    logs[0] = 0.0
    return WeightEnumerator(logs, name=f"linear-random({h},{k},q={q})")


def we_hamming(t: int) -> WeightEnumerator:
    """Enumerator of the (2^t - 1, 2^t - 1 - t) Hamming code via the three-term recursion."""
    if t < 2:
        raise EnumeratorError(f"Hamming codes need t >= 2, got {t}")
    n = (1 << t) - 1
    counts = [0] * (n + 1)
    counts[0] = 1
    for i in range(1, n):
        previous = counts[i - 1]
        numerator = math.comb(n, i) - counts[i] - (n - i + 1) * previous
        counts[i + 1] = numerator // (i + 1)
    return WeightEnumerator.from_counts(counts, name=f"hamming({n},{n - t})")


def we_exhaustive(generator: FieldMatrix) -> WeightEnumerator:
    """Enumerator of the code spanned by the rows of a small k×n generator."""
    k, n = generator.shape
    q = generator.spec.order
    if q ** k > 1 << 22:
        raise EnumeratorError(f"Exhaustive enumeration of {q}^{k} messages is too large")
    field_cls = generator.spec.field
    messages = field_cls(np.array(list(itertools.product(range(q), repeat=k)), dtype=np.int64).reshape(-1, k))
    codewords = plain(messages @ generator.entries)
    counts = np.bincount(np.count_nonzero(codewords, axis=1), minlength=n + 1)
    return WeightEnumerator.from_counts(counts, name="exhaustive")


def ones_probabilities(dist: DegreeDistribution, h: int) -> np.ndarray:
    """p_l for l = 0..h: probability that an LT output bit is one given weight-l input.

    Each output symbol picks j distinct intermediate symbols; the bit is one
    when an odd number of them fall on the l nonzero positions.
    """
    if dist.dmax > h:
        raise EnumeratorError(f"dmax={dist.dmax} exceeds the intermediate length h={h}")
    weights = np.arange(h + 1)
    p = np.zeros(h + 1)
    for j in dist.support:
        odd = np.arange(1, j + 1, 2)
        pmf = stats.hypergeom.pmf(odd[:, None], h, weights[None, :], j)
        p += dist[j] * pmf.sum(axis=0)
    return np.clip(p, 0.0, 1.0)


def ones_probabilities_by_degree(dist: DegreeDistribution, h: int) -> np.ndarray:
    """Same p_l, computed by drawing the l nonzero positions against a fixed degree-j set."""
    if dist.dmax > h:
        raise EnumeratorError(f"dmax={dist.dmax} exceeds the intermediate length h={h}")
    p = np.zeros(h + 1)
    for l in range(h + 1):
        for j in dist.support:
            odd = np.arange(1, min(l, j) + 1, 2)
            if odd.size:
                p[l] += dist[j] * stats.hypergeom.pmf(odd, h, j, l).sum()
    return np.clip(p, 0.0, 1.0)


def ensemble_we(dist: DegreeDistribution, n: int, h: int, k: int) -> WeightEnumerator:
    """Expected enumerator of the fixed-rate Raptor ensemble with linear random outer code.

    Args:
        dist: LT output degree distribution
        n: Block length (LT output symbols)
        h: Intermediate (outer code) length
        k: Source symbols

    Returns:
        WeightEnumerator of length n; A_0 includes the zero-weight images of nonzero words
    """
    if not 0 <= k <= h or n < 1:
        raise EnumeratorError(f"Invalid ensemble dimensions n={n}, h={h}, k={k}")
    p = ones_probabilities(dist, h)[1:]
    log_binom_h = _log_comb(h, np.arange(1, h + 1))
    offset = -(h - k) * LN2
    d = np.arange(n + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = log_binom_h[None, :] + xlogy(d, p[None, :]) + xlog1py(n - d, -p[None, :])
    logs = _log_comb(n, d[:, 0]) + offset + logsumexp(terms, axis=1)
    logs[0] = np.logaddexp(0.0, logs[0])
    logger.debug("Ensemble enumerator n=%d h=%d k=%d: log2 A_0=%.4g", n, h, k, logs[0] / LN2)
    return WeightEnumerator(logs, name=f"raptor-ensemble(n={n},h={h},k={k})")


def raptor_ensemble_we(
    dist: DegreeDistribution, r_i: float, r_o: float, n: int, exact: bool = False
) -> WeightEnumerator:
    """Rate-parametrized wrapper around :func:`ensemble_we` (h and k rounded unless exact)."""
    h, k = RatePair(r_i, r_o).dimensions(n, exact=exact)
    return ensemble_we(dist, n, h, k)


# ---------------------------------------------------------------------------
# Growth rate and the positive-distance region
# ---------------------------------------------------------------------------

def rho(dist: DegreeDistribution, lam):
    """Asymptotic probability of a one at the LT output for normalized input weight lam."""
    lam = np.asarray(lam, dtype=float)
    degrees = np.asarray(dist.support)
    masses = np.array([dist[j] for j in degrees])
    base = 1.0 - 2.0 * lam[..., None]
    return 0.5 * np.sum(masses * (1.0 - base ** degrees), axis=-1)


def _lambda_upper(dist: DegreeDistribution) -> float:
    return 1.0 if dist.even_mass > 0 else 1.0 - 1e-12


LAMBDA_GRID = np.concatenate([np.logspace(-14, -1, 80), np.linspace(0.1, 1.0, 91)[1:]])


def _maximize(objective: Callable[[np.ndarray], np.ndarray], upper: float, restarts: int = 3) -> Tuple[float, float]:
    """Maximize a function of lam over (0, upper] on log-lam, refining the best grid peaks."""
    grid = np.minimum(LAMBDA_GRID, upper)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.nan_to_num(objective(grid), nan=-np.inf)
    order = np.argsort(values)[::-1]
    best_value, best_lam = float(values[order[0]]), float(grid[order[0]])
    tried = 0
    for index in order:
        if tried >= restarts or not np.isfinite(values[index]):
            break
        tried += 1
        lo = math.log(grid[max(index - 1, 0)])
        hi = math.log(grid[min(index + 1, grid.size - 1)])
        if hi <= lo:
            continue

        def negated(t):
            with np.errstate(divide="ignore", invalid="ignore"):
                value = float(objective(np.array([math.exp(t)]))[0])
            return -value if np.isfinite(value) else np.inf

        found = optimize.minimize_scalar(negated, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if found.success and -found.fun > best_value:
            best_value, best_lam = float(-found.fun), float(math.exp(found.x))
    return best_value, best_lam


def inner_exponent(dist: DegreeDistribution, r_i: float, delta: float, lam):
    """f(delta, lam) = r_i·H_b(lam) + delta·log2 rho + (1 - delta)·log2(1 - rho)."""
    r = rho(dist, lam)
    return r_i * binary_entropy(lam) + (xlogy(delta, r) + xlog1py(1.0 - delta, -r)) / LN2


def rho_derivative(dist: DegreeDistribution, lam: float) -> float:
    return float(sum(dist[j] * j * (1.0 - 2.0 * lam) ** (j - 1) for j in dist.support))


@dataclass
class GrowthCurve:
    """G(delta) on a grid together with the inner maximizer and the analytic derivative."""

    pair: RatePair
    deltas: np.ndarray
    values: np.ndarray
    argmax: np.ndarray
    derivative: np.ndarray

    def finite_differences(self) -> np.ndarray:
        return np.gradient(self.values, self.deltas)

    def max_derivative_error(self) -> float:
        """Largest gap between the analytic derivative and finite differences (interior points)."""
        if self.deltas.size < 3:
            return 0.0
        gap = np.abs(self.finite_differences() - self.derivative)[1:-1]
        return float(np.max(gap))

    def rows(self) -> List[List[float]]:
        return [
            [float(d), float(g), float(l)]
            for d, g, l in zip(self.deltas, self.values, self.argmax)
        ]


def growth_value(dist: DegreeDistribution, pair: RatePair, delta: float) -> Tuple[float, float]:
    """G(delta) and the maximizing lam."""
    if not 0 < delta < 1:
        raise EnumeratorError(f"delta must lie in (0, 1), got {delta}")
    best, lam = _maximize(
        lambda grid: inner_exponent(dist, pair.r_i, delta, grid), _lambda_upper(dist)
    )
    value = float(binary_entropy(delta)) - pair.r_i * (1.0 - pair.r_o) + best
    return value, lam


def growth_rate(dist: DegreeDistribution, pair: RatePair, deltas: Sequence[float]) -> GrowthCurve:
    """Asymptotic exponent of the ensemble enumerator on a grid of normalized weights."""
    deltas = np.asarray(deltas, dtype=float)
    values = np.empty(deltas.size)
    argmax = np.empty(deltas.size)
    derivative = np.empty(deltas.size)
    for i, delta in enumerate(deltas):
        values[i], argmax[i] = growth_value(dist, pair, float(delta))
        r = float(rho(dist, argmax[i]))
        with np.errstate(divide="ignore"):
            derivative[i] = math.log2((1 - delta) / delta) + (
                math.log2(r / (1 - r)) if 0 < r < 1 else math.copysign(np.inf, r - 0.5)
            )
    return GrowthCurve(pair, deltas, values, argmax, derivative)


def region_margin(dist: DegreeDistribution, pair: RatePair) -> float:
    """r_i(1 - r_o) minus the max over lam of r_i·H_b(lam) + log2(1 - rho(lam))."""
    best, _ = _maximize(
        lambda grid: pair.r_i * binary_entropy(grid) + np.log1p(-rho(dist, grid)) / LN2,
        _lambda_upper(dist),
    )
    return pair.r_i * (1.0 - pair.r_o) - max(best, 0.0)


def region_membership(dist: DegreeDistribution, pair: RatePair) -> Tuple[bool, float]:
    """Whether the rate pair has a positive normalized typical minimum distance."""
    margin = region_margin(dist, pair)
    return margin > 0, margin


def normalized_typical_min_distance(dist: DegreeDistribution, pair: RatePair) -> float:
    """delta*: the first zero crossing of G, or 0 outside the region."""
    inside, _ = region_membership(dist, pair)
    if not inside:
        return 0.0
    lo = 1e-12
    if growth_value(dist, pair, lo)[0] >= 0:
        return lo
    # G is increasing on (0, 1/2) and G(1/2) >= r_i·r_o > 0
    return float(optimize.brentq(lambda d: growth_value(dist, pair, d)[0], lo, 0.5, xtol=1e-12))


def outer_rate_root() -> float:
    """The root r_o* of H_b(1 - r_o) - (1 - r_o) in (0, 1)."""
    return float(
        optimize.bisect(
            lambda r: float(binary_entropy(1.0 - r)) - (1.0 - r), 0.05, 0.5, xtol=OUTER_RATE_ROOT_TOL
        )
    )


def outer_bound_inner_rate(mean_degree: float, r_o: float) -> float:
    """Largest r_i allowed by the outer region for a given outer rate."""
    if mean_degree <= 0:
        raise EnumeratorError("Average output degree must be positive")
    cap = 1.0 / r_o
    if r_o <= outer_rate_root() or r_o >= 1:
        return cap if r_o < 1 else 0.0
    phi = mean_degree * math.log2(1.0 / r_o) / (float(binary_entropy(1.0 - r_o)) - (1.0 - r_o))
    return min(phi, cap)


def region_outer_bound(mean_degree: float, pair: RatePair) -> bool:
    """Membership in the outer region, which only depends on the average output degree."""
    return pair.r_i <= outer_bound_inner_rate(mean_degree, pair.r_o)


def region_boundary(
    dist: DegreeDistribution, r_o_grid: Sequence[float], scan_points: int = 100
) -> List[List[float]]:
    """Rows (r_o, largest r_i inside the region, outer-bound r_i)."""
    rows = []
    for r_o in r_o_grid:
        upper = 1.0 / r_o
        candidates = np.linspace(upper / scan_points, upper, scan_points)
        margins = np.array([region_margin(dist, RatePair(float(r), float(r_o))) for r in candidates])
        positive = np.flatnonzero(margins > 0)
        if positive.size == 0:
            boundary = 0.0
        elif positive[-1] == candidates.size - 1:
            boundary = upper
        else:
            i = positive[-1]
            boundary = float(
                optimize.brentq(
                    lambda r: region_margin(dist, RatePair(r, float(r_o))),
                    candidates[i],
                    candidates[i + 1],
                    xtol=1e-8,
                )
            )
        rows.append([float(r_o), boundary, outer_bound_inner_rate(dist.mean, float(r_o))])
    return rows


def gilbert_varshamov_distance(rate: float) -> float:
    """delta_GV in (0, 1/2) with H_b(delta_GV) = 1 - rate."""
    if not 0 < rate < 1:
        raise EnumeratorError(f"Rate must lie in (0, 1), got {rate}")
    return float(optimize.brentq(lambda d: float(binary_entropy(d)) - (1.0 - rate), 1e-15, 0.5))


# ---------------------------------------------------------------------------
# Finite-length minimum distance
# ---------------------------------------------------------------------------

def typical_min_distance(we: WeightEnumerator) -> int:
    """d-hat: the largest d with sum_{i<=d} A_i - 1 < 1/2, or 0 when A_0 > 3/2."""
    if we[0] > 1.5:
        return 0
    excess = np.cumsum(we.coefficients) - 1.0
    below = np.flatnonzero(excess < 0.5)
    return int(below[-1]) if below.size else 0


def expurgate(we: WeightEnumerator, d_s: int) -> WeightEnumerator:
    """Upper-bound enumerator of the codes with minimum distance above d_s.

    Raises:
        EnumeratorError: If the removed fraction theta is not below 1/2
    """
    if d_s < 0:
        raise EnumeratorError("The expurgation distance must be non-negative")
    theta = float(np.sum(we.coefficients[: d_s + 1])) - 1.0
    if theta >= 0.5:
        raise EnumeratorError(f"No expurgated ensemble: theta={theta:.4g} is not below 1/2")
    logs = we.log_coefficients + LN2
    logs[0] = 0.0
    logs[1 : d_s + 1] = -np.inf
    logger.debug("Expurgated %s at d_s=%d (theta=%.4g)", we.name, d_s, theta)
    return WeightEnumerator(logs, name=f"{we.name}-ex{d_s}")


@dataclass(frozen=True)
class EnsemblePoint:
    """A named fixed-rate ensemble with integer dimensions."""

    name: str
    k: int
    h: int
    n: int

    @property
    def pair(self) -> RatePair:
        return RatePair(self.h / self.n, self.k / self.h)


def good_and_bad_ensembles() -> Dict[str, EnsemblePoint]:
    """The two k=128 ensembles of overall rate ~0.9014 used in the CER comparisons."""
    return {
        "good": EnsemblePoint("good", k=128, h=138, n=142),
        "bad": EnsemblePoint("bad", k=128, h=130, n=142),
    }


def typical_distance_table(
    dist: DegreeDistribution, pair: RatePair, n_grid: Sequence[int]
) -> List[List[float]]:
    """Rows (n, d-hat, n·delta*) along a fixed rate pair."""
    delta_star = normalized_typical_min_distance(dist, pair)
    rows = []
    for n in n_grid:
        h, k = pair.dimensions(int(n))
        d_hat = typical_min_distance(ensemble_we(dist, int(n), h, k))
        rows.append([int(n), d_hat, delta_star * n])
    return rows
