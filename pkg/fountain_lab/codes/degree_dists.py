"""LT output degree distributions.

Constructors for the ideal and robust soliton families, the R10 table, the
binomial distribution of a binary LRFC seen as an LT code, plus validation,
moments, sampling and the plain-text distribution file format.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np
from scipy import stats

from core.config import settings

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12
FILE_SUM_TOLERANCE = 1e-9

# R10 degree table as cumulative thresholds over 2^20.
R10_THRESHOLDS = ((1, 10241), (2, 491582), (3, 712794), (4, 831695),
                  (10, 948446), (11, 1032189), (40, 1048576))

OMEGA2_TABLE = {
    1: 0.0048, 2: 0.4965, 3: 0.1669, 4: 0.0734, 5: 0.0822, 8: 0.0575,
    9: 0.036, 18: 0.0012, 19: 0.0543, 65: 0.0182, 66: 0.0091,
}

# Reference design for a (63,57) Hamming precode with pinned mean.
OPTIMIZED_RAPTOR_TABLE = {
    1: 0.0490, 2: 0.3535, 3: 0.1135, 4: 0.2401, 10: 0.1250, 11: 0.1183, 40: 0.0006,
}


class DistributionError(ValueError):
    """Raised for invalid degree distributions or constructor parameters."""


class DegreeDistribution:
    """Probability vector over output degrees 1..dmax.

    Attributes:
        probabilities: Read-only array, entry d-1 holds the mass of degree d
        name: Short label used in logs and TSV headers
    """

    __slots__ = ("probabilities", "name")

    def __init__(self, probabilities: Iterable[float], name: str = "custom", tolerance: float = SUM_TOLERANCE):
        probs = np.array(list(probabilities), dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise DistributionError("A degree distribution needs at least one degree")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DistributionError("Degree probabilities must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > tolerance:
            raise DistributionError(f"Degree probabilities sum to {total!r}, expected 1")
        nonzero = np.flatnonzero(probs)
        probs = probs[: nonzero[-1] + 1] / total
        probs.flags.writeable = False
        self.probabilities = probs
        self.name = name

    @classmethod
    def from_mapping(cls, masses: Mapping[int, float], name: str = "custom", normalize: bool = False) -> "DegreeDistribution":
        """Build from a {degree: mass} mapping."""
        if not masses:
            raise DistributionError("Empty degree mapping")
        if min(masses) < 1:
            raise DistributionError("Degrees start at 1")
        probs = np.zeros(max(masses))
        for d, p in masses.items():
            probs[d - 1] += p
        if normalize:
            total = probs.sum()
            if total <= 0:
                raise DistributionError("Degree mapping has no mass")
            probs = probs / total
        return cls(probs, name=name)

    @property
    def dmax(self) -> int:
        return self.probabilities.size

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(1, self.dmax + 1)

    @property
    def support(self) -> List[int]:
        return [int(d) for d in np.flatnonzero(self.probabilities) + 1]

    def __getitem__(self, d: int) -> float:
        if 1 <= d <= self.dmax:
            return float(self.probabilities[d - 1])
        return 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return np.array_equal(self.probabilities, other.probabilities)

    def __hash__(self) -> int:
        return hash(self.probabilities.tobytes())

    def __repr__(self) -> str:
        return f"DegreeDistribution({self.name}, dmax={self.dmax}, mean={self.mean:.4f})"

    def as_dict(self) -> Dict[int, float]:
        return {d: self[d] for d in self.support}

    @property
    def mean(self) -> float:
        return float(np.dot(self.degrees, self.probabilities))

    def polynomial(self, x: float) -> float:
        """Ω(x) = Σ Ω_d x^d."""
        return float(np.dot(self.probabilities, np.power(x, self.degrees)))

    def derivative(self, x: float) -> float:
        """Ω'(x); Ω'(1) is the mean degree."""
        return float(np.dot(self.degrees * self.probabilities, np.power(x, self.degrees - 1)))

    @property
    def odd_mass(self) -> float:
        return float(self.probabilities[0::2].sum())

    @property
    def even_mass(self) -> float:
        return float(self.probabilities[1::2].sum())

    def with_dmax(self, dmax: int) -> "DegreeDistribution":
        """Fold the mass above dmax into degree dmax."""
        if dmax < 1:
            raise DistributionError("dmax must be at least 1")
        if dmax >= self.dmax:
            return self
        probs = self.probabilities[:dmax].copy()
        probs[-1] += self.probabilities[dmax:].sum()
        return DegreeDistribution(probs, name=f"{self.name}-dmax{dmax}")

    def mix(self, other: "DegreeDistribution", weight: float) -> "DegreeDistribution":
        """(1 - weight)·self + weight·other."""
        if not 0 <= weight <= 1:
            raise DistributionError(f"Mixture weight {weight} outside [0, 1]")
        size = max(self.dmax, other.dmax)
        probs = np.zeros(size)
        probs[: self.dmax] += (1 - weight) * self.probabilities
        probs[: other.dmax] += weight * other.probabilities
        return DegreeDistribution(probs, name=f"mix({self.name},{other.name})", tolerance=1e-9)

    def to_lines(self) -> str:
        """Serialize as "d p" lines sorted by degree."""
        lines = [f"# {self.name} mean={self.mean:.6f}"]
        lines.extend(f"{d} {self[d]!r}" for d in self.support)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lines(cls, text: str, name: str = "file") -> "DegreeDistribution":
        """Parse the "d p" file format; '#' starts a comment."""
        masses: Dict[int, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DistributionError(f"Line {lineno}: expected 'd p', got {raw!r}")
            d, p = int(parts[0]), float(parts[1])
            if d in masses:
                raise DistributionError(f"Line {lineno}: degree {d} listed twice")
            masses[d] = p
        total = sum(masses.values())
        if abs(total - 1.0) > FILE_SUM_TOLERANCE:
            raise DistributionError(f"Distribution file sums to {total!r}, expected 1 within {FILE_SUM_TOLERANCE}")
        return cls.from_mapping(masses, name=name, normalize=True)


@dataclass(frozen=True)
class RsdParams:
    """Robust soliton parameters.

    Attributes:
        k: Number of input symbols
        c: Scale of the ripple target R = c·log(k/delta)·√k
        delta: Failure-probability parameter
    """

    k: int
    c: float
    delta: float

    def __post_init__(self):
        if self.k < 1:
            raise DistributionError("k must be at least 1")
        if self.c <= 0:
            raise DistributionError("c must be positive")
        if not 0 < self.delta < 1:
            raise DistributionError("delta must lie in (0, 1)")


def _log(x: float, base: str) -> float:
    return math.log2(x) if base == "2" else math.log(x)


def ideal_soliton(k: int) -> DegreeDistribution:
    """Ψ_1 = 1/k and Ψ_d = 1/(d(d-1)) for 1 < d <= k."""
    if k < 2:
        raise DistributionError("The ideal soliton needs k >= 2")
    d = np.arange(1, k + 1, dtype=float)
    probs = np.empty(k)
    probs[0] = 1.0 / k
    probs[1:] = 1.0 / (d[1:] * (d[1:] - 1))
    return DegreeDistribution(probs, name=f"isd-k{k}")


def ripple_target(p: RsdParams, log_base: Optional[str] = None) -> float:
    """R = c·log(k/delta)·√k."""
    base = log_base or settings.RSD_LOG_BASE
    return p.c * _log(p.k / p.delta, base) * math.sqrt(p.k)


def spike_degree(p: RsdParams, log_base: Optional[str] = None) -> int:
    """Nearest integer to k/(R-1), clamped to [1, k]."""
    r = ripple_target(p, log_base)
    if r <= 1:
        raise DistributionError(f"Ripple target R={r:.4f} must exceed 1 for a spike to exist")
    return int(min(max(round(p.k / (r - 1)), 1), p.k))


def robust_soliton(p: RsdParams, log_base: Optional[str] = None) -> DegreeDistribution:
    """Robust soliton μ_d = (Ψ_d + τ_d)/β.

    Args:
        p: Distribution parameters
        log_base: "e" or "2"; defaults to ``settings.RSD_LOG_BASE``

    Returns:
        DegreeDistribution over degrees 1..k

    Raises:
        DistributionError: If R <= 1
    """
    base = log_base or settings.RSD_LOG_BASE
    k = p.k
    r = ripple_target(p, base)
    spike = spike_degree(p, base)
    if k == 1:
        return point_mass(1)
    psi = ideal_soliton(k).probabilities
    d = np.arange(1, k + 1, dtype=float)
    tau = np.zeros(k)
    tau[: spike - 1] = r / (d[: spike - 1] * k)
    tau[spike - 1] = r * _log(r / p.delta, base) / k
    tau = np.maximum(tau, 0.0)
    raw = psi + tau
    beta = raw.sum()
    logger.debug("RSD k=%d R=%.4f spike=%d beta=%.6f", k, r, spike, beta)
    return DegreeDistribution(raw / beta, name=f"rsd-k{k}-c{p.c}-d{p.delta}")


def truncated_rsd(p: RsdParams, dmax: int, log_base: Optional[str] = None) -> DegreeDistribution:
    """Robust soliton with the mass of degrees >= dmax collected at dmax."""
    if not 1 <= dmax <= p.k:
        raise DistributionError(f"dmax must lie in [1, {p.k}], got {dmax}")
    dist = robust_soliton(p, log_base).with_dmax(dmax)
    dist.name = f"trsd-k{p.k}-c{p.c}-d{p.delta}-dmax{dmax}"
    return dist


def r10_distribution() -> DegreeDistribution:
    """Degree distribution of the R10 Raptor code (mean ≈ 4.6314).

    Masses are differences of the standard cumulative thresholds over 2**20,
    not the rounded per-degree probabilities often quoted alongside them.
    """
    masses = {}
    previous = 0
    for degree, threshold in R10_THRESHOLDS:
        masses[degree] = (threshold - previous) / 2**20
        previous = threshold
    return DegreeDistribution.from_mapping(masses, name="r10")


def omega2_distribution() -> DegreeDistribution:
    """Alternative Raptor distribution with mean ≈ 5.825."""
    return DegreeDistribution.from_mapping(OMEGA2_TABLE, name="omega2", normalize=True)


def optimized_raptor_distribution() -> DegreeDistribution:
    """Reference annealed distribution for a (63,57) Hamming precode."""
    return DegreeDistribution.from_mapping(OPTIMIZED_RAPTOR_TABLE, name="opt-hamming63", normalize=True)


def binomial_lrfc_distribution(k: int) -> DegreeDistribution:
    """Row-weight distribution of a binary LRFC, conditioned on d >= 1."""
    if k < 1:
        raise DistributionError("k must be at least 1")
    d = np.arange(1, k + 1)
    probs = stats.binom.pmf(d, k, 0.5)
    return DegreeDistribution(probs / probs.sum(), name=f"binom-k{k}")


def point_mass(d: int) -> DegreeDistribution:
    if d < 1:
        raise DistributionError("Degrees start at 1")
    probs = np.zeros(d)
    probs[-1] = 1.0
    return DegreeDistribution(probs, name=f"point{d}")


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    """Draw one output degree."""
    return int(sample_degrees(dist, rng, 1)[0])


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` i.i.d. output degrees."""
    return rng.choice(dist.degrees, size=size, p=dist.probabilities)


NAMED_DISTRIBUTIONS = {
    "r10": r10_distribution,
    "omega2": omega2_distribution,
    "opt-hamming63": optimized_raptor_distribution,
}


def resolve_distribution(spec: str, k: Optional[int] = None) -> DegreeDistribution:
    """Resolve a CLI/config distribution name.

    Accepted forms: ``r10``, ``omega2``, ``opt-hamming63``, ``isd``,
    ``binomial``, ``point:<d>``, ``rsd:<c>:<delta>[:<dmax>]`` and
    ``file:<path>``. The k-dependent forms need ``k``.
    """
    name, _, rest = spec.partition(":")
    if name in NAMED_DISTRIBUTIONS:
        return NAMED_DISTRIBUTIONS[name]()
    if name == "point":
        return point_mass(int(rest))
    if name == "file":
        with open(rest, "r", encoding="utf-8") as handle:
            return DegreeDistribution.from_lines(handle.read(), name=rest)
    if k is None:
        raise DistributionError(f"Distribution '{spec}' needs k")
    if name == "isd":
        return ideal_soliton(k)
    if name == "binomial":
        return binomial_lrfc_distribution(k)
    if name == "rsd":
        fields = rest.split(":")
        if len(fields) not in (2, 3):
            raise DistributionError("Expected rsd:<c>:<delta>[:<dmax>]")
        params = RsdParams(k=k, c=float(fields[0]), delta=float(fields[1]))
        if len(fields) == 3:
            return truncated_rsd(params, int(fields[2]))
        return robust_soliton(params)
    raise DistributionError(f"Unknown distribution '{spec}'")
