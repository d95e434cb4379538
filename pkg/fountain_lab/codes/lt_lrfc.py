"""LT and linear random fountain codes.

Encoders return the output symbols together with their generator columns so
that any subset of outputs can be turned into a ReceivedSet and decoded by
peeling, by dense elimination or by inactivation decoding.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from codes.degree_dists import DegreeDistribution, sample_degrees
from codes.gf_linalg import (
    GF2,
    FieldMatrix,
    FieldSpec,
    combine_rows,
    field_inv,
    gaussian_solve,
    inverse,
    matmul,
    rank,
)
from codes.inactivation import Equation, SparseSystem, Strategy, inactivation_decode
from core.config import settings

logger = logging.getLogger(__name__)


class ConstructionError(RuntimeError):
    """Raised when a systematic encoder cannot be built within the retry budget."""


@dataclass(frozen=True)
class LtGeneratorColumn:
    """Input positions combined into one output symbol, with their coefficients."""

    indices: Tuple[int, ...]
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.coefficients):
            raise ValueError("indices and coefficients must have the same length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("Neighbor indices must be distinct")
        if list(self.indices) != sorted(self.indices):
            raise ValueError("Neighbor indices must be sorted")

    @classmethod
    def binary(cls, indices: Sequence[int]) -> "LtGeneratorColumn":
        ordered = tuple(sorted(int(i) for i in indices))
        return cls(ordered, (1,) * len(ordered))

    @classmethod
    def from_dense(cls, column: Sequence[int]) -> "LtGeneratorColumn":
        values = np.asarray(column, dtype=np.int64)
        idx = np.flatnonzero(values)
        return cls(tuple(int(i) for i in idx), tuple(int(values[i]) for i in idx))

    @property
    def degree(self) -> int:
        return len(self.indices)

    def to_dense(self, k: int) -> np.ndarray:
        dense = np.zeros(k, dtype=np.int64)
        dense[list(self.indices)] = self.coefficients
        return dense


def _as_symbols(source) -> Tuple[np.ndarray, bool]:
    values = np.asarray(source, dtype=np.int64)
    flat = values.ndim == 1
    return (values.reshape(-1, 1) if flat else values), flat


def _restore(values: np.ndarray, flat: bool) -> np.ndarray:
    return values[:, 0] if flat and values.ndim == 2 and values.shape[1] == 1 else values


def encode_columns(source, columns: Sequence[LtGeneratorColumn], spec: FieldSpec = GF2) -> np.ndarray:
    """Output symbols y_j = Σ_i g_{i,j} v_i for the given columns."""
    values, flat = _as_symbols(source)
    out = np.zeros((len(columns), values.shape[1]), dtype=np.int64)
    for j, col in enumerate(columns):
        if col.degree:
            out[j] = combine_rows(col.coefficients, values[list(col.indices)], spec)
    return _restore(out, flat)


@dataclass
class ReceivedSet:
    """Columns and values of the symbols that reached the receiver."""

    columns: List[LtGeneratorColumn]
    values: np.ndarray
    k: int
    spec: FieldSpec = GF2

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.shape[0] != len(self.columns):
            raise ValueError(f"{values.shape[0]} values for {len(self.columns)} columns")
        for col in self.columns:
            if col.indices and col.indices[-1] >= self.k:
                raise ValueError(f"Column references input {col.indices[-1]} >= k={self.k}")
        self.values = values

    @property
    def m(self) -> int:
        return len(self.columns)

    @property
    def overhead(self) -> int:
        return self.m - self.k

    def generator(self) -> FieldMatrix:
        """The k × m matrix G̃ of received columns."""
        dense = np.zeros((self.k, self.m), dtype=np.int64)
        for j, col in enumerate(self.columns):
            dense[list(col.indices), j] = col.coefficients
        return FieldMatrix(dense, self.spec)


def received_from_columns(columns, values, k: int, spec: FieldSpec = GF2) -> ReceivedSet:
    """Build a ReceivedSet from explicit columns (or dense column vectors)."""
    cols = [c if isinstance(c, LtGeneratorColumn) else LtGeneratorColumn.from_dense(c) for c in columns]
    return ReceivedSet(cols, np.asarray(values, dtype=np.int64).reshape(len(cols), -1), k, spec)


def received_to_system(rx: ReceivedSet) -> SparseSystem:
    """Rows of G̃ᵀ as a SparseSystem over the k inputs."""
    equations = [Equation(col.indices, col.coefficients) for col in rx.columns]
    return SparseSystem(equations, rx.k, rx.values, rx.spec)


def subset(rx: ReceivedSet, keep: Sequence[int]) -> ReceivedSet:
    keep = list(keep)
    return ReceivedSet([rx.columns[i] for i in keep], rx.values[keep], rx.k, rx.spec)


def lt_columns(
    dist: DegreeDistribution,
    k: int,
    n: int,
    rng: np.random.Generator,
    spec: FieldSpec = GF2,
) -> List[LtGeneratorColumn]:
    """Draw n LT columns: a degree from Ω, then that many distinct inputs.

    Over GF(q>2) the coefficients are uniform over the nonzero elements.
    Degrees above k are folded into k.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if dist.dmax > k:
        dist = dist.with_dmax(k)
    degrees = sample_degrees(dist, rng, n)
    columns = []
    for d in degrees:
        idx = np.sort(rng.choice(k, size=int(d), replace=False))
        if spec.is_binary:
            coefs = np.ones(int(d), dtype=np.int64)
        else:
            coefs = rng.integers(1, spec.order, size=int(d))
        columns.append(LtGeneratorColumn(tuple(int(i) for i in idx), tuple(int(c) for c in coefs)))
    return columns


def lt_encode(
    source,
    dist: DegreeDistribution,
    n: int,
    rng: np.random.Generator,
    spec: FieldSpec = GF2,
) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
    """Encode ``source`` (k symbols, optionally packets) into n LT output symbols."""
    values, _ = _as_symbols(source)
    columns = lt_columns(dist, values.shape[0], n, rng, spec)
    return encode_columns(source, columns, spec), columns


def lrfc_columns(k: int, n: int, rng: np.random.Generator, spec: FieldSpec = GF2) -> List[LtGeneratorColumn]:
    """n columns with i.i.d. uniform entries over GF(q); all-zero columns are kept."""
    dense = rng.integers(0, spec.order, size=(n, k))
    return [LtGeneratorColumn.from_dense(row) for row in dense]


def lrfc_encode(
    source,
    spec: FieldSpec,
    n: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
    values, _ = _as_symbols(source)
    columns = lrfc_columns(values.shape[0], n, rng, spec)
    return encode_columns(source, columns, spec), columns


@dataclass
class PeelingTrace:
    resolved: List[int] = field(default_factory=list)
    ripple_sizes: List[int] = field(default_factory=list)
    success: bool = False

    @property
    def failed_at(self) -> Optional[int]:
        """Index of the step whose ripple was empty, if decoding stalled."""
        return None if self.success else len(self.resolved)


def peel_decode(rx: ReceivedSet, rng: Optional[np.random.Generator] = None) -> Tuple[Optional[np.ndarray], PeelingTrace]:
    """Iterative (peeling) decoder.

    A degree-one equation is picked uniformly at random from the ripple, its
    input is recovered and substituted into every other equation.

    Returns:
        (recovered inputs or None, trace)
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    spec = rx.spec
    k = rx.k
    values = rx.values.copy()
    remaining = [dict(zip(col.indices, col.coefficients)) for col in rx.columns]
    var_eqs: List[List[int]] = [[] for _ in range(k)]
    for e, row in enumerate(remaining):
        for v in row:
            var_eqs[v].append(e)
    ripple = [e for e, row in enumerate(remaining) if len(row) == 1]
    in_ripple = set(ripple)
    recovered = np.zeros((k, values.shape[1]), dtype=np.int64)
    known = np.zeros(k, dtype=bool)
    trace = PeelingTrace()

    while len(trace.resolved) < k:
        ripple = [e for e in ripple if len(remaining[e]) == 1]
        in_ripple = set(ripple)
        trace.ripple_sizes.append(len(ripple))
        if not ripple:
            logger.debug("Peeling stalled after %d of %d inputs", len(trace.resolved), k)
            return None, trace
        e = ripple.pop(int(rng.integers(len(ripple))))
        in_ripple.discard(e)
        ((v, coef),) = remaining[e].items()
        symbol = values[e]
        if coef != 1:
            symbol = combine_rows([field_inv(coef, spec)], symbol.reshape(1, -1), spec)
        recovered[v] = np.asarray(symbol).reshape(-1)
        known[v] = True
        trace.resolved.append(v)
        for other in var_eqs[v]:
            row = remaining[other]
            if v not in row:
                continue
            c = row.pop(v)
            contribution = combine_rows([c], recovered[v].reshape(1, -1), spec)
            values[other] = np.bitwise_xor(values[other], np.asarray(contribution).reshape(-1))
            if len(row) == 1 and other not in in_ripple:
                ripple.append(other)
                in_ripple.add(other)
    trace.success = True
    return recovered, trace


def ml_decode(rx: ReceivedSet) -> Optional[np.ndarray]:
    """Maximum-likelihood decode by Gaussian elimination on G̃ᵀ·v = y."""
    system = rx.generator().transpose()
    report = gaussian_solve(system, rx.values)
    if not (report.consistent and report.rank == rx.k):
        return None
    return report.solution


def inactivation_ml_decode(
    rx: ReceivedSet,
    strategy: Strategy = Strategy.RANDOM,
    rng: Optional[np.random.Generator] = None,
):
    """ML decode through the inactivation decoder; returns the full result."""
    return inactivation_decode(received_to_system(rx), strategy, rng)


class SystematicLtEncoder:
    """Systematic LT code built from a full-rank k × k matrix G_1.

    The encoder precomputes w = v·G_1^{-1}; the first k outputs w·G_1 are then
    the source symbols themselves and further outputs are LT-encoded from w.
    """

    def __init__(self, dist: DegreeDistribution, k: int, g1_columns: List[LtGeneratorColumn], spec: FieldSpec = GF2):
        self.dist = dist
        self.k = k
        self.spec = spec
        self.g1_columns = g1_columns
        g1 = np.zeros((k, k), dtype=np.int64)
        for j, col in enumerate(g1_columns):
            g1[list(col.indices), j] = col.coefficients
        self.g1 = FieldMatrix(g1, spec)
        self.g1_inverse = inverse(self.g1)

    def intermediate(self, source) -> np.ndarray:
        """w = v·G_1^{-1} (rows of symbols)."""
        values, _ = _as_symbols(source)
        return matmul(self.g1_inverse.transpose(), FieldMatrix(values, self.spec)).to_numpy()

    def encode(self, source, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
        """Return n >= k outputs: the source, then n - k repair symbols."""
        if n < self.k:
            raise ValueError(f"A systematic block needs n >= k={self.k}")
        values, flat = _as_symbols(source)
        w = self.intermediate(values)
        repair = lt_columns(self.dist, self.k, n - self.k, rng, self.spec)
        columns = list(self.g1_columns) + repair
        outputs = encode_columns(w, columns, self.spec)
        outputs[: self.k] = values
        return _restore(outputs, flat), columns

    def decode(self, rx: ReceivedSet) -> Optional[np.ndarray]:
        """Recover w from the received columns, then v = w·G_1."""
        w = ml_decode(rx)
        if w is None:
            return None
        w = w.reshape(self.k, -1)
        return matmul(self.g1.transpose(), FieldMatrix(w, self.spec)).to_numpy()


def make_systematic_lt(
    dist: DegreeDistribution,
    k: int,
    rng: np.random.Generator,
    spec: FieldSpec = GF2,
    retries: Optional[int] = None,
) -> SystematicLtEncoder:
    """Draw LT matrices G_1 until one has full rank.

    Raises:
        ConstructionError: If the retry budget is exhausted
    """
    budget = settings.SYSTEMATIC_RETRY_BUDGET if retries is None else retries
    if budget < 1:
        raise ValueError(f"Retry budget must be at least 1, got {budget}")
    for attempt in range(1, budget + 1):
        columns = lt_columns(dist, k, k, rng, spec)
        dense = np.zeros((k, k), dtype=np.int64)
        for j, col in enumerate(columns):
            dense[list(col.indices), j] = col.coefficients
        if rank(FieldMatrix(dense, spec)) == k:
            logger.debug("Systematic LT G_1 found after %d draws", attempt)
            return SystematicLtEncoder(dist, k, columns, spec)
    raise ConstructionError(f"No full-rank G_1 for k={k} within {budget} draws")


def trivially_systematic_lt(dist: DegreeDistribution, k: int, spec: FieldSpec = GF2) -> "TriviallySystematicLt":
    return TriviallySystematicLt(dist, k, spec)


class TriviallySystematicLt:
    """Identity prefix followed by plain LT columns over the source."""

    def __init__(self, dist: DegreeDistribution, k: int, spec: FieldSpec = GF2):
        self.dist = dist
        self.k = k
        self.spec = spec

    def encode(self, source, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
        identity = [LtGeneratorColumn((i,), (1,)) for i in range(self.k)]
        columns = identity + lt_columns(self.dist, self.k, max(n - self.k, 0), rng, self.spec)
        columns = columns[:n]
        return encode_columns(source, columns, self.spec), columns
