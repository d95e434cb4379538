"""Precodes, Raptor codes and the parallel concatenation of a block code with an LRFC.

A precode is stored by both its generator G_p (k × h) and parity-check
matrix H_p ((h-k) × h). Intermediate symbols are v = u·G_p; output symbols
are LT combinations of v. Decoding assembles the constraint matrix
M = [H_p; G̃_LTᵀ] and hands it to the inactivation decoder.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from codes.degree_dists import DegreeDistribution, DistributionError
from codes.gf_linalg import (
    GF2,
    FieldError,
    FieldMatrix,
    FieldSpec,
    gaussian_solve,
    inverse,
    matmul,
    null_space,
    rank,
    spec_for_order,
)
from codes.inactivation import Equation, InactivationResult, SparseSystem, Strategy, inactivation_decode
from codes.lt_lrfc import (
    ConstructionError,
    LtGeneratorColumn,
    ReceivedSet,
    encode_columns,
    lrfc_columns,
    lt_columns,
    ml_decode,
)
from core.config import settings

logger = logging.getLogger(__name__)

PRECODE_KINDS = ("linear-random", "hamming", "spc", "grs", "r10", "explicit")


@dataclass
class Precode:
    """An (h, k) outer block code.

    Attributes:
        kind: One of PRECODE_KINDS
        generator: k × h matrix G_p
        parity_check: (h-k) × h matrix H_p
        params: Construction parameters, echoed into exports
    """

    kind: str
    k: int
    generator: FieldMatrix
    parity_check: FieldMatrix
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def h(self) -> int:
        return self.generator.cols

    @property
    def spec(self) -> FieldSpec:
        return self.generator.spec

    @property
    def rate(self) -> float:
        return self.k / self.h

    @property
    def systematic(self) -> bool:
        return np.array_equal(self.generator.to_numpy()[:, : self.k], np.eye(self.k, dtype=np.int64))

    def encode(self, source) -> np.ndarray:
        """Intermediate word v = u·G_p, as rows of symbols."""
        values = np.asarray(source, dtype=np.int64)
        flat = values.ndim == 1
        values = values.reshape(self.k, -1)
        v = matmul(self.generator.transpose(), FieldMatrix(values, self.spec)).to_numpy()
        return v[:, 0] if flat else v

    def source_from_intermediate(self, v) -> Optional[np.ndarray]:
        """Invert v = u·G_p."""
        values = np.asarray(v, dtype=np.int64).reshape(self.h, -1)
        if self.systematic:
            return values[: self.k]
        report = gaussian_solve(self.generator.transpose(), values)
        return report.solution if report.unique else None

    def is_codeword(self, v) -> bool:
        values = np.asarray(v, dtype=np.int64).reshape(self.h, -1)
        syndrome = matmul(self.parity_check, FieldMatrix(values, self.spec))
        return syndrome.is_zero()

    def export(self) -> str:
        """One-line JSON header followed by H_p and G_p in the matrix dump format."""
        header = json.dumps({"kind": self.kind, "k": self.k, "h": self.h, "q": self.spec.order, **self.params})
        return header + "\n" + self.parity_check.dump() + self.generator.dump()


def _systematic_from_parity(parity: FieldMatrix, k: int) -> Optional[FieldMatrix]:
    """G = [I_k | Xᵀ] with X = H_2^{-1}·H_1 when the trailing block H_2 is invertible."""
    h = parity.cols
    h1 = parity.select_cols(range(k))
    h2 = parity.select_cols(range(k, h))
    try:
        h2_inv = inverse(h2)
    except FieldError:
        return None
    x = matmul(h2_inv, h1)
    return FieldMatrix.identity(k, parity.spec).hstack(x.transpose())


def precode_from_parity_check(parity: FieldMatrix, k: int, kind: str = "explicit", params: Optional[Dict] = None) -> Precode:
    """Derive G_p from H_p.

    The systematic form is used when the trailing (h-k) columns of H_p are
    invertible; otherwise the first k null-space basis rows are taken.
    """
    generator = _systematic_from_parity(parity, k)
    if generator is None:
        basis = null_space(parity)
        if basis.rows < k:
            raise ValueError(f"Parity-check matrix leaves only {basis.rows} dimensions, need {k}")
        generator = basis.select_rows(range(k))
    return Precode(kind, k, generator, parity, dict(params or {}))


def hamming_parity_check(t: int) -> FieldMatrix:
    """H of the (2^t - 1, 2^t - 1 - t) Hamming code, unit columns last."""
    if t < 2:
        raise ValueError("Hamming codes need t >= 2")
    n = 2**t - 1
    weights = [v for v in range(1, n + 1) if v & (v - 1)]
    units = [1 << b for b in range(t)]
    columns = weights + units
    bits = np.array([[(c >> b) & 1 for c in columns] for b in range(t)], dtype=np.int64)
    return FieldMatrix(bits, GF2)


def r10_parameters(k: int) -> Tuple[int, int]:
    """Number of LDPC (s) and HDPC (h') redundant symbols for k inputs."""
    x = 1
    while x * (x - 1) < 2 * k:
        x += 1
    s = math.ceil(0.01 * k) + x
    while not _is_prime(s):
        s += 1
    hp = 1
    while math.comb(hp, math.ceil(hp / 2)) < k + s:
        hp += 1
    return s, hp


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(math.isqrt(n)) + 1))


def _gray_columns(hp: int, count: int) -> List[int]:
    """First ``count`` reflected Gray codes of weight ceil(hp/2)."""
    weight = math.ceil(hp / 2)
    out: List[int] = []
    i = 0
    while len(out) < count:
        g = i ^ (i >> 1)
        if bin(g).count("1") == weight:
            out.append(g)
        i += 1
    return out


def r10_style_parity_check(k: int) -> Tuple[FieldMatrix, int, int]:
    """LDPC circulants plus identity, then a Gray-code HDPC part plus identity."""
    s, hp = r10_parameters(k)
    h = k + s + hp
    ldpc = np.zeros((s, h), dtype=np.int64)
    for i in range(k):
        block, col = divmod(i, s)
        stride = 1 + (block % (s - 1)) if s > 1 else 1
        for shift in (0, stride, 2 * stride):
            ldpc[(col + shift) % s, i] ^= 1
    ldpc[:, k : k + s] = np.eye(s, dtype=np.int64)
    hdpc = np.zeros((hp, h), dtype=np.int64)
    for j, g in enumerate(_gray_columns(hp, k + s)):
        for b in range(hp):
            hdpc[b, j] = (g >> b) & 1
    hdpc[:, k + s :] = np.eye(hp, dtype=np.int64)
    return FieldMatrix(np.vstack([ldpc, hdpc]), GF2), s, hp


def vandermonde_generator(k: int, n_c: int, spec: FieldSpec) -> FieldMatrix:
    """k × n_c Vandermonde matrix on the points 1..n_c of GF(q)."""
    if n_c > spec.order - 1:
        raise ValueError(f"A GRS code over GF({spec.order}) has length at most {spec.order - 1}")
    gf = spec.field
    points = gf(np.arange(1, n_c + 1))
    rows = [np.ones(n_c, dtype=np.int64)]
    power = gf(np.ones(n_c, dtype=np.int64))
    for _ in range(1, k):
        power = power * points
        rows.append(np.asarray(power).view(np.ndarray).astype(np.int64))
    return FieldMatrix(np.vstack(rows), spec)


def sample_linear_random_precode(h: int, k: int, spec: FieldSpec, rng: np.random.Generator) -> Precode:
    """(h, k) code whose parity-check matrix has i.i.d. uniform entries."""
    if not 0 <= k <= h:
        raise ValueError(f"Need 0 <= k <= h, got k={k}, h={h}")
    parity = FieldMatrix.random(h - k, h, rng, spec)
    return precode_from_parity_check(parity, k, "linear-random", {"h": h})


def build_precode(kind: str, k: int, params: Optional[Dict[str, Any]] = None, rng: Optional[np.random.Generator] = None) -> Precode:
    """Construct a precode.

    Args:
        kind: linear-random (params h, q), hamming (params t), spc (params q),
            grs (params n_c, q), r10, explicit (params parity_check)
        k: Code dimension
        params: Kind-specific parameters
        rng: Random stream (linear-random only)

    Raises:
        ValueError: On inconsistent parameters
    """
    params = dict(params or {})
    q = int(params.get("q", 2))
    spec = spec_for_order(q)
    if kind == "linear-random":
        if rng is None:
            raise ValueError("A linear-random precode needs a random stream")
        return sample_linear_random_precode(int(params["h"]), k, spec, rng)
    if kind == "hamming":
        t = int(params.get("t", 0)) or _hamming_t(k)
        if 2**t - 1 - t != k:
            raise ValueError(f"No Hamming code with k={k} for t={t}")
        return precode_from_parity_check(hamming_parity_check(t), k, "hamming", {"t": t})
    if kind == "spc":
        parity = FieldMatrix(np.ones((1, k + 1), dtype=np.int64), spec)
        return precode_from_parity_check(parity, k, "spc", {"q": q})
    if kind == "grs":
        n_c = int(params["n_c"])
        if n_c < k:
            raise ValueError("GRS length must be at least k")
        generator = vandermonde_generator(k, n_c, spec)
        parity = null_space(generator)
        return Precode("grs", k, generator, parity, {"n_c": n_c, "q": q})
    if kind == "r10":
        parity, s, hp = r10_style_parity_check(k)
        return precode_from_parity_check(parity, k, "r10", {"s": s, "h_prime": hp})
    if kind == "explicit":
        parity = params["parity_check"]
        if not isinstance(parity, FieldMatrix):
            parity = FieldMatrix(parity, spec)
        return precode_from_parity_check(parity, k)
    raise ValueError(f"Unknown precode kind '{kind}'")


def _hamming_t(k: int) -> int:
    for t in range(2, 20):
        if 2**t - 1 - t == k:
            return t
    raise ValueError(f"No Hamming code has dimension {k}")


def row_weight_profile(precode: Precode) -> DegreeDistribution:
    """Empirical distribution Θ of the Hamming weights of the rows of H_p."""
    weights = precode.parity_check.row_weights()
    weights = weights[weights > 0]
    if weights.size == 0:
        raise DistributionError("Parity-check matrix has no nonzero rows")
    counts = np.bincount(weights)[1:]
    return DegreeDistribution(counts / counts.sum(), name=f"theta-{precode.kind}")


def expected_row_weight_profile(precode: Precode) -> DegreeDistribution:
    """Θ in the closed forms used by the surrogate LT analysis.

    Linear random: Binomial(h, (q-1)/q). R10-style: point masses at
    3·round(k/s)+1 and round((k+s)/2)+1 with weights s and h'. Other kinds:
    the empirical profile.
    """
    if precode.kind == "linear-random":
        h = precode.h
        q = precode.spec.order
        d = np.arange(1, h + 1)
        probs = stats.binom.pmf(d, h, (q - 1) / q)
        return DegreeDistribution(probs / probs.sum(), name="theta-binomial")
    if precode.kind == "r10":
        return r10_theta(precode.k)
    return row_weight_profile(precode)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def r10_theta(k: int) -> DegreeDistribution:
    s, hp = r10_parameters(k)
    ldpc_weight = 3 * _round_half_up(k / s) + 1
    hdpc_weight = _round_half_up((k + s) / 2) + 1
    masses: Dict[int, float] = {}
    masses[ldpc_weight] = masses.get(ldpc_weight, 0.0) + s / (s + hp)
    masses[hdpc_weight] = masses.get(hdpc_weight, 0.0) + hp / (s + hp)
    return DegreeDistribution.from_mapping(masses, name=f"theta-r10-k{k}")


@dataclass
class ConstraintSystem:
    """M·vᵀ = [0; y] with M = [H_p; G̃_LTᵀ]."""

    matrix: FieldMatrix
    rhs: np.ndarray
    precode_rows: int

    def to_sparse(self) -> SparseSystem:
        return SparseSystem.from_dense(self.matrix, self.rhs)


def raptor_encode(
    source,
    precode: Precode,
    dist: DegreeDistribution,
    n: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, List[LtGeneratorColumn], np.ndarray]:
    """Return (outputs, LT columns over the h intermediates, intermediates v)."""
    v = precode.encode(source)
    columns = lt_columns(dist, precode.h, n, rng, precode.spec)
    outputs = encode_columns(v, columns, precode.spec)
    return outputs, columns, v


def build_constraint_system(precode: Precode, rx: ReceivedSet) -> ConstraintSystem:
    """Stack H_p over the received LT rows; the precode rows have zero syndrome."""
    if rx.k != precode.h:
        raise ValueError(f"Received columns span {rx.k} symbols, precode has h={precode.h}")
    lt_rows = rx.generator().transpose()
    matrix = precode.parity_check.vstack(lt_rows)
    width = rx.values.shape[1]
    rhs = np.vstack([np.zeros((precode.parity_check.rows, width), dtype=np.int64), rx.values])
    return ConstraintSystem(matrix, rhs, precode.parity_check.rows)


def constraint_sparse_system(precode: Precode, rx: ReceivedSet) -> SparseSystem:
    """[H_p; G̃_LTᵀ] as a SparseSystem over the h intermediate symbols."""
    parity = precode.parity_check.to_numpy()
    equations = []
    for row in parity:
        idx = np.flatnonzero(row)
        equations.append(Equation(tuple(int(i) for i in idx), tuple(int(row[i]) for i in idx)))
    equations.extend(Equation(col.indices, col.coefficients) for col in rx.columns)
    width = rx.values.shape[1]
    rhs = np.vstack([np.zeros((parity.shape[0], width), dtype=np.int64), rx.values])
    return SparseSystem(equations, precode.h, rhs, precode.spec)


@dataclass
class RaptorDecodeResult:
    success: bool
    inactivations: int
    source: Optional[np.ndarray] = None
    intermediate: Optional[np.ndarray] = None


def raptor_decode(
    precode: Precode,
    rx: ReceivedSet,
    strategy: Strategy = Strategy.RANDOM,
    rng: Optional[np.random.Generator] = None,
) -> RaptorDecodeResult:
    """Inactivation decoding of the constraint system, then u from v."""
    result: InactivationResult = inactivation_decode(constraint_sparse_system(precode, rx), strategy, rng)
    if not result.success:
        return RaptorDecodeResult(False, result.inactivations)
    v = result.solution
    u = precode.source_from_intermediate(v)
    return RaptorDecodeResult(u is not None, result.inactivations, u, v)


class SystematicRaptorEncoder:
    """Raptor code whose first k outputs are the source symbols.

    With G_LT,1 the first k LT columns and F = G_p·G_LT,1 invertible, the
    encoder precodes w = u·F^{-1} instead of u.
    """

    def __init__(self, precode: Precode, dist: DegreeDistribution, g1_columns: List[LtGeneratorColumn], f_matrix: FieldMatrix):
        self.precode = precode
        self.dist = dist
        self.g1_columns = g1_columns
        self.f_inverse = inverse(f_matrix)

    @property
    def k(self) -> int:
        return self.precode.k

    def encode(self, source, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
        if n < self.k:
            raise ValueError(f"A systematic block needs n >= k={self.k}")
        spec = self.precode.spec
        values = np.asarray(source, dtype=np.int64).reshape(self.k, -1)
        w = matmul(self.f_inverse.transpose(), FieldMatrix(values, spec)).to_numpy()
        v = self.precode.encode(w)
        columns = list(self.g1_columns) + lt_columns(self.dist, self.precode.h, n - self.k, rng, spec)
        outputs = encode_columns(v, columns, spec)
        return outputs, columns

    def decode(
        self,
        rx: ReceivedSet,
        strategy: Strategy = Strategy.RANDOM,
        rng: Optional[np.random.Generator] = None,
    ) -> RaptorDecodeResult:
        """Recover v from the constraint system, then re-encode it with G_LT,1."""
        result = inactivation_decode(constraint_sparse_system(self.precode, rx), strategy, rng)
        if not result.success:
            return RaptorDecodeResult(False, result.inactivations)
        v = result.solution
        u = encode_columns(v, self.g1_columns, self.precode.spec)
        return RaptorDecodeResult(True, result.inactivations, u, v)


def make_systematic_raptor(
    precode: Precode,
    dist: DegreeDistribution,
    rng: np.random.Generator,
    retries: Optional[int] = None,
) -> SystematicRaptorEncoder:
    """Draw G_LT,1 until F = G_p·G_LT,1 is invertible.

    Raises:
        ConstructionError: If the retry budget is exhausted
    """
    budget = settings.SYSTEMATIC_RETRY_BUDGET if retries is None else retries
    if budget < 1:
        raise ValueError(f"Retry budget must be at least 1, got {budget}")
    spec = precode.spec
    for attempt in range(1, budget + 1):
        columns = lt_columns(dist, precode.h, precode.k, rng, spec)
        g1 = np.zeros((precode.h, precode.k), dtype=np.int64)
        for j, col in enumerate(columns):
            g1[list(col.indices), j] = col.coefficients
        f_matrix = matmul(precode.generator, FieldMatrix(g1, spec))
        if rank(f_matrix) == precode.k:
            logger.debug("Systematic Raptor F found after %d draws", attempt)
            return SystematicRaptorEncoder(precode, dist, columns, f_matrix)
    raise ConstructionError(f"No invertible F for k={precode.k} within {budget} draws")


@dataclass
class ConcatScheme:
    """Block code over GF(q) followed by an LRFC tail generated on demand."""

    precode: Precode

    @property
    def k(self) -> int:
        return self.precode.k

    @property
    def n_c(self) -> int:
        return self.precode.h

    @property
    def spec(self) -> FieldSpec:
        return self.precode.spec

    def prefix_columns(self) -> List[LtGeneratorColumn]:
        g = self.precode.generator.to_numpy()
        return [LtGeneratorColumn.from_dense(g[:, j]) for j in range(self.n_c)]


def concat_scheme(kind: str, k: int, q: int = 2, n_c: Optional[int] = None) -> ConcatScheme:
    """SPC (k+1, k) or GRS (n_c, k) precode with an LRFC tail."""
    if kind == "spc":
        return ConcatScheme(build_precode("spc", k, {"q": q}))
    if kind == "grs":
        if n_c is None:
            raise ValueError("A GRS scheme needs n_c")
        return ConcatScheme(build_precode("grs", k, {"n_c": n_c, "q": q}))
    raise ValueError(f"Unknown concatenated scheme '{kind}'")


def concat_encode(source, scheme: ConcatScheme, l: int, rng: np.random.Generator) -> Tuple[np.ndarray, List[LtGeneratorColumn]]:
    """First n_c outputs are the precode codeword; the rest are LRFC symbols.

    Raises:
        ValueError: If l < n_c (shortened transmission is not supported)
    """
    if l < scheme.n_c:
        raise ValueError(f"Need l >= n_c={scheme.n_c}, got {l}")
    columns = scheme.prefix_columns() + lrfc_columns(scheme.k, l - scheme.n_c, rng, scheme.spec)
    return encode_columns(source, columns, scheme.spec), columns


def concat_ml_decode(scheme: ConcatScheme, rx: ReceivedSet) -> Optional[np.ndarray]:
    """ML decoding of the received prefix and tail symbols."""
    if rx.k != scheme.k:
        raise ValueError("Received set does not match the scheme dimension")
    return ml_decode(rx)
