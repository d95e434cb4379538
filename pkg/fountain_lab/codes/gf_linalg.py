"""Finite fields GF(2^m) and matrix algebra over them.

Field arithmetic is delegated to ``galois`` array classes. Matrices are
immutable wrappers around a field array; elimination always works on a
private copy. Binary matrices additionally get a bit-packed fast path
(``numpy.packbits`` rows, xor row operations) with the same semantics as
the general path.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import galois
import numpy as np

logger = logging.getLogger(__name__)


class FieldError(ValueError):
    """Raised on invalid field specifications or undefined field operations."""


# Conventional primitive polynomial per extension degree m, as bit patterns.
PRIMITIVE_POLYNOMIALS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}

MAX_VALIDATED_DEGREE = 16


@lru_cache(maxsize=None)
def _galois_field(order: int, poly: int) -> type:
    if order == 2:
        return galois.GF(2)
    return galois.GF(order, irreducible_poly=poly)


@dataclass(frozen=True)
class FieldSpec:
    """Order q = 2^m and the reduction polynomial defining GF(q)."""

    order: int
    poly: int

    def __post_init__(self):
        if self.order < 2 or self.order & (self.order - 1):
            raise FieldError(f"Field order must be a power of two >= 2, got {self.order}")
        if self.poly.bit_length() - 1 != self.degree:
            raise FieldError(
                f"Reduction polynomial {self.poly:#b} does not have degree {self.degree}"
            )
        if self.degree <= MAX_VALIDATED_DEGREE:
            poly = galois.Poly.Int(self.poly, field=galois.GF(2))
            if not poly.is_irreducible():
                raise FieldError(f"Reduction polynomial {self.poly:#b} is reducible")

    @property
    def degree(self) -> int:
        return self.order.bit_length() - 1

    @property
    def field(self) -> type:
        """The ``galois`` FieldArray class for this spec."""
        return _galois_field(self.order, self.poly)

    @property
    def is_binary(self) -> bool:
        return self.order == 2


def field_spec(m: int) -> FieldSpec:
    """Return the conventional spec for GF(2^m).

    Args:
        m: Extension degree, 1 <= m <= 16

    Returns:
        FieldSpec using the default primitive polynomial for m

    Raises:
        FieldError: If no default polynomial exists for m
    """
    if m not in PRIMITIVE_POLYNOMIALS:
        raise FieldError(f"No default reduction polynomial for m={m}")
    return FieldSpec(order=1 << m, poly=PRIMITIVE_POLYNOMIALS[m])


def spec_for_order(q: int) -> FieldSpec:
    """Return the conventional spec for a field of order q."""
    if q < 2 or q & (q - 1):
        raise FieldError(f"Field order must be a power of two >= 2, got {q}")
    return field_spec(q.bit_length() - 1)


GF2 = field_spec(1)


def _check_element(a: int, spec: FieldSpec) -> None:
    if not 0 <= a < spec.order:
        raise FieldError(f"Element {a} is outside GF({spec.order})")


def field_add(a: int, b: int, spec: FieldSpec) -> int:
    """Add two elements; in characteristic 2 this is xor."""
    _check_element(a, spec)
    _check_element(b, spec)
    return a ^ b


def field_mul(a: int, b: int, spec: FieldSpec) -> int:
    """Multiply two elements modulo the reduction polynomial."""
    _check_element(a, spec)
    _check_element(b, spec)
    gf = spec.field
    return int(gf(a) * gf(b))


def field_inv(a: int, spec: FieldSpec) -> int:
    """Multiplicative inverse.

    Raises:
        FieldError: If a is zero
    """
    _check_element(a, spec)
    if a == 0:
        raise FieldError("Zero has no multiplicative inverse")
    gf = spec.field
    return int(np.reciprocal(gf(a)))


def plain(array) -> np.ndarray:
    """View a field array as a plain integer ndarray."""
    return np.asarray(array).view(np.ndarray).astype(np.int64)


class FieldMatrix:
    """Immutable matrix over GF(q).

    Attributes:
        spec: Field the entries live in
    """

    __slots__ = ("spec", "_entries")

    def __init__(self, entries, spec: FieldSpec = GF2):
        values = np.array(entries, dtype=np.int64)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, 0)
        if values.ndim != 2:
            raise FieldError(f"A matrix needs two dimensions, got shape {values.shape}")
        if values.size and (values.min() < 0 or values.max() >= spec.order):
            raise FieldError(f"Matrix entries must lie in [0, {spec.order})")
        array = spec.field(values)
        array.flags.writeable = False
        self.spec = spec
        self._entries = array

    @classmethod
    def zeros(cls, rows: int, cols: int, spec: FieldSpec = GF2) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), spec)

    @classmethod
    def identity(cls, n: int, spec: FieldSpec = GF2) -> "FieldMatrix":
        return cls(np.eye(n, dtype=np.int64), spec)

    @classmethod
    def random(
        cls,
        rows: int,
        cols: int,
        rng: np.random.Generator,
        spec: FieldSpec = GF2,
        nonzero: bool = False,
    ) -> "FieldMatrix":
        """Matrix with i.i.d. uniform entries (over the nonzero elements if asked)."""
        low = 1 if nonzero else 0
        return cls(rng.integers(low, spec.order, size=(rows, cols)), spec)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], spec: FieldSpec = GF2) -> "FieldMatrix":
        return cls([list(row) for row in rows], spec)

    @property
    def rows(self) -> int:
        return self._entries.shape[0]

    @property
    def cols(self) -> int:
        return self._entries.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._entries.shape

    @property
    def entries(self):
        """Read-only ``galois`` array of the entries."""
        return self._entries

    def to_numpy(self) -> np.ndarray:
        return plain(self._entries)

    def copy_entries(self):
        """Writable field-array copy, for elimination."""
        return self.spec.field(self.to_numpy())

    def transpose(self) -> "FieldMatrix":
        return FieldMatrix(self.to_numpy().T, self.spec)

    @property
    def T(self) -> "FieldMatrix":
        return self.transpose()

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return matmul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.to_numpy(), other.to_numpy())

    def __hash__(self) -> int:
        return hash((self.spec, self.shape, self.to_numpy().tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.rows}x{self.cols}, q={self.spec.order})"

    def row(self, i: int) -> np.ndarray:
        return plain(self._entries[i])

    def select_rows(self, indices: Iterable[int]) -> "FieldMatrix":
        idx = list(indices)
        return FieldMatrix(self.to_numpy()[idx, :].reshape(len(idx), self.cols), self.spec)

    def select_cols(self, indices: Iterable[int]) -> "FieldMatrix":
        idx = list(indices)
        return FieldMatrix(self.to_numpy()[:, idx].reshape(self.rows, len(idx)), self.spec)

    def hstack(self, other: "FieldMatrix") -> "FieldMatrix":
        _check_same_field(self, other)
        return FieldMatrix(np.hstack([self.to_numpy(), other.to_numpy()]), self.spec)

    def vstack(self, other: "FieldMatrix") -> "FieldMatrix":
        _check_same_field(self, other)
        if self.rows == 0:
            return other
        if other.rows == 0:
            return self
        return FieldMatrix(np.vstack([self.to_numpy(), other.to_numpy()]), self.spec)

    def row_weights(self) -> np.ndarray:
        """Hamming weight of every row."""
        return np.count_nonzero(self.to_numpy(), axis=1)

    def is_zero(self) -> bool:
        return not np.any(self.to_numpy())

    def dump(self) -> str:
        """Serialize in the "rows cols q" dump format."""
        lines = [f"{self.rows} {self.cols} {self.spec.order}"]
        lines.extend(" ".join(str(v) for v in row) for row in self.to_numpy())
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "FieldMatrix":
        """Parse the dump format; the default polynomial for q is assumed."""
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise FieldError("Empty matrix dump")
        rows, cols, q = (int(v) for v in lines[0].split())
        body = [[int(v) for v in line.split()] for line in lines[1:]]
        if len(body) != rows or any(len(r) != cols for r in body):
            raise FieldError("Matrix dump body does not match its header")
        values = np.array(body, dtype=np.int64).reshape(rows, cols)
        return cls(values, spec_for_order(q))


def _check_same_field(a: FieldMatrix, b: FieldMatrix) -> None:
    if a.spec != b.spec:
        raise FieldError("Matrices live in different fields")


# ---------------------------------------------------------------------------
# Bit-packed binary fast path
# ---------------------------------------------------------------------------

def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix row-wise into uint8 words (big-endian bit order)."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=1)


def unpack_rows(packed: np.ndarray, width: int) -> np.ndarray:
    return np.unpackbits(packed, axis=1, count=width).astype(np.int64)


def packed_matmul(a_bits: np.ndarray, b_bits: np.ndarray) -> np.ndarray:
    """Binary product A·B computed by xor-ing packed rows of B."""
    a_bits = np.asarray(a_bits, dtype=np.uint8)
    b_packed = pack_rows(b_bits)
    out = np.zeros((a_bits.shape[0], b_packed.shape[1]), dtype=np.uint8)
    for i in range(a_bits.shape[0]):
        selected = np.flatnonzero(a_bits[i])
        if selected.size:
            out[i] = np.bitwise_xor.reduce(b_packed[selected], axis=0)
    return unpack_rows(out, np.asarray(b_bits).shape[1])


def matmul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """Matrix product over the common field."""
    _check_same_field(a, b)
    if a.cols != b.rows:
        raise FieldError(f"Cannot multiply {a.shape} by {b.shape}")
    if a.spec.is_binary:
        return FieldMatrix(packed_matmul(a.to_numpy(), b.to_numpy()), a.spec)
    return FieldMatrix(plain(a.entries @ b.entries), a.spec)


def _reduce_binary(aug: np.ndarray, pivot_cols: int) -> Tuple[np.ndarray, List[int]]:
    width = aug.shape[1]
    packed = pack_rows(aug)
    pivots: List[int] = []
    r = 0
    for col in range(pivot_cols):
        if r == packed.shape[0]:
            break
        byte, mask = col >> 3, np.uint8(0x80 >> (col & 7))
        candidates = np.flatnonzero(packed[r:, byte] & mask)
        if candidates.size == 0:
            continue
        p = r + candidates[0]
        if p != r:
            packed[[r, p]] = packed[[p, r]]
        hits = np.flatnonzero(packed[:, byte] & mask)
        hits = hits[hits != r]
        if hits.size:
            packed[hits] ^= packed[r]
        pivots.append(col)
        r += 1
    return unpack_rows(packed, width), pivots


def _reduce_general(aug, pivot_cols: int):
    pivots: List[int] = []
    r = 0
    rows = aug.shape[0]
    for col in range(pivot_cols):
        if r == rows:
            break
        candidates = np.flatnonzero(plain(aug[r:, col]))
        if candidates.size == 0:
            continue
        p = r + candidates[0]
        if p != r:
            aug[[r, p]] = aug[[p, r]]
        aug[r] = aug[r] / aug[r, col]
        hits = np.flatnonzero(plain(aug[:, col]))
        hits = hits[hits != r]
        if hits.size:
            aug[hits] = aug[hits] - aug[hits, col][:, np.newaxis] * aug[r][np.newaxis, :]
        pivots.append(col)
        r += 1
    return plain(aug), pivots


def row_reduce(values: np.ndarray, spec: FieldSpec, pivot_cols: Optional[int] = None):
    """Reduced row echelon form of an integer matrix over GF(q).

    Args:
        values: Matrix as integers in [0, q)
        spec: Field of the entries
        pivot_cols: Only the first ``pivot_cols`` columns are pivot candidates;
            row operations still span every column

    Returns:
        (R, pivot_cols) with R as a plain integer array
    """
    values = np.array(values, dtype=np.int64)
    if pivot_cols is None:
        pivot_cols = values.shape[1]
    if values.shape[0] == 0:
        return values, []
    if spec.is_binary:
        return _reduce_binary(values, pivot_cols)
    return _reduce_general(spec.field(values), pivot_cols)


@dataclass
class EliminationReport:
    """Outcome of Gaussian elimination on A·x = b."""

    rank: int
    pivots: List[int]
    consistent: bool
    solution: Optional[np.ndarray] = None
    unknowns: int = 0

    @property
    def unique(self) -> bool:
        return self.consistent and self.rank == self.unknowns


def _as_symbol_matrix(b, rows: int) -> Tuple[np.ndarray, bool]:
    values = np.array(b, dtype=np.int64)
    flat = values.ndim == 1
    if flat:
        values = values.reshape(-1, 1)
    if values.shape[0] != rows:
        raise FieldError(f"Right-hand side has {values.shape[0]} rows, expected {rows}")
    return values, flat


def gaussian_solve(a: FieldMatrix, b) -> EliminationReport:
    """Solve A·x = b by Gaussian elimination.

    Args:
        a: Coefficient matrix (rows = equations)
        b: Right-hand side, one symbol (or symbol vector) per equation

    Returns:
        EliminationReport; ``solution`` is present only when it is unique
    """
    rhs, flat = _as_symbol_matrix(b, a.rows)
    if rhs.size and (rhs.min() < 0 or rhs.max() >= a.spec.order):
        raise FieldError("Right-hand side symbols outside the field")
    n = a.cols
    aug = np.hstack([a.to_numpy(), rhs]) if a.rows else np.zeros((0, n + rhs.shape[1]), dtype=np.int64)
    reduced, pivots = row_reduce(aug, a.spec, pivot_cols=n)
    rank = len(pivots)
    consistent = not np.any(reduced[rank:, n:])
    report = EliminationReport(rank=rank, pivots=pivots, consistent=consistent, unknowns=n)
    if consistent and rank == n:
        solution = np.zeros((n, rhs.shape[1]), dtype=np.int64)
        for i, col in enumerate(pivots):
            solution[col] = reduced[i, n:]
        report.solution = solution[:, 0] if flat else solution
    return report


def rank(a: FieldMatrix) -> int:
    """Rank over GF(q); the empty matrix has rank 0."""
    if a.rows == 0 or a.cols == 0:
        return 0
    _, pivots = row_reduce(a.to_numpy(), a.spec)
    return len(pivots)


def inverse(a: FieldMatrix) -> FieldMatrix:
    """Inverse of a square full-rank matrix.

    Raises:
        FieldError: If the matrix is not square or is singular
    """
    if a.rows != a.cols:
        raise FieldError(f"Only square matrices are invertible, got {a.shape}")
    n = a.rows
    aug = np.hstack([a.to_numpy(), np.eye(n, dtype=np.int64)])
    reduced, pivots = row_reduce(aug, a.spec, pivot_cols=n)
    if len(pivots) < n:
        raise FieldError("Matrix is singular")
    return FieldMatrix(reduced[:, n:], a.spec)


def null_space(a: FieldMatrix) -> FieldMatrix:
    """Basis (as rows) of {x : A·xᵀ = 0}."""
    n = a.cols
    if a.rows == 0:
        return FieldMatrix.identity(n, a.spec)
    reduced, pivots = row_reduce(a.to_numpy(), a.spec)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    gf = a.spec.field
    for j, f in enumerate(free):
        basis[j, f] = 1
        for i, col in enumerate(pivots):
            # x_col = -R[i, f]
            basis[j, col] = int(-gf(int(reduced[i, f])))
    return FieldMatrix(basis.reshape(len(free), n), a.spec)


def combine_rows(coefficients, rows, spec: FieldSpec) -> np.ndarray:
    """Linear combination Σ c_i·rows_i over GF(q) of integer row vectors."""
    coefficients = np.asarray(coefficients, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1)
    if coefficients.size == 0:
        return np.zeros(rows.shape[1:], dtype=np.int64)
    if spec.is_binary:
        picked = rows[coefficients.astype(bool)]
        if picked.shape[0] == 0:
            return np.zeros(rows.shape[1:], dtype=np.int64)
        return np.bitwise_xor.reduce(picked, axis=0)
    gf = spec.field
    return plain(gf(coefficients) @ gf(rows))
