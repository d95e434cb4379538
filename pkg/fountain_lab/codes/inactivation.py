"""Inactivation decoding (structured Gaussian elimination) over GF(2^m).

The decoder runs in four phases: triangulation of the sparse system (with
one of four inactivation strategies), the zero-matrix procedure that expresses
every resolved variable through the inactive ones, Gaussian elimination on
the dense inactive core, and back-substitution.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from networkx.utils import UnionFind

from codes.gf_linalg import GF2, FieldError, FieldMatrix, FieldSpec, combine_rows, field_inv, gaussian_solve

logger = logging.getLogger(__name__)


class Strategy(str, Enum):
    """How to pick the variable to inactivate when the ripple is empty."""

    RANDOM = "random"
    MAX_REDUCED = "max-reduced"
    MAX_ACCUMULATED = "max-accumulated"
    MAX_COMPONENT = "max-component"


ALL_STRATEGIES = tuple(Strategy)


@dataclass(frozen=True)
class Equation:
    """One received equation: Σ coefficients[i]·x[indices[i]] = rhs."""

    indices: Tuple[int, ...]
    coefficients: Tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.indices)


class SparseSystem:
    """Linear system stored by rows of (variable, coefficient) pairs.

    Zero coefficients are dropped at construction. ``rhs`` has one row per
    equation and one column per payload element; zero columns are allowed
    for structure-only decoding.
    """

    def __init__(
        self,
        equations: Sequence[Equation],
        num_vars: int,
        rhs: Optional[np.ndarray] = None,
        spec: FieldSpec = GF2,
    ):
        cleaned: List[Equation] = []
        for row, eq in enumerate(equations):
            if len(eq.indices) != len(eq.coefficients):
                raise FieldError(f"Equation {row}: index and coefficient counts differ")
            if len(set(eq.indices)) != len(eq.indices):
                raise FieldError(f"Equation {row}: duplicate variable index")
            pairs = sorted((i, c) for i, c in zip(eq.indices, eq.coefficients) if c != 0)
            for i, c in pairs:
                if not 0 <= i < num_vars:
                    raise FieldError(f"Equation {row}: variable {i} outside [0, {num_vars})")
                if not 0 < c < spec.order:
                    raise FieldError(f"Equation {row}: coefficient {c} outside GF({spec.order})")
            cleaned.append(Equation(tuple(i for i, _ in pairs), tuple(c for _, c in pairs)))
        if rhs is None:
            rhs = np.zeros((len(cleaned), 0), dtype=np.int64)
        rhs = np.array(rhs, dtype=np.int64)
        if rhs.ndim == 1:
            rhs = rhs.reshape(-1, 1)
        if rhs.shape[0] != len(cleaned):
            raise FieldError(f"{rhs.shape[0]} right-hand sides for {len(cleaned)} equations")
        self.equations = cleaned
        self.num_vars = num_vars
        self.rhs = rhs
        self.spec = spec

    @classmethod
    def from_dense(cls, matrix: FieldMatrix, rhs=None) -> "SparseSystem":
        values = matrix.to_numpy()
        equations = []
        for row in values:
            idx = np.flatnonzero(row)
            equations.append(Equation(tuple(int(i) for i in idx), tuple(int(row[i]) for i in idx)))
        return cls(equations, matrix.cols, rhs, matrix.spec)

    @property
    def num_equations(self) -> int:
        return len(self.equations)

    @property
    def payload_width(self) -> int:
        return self.rhs.shape[1]

    def to_dense(self) -> FieldMatrix:
        dense = np.zeros((self.num_equations, self.num_vars), dtype=np.int64)
        for row, eq in enumerate(self.equations):
            dense[row, list(eq.indices)] = eq.coefficients
        return FieldMatrix(dense, self.spec)

    def check(self, solution: np.ndarray) -> bool:
        """True when ``solution`` satisfies every equation."""
        solution = np.asarray(solution, dtype=np.int64)
        if solution.ndim == 1:
            solution = solution.reshape(-1, 1)
        for row, eq in enumerate(self.equations):
            value = combine_rows(eq.coefficients, solution[list(eq.indices)], self.spec)
            if not np.array_equal(np.asarray(value).reshape(-1), self.rhs[row].reshape(-1)):
                return False
        return True


@dataclass
class TraceStep:
    u: int
    action: str
    variable: int
    ripple: int
    cloud: int


@dataclass
class Triangulation:
    """Result of the structural phase.

    Attributes:
        pivots: (variable, equation) pairs in resolution order
        inactive: Inactivated variables in inactivation order
        trace: One step per variable
    """

    pivots: List[Tuple[int, int]] = field(default_factory=list)
    inactive: List[int] = field(default_factory=list)
    trace: List[TraceStep] = field(default_factory=list)

    @property
    def num_inactivations(self) -> int:
        return len(self.inactive)


@dataclass
class InactivationResult:
    success: bool
    inactivations: int
    solution: Optional[np.ndarray] = None
    trace: List[TraceStep] = field(default_factory=list)
    core_rank: int = 0


class _IndexedSet:
    """Set with O(1) add, discard and uniform choice."""

    __slots__ = ("_items", "_pos")

    def __init__(self, items: Iterable[int] = ()):
        self._items: List[int] = []
        self._pos: Dict[int, int] = {}
        for item in items:
            self.add(item)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item: int) -> bool:
        return item in self._pos

    def __iter__(self):
        return iter(self._items)

    def add(self, item: int) -> None:
        if item not in self._pos:
            self._pos[item] = len(self._items)
            self._items.append(item)

    def discard(self, item: int) -> None:
        pos = self._pos.pop(item, None)
        if pos is None:
            return
        last = self._items.pop()
        if pos < len(self._items):
            self._items[pos] = last
            self._pos[last] = pos

    def choice(self, rng: np.random.Generator) -> int:
        return self._items[int(rng.integers(len(self._items)))]


class _ReducedGraph:
    """Bookkeeping of reduced degrees during triangulation."""

    def __init__(self, system: SparseSystem):
        self.system = system
        n = system.num_vars
        self.var_eqs: List[List[int]] = [[] for _ in range(n)]
        for e, eq in enumerate(system.equations):
            for v in eq.indices:
                self.var_eqs[v].append(e)
        self.eq_degree = [eq.degree for eq in system.equations]
        self.var_degree = [len(eqs) for eqs in self.var_eqs]
        self.live = [d > 0 for d in self.eq_degree]
        self.active = _IndexedSet(range(n))
        self.ripple = _IndexedSet(e for e, d in enumerate(self.eq_degree) if d == 1)
        self.cloud = _IndexedSet(e for e, d in enumerate(self.eq_degree) if d >= 2)

    def active_vars_of(self, e: int) -> List[int]:
        return [v for v in self.system.equations[e].indices if v in self.active]

    def _retire(self, e: int) -> None:
        self.live[e] = False
        self.ripple.discard(e)
        self.cloud.discard(e)
        for v in self.active_vars_of(e):
            self.var_degree[v] -= 1

    def remove_variable(self, v: int, pivot: Optional[int] = None) -> None:
        if pivot is not None:
            self._retire(pivot)
        self.active.discard(v)
        for e in self.var_eqs[v]:
            if not self.live[e]:
                continue
            self.eq_degree[e] -= 1
            d = self.eq_degree[e]
            if d == 1:
                self.cloud.discard(e)
                self.ripple.add(e)
            elif d == 0:
                self._retire(e)

    def ripple_variable(self, e: int) -> int:
        (v,) = self.active_vars_of(e)
        return v


def _pick_random(graph: _ReducedGraph, rng: np.random.Generator) -> int:
    return graph.active.choice(rng)


def _pick_max_reduced(graph: _ReducedGraph, rng: np.random.Generator) -> int:
    candidates = sorted(graph.active)
    degrees = np.array([graph.var_degree[v] for v in candidates])
    best = np.flatnonzero(degrees == degrees.max())
    return candidates[int(best[rng.integers(best.size)])]


def _pick_max_accumulated(graph: _ReducedGraph, rng: np.random.Generator) -> int:
    if len(graph.cloud) == 0:
        return _pick_random(graph, rng)
    cloud = sorted(graph.cloud)
    min_degree = min(graph.eq_degree[e] for e in cloud)
    lightest = [e for e in cloud if graph.eq_degree[e] == min_degree]
    accumulated = np.array(
        [sum(graph.var_degree[v] for v in graph.active_vars_of(e)) for e in lightest]
    )
    best = np.flatnonzero(accumulated == accumulated.max())
    chosen = lightest[int(best[rng.integers(best.size)])]
    neighbors = graph.active_vars_of(chosen)
    return neighbors[int(rng.integers(len(neighbors)))]


def _pick_max_component(graph: _ReducedGraph, rng: np.random.Generator) -> int:
    pairs = [graph.active_vars_of(e) for e in sorted(graph.cloud) if graph.eq_degree[e] == 2]
    if not pairs:
        return _pick_random(graph, rng)
    components = UnionFind()
    for a, b in pairs:
        components.union(a, b)
    sizes: Dict[int, int] = {}
    members: Dict[int, List[int]] = {}
    for a, b in pairs:
        root = components[a]
        sizes[root] = sizes.get(root, 0) + 1
        bucket = members.setdefault(root, [])
        for v in (a, b):
            if v not in bucket:
                bucket.append(v)
    roots = list(sizes)
    counts = np.array([sizes[r] for r in roots])
    best = np.flatnonzero(counts == counts.max())
    root = roots[int(best[rng.integers(best.size)])]
    bucket = sorted(members[root])
    return bucket[int(rng.integers(len(bucket)))]


_PICKERS: Dict[Strategy, Callable[[_ReducedGraph, np.random.Generator], int]] = {
    Strategy.RANDOM: _pick_random,
    Strategy.MAX_REDUCED: _pick_max_reduced,
    Strategy.MAX_ACCUMULATED: _pick_max_accumulated,
    Strategy.MAX_COMPONENT: _pick_max_component,
}


def triangulate(
    system: SparseSystem,
    strategy: Strategy = Strategy.RANDOM,
    rng: Optional[np.random.Generator] = None,
) -> Triangulation:
    """Mark every variable resolvable or inactive, one per step.

    Ripple equations are chosen uniformly at random; when the ripple is empty
    the strategy picks the variable to inactivate.

    Args:
        system: System to triangulate (only its structure is read)
        strategy: Inactivation strategy
        rng: Random stream for tie-breaks; a fixed default seed when omitted

    Returns:
        Triangulation with pivots, inactive variables and the step trace
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    strategy = Strategy(strategy)
    graph = _ReducedGraph(system)
    result = Triangulation()
    pick = _PICKERS[strategy]
    u = system.num_vars
    while u > 0:
        ripple, cloud = len(graph.ripple), len(graph.cloud)
        if ripple:
            e = graph.ripple.choice(rng)
            v = graph.ripple_variable(e)
            graph.remove_variable(v, pivot=e)
            result.pivots.append((v, e))
            result.trace.append(TraceStep(u, "resolve", v, ripple, cloud))
        else:
            v = pick(graph, rng)
            graph.remove_variable(v)
            result.inactive.append(v)
            result.trace.append(TraceStep(u, "inactivate", v, ripple, cloud))
            logger.debug("Inactivated variable %d at u=%d (%s)", v, u, strategy.value)
        u -= 1
    return result


def _solve_structure(system: SparseSystem, tri: Triangulation) -> InactivationResult:
    spec = system.spec
    inactive_col = {v: j for j, v in enumerate(tri.inactive)}
    alpha = len(inactive_col)
    width = alpha + system.payload_width

    # Each resolved variable as a row over [inactive variables | payload].
    expressed: Dict[int, np.ndarray] = {}
    pivot_rows = set()
    for v, e in tri.pivots:
        eq = system.equations[e]
        pivot_rows.add(e)
        row = np.zeros(width, dtype=np.int64)
        row[alpha:] = system.rhs[e]
        own = 0
        coeffs, parts = [], []
        for var, coef in zip(eq.indices, eq.coefficients):
            if var == v:
                own = coef
            elif var in inactive_col:
                unit = np.zeros(width, dtype=np.int64)
                unit[inactive_col[var]] = 1
                coeffs.append(coef)
                parts.append(unit)
            else:
                coeffs.append(coef)
                parts.append(expressed[var])
        if parts:
            row = np.bitwise_xor(row, combine_rows(coeffs, np.vstack(parts), spec))
        if own != 1:
            row = combine_rows([field_inv(own, spec)], row.reshape(1, -1), spec)
        expressed[v] = np.asarray(row, dtype=np.int64).reshape(-1)

    # Remaining equations give the dense core over the inactive variables.
    core_rows = []
    for e, eq in enumerate(system.equations):
        if e in pivot_rows:
            continue
        row = np.zeros(width, dtype=np.int64)
        row[alpha:] = system.rhs[e]
        coeffs, parts = [], []
        for var, coef in zip(eq.indices, eq.coefficients):
            if var in inactive_col:
                unit = np.zeros(width, dtype=np.int64)
                unit[inactive_col[var]] = 1
                parts.append(unit)
            else:
                parts.append(expressed[var])
            coeffs.append(coef)
        if parts:
            row = np.bitwise_xor(row, combine_rows(coeffs, np.vstack(parts), spec))
        core_rows.append(np.asarray(row, dtype=np.int64).reshape(-1))

    core = np.vstack(core_rows) if core_rows else np.zeros((0, width), dtype=np.int64)
    report = gaussian_solve(FieldMatrix(core[:, :alpha].reshape(core.shape[0], alpha), spec), core[:, alpha:])
    if not (report.consistent and report.rank == alpha):
        return InactivationResult(False, alpha, None, tri.trace, report.rank)

    inactive_values = report.solution.reshape(alpha, system.payload_width)
    solution = np.zeros((system.num_vars, system.payload_width), dtype=np.int64)
    for v, j in inactive_col.items():
        solution[v] = inactive_values[j]
    for v, row in expressed.items():
        value = row[alpha:].copy()
        if alpha:
            value = np.bitwise_xor(value, combine_rows(row[:alpha], inactive_values, spec).reshape(-1))
        solution[v] = value
    return InactivationResult(True, alpha, solution, tri.trace, report.rank)


def inactivation_decode(
    system: SparseSystem,
    strategy: Strategy = Strategy.RANDOM,
    rng: Optional[np.random.Generator] = None,
) -> InactivationResult:
    """Decode a sparse system by triangulation plus elimination of the inactive core.

    Returns:
        InactivationResult; success iff the system has full column rank and is
        consistent. ``solution`` has shape (num_vars, payload_width).
    """
    tri = triangulate(system, strategy, rng)
    result = _solve_structure(system, tri)
    logger.debug(
        "Inactivation decode: n=%d m=%d y=%d success=%s",
        system.num_vars, system.num_equations, result.inactivations, result.success,
    )
    return result


@dataclass
class StrategySummary:
    strategy: Strategy
    trials: int
    mean: float
    stderr: float


def strategy_compare(
    make_system: Callable[[np.random.Generator], SparseSystem],
    strategies: Sequence[Strategy],
    trials: int,
    rng: np.random.Generator,
) -> Dict[Strategy, StrategySummary]:
    """Mean inactivation count per strategy on shared random systems.

    Every trial draws one system and triangulates it once per strategy, each
    with its own child stream.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    counts = {Strategy(s): [] for s in strategies}
    for _ in range(trials):
        system = make_system(rng)
        for s in counts:
            child = np.random.default_rng(rng.integers(2**63))
            counts[s].append(triangulate(system, s, child).num_inactivations)
    summary = {}
    for s, values in counts.items():
        arr = np.asarray(values, dtype=float)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        summary[s] = StrategySummary(s, arr.size, float(arr.mean()), stderr)
    return summary


def trace_to_rows(trace: Sequence[TraceStep]) -> List[List]:
    """Rows (u, action, variable, ripple, cloud) for TSV export."""
    return [[step.u, step.action, step.variable, step.ripple, step.cloud] for step in trace]
