"""Simulated-annealing design of output degree distributions.

A candidate is scored by Υ = Ê[Y] + f_p(P̂): the estimated number of
inactivations plus a penalty that is zero while the failure-probability
estimate P̂ stays below the target and grows as b(1 - Pf*/P̂) above it.

Contexts:
- LT: Ê[Y] from the binomial approximation, P̂ from the ML lower bound;
- Raptor: Ê[Y] from the surrogate LT code, P̂ from the union upper bound
  over the outer code's weight enumerator.

Search families:
- free: any distribution on the allowed degrees; moves shift a small mass
  quantum between two degrees, then the mean constraint is projected;
- truncated-rsd: robust soliton parameters (c, delta) searched in log-space.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from analysis.failure_bounds import lt_ml_lower_bound, raptor_upper_bound
from analysis.fl_analysis import binomial_approx, expected_inactivations_dp, raptor_expected_inactivations
from analysis.spectra import WeightEnumerator, we_exhaustive, we_hamming, we_linear_random
from codes.degree_dists import (
    DegreeDistribution,
    DistributionError,
    RsdParams,
    resolve_distribution,
    truncated_rsd,
)
from codes.raptor_codes import Precode, build_precode
from core.config import settings
from models.configs import DesignSpec

logger = logging.getLogger(__name__)

MEAN_TOLERANCE = 1e-9
TEMPERATURE_PROBES = 30
RSD_STEP = 0.15


class InfeasibleDesignError(RuntimeError):
    """Raised when a design run must be feasible and is not."""


def penalty(p_hat: float, target: float, scale: float) -> float:
    """f_p = b(1 - Pf*/P̂) when P̂ >= Pf*, else 0."""
    if p_hat < target:
        return 0.0
    return scale * (1.0 - target / p_hat)


def accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: improvements always, worsening moves with probability exp(-ΔΥ/T)."""
    if delta <= 0:
        return True
    if not math.isfinite(delta) or temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


def _outer_enumerator(precode: Precode) -> WeightEnumerator:
    if precode.kind == "hamming":
        return we_hamming(int(precode.params["t"]))
    if precode.kind == "linear-random":
        return we_linear_random(precode.h, precode.k, precode.spec.order)
    return we_exhaustive(precode.generator)


@dataclass
class DesignContext:
    """How candidates are scored."""

    kind: str
    k: int
    target: float
    scale: float
    eps_rel: float = 0.0
    delta: int = 0
    precode: Optional[Precode] = None
    we_outer: Optional[WeightEnumerator] = None

    @classmethod
    def from_spec(cls, spec: DesignSpec) -> "DesignContext":
        if spec.context == "lt":
            scale = spec.penalty or settings.SA_PENALTY_LT
            return cls("lt", spec.k, spec.target_pf, scale, eps_rel=spec.eps_rel)
        scale = spec.penalty or settings.SA_PENALTY_RAPTOR
        precode = build_precode(spec.precode, spec.k, spec.precode_params, np.random.default_rng(spec.seed))
        return cls(
            "raptor", spec.k, spec.target_pf, scale, delta=spec.delta,
            precode=precode, we_outer=_outer_enumerator(precode),
        )

    @property
    def receipts(self) -> int:
        if self.kind == "lt":
            return int(round(self.k * (1.0 + self.eps_rel)))
        return self.k + self.delta

    @property
    def dp_size(self) -> int:
        """Symbols the exact DP walks over (k for LT, h intermediates for Raptor)."""
        return self.k if self.kind == "lt" else self.precode.h

    def estimate(self, dist: DegreeDistribution) -> Tuple[float, float]:
        """(Ê[Y], P̂) for one candidate."""
        if self.kind == "lt":
            inact = binomial_approx(self.k, self.receipts, dist).expected_inactivations
            bound = lt_ml_lower_bound(self.k, self.eps_rel, dist, m=self.receipts)
        else:
            inact = raptor_expected_inactivations(self.precode, dist, self.delta, method="binomial")
            bound = raptor_upper_bound(self.we_outer, dist, self.precode.spec.order, self.k, self.delta)
        return inact, bound

    def exact_inactivations(self, dist: DegreeDistribution) -> float:
        if self.kind == "lt":
            return expected_inactivations_dp(self.k, self.receipts, dist).expected_inactivations
        return raptor_expected_inactivations(self.precode, dist, self.delta, method="dp")


def allowed_degrees(spec: DesignSpec) -> List[int]:
    return sorted(set(spec.support)) if spec.support else list(range(1, spec.dmax + 1))


def satisfies_constraints(dist: DegreeDistribution, spec: DesignSpec) -> bool:
    """Support, maximum degree and mean constraints, checked exactly."""
    if dist.dmax > spec.dmax:
        return False
    allowed = set(allowed_degrees(spec))
    if any(d not in allowed for d in dist.support):
        return False
    if spec.pinned_mean is not None:
        return abs(dist.mean - spec.pinned_mean) <= MEAN_TOLERANCE
    return dist.mean <= spec.max_mean + MEAN_TOLERANCE


def objective(dist: DegreeDistribution, spec: DesignSpec, context: DesignContext) -> float:
    """Υ = Ê[Y] + f_p(P̂); infinite for candidates that break a hard constraint."""
    if not satisfies_constraints(dist, spec):
        return math.inf
    inact, bound = context.estimate(dist)
    return inact + penalty(bound, context.target, context.scale)


class FreeFamily:
    """Probability vectors over the allowed degrees, mean-projected after every move."""

    def __init__(self, spec: DesignSpec, quantum: Optional[float] = None):
        self.spec = spec
        self.degrees = np.asarray(allowed_degrees(spec))
        self.quantum = quantum or settings.SA_MASS_QUANTUM
        self.mean_cap = spec.pinned_mean if spec.pinned_mean is not None else spec.max_mean
        if self.mean_cap < self.degrees[0] or (spec.pinned_mean is not None and spec.pinned_mean > self.degrees[-1]):
            raise ValueError(f"Mean {self.mean_cap} is unreachable on degrees {self.degrees.tolist()}")

    def project(self, p: np.ndarray) -> np.ndarray:
        """Renormalize, then mix with an extreme point mass to meet the mean constraint."""
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        mean = float(p @ self.degrees)
        target = self.spec.pinned_mean
        if target is None:
            if mean <= self.mean_cap:
                return p
            target = self.mean_cap
        out = p.copy()
        if mean > target:
            w = (mean - target) / (mean - self.degrees[0])
            out *= 1.0 - w
            out[0] += w
        elif mean < target:
            w = (target - mean) / (self.degrees[-1] - mean)
            out *= 1.0 - w
            out[-1] += w
        return out / out.sum()

    def initial(self) -> np.ndarray:
        if self.spec.initial:
            start = resolve_distribution(self.spec.initial, self.spec.k)
            p = np.array([start[int(d)] for d in self.degrees])
            if p.sum() > 0:
                return self.project(p)
            logger.warning("Initial distribution %s has no mass on the allowed degrees", self.spec.initial)
        return self.project(np.full(self.degrees.size, 1.0 / self.degrees.size))

    def propose(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.degrees.size < 2:
            return state.copy()
        a, b = rng.choice(self.degrees.size, size=2, replace=False)
        moved = min(self.quantum, state[a])
        nxt = state.copy()
        nxt[a] -= moved
        nxt[b] += moved
        return self.project(nxt)

    def distribution(self, state: np.ndarray) -> DegreeDistribution:
        probs = np.zeros(self.spec.dmax)
        probs[self.degrees - 1] = state
        probs[probs < 1e-15] = 0.0
        return DegreeDistribution(probs / probs.sum(), name="sa-design")


class TruncatedRsdFamily:
    """Truncated robust soliton distributions, state (log c, log delta)."""

    def __init__(self, spec: DesignSpec):
        if spec.support or spec.pinned_mean is not None:
            raise ValueError("The truncated-rsd family takes no support mask or pinned mean")
        self.spec = spec

    def initial(self) -> np.ndarray:
        return np.log(np.array([0.1, 0.05]))

    def propose(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        nxt = state.copy()
        nxt[int(rng.integers(2))] += RSD_STEP * rng.standard_normal()
        nxt[1] = min(nxt[1], math.log(0.999))
        return nxt

    def distribution(self, state: np.ndarray) -> Optional[DegreeDistribution]:
        c, delta = np.exp(state)
        try:
            return truncated_rsd(RsdParams(self.spec.k, float(c), float(delta)), min(self.spec.dmax, self.spec.k))
        except DistributionError:
            return None


def make_family(spec: DesignSpec):
    return TruncatedRsdFamily(spec) if spec.family == "truncated-rsd" else FreeFamily(spec)


@dataclass
class DesignResult:
    """Outcome of one annealing run.

    Attributes:
        best: Best distribution seen
        objective: Υ at the best distribution
        expected_inactivations: Ê[Y] at the best distribution
        bound: P̂ at the best distribution
        feasible: bound < target
        trajectory: Rows (step, T, Υ, best Υ, Ê[Y], bound), one per sweep
        verified_inactivations: Exact DP value, once verify_design ran
    """

    best: DegreeDistribution
    objective: float
    expected_inactivations: float
    bound: float
    feasible: bool
    trajectory: List[List[float]] = field(default_factory=list)
    verified_inactivations: Optional[float] = None
    chain: int = 0


def _score(family, state, spec: DesignSpec, context: DesignContext) -> Tuple[float, float, float]:
    dist = family.distribution(state)
    if dist is None or not satisfies_constraints(dist, spec):
        return math.inf, math.inf, 1.0
    inact, bound = context.estimate(dist)
    return inact + penalty(bound, context.target, context.scale), inact, bound


def initial_temperature(family, state, spec: DesignSpec, context: DesignContext, rng: np.random.Generator) -> float:
    """T such that the average worsening probe move is accepted with SA_INITIAL_ACCEPTANCE."""
    base, _, _ = _score(family, state, spec, context)
    worsening = []
    for _ in range(TEMPERATURE_PROBES):
        value, _, _ = _score(family, family.propose(state, rng), spec, context)
        if math.isfinite(value) and value > base:
            worsening.append(value - base)
    if not worsening or not math.isfinite(base):
        return 1.0
    return -float(np.mean(worsening)) / math.log(settings.SA_INITIAL_ACCEPTANCE)


def anneal(
    spec: DesignSpec,
    context: DesignContext,
    rng: np.random.Generator,
    sweeps: Optional[int] = None,
    moves_per_sweep: Optional[int] = None,
) -> DesignResult:
    """Run one annealing chain with geometric cooling.

    Returns:
        DesignResult; ``feasible`` is False when the best candidate's bound is
        not below the target.
    """
    family = make_family(spec)
    sweeps = sweeps or spec.sweeps or settings.SA_SWEEPS
    moves = moves_per_sweep or settings.SA_MOVES_PER_SWEEP
    state = family.initial()
    current, inact, bound = _score(family, state, spec, context)
    temperature = initial_temperature(family, state, spec, context, rng)
    best_state, best = state, (current, inact, bound)
    trajectory = []
    logger.info("Annealing %s/%s design: T0=%.4g, Υ0=%.4g", spec.context, spec.family, temperature, current)

    for sweep in tqdm(range(sweeps), desc="anneal", disable=not settings.SHOW_PROGRESS):
        for _ in range(moves):
            candidate = family.propose(state, rng)
            value, c_inact, c_bound = _score(family, candidate, spec, context)
            if accept(value - current, temperature, rng):
                state, current, inact, bound = candidate, value, c_inact, c_bound
                if value < best[0]:
                    best_state, best = candidate, (value, c_inact, c_bound)
                    logger.debug("New best Υ=%.6g (Ê[Y]=%.4g, P=%.3g)", value, c_inact, c_bound)
        trajectory.append([sweep, temperature, current, best[0], inact, bound])
        temperature *= settings.SA_COOLING

    best_dist = family.distribution(best_state)
    feasible = bool(best[2] < context.target)
    if feasible:
        logger.info("Design accepted: Υ=%.6g, bound=%.3g < %.3g", best[0], best[2], context.target)
    else:
        logger.warning("Design infeasible: bound %.3g >= target %.3g", best[2], context.target)
    return DesignResult(best_dist, best[0], best[1], best[2], feasible, trajectory)


def should_verify(spec: DesignSpec, context: DesignContext) -> bool:
    """Explicit ``verify`` wins; otherwise verify while the DP fits DP_VERIFY_MAX_K."""
    if spec.verify is not None:
        return spec.verify
    return context.dp_size <= settings.DP_VERIFY_MAX_K


def verify_design(result: DesignResult, context: DesignContext) -> DesignResult:
    """Record the exact DP value of Ê[Y] for the final design."""
    result.verified_inactivations = context.exact_inactivations(result.best)
    logger.info(
        "Verified design: E[Y]=%.4f (binomial estimate %.4f)",
        result.verified_inactivations, result.expected_inactivations,
    )
    return result


def _chain_worker(args: Tuple[str, int]) -> DesignResult:
    spec_json, chain = args
    spec = DesignSpec.model_validate(json.loads(spec_json))
    return _run_chain(spec, DesignContext.from_spec(spec), chain)


def _run_chain(spec: DesignSpec, context: DesignContext, chain: int) -> DesignResult:
    seed_seq = np.random.SeedSequence(entropy=spec.seed, spawn_key=(chain,))
    result = anneal(spec, context, np.random.default_rng(seed_seq))
    result.chain = chain
    return result


def pick_best(results: Sequence[DesignResult]) -> DesignResult:
    """Feasible designs first, then the lowest Υ, then the lowest chain index."""
    return min(results, key=lambda r: (not r.feasible, r.objective, r.chain))


def run_chains(spec: DesignSpec, chains: Optional[int] = None, workers: Optional[int] = None) -> DesignResult:
    """Independent chains on derived seeds; the best one is verified with the exact DP.

    Verification is skipped (``verified_inactivations`` stays None) when
    ``should_verify`` says no.
    """
    chains = chains or spec.chains
    workers = workers or settings.FOUNTAIN_WORKERS
    context = DesignContext.from_spec(spec)
    if workers > 1 and chains > 1:
        spec_json = spec.model_dump_json()
        with ProcessPoolExecutor(max_workers=min(workers, chains)) as executor:
            results = list(executor.map(_chain_worker, [(spec_json, c) for c in range(chains)]))
    else:
        results = [_run_chain(spec, context, c) for c in range(chains)]
    best = pick_best(results)
    logger.info("Best of %d chains: chain %d, Υ=%.6g, feasible=%s", chains, best.chain, best.objective, best.feasible)
    if not should_verify(spec, context):
        logger.info(
            "Skipping exact DP verification for %d symbols (DP_VERIFY_MAX_K=%d, verify=%s)",
            context.dp_size, settings.DP_VERIFY_MAX_K, spec.verify,
        )
        return best
    return verify_design(best, context)
