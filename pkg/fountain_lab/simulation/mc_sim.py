"""Erasure channels and the seeded Monte Carlo harness.

Every trial owns a random stream derived from (master seed, grid point,
trial index), so a plan produces the same rows for any worker count. Trials
are grouped in batches; the stop rule (target failures or maximum trials) is
checked only between batches.

Two receipt modes exist:
- fixed receipts: exactly m = k + δ (or k(1+ε_rel)) symbols reach the decoder;
- channel: ``transmitted`` symbols are sent and each is erased with probability ε.
"""

import json
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from codes.degree_dists import resolve_distribution
from codes.gf_linalg import spec_for_order
from codes.inactivation import Strategy, inactivation_decode
from codes.lt_lrfc import (
    LtGeneratorColumn,
    encode_columns,
    inactivation_ml_decode,
    lrfc_columns,
    lt_columns,
    ml_decode,
    peel_decode,
    received_from_columns,
)
from codes.raptor_codes import Precode, build_precode, concat_scheme, constraint_sparse_system, raptor_decode
from core.config import settings
from models.configs import ChannelSpec, CodeConfig, TrialPlan
from models.results import EstimateRow

logger = logging.getLogger(__name__)

RAPTOR_KINDS = ("raptor", "fixed_rate_raptor", "inactivation")

# (success, inactivations) per series label
TrialOutcome = Tuple[Tuple[bool, int], ...]


def erase(channel: ChannelSpec, symbols, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Pass symbols through a memoryless erasure channel.

    A 1-D input with ``packet_len`` > 1 is cut into packets that share one
    erasure decision; 2-D input is treated as one packet per row.

    Returns:
        (indices of surviving symbols or packets, surviving rows)
    """
    values = np.asarray(symbols)
    if values.ndim == 1 and channel.packet_len > 1:
        if values.size % channel.packet_len:
            raise ValueError(f"{values.size} symbols do not fill packets of {channel.packet_len}")
        values = values.reshape(-1, channel.packet_len)
    elif values.ndim == 2 and channel.packet_len > 1 and values.shape[1] != channel.packet_len:
        raise ValueError(f"Rows of {values.shape[1]} symbols, packets of {channel.packet_len}")
    keep = rng.random(values.shape[0]) >= channel.erasure_probability
    idx = np.flatnonzero(keep)
    return idx, values[idx]


def capacity(channel: ChannelSpec) -> Tuple[float, float]:
    """Capacity as (symbols per use, bits per use)."""
    symbols = 1.0 - channel.erasure_probability
    return symbols, symbols * math.log2(channel.q) * channel.packet_len


class TrialCode:
    """A CodeConfig resolved into the objects every trial reuses."""

    def __init__(self, config: CodeConfig, channel: Optional[ChannelSpec] = None):
        self.config = config
        self.channel = channel
        self.k = config.k
        self.spec = spec_for_order(config.q)
        self.strategy = Strategy(config.strategy)
        self.dist = resolve_distribution(config.dist, config.k) if config.kind not in ("lrfc", "concat") else None
        self.scheme = None
        self.precode: Optional[Precode] = None
        params = {"q": config.q, **config.precode_params}
        if config.kind == "concat":
            n_c = params.get("n_c")
            self.scheme = concat_scheme(config.precode, config.k, config.q, None if n_c is None else int(n_c))
        elif config.precode and not config.ensemble:
            construction_rng = np.random.default_rng(int(params.get("seed", 0)))
            self.precode = build_precode(config.precode, config.k, params, construction_rng)

    @property
    def labels(self) -> List[str]:
        if self.config.kind == "inactivation":
            return [Strategy(s).value for s in self.config.strategies]
        return [""]

    def draw_precode(self, rng: np.random.Generator) -> Optional[Precode]:
        if self.config.precode and self.config.ensemble:
            params = {"q": self.config.q, **self.config.precode_params}
            return build_precode(self.config.precode, self.k, params, rng)
        return self.precode

    def draw_source(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.spec.order, size=(self.k, 1))

    def draw_columns(self, precode: Optional[Precode], count: int, rng: np.random.Generator) -> List[LtGeneratorColumn]:
        kind = self.config.kind
        if kind in ("lrfc", "concat"):
            return lrfc_columns(self.k, count, rng, self.spec)
        if kind == "lt":
            return lt_columns(self.dist, self.k, count, rng, self.spec)
        return lt_columns(self.dist, precode.h, count, rng, precode.spec)

    def stream_columns(self, precode: Optional[Precode], positions: Sequence[int], rng: np.random.Generator) -> List[LtGeneratorColumn]:
        """Columns of the transmitted stream at the given positions."""
        if self.scheme is None:
            return self.draw_columns(precode, len(positions), rng)
        prefix = self.scheme.prefix_columns()
        head = [prefix[p] for p in positions if p < self.scheme.n_c]
        tail = sum(1 for p in positions if p >= self.scheme.n_c)
        return head + self.draw_columns(precode, tail, rng)

    def encode(self, precode: Optional[Precode], source: np.ndarray, columns) -> np.ndarray:
        if self.config.kind in RAPTOR_KINDS:
            return encode_columns(precode.encode(source), columns, precode.spec)
        return encode_columns(source, columns, self.spec)

    def decode(self, precode: Optional[Precode], columns, values, rng: np.random.Generator) -> Tuple[Optional[np.ndarray], int]:
        """Return (recovered source or None, inactivations)."""
        if self.config.kind in RAPTOR_KINDS:
            rx = received_from_columns(columns, values, precode.h, precode.spec)
            result = raptor_decode(precode, rx, self.strategy, rng)
            return (result.source if result.success else None), result.inactivations
        rx = received_from_columns(columns, values, self.k, self.spec)
        if self.config.decoder == "ml":
            return ml_decode(rx), 0
        if self.config.decoder == "peeling":
            recovered, _ = peel_decode(rx, rng)
            return recovered, 0
        result = inactivation_ml_decode(rx, self.strategy, rng)
        return (result.solution if result.success else None), result.inactivations


def _recovered(source: np.ndarray, recovered: Optional[np.ndarray]) -> bool:
    return recovered is not None and np.array_equal(
        np.asarray(recovered).reshape(-1), source.reshape(-1)
    )


def _receipt_positions(code: TrialCode, m: int, rng: np.random.Generator) -> List[int]:
    """Stream positions of the first m symbols that survive the channel."""
    if code.scheme is None or code.channel is None:
        return list(range(m))
    eps = code.channel.erasure_probability
    if eps >= 1.0:
        raise ValueError("No symbol survives a channel with erasure probability 1")
    gaps = rng.geometric(1.0 - eps, size=m)
    return [int(p) for p in np.cumsum(gaps) - 1]


def fixed_receipts_trial(
    code: TrialCode,
    m: int,
    rng: np.random.Generator,
    forced_columns: Optional[List[LtGeneratorColumn]] = None,
) -> Tuple[bool, int]:
    """Decode exactly m received symbols.

    ``forced_columns`` are received first; the rest are drawn at random. For
    the concatenated scheme the receipts are the first m survivors of the
    channel, so precode symbols arrive with their channel statistics.

    Returns:
        (success, inactivations)
    """
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    precode = code.draw_precode(rng)
    source = code.draw_source(rng)
    forced = list(forced_columns or [])
    if len(forced) > m:
        raise ValueError("More forced columns than receipts")
    if m == 0:
        return False, 0
    if code.scheme is not None:
        columns = forced + code.stream_columns(precode, _receipt_positions(code, m - len(forced), rng), rng)
    else:
        columns = forced + code.draw_columns(precode, m - len(forced), rng)
    values = code.encode(precode, source, columns)
    recovered, y = code.decode(precode, columns, values, rng)
    return _recovered(source, recovered), y


def channel_trial(code: TrialCode, transmitted: int, eps: float, rng: np.random.Generator) -> Tuple[bool, int]:
    """Send ``transmitted`` symbols over an erasure channel and decode the survivors."""
    precode = code.draw_precode(rng)
    source = code.draw_source(rng)
    if code.scheme is not None and transmitted < code.scheme.n_c:
        raise ValueError(f"Need at least n_c={code.scheme.n_c} transmitted symbols")
    columns = code.stream_columns(precode, range(transmitted), rng)
    values = code.encode(precode, source, columns)
    idx, survivors = erase(ChannelSpec(erasure_probability=eps, q=code.config.q), values, rng)
    if idx.size == 0:
        return False, 0
    recovered, y = code.decode(precode, [columns[i] for i in idx], survivors, rng)
    return _recovered(source, recovered), y


def strategy_trial(code: TrialCode, m: int, rng: np.random.Generator, point: int, trial: int, seed: int) -> TrialOutcome:
    """One Raptor constraint system decoded once per configured strategy."""
    precode = code.draw_precode(rng)
    source = code.draw_source(rng)
    columns = code.draw_columns(precode, m, rng)
    values = code.encode(precode, source, columns)
    system = constraint_sparse_system(precode, received_from_columns(columns, values, precode.h, precode.spec))
    outcomes = []
    for s_index, label in enumerate(code.labels, start=1):
        child = _trial_rng(seed, point, trial, s_index)
        result = inactivation_decode(system, Strategy(label), child)
        ok = result.success and _recovered(source, precode.source_from_intermediate(result.solution))
        outcomes.append((ok, result.inactivations))
    return tuple(outcomes)


def _trial_rng(seed: int, point: int, trial: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(point, trial, *extra)))


def receipts_for(plan: TrialPlan, x: float) -> int:
    """Number of received symbols at grid value x in fixed-receipt sweeps."""
    k = plan.code.k
    if plan.sweep == "overhead":
        m = k + int(round(x))
    else:
        m = int(math.floor(k * (1.0 + x) + 0.5))
    if m < 0:
        raise ValueError(f"Grid value {x} gives a negative number of receipts")
    return m


def run_trial(plan: TrialPlan, code: TrialCode, point: int, trial: int) -> TrialOutcome:
    """Run one trial of one grid point on its own random stream."""
    x = plan.grid[point]
    rng = _trial_rng(plan.seed, point, trial)
    if plan.code.kind == "inactivation":
        return strategy_trial(code, receipts_for(plan, x), rng, point, trial, plan.seed)
    if plan.sweep == "erasure":
        transmitted = plan.transmitted or plan.code.n
        return (channel_trial(code, transmitted, x, rng),)
    return (fixed_receipts_trial(code, receipts_for(plan, x), rng),)


@lru_cache(maxsize=4)
def _context(plan_json: str) -> Tuple[TrialPlan, TrialCode]:
    plan = TrialPlan.model_validate(json.loads(plan_json))
    return plan, TrialCode(plan.code, plan.channel)


def _trial_worker(args: Tuple[str, int, int]) -> TrialOutcome:
    plan_json, point, trial = args
    plan, code = _context(plan_json)
    return run_trial(plan, code, point, trial)


class _Tally:
    """Order-independent per-label counts."""

    def __init__(self):
        self.trials = 0
        self.failures = 0
        self.y_sum = 0.0
        self.y_sq_sum = 0.0
        self.histogram: Counter = Counter()

    def add(self, success: bool, y: int) -> None:
        self.trials += 1
        self.failures += 0 if success else 1
        self.y_sum += y
        self.y_sq_sum += y * y
        self.histogram[y] += 1

    def row(self, x: float, label: str) -> EstimateRow:
        top = max(self.histogram) if self.histogram else -1
        hist = [self.histogram.get(y, 0) for y in range(top + 1)]
        return EstimateRow.from_counts(x, self.trials, self.failures, self.y_sum, self.y_sq_sum, hist, label)


def run_plan(plan: TrialPlan, workers: Optional[int] = None) -> List[EstimateRow]:
    """Estimate the failure probability and inactivation statistics per grid point.

    Args:
        plan: Validated trial plan
        workers: Process count; defaults to plan.workers, then FOUNTAIN_WORKERS

    Returns:
        One EstimateRow per grid point (per point and strategy for the
        ``inactivation`` kind)
    """
    workers = workers or plan.workers or settings.FOUNTAIN_WORKERS
    plan_json = plan.model_dump_json()
    code = TrialCode(plan.code, plan.channel)
    labels = code.labels
    rows: List[EstimateRow] = []
    logger.info(
        "Running %s plan over %d points (seed=%d, workers=%d)",
        plan.code.kind, len(plan.grid), plan.seed, workers,
    )
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for point in tqdm(range(len(plan.grid)), desc="grid", disable=not settings.SHOW_PROGRESS):
            tallies: Dict[str, _Tally] = {label: _Tally() for label in labels}
            done = 0
            while done < plan.max_trials:
                size = min(plan.batch_size, plan.max_trials - done)
                trials = range(done, done + size)
                if executor is None:
                    outcomes = [run_trial(plan, code, point, t) for t in trials]
                else:
                    args = [(plan_json, point, t) for t in trials]
                    outcomes = list(executor.map(_trial_worker, args, chunksize=max(1, size // (4 * workers))))
                for outcome in outcomes:
                    for label, (success, y) in zip(labels, outcome):
                        tallies[label].add(success, y)
                done += size
                if max(t.failures for t in tallies.values()) >= plan.target_failures:
                    break
            x = plan.grid[point]
            for label in labels:
                rows.append(tallies[label].row(x, label))
            logger.info("Point x=%g done: %d trials, %d failures", x, done, tallies[labels[0]].failures)
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


def chi_square_pvalue(observed: Sequence[int], expected_probs: Sequence[float], min_expected: float = 5.0) -> float:
    """χ² goodness-of-fit p-value of a histogram against a distribution.

    Bins are merged left to right until each holds at least ``min_expected``
    expected counts; the remainder joins the last bin. ``expected_probs`` is
    renormalized to the observed total.
    """
    obs = np.asarray(observed, dtype=float)
    probs = np.asarray(expected_probs, dtype=float)
    size = max(obs.size, probs.size)
    obs = np.pad(obs, (0, size - obs.size))
    probs = np.pad(probs, (0, size - probs.size))
    total = obs.sum()
    if total <= 0 or probs.sum() <= 0:
        raise ValueError("Need a nonempty histogram and a nonzero distribution")
    expected = total * probs / probs.sum()

    bins_obs: List[float] = []
    bins_exp: List[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_obs.append(acc_o)
            bins_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_o or acc_e:
        if bins_obs:
            bins_obs[-1] += acc_o
            bins_exp[-1] += acc_e
        else:
            bins_obs.append(acc_o)
            bins_exp.append(acc_e)
    if len(bins_obs) < 2:
        return 1.0
    return float(stats.chisquare(bins_obs, bins_exp).pvalue)
