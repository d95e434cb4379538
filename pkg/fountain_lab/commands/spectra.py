"""Distance spectra of fixed-rate Raptor ensembles and their component codes."""

import asyncio
import logging
from typing import Any, Dict, List, Tuple

from analysis.failure_bounds import hamming_cowef
from analysis.spectra import (
    RatePair,
    ensemble_we,
    gilbert_varshamov_distance,
    good_and_bad_ensembles,
    growth_rate,
    normalized_typical_min_distance,
    outer_rate_root,
    region_boundary,
    region_membership,
    typical_distance_table,
    we_hamming,
    we_linear_random,
)
from codes.degree_dists import resolve_distribution
from commands.base import CommandBase, lab_command, parse_grid

logger = logging.getLogger(__name__)

SPECTRA_KINDS = ("growth", "region", "outer", "dmin", "ensemble", "hamming", "linear-random", "cowef")


def _pair(p: Dict[str, Any]) -> RatePair:
    return RatePair(p["r_i"], p["r_o"])


def _growth(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    curve = growth_rate(dist, _pair(p), parse_grid(p["delta_grid"], float))
    return ["delta", "growth", "lambda"], curve.rows()


def _region(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    return ["r_o", "r_i_boundary", "r_i_outer"], region_boundary(dist, parse_grid(p["r_o_grid"], float))


def _outer(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    pair = _pair(p)
    inside, margin = region_membership(dist, pair)
    delta_star = normalized_typical_min_distance(dist, pair)
    rate = pair.rate
    gv = gilbert_varshamov_distance(rate) if 0 < rate < 1 else 0.0
    return (
        ["r_i", "r_o", "inside", "margin", "delta_star", "delta_gv", "r_o_root"],
        [[pair.r_i, pair.r_o, int(inside), margin, delta_star, gv, outer_rate_root()]],
    )


def _dmin(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    if p.get("ensemble"):
        point = good_and_bad_ensembles()[p["ensemble"]]
        pair, n_grid = point.pair, [point.n]
    else:
        pair, n_grid = _pair(p), parse_grid(p["n_grid"], int)
    return ["n", "d_hat", "n_delta_star"], typical_distance_table(dist, pair, n_grid)


def _ensemble(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    if p.get("ensemble"):
        point = good_and_bad_ensembles()[p["ensemble"]]
        n, h, k = point.n, point.h, point.k
    else:
        n = p["n"]
        h, k = _pair(p).dimensions(n)
    return ["w", "w_over_n", "log2_a"], ensemble_we(dist, n, h, k).rows()


def _hamming(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    we = we_hamming(p["t"])
    return ["w", "count"], [[w, int(round(we[w]))] for w in range(we.n + 1)]


def _linear_random(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    return ["w", "w_over_n", "log2_a"], we_linear_random(p["h"], p["k"], p["q"]).rows()


def _cowef(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    cowef = hamming_cowef(p["t"])
    rows = [
        [i, w, int(round(cowef.coefficients[i, w]))]
        for i in range(cowef.k + 1)
        for w in range(cowef.n + 1)
        if cowef.coefficients[i, w] > 0
    ]
    return ["input_weight", "output_weight", "count"], rows


HANDLERS = {
    "growth": _growth,
    "region": _region,
    "outer": _outer,
    "dmin": _dmin,
    "ensemble": _ensemble,
    "hamming": _hamming,
    "linear-random": _linear_random,
    "cowef": _cowef,
}

REQUIRED = {"ensemble": ("n",), "linear-random": ("h",)}


@lab_command("spectra")
class SpectraCommand(CommandBase):
    """Growth rates, region boundaries, typical minimum distances and exact enumerators."""

    def __init__(self):
        super().__init__(
            name="spectra",
            description="Weight spectra and minimum-distance analysis",
            arguments={
                "kind": {"type": "string", "default": "growth", "choices": list(SPECTRA_KINDS), "help": "Quantity"},
                "dist": {"type": "string", "default": "r10", "help": "Degree distribution"},
                "k": {"type": "integer", "default": 128, "help": "Source symbols"},
                "q": {"type": "integer", "default": 2, "help": "Field order"},
                "n": {"type": "integer", "help": "Block length"},
                "h": {"type": "integer", "help": "Linear random code length"},
                "t": {"type": "integer", "default": 3, "help": "Hamming parameter"},
                "r_i": {"type": "number", "default": 1.0, "help": "Inner rate"},
                "r_o": {"type": "number", "default": 0.9, "help": "Outer rate"},
                "ensemble": {"type": "string", "choices": ["good", "bad"], "help": "Named k=128 ensemble"},
                "delta_grid": {"type": "grid", "default": "0.01:0.5:0.01", "help": "Normalized weights"},
                "r_o_grid": {"type": "grid", "default": "0.05:0.95:0.05", "help": "Outer rates"},
                "n_grid": {"type": "grid", "default": "100:1000:100", "help": "Block lengths"},
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            kind = params["kind"]
            missing = [name for name in REQUIRED.get(kind, ()) if name not in params]
            if missing and not (kind == "ensemble" and params.get("ensemble")):
                return self.format_error_response(f"spectra --kind {kind} needs --{missing[0].replace('_', '-')}")
            columns, rows = await asyncio.to_thread(HANDLERS[kind], params)
            used = {key: value for key, value in params.items() if key not in ("config", "workers")}
            header = self.provenance(int(params.get("seed") or 0), used)
            return self.format_success_response(columns, rows, header, f"{kind} spectrum with {len(rows)} rows")
        except Exception as e:
            logger.error("Spectrum failed: %s", str(e))
            return self.format_error_response(str(e))
