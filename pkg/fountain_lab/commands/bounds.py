"""Analytic failure-probability bounds and the multicast model."""

import asyncio
import logging
from typing import Any, Dict, List, Tuple

from analysis.failure_bounds import (
    block_bounds,
    concat_bounds,
    di_bound,
    linear_random_raptor_bound,
    lrfc_bounds,
    lrfc_exact,
    lt_ml_lower_bound,
    lt_ml_upper_bound,
    multicast_min_overhead,
    multicast_model,
    overhead_curve,
    raptor_upper_bound,
)
from analysis.spectra import we_hamming, we_linear_random
from codes.degree_dists import resolve_distribution
from commands.base import CommandBase, lab_command, parse_grid

logger = logging.getLogger(__name__)

BOUND_KINDS = ("lrfc", "concat", "lt-ml", "raptor", "block", "multicast")
MULTICAST_CURVE_SPAN = 80


def _lrfc(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    rows = []
    for delta in parse_grid(p["delta_grid"], int):
        lower, upper = lrfc_bounds(p["q"], delta)
        rows.append([delta, lower, upper, lrfc_exact(p["q"], p["k"], delta)])
    return ["delta", "lower", "upper", "exact"], rows


def _concat(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    n_c = p.get("n_c") or p["k"] + 1
    rows = []
    for delta in parse_grid(p["delta_grid"], int):
        lower, upper = concat_bounds(n_c, p["k"], p["q"], p["eps"], delta)
        rows.append([delta, lower, upper])
    return ["delta", "lower", "upper"], rows


def _lt_ml(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    rows = []
    for delta in parse_grid(p["delta_grid"], int):
        lower = lt_ml_lower_bound(p["k"], 0.0, dist, m=p["k"] + delta)
        rows.append([delta, lower, lt_ml_upper_bound(p["k"], p["q"], dist, delta)])
    return ["delta", "lower", "upper"], rows


def _raptor(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    dist = resolve_distribution(p["dist"], p["k"])
    deltas = parse_grid(p["delta_grid"], int)
    if p["precode"] == "hamming":
        we = we_hamming(p["t"])
        k = we.n - p["t"]
        rows = [[d, raptor_upper_bound(we, dist, p["q"], k, d)] for d in deltas]
    elif p["precode"] == "linear-random":
        rows = [[d, linear_random_raptor_bound(p["h"], p["k"], p["q"], dist, d)] for d in deltas]
    else:
        raise ValueError("Raptor bounds support the hamming and linear-random precodes")
    return ["delta", "upper"], rows


def _block(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    n, k = p["n"], p["k"]
    we = we_linear_random(n, k, p["q"])
    rows = []
    for eps in parse_grid(p["eps_grid"], float):
        singleton, berlekamp = block_bounds(n, k, eps)
        rows.append([eps, singleton, berlekamp, di_bound(we, n, k, eps), di_bound(we, n, k, eps, with_A0=True)])
    return ["eps", "singleton", "berlekamp", "di", "di_a0"], rows


def multicast_curves(k: int, q: int, eps: float, n_c: int):
    """Per-receiver Pf curves (upper bounds) of a plain LRFC and of the concatenated scheme."""
    deltas = range(MULTICAST_CURVE_SPAN + 1)
    plain = overhead_curve(lambda d: lrfc_bounds(q, d)[1], deltas, "upper", "lrfc")
    concat = overhead_curve(lambda d: concat_bounds(n_c, k, q, eps, d)[1], deltas, "upper", "concat")
    return plain, concat


def _multicast(p: Dict[str, Any]) -> Tuple[List[str], List[List[Any]]]:
    k, eps, receivers = p["k"], p["eps"], p["receivers"]
    plain, concat = multicast_curves(k, p["q"], eps, p.get("n_c") or k + 1)
    rows = [
        [d, multicast_model(receivers, k, eps, d, plain), multicast_model(receivers, k, eps, d, concat)]
        for d in parse_grid(p["delta_grid"], int)
    ]
    return ["overhead", "pe_lrfc", "pe_concat"], rows


HANDLERS = {
    "lrfc": _lrfc,
    "concat": _concat,
    "lt-ml": _lt_ml,
    "raptor": _raptor,
    "block": _block,
    "multicast": _multicast,
}


@lab_command("bounds")
class BoundsCommand(CommandBase):
    """Tabulate one family of bounds over an overhead or erasure grid."""

    def __init__(self):
        super().__init__(
            name="bounds",
            description="Analytic failure-probability bounds",
            arguments={
                "kind": {"type": "string", "default": "lrfc", "choices": list(BOUND_KINDS), "help": "Bound family"},
                "q": {"type": "integer", "default": 2, "help": "Field order"},
                "k": {"type": "integer", "default": 10, "help": "Source symbols"},
                "n": {"type": "integer", "help": "Block length (block kind)"},
                "n_c": {"type": "integer", "help": "Precode length of the concatenated scheme"},
                "h": {"type": "integer", "help": "Intermediate symbols (linear-random precode)"},
                "t": {"type": "integer", "default": 6, "help": "Hamming parameter"},
                "precode": {"type": "string", "default": "hamming", "help": "Precode for raptor bounds"},
                "dist": {"type": "string", "default": "r10", "help": "Degree distribution"},
                "eps": {"type": "number", "default": 0.1, "help": "Erasure probability"},
                "delta_grid": {"type": "grid", "default": "0:10", "help": "Overheads"},
                "eps_grid": {"type": "grid", "default": "0.05:0.5:0.05", "help": "Erasure probabilities"},
                "receivers": {"type": "integer", "default": 10000, "help": "Multicast receivers"},
                "target": {"type": "number", "default": 1e-4, "help": "Multicast target P_e"},
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            if params["kind"] == "block" and "n" not in params:
                return self.format_error_response("block bounds need --n")
            if params["kind"] == "raptor" and params["precode"] == "linear-random" and "h" not in params:
                return self.format_error_response("linear-random Raptor bounds need --h")
            columns, rows = await asyncio.to_thread(HANDLERS[params["kind"]], params)
            settings_used = {key: value for key, value in params.items() if key not in ("config", "workers")}
            header = self.provenance(int(params.get("seed") or 0), settings_used)
            if params["kind"] == "multicast":
                plain, concat = multicast_curves(params["k"], params["q"], params["eps"], params.get("n_c") or params["k"] + 1)
                for label, curve in (("lrfc", plain), ("concat", concat)):
                    header[f"min_overhead_{label}"] = multicast_min_overhead(
                        params["receivers"], params["k"], params["eps"], curve, params["target"]
                    )
            return self.format_success_response(columns, rows, header, f"{params['kind']} bounds for {len(rows)} points")
        except Exception as e:
            logger.error("Bounds failed: %s", str(e))
            return self.format_error_response(str(e))
