"""Encode a random source block with an LT, LRFC or Raptor code."""

import asyncio
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from codes.degree_dists import resolve_distribution
from codes.gf_linalg import spec_for_order
from codes.lt_lrfc import LtGeneratorColumn, encode_columns, lrfc_columns, lt_columns
from codes.raptor_codes import Precode, build_precode
from commands.base import CommandBase, lab_command

logger = logging.getLogger(__name__)

ENCODE_COLUMNS = ("index", "neighbors", "coefficients", "symbol")


def encoder_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent streams for the source, the precode construction and the encoder."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def join_cells(values) -> str:
    return ",".join(str(int(v)) for v in values)


def split_cells(text: Any) -> List[int]:
    text = str(text)
    return [int(v) for v in text.split(",") if v != ""]


def build_encoder_precode(setup: Dict[str, Any], rng: np.random.Generator) -> Optional[Precode]:
    if setup["kind"] != "raptor":
        return None
    params = {"q": setup["q"], **setup.get("precode_params", {})}
    return build_precode(setup["precode"], setup["k"], params, rng)


def encode_block(setup: Dict[str, Any], seed: int) -> Tuple[np.ndarray, List[LtGeneratorColumn], np.ndarray]:
    """Return (source, columns, output symbols) for an encoder setup."""
    source_rng, precode_rng, lt_rng = encoder_streams(seed)
    spec = spec_for_order(setup["q"])
    k, n = setup["k"], setup["n"]
    source = source_rng.integers(0, spec.order, size=(k, setup["packet_len"]))
    precode = build_encoder_precode(setup, precode_rng)
    if setup["kind"] == "lrfc":
        columns = lrfc_columns(k, n, lt_rng, spec)
        return source, columns, encode_columns(source, columns, spec)
    dist = resolve_distribution(setup["dist"], k)
    if precode is None:
        columns = lt_columns(dist, k, n, lt_rng, spec)
        return source, columns, encode_columns(source, columns, spec)
    columns = lt_columns(dist, precode.h, n, lt_rng, spec)
    return source, columns, encode_columns(precode.encode(source), columns, spec)


@lab_command("encode")
class EncodeCommand(CommandBase):
    """Emit n encoded symbols with their generator columns."""

    def __init__(self):
        super().__init__(
            name="encode",
            description="Encode a seeded random source block",
            arguments={
                "kind": {"type": "string", "default": "lt", "choices": ["lt", "lrfc", "raptor"], "help": "Code family"},
                "k": {"type": "integer", "required": True, "help": "Source symbols"},
                "n": {"type": "integer", "required": True, "help": "Output symbols to emit"},
                "q": {"type": "integer", "default": 2, "help": "Field order"},
                "dist": {"type": "string", "default": "r10", "help": "Degree distribution"},
                "precode": {"type": "string", "default": "r10", "help": "Precode kind (raptor)"},
                "t": {"type": "integer", "help": "Hamming parameter"},
                "h": {"type": "integer", "help": "Intermediate symbols (linear-random precode)"},
                "packet_len": {"type": "integer", "default": 1, "help": "Field elements per symbol"},
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            seed = int(params.get("seed") or 0)
            precode_params = {key: params[key] for key in ("t", "h") if key in params}
            setup = {
                "kind": params["kind"], "k": params["k"], "n": params["n"], "q": params["q"],
                "dist": params["dist"], "precode": params["precode"], "precode_params": precode_params,
                "packet_len": params["packet_len"],
            }
            source, columns, outputs = await asyncio.to_thread(encode_block, setup, seed)
            rows = [
                [j, join_cells(col.indices), join_cells(col.coefficients), join_cells(outputs[j])]
                for j, col in enumerate(columns)
            ]
            header = self.provenance(seed, setup)
            header["source"] = [join_cells(row) for row in source]
            return self.format_success_response(ENCODE_COLUMNS, rows, header, f"Encoded {len(rows)} symbols")
        except Exception as e:
            logger.error("Encoding failed: %s", str(e))
            return self.format_error_response(str(e))
