"""Decode the output of the encode command after an erasure channel."""

import asyncio
import logging
from typing import Any, Dict, List

import numpy as np

from codes.gf_linalg import spec_for_order
from codes.inactivation import Strategy
from codes.lt_lrfc import LtGeneratorColumn, inactivation_ml_decode, received_from_columns
from codes.raptor_codes import raptor_decode
from commands.base import CommandBase, lab_command
from commands.encode import build_encoder_precode, encoder_streams, split_cells
from core.tsv import TsvFormatError, read_tsv
from models.configs import ChannelSpec
from simulation.mc_sim import erase

logger = logging.getLogger(__name__)

DECODE_COLUMNS = ("received", "success", "inactivations", "matches_source")


def decode_table(table, eps: float, strategy: str, seed: int) -> List[Any]:
    """Erase rows of an encode table, decode the survivors and compare with the source."""
    setup = table.header.get("config")
    if table.header.get("command") != "encode" or not setup:
        raise TsvFormatError("Input is not the output of the encode command")
    spec = spec_for_order(setup["q"])
    _, precode_rng, _ = encoder_streams(int(table.header["seed"]))
    precode = build_encoder_precode(setup, precode_rng)

    columns = [
        LtGeneratorColumn(tuple(split_cells(nb)), tuple(split_cells(cf)))
        for nb, cf in zip(table.column("neighbors"), table.column("coefficients"))
    ]
    symbols = np.array([split_cells(s) for s in table.column("symbol")], dtype=np.int64)
    source = np.array([split_cells(s) for s in table.header["source"]], dtype=np.int64)

    rng = np.random.default_rng(seed)
    idx, survivors = erase(ChannelSpec(erasure_probability=eps, q=setup["q"]), symbols, rng)
    kept = [columns[i] for i in idx]
    if precode is None:
        rx = received_from_columns(kept, survivors, setup["k"], spec)
        result = inactivation_ml_decode(rx, Strategy(strategy), rng)
        success, y, recovered = result.success, result.inactivations, result.solution
    else:
        rx = received_from_columns(kept, survivors, precode.h, spec)
        result = raptor_decode(precode, rx, Strategy(strategy), rng)
        success, y, recovered = result.success, result.inactivations, result.source
    matches = bool(success and np.array_equal(np.asarray(recovered).reshape(source.shape), source))
    return [len(kept), int(success), y, int(matches)]


@lab_command("decode")
class DecodeCommand(CommandBase):
    """Decode an encode TSV after erasing each symbol with probability ε."""

    def __init__(self):
        super().__init__(
            name="decode",
            description="Decode an encode TSV through an erasure channel",
            arguments={
                "input": {"type": "string", "required": True, "help": "TSV written by encode"},
                "erasure": {"type": "number", "default": 0.0, "help": "Erasure probability"},
                "strategy": {
                    "type": "string", "default": "random",
                    "choices": [s.value for s in Strategy], "help": "Inactivation strategy",
                },
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            seed = int(params.get("seed") or 0)
            table = read_tsv(params["input"])
            row = await asyncio.to_thread(decode_table, table, params["erasure"], params["strategy"], seed)
            header = self.provenance(
                seed, {"input": params["input"], "erasure": params["erasure"], "strategy": params["strategy"]}
            )
            message = "Decoded source" if row[3] else "Decoding failed"
            return self.format_success_response(DECODE_COLUMNS, [row], header, message)
        except Exception as e:
            logger.error("Decoding failed: %s", str(e))
            return self.format_error_response(str(e))
