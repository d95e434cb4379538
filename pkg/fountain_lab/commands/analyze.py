"""Finite-length inactivation analysis of LT codes."""

import asyncio
import logging
from typing import Any, Dict, List

from analysis.fl_analysis import (
    binomial_approx,
    dp_trajectory,
    expected_inactivations_dp,
    inactivation_distribution_dp,
)
from codes.degree_dists import resolve_distribution
from commands.base import CommandBase, lab_command, parse_grid
from core.config import settings
from models.configs import AnalysisConfig, load_config, parse_config

logger = logging.getLogger(__name__)

METHOD_COLUMNS = {"dp": "dp_mean", "binomial": "binomial_mean", "full": "full_mean"}


def analyze_grid(config: AnalysisConfig) -> List[List[Any]]:
    """Rows (m, delta, one E[Y] column per method)."""
    dist = resolve_distribution(config.dist, config.k)
    rows = []
    for m in config.m_grid:
        row: List[Any] = [m, m - config.k]
        for method in config.methods:
            if method == "dp":
                row.append(expected_inactivations_dp(config.k, m, dist).expected_inactivations)
            elif method == "binomial":
                row.append(binomial_approx(config.k, m, dist).expected_inactivations)
            else:
                row.append(inactivation_distribution_dp(config.k, m, dist).mean)
        rows.append(row)
    return rows


@lab_command("analyze")
class AnalyzeCommand(CommandBase):
    """E[Y] by the exact DP, the binomial approximation or the full distribution."""

    def __init__(self):
        super().__init__(
            name="analyze",
            description="Expected inactivations of an LT code over a grid of receipts",
            arguments={
                "k": {"type": "integer", "help": "Source symbols"},
                "dist": {"type": "string", "default": "r10", "help": "Degree distribution"},
                "m_grid": {"type": "grid", "help": "Receipts a:b[:step] or a list"},
                "dp": {"type": "boolean", "help": "Exact DP mean"},
                "binomial": {"type": "boolean", "help": "Binomial approximation"},
                "full": {"type": "boolean", "help": "Mean of the full DP distribution"},
                "trajectory": {"type": "boolean", "help": "Emit (u, E[R_u], cumulative E[Y]) for the first m"},
                "pmf": {"type": "boolean", "help": "Emit f_Y for the first m"},
            },
        )

    def _config(self, params: Dict[str, Any]) -> AnalysisConfig:
        if params.get("config"):
            return load_config(params["config"], AnalysisConfig)
        if "k" not in params or "m_grid" not in params:
            raise ValueError("analyze needs --config or both --k and --m-grid")
        methods = [name for name in ("dp", "binomial", "full") if params.get(name)] or ["dp"]
        return parse_config(
            {
                "version": settings.CONFIG_VERSION,
                "k": params["k"],
                "dist": params["dist"],
                "m_grid": parse_grid(params["m_grid"], int),
                "methods": methods,
                "seed": int(params.get("seed") or 0),
            },
            AnalysisConfig,
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            config = self._config(params)
            header = self.provenance(config.seed, config.model_dump())
            if params.get("trajectory") or params.get("pmf"):
                dist = resolve_distribution(config.dist, config.k)
                m = config.m_grid[0]
                if params.get("trajectory"):
                    rows = await asyncio.to_thread(dp_trajectory, config.k, m, dist)
                    columns = ["u", "mean_ripple", "cumulative_inact"]
                else:
                    pmf = await asyncio.to_thread(inactivation_distribution_dp, config.k, m, dist)
                    rows, columns = pmf.rows(), ["y", "probability"]
                return self.format_success_response(columns, rows, header, f"Analyzed m={m}")

            rows = await asyncio.to_thread(analyze_grid, config)
            columns = ["m", "delta"] + [METHOD_COLUMNS[m] for m in config.methods]
            return self.format_success_response(columns, rows, header, f"Analyzed {len(rows)} points")
        except Exception as e:
            logger.error("Analysis failed: %s", str(e))
            return self.format_error_response(str(e))
