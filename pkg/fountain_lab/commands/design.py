"""Design an output degree distribution by simulated annealing."""

import asyncio
import logging
from pathlib import Path
from typing import Any, Dict

from commands.base import CommandBase, lab_command
from models.configs import DesignSpec, load_config
from simulation.designer import InfeasibleDesignError, run_chains

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("sweep", "temperature", "objective", "best_objective", "inactivations", "bound")


@lab_command("design")
class DesignCommand(CommandBase):
    """Anneal a distribution against the inactivation objective and a failure-probability target."""

    def __init__(self):
        super().__init__(
            name="design",
            description="Run the annealing designer given by --config",
            arguments={
                "chains": {"type": "integer", "help": "Override the number of chains"},
                "sweeps": {"type": "integer", "help": "Override the number of sweeps"},
                "dist_out": {"type": "string", "help": "Write the best distribution in 'd p' form"},
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            if not params.get("config"):
                return self.format_error_response("design needs --config with a design spec")
            spec = load_config(params["config"], DesignSpec)
            updates = {key: params[key] for key in ("chains", "sweeps") if key in params}
            if params.get("seed") is not None:
                updates["seed"] = int(params["seed"])
            if updates:
                spec = DesignSpec.model_validate({**spec.model_dump(), **updates})

            result = await asyncio.to_thread(run_chains, spec, None, params.get("workers"))
            if not result.feasible:
                raise InfeasibleDesignError(
                    f"No feasible design: best bound {result.bound:.4g} is not below target {spec.target_pf:.4g}"
                )

            if params.get("dist_out"):
                Path(params["dist_out"]).write_text(result.best.to_lines(), encoding="utf-8")
                logger.info("Wrote design to %s", params["dist_out"])

            header = self.provenance(spec.seed, spec.model_dump())
            header.update(
                {
                    "distribution": {str(d): p for d, p in result.best.as_dict().items()},
                    "mean_degree": result.best.mean,
                    "feasible": result.feasible,
                    "objective": result.objective,
                    "bound": result.bound,
                    "estimated_inactivations": result.expected_inactivations,
                    "verified_inactivations": result.verified_inactivations,
                    "chain": result.chain,
                }
            )
            if result.verified_inactivations is None:
                message = f"Design found: estimated E[Y]={result.expected_inactivations:.4f}, bound={result.bound:.3g}"
            else:
                message = f"Design found: E[Y]={result.verified_inactivations:.4f}, bound={result.bound:.3g}"
            return self.format_success_response(TRAJECTORY_COLUMNS, result.trajectory, header, message)
        except Exception as e:
            logger.error("Design failed: %s", str(e))
            return self.format_error_response(str(e))
