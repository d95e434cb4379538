"""Run a Monte Carlo trial plan."""

import asyncio
import logging
from typing import Any, Dict

from commands.base import CommandBase, lab_command
from models.configs import TrialPlan, load_config
from models.results import ESTIMATE_COLUMNS
from simulation.mc_sim import run_plan

logger = logging.getLogger(__name__)


@lab_command("simulate")
class SimulateCommand(CommandBase):
    """Estimate failure probabilities and inactivation counts over a grid."""

    def __init__(self):
        super().__init__(
            name="simulate",
            description="Run the Monte Carlo plan given by --config",
            arguments={
                "max_trials": {"type": "integer", "help": "Override the plan's trial cap"},
                "target_failures": {"type": "integer", "help": "Override the plan's failure target"},
            },
        )

    async def execute(self, **kwargs) -> Dict[str, Any]:
        try:
            params = self.validate_parameters(**kwargs)
            if not params.get("config"):
                return self.format_error_response("simulate needs --config with a trial plan")
            plan = load_config(params["config"], TrialPlan)
            updates = {key: params[key] for key in ("max_trials", "target_failures") if key in params}
            if params.get("seed") is not None:
                updates["seed"] = int(params["seed"])
            if updates:
                plan = TrialPlan.model_validate({**plan.model_dump(), **updates})

            rows = await asyncio.to_thread(run_plan, plan, params.get("workers"))
            columns = list(ESTIMATE_COLUMNS)
            labelled = any(row.label for row in rows)
            if labelled:
                columns.append("label")
            table = [row.tsv_values() + ([row.label] if labelled else []) for row in rows]
            header = self.provenance(plan.seed, plan.model_dump())
            return self.format_success_response(columns, table, header, f"Simulated {len(rows)} points")
        except Exception as e:
            logger.error("Simulation failed: %s", str(e))
            return self.format_error_response(str(e))
