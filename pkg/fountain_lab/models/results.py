"""
Result models for simulation and command output.
"""

import math
from typing import Any, List, Optional

from pydantic import BaseModel, Field, model_validator


ESTIMATE_COLUMNS = ("x", "trials", "failures", "pf", "stderr", "mean_inact", "stderr_inact")


class EstimateRow(BaseModel):
    """One Monte Carlo grid point."""
    x: float = Field(..., description="Grid value (overhead, relative overhead or erasure probability)")
    trials: int = Field(..., ge=0, description="Trials run")
    failures: int = Field(..., ge=0, description="Decoding failures observed")
    pf: float = Field(..., description="Estimated failure probability failures/trials")
    stderr: float = Field(..., description="Binomial standard error of pf")
    mean_inact: float = Field(0.0, description="Mean number of inactivations")
    stderr_inact: float = Field(0.0, description="Standard error of the mean inactivation count")
    label: str = Field("", description="Series label, e.g. an inactivation strategy")
    histogram: List[int] = Field(default_factory=list, description="Counts of y = 0, 1, 2, ...")

    @model_validator(mode="after")
    def check_counts(self) -> "EstimateRow":
        if self.failures > self.trials:
            raise ValueError("failures cannot exceed trials")
        return self

    @classmethod
    def from_counts(
        cls,
        x: float,
        trials: int,
        failures: int,
        y_sum: float,
        y_sq_sum: float,
        histogram: Optional[List[int]] = None,
        label: str = "",
    ) -> "EstimateRow":
        pf = failures / trials if trials else 0.0
        stderr = math.sqrt(pf * (1.0 - pf) / trials) if trials else 0.0
        mean = y_sum / trials if trials else 0.0
        if trials > 1:
            var = max(y_sq_sum - trials * mean * mean, 0.0) / (trials - 1)
            stderr_y = math.sqrt(var / trials)
        else:
            stderr_y = 0.0
        return cls(
            x=x, trials=trials, failures=failures, pf=pf, stderr=stderr,
            mean_inact=mean, stderr_inact=stderr_y, label=label,
            histogram=list(histogram or []),
        )

    def tsv_values(self) -> List[Any]:
        return [getattr(self, name) for name in ESTIMATE_COLUMNS]

    class Config:
        """Pydantic configuration."""
        json_schema_extra = {
            "example": {
                "x": 2,
                "trials": 1600,
                "failures": 201,
                "pf": 0.1256,
                "stderr": 0.0083,
                "mean_inact": 3.1,
                "stderr_inact": 0.04,
            }
        }


class CommandResult(BaseModel):
    """Outcome of one CLI command."""
    success: bool = Field(..., description="Whether the command completed")
    columns: List[str] = Field(default_factory=list, description="TSV column names")
    rows: List[List[Any]] = Field(default_factory=list, description="TSV rows")
    header: dict = Field(default_factory=dict, description="Provenance header (config and seed)")
    error: Optional[str] = Field(None, description="Diagnostic when the command failed")
    execution_time: Optional[float] = Field(None, description="Wall-clock time in seconds")

    class Config:
        """Pydantic configuration."""
        json_schema_extra = {
            "example": {
                "success": True,
                "columns": ["delta", "upper", "lower"],
                "rows": [[0, 1.0, 0.5]],
                "header": {"command": "bounds", "seed": 0},
                "error": None,
                "execution_time": 0.01,
            }
        }
