"""Configuration file models for the fountain code lab.

Pydantic models for the JSON files that drive simulations, analyses and
designs. Unknown fields are rejected and every file carries an explicit
``version`` so a result can always be reproduced from its header.
"""

import json
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from core.config import settings


class ConfigError(ValueError):
    """Raised when a configuration file cannot be parsed or has the wrong version."""


CodeKind = Literal["lrfc", "lt", "raptor", "concat", "fixed_rate_raptor", "inactivation"]


class VersionedModel(BaseModel):
    """Base for every top-level config file."""

    version: int = Field(..., description="Config schema version")

    @field_validator("version")
    @classmethod
    def check_version(cls, value: int) -> int:
        if value != settings.CONFIG_VERSION:
            raise ValueError(
                f"Unsupported config version {value}; expected {settings.CONFIG_VERSION}"
            )
        return value


class CodeConfig(BaseModel):
    """Which code a trial exercises and how it is decoded.

    Attributes:
        kind: Code family simulated by each trial
        k: Number of source symbols
        q: Field order
        dist: Output degree distribution name (see degree_dists.resolve_distribution)
        precode: Precode kind for Raptor codes or the block code of the concatenated scheme
        precode_params: Extra precode parameters (t, h, n_c, ...)
        ensemble: Redraw the precode for every trial
        n: Block length for fixed-rate codes
        decoder: Decoder used for LT and LRFC trials
        strategy: Inactivation strategy
        strategies: Strategies compared by the ``inactivation`` kind
    """

    kind: CodeKind = Field(..., description="Code family")
    k: int = Field(..., ge=1, description="Number of source symbols")
    q: int = Field(2, ge=2, description="Field order (power of two)")
    dist: str = Field("r10", description="Output degree distribution")
    precode: Optional[str] = Field(None, description="Precode kind")
    precode_params: Dict[str, Any] = Field(default_factory=dict, description="Precode parameters")
    ensemble: bool = Field(False, description="Redraw the precode for every trial")
    n: Optional[int] = Field(None, ge=1, description="Block length for fixed-rate codes")
    decoder: Literal["inactivation", "ml", "peeling"] = Field(
        "inactivation", description="Decoder for LT and LRFC trials"
    )
    strategy: str = Field("random", description="Inactivation strategy")
    strategies: List[str] = Field(
        default_factory=lambda: ["random", "max-reduced", "max-accumulated", "max-component"],
        description="Strategies compared by the inactivation kind",
    )

    @model_validator(mode="after")
    def check_precode(self) -> "CodeConfig":
        if self.kind in ("raptor", "fixed_rate_raptor", "inactivation", "concat") and not self.precode:
            raise ValueError(f"Code kind '{self.kind}' needs a precode")
        if self.kind == "concat" and self.precode not in ("spc", "grs"):
            raise ValueError("The concatenated scheme needs an 'spc' or 'grs' precode")
        if self.q & (self.q - 1):
            raise ValueError(f"Field order must be a power of two, got {self.q}")
        return self

    class Config:
        """Pydantic configuration."""
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "kind": "raptor",
                "k": 57,
                "q": 2,
                "dist": "r10",
                "precode": "hamming",
                "precode_params": {"t": 6},
            }
        }


class ChannelSpec(BaseModel):
    """Memoryless erasure channel over symbols of ``packet_len`` elements of GF(q)."""

    erasure_probability: float = Field(..., ge=0.0, le=1.0, description="Erasure probability")
    q: int = Field(2, ge=2, description="Symbol alphabet order")
    packet_len: int = Field(1, ge=1, description="Field elements per erased packet")

    class Config:
        """Pydantic configuration."""
        extra = "forbid"
        json_schema_extra = {
            "example": {"erasure_probability": 0.1, "q": 2, "packet_len": 1}
        }


class TrialPlan(VersionedModel):
    """A Monte Carlo sweep: one estimate row per grid point.

    ``sweep`` selects the meaning of the grid: absolute overhead or relative
    overhead with a fixed number of receipts, or the erasure probability of a
    channel that carries ``transmitted`` symbols.
    """

    code: CodeConfig = Field(..., description="Code under test")
    sweep: Literal["overhead", "relative_overhead", "erasure"] = Field(
        "overhead", description="Grid variable"
    )
    grid: List[float] = Field(..., min_length=1, description="Grid values")
    channel: Optional[ChannelSpec] = Field(None, description="Channel for receipt selection")
    transmitted: Optional[int] = Field(None, ge=1, description="Symbols sent in erasure sweeps")
    target_failures: int = Field(
        default_factory=lambda: settings.MC_TARGET_FAILURES, ge=1, description="Stop after this many failures"
    )
    max_trials: int = Field(
        default_factory=lambda: settings.MC_MAX_TRIALS, ge=1, description="Stop after this many trials"
    )
    batch_size: int = Field(
        default_factory=lambda: settings.MC_BATCH_SIZE, ge=1, description="Trials between stop-rule checks"
    )
    seed: int = Field(..., ge=0, description="Master seed")
    workers: Optional[int] = Field(None, ge=1, description="Worker processes")

    @model_validator(mode="after")
    def check_sweep(self) -> "TrialPlan":
        if self.sweep == "erasure":
            if self.transmitted is None and self.code.n is None:
                raise ValueError("Erasure sweeps need 'transmitted' or code.n")
            if any(not 0 <= x <= 1 for x in self.grid):
                raise ValueError("Erasure probabilities must lie in [0, 1]")
        elif self.code.kind == "concat" and self.channel is None:
            raise ValueError("Overhead sweeps of the concatenated scheme need a channel")
        return self

    class Config:
        """Pydantic configuration."""
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "version": 1,
                "code": {"kind": "lrfc", "k": 10, "q": 2},
                "sweep": "overhead",
                "grid": [0, 1, 2, 3, 4, 5, 6],
                "seed": 1,
            }
        }


class DesignSpec(VersionedModel):
    """Simulated-annealing design problem.

    Attributes:
        context: "lt" scores candidates with the ML lower bound, "raptor" with the union upper bound
        k: Source symbols
        target_pf: Target failure probability
        eps_rel: Relative overhead for the LT context
        delta: Absolute overhead for the Raptor context
        max_mean: Upper limit on the average degree
        pinned_mean: Exact average degree, when set
        dmax: Largest allowed degree
        support: Allowed degrees (all of 1..dmax when empty)
        family: Free distributions or the truncated robust soliton family
        precode: Precode for the Raptor context
        verify: Force (true) or skip (false) the exact DP check of the result
    """

    context: Literal["lt", "raptor"] = Field("lt", description="Design context")
    k: int = Field(..., ge=1, description="Source symbols")
    target_pf: float = Field(..., gt=0.0, lt=1.0, description="Target failure probability")
    eps_rel: float = Field(0.0, ge=0.0, description="Relative overhead (LT context)")
    delta: int = Field(0, ge=0, description="Absolute overhead (Raptor context)")
    max_mean: float = Field(12.0, gt=1.0, description="Maximum average output degree")
    pinned_mean: Optional[float] = Field(None, gt=1.0, description="Pinned average output degree")
    dmax: int = Field(..., ge=1, description="Maximum degree")
    support: List[int] = Field(default_factory=list, description="Allowed degrees")
    family: Literal["free", "truncated-rsd"] = Field("free", description="Search family")
    penalty: Optional[float] = Field(None, gt=0.0, description="Penalty scale b")
    precode: Optional[str] = Field(None, description="Precode kind (Raptor context)")
    precode_params: Dict[str, Any] = Field(default_factory=dict, description="Precode parameters")
    initial: Optional[str] = Field(None, description="Initial distribution name")
    sweeps: Optional[int] = Field(None, ge=1, description="Annealing sweeps")
    chains: int = Field(1, ge=1, description="Independent annealing chains")
    verify: Optional[bool] = Field(
        None, description="Exact DP check of the final design (default: only up to DP_VERIFY_MAX_K symbols)"
    )
    seed: int = Field(..., ge=0, description="Master seed")

    @model_validator(mode="after")
    def check_design(self) -> "DesignSpec":
        if any(d < 1 or d > self.dmax for d in self.support):
            raise ValueError(f"Support degrees must lie in [1, {self.dmax}]")
        if self.context == "raptor" and not self.precode:
            raise ValueError("The Raptor context needs a precode")
        return self

    class Config:
        """Pydantic configuration."""
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "version": 1,
                "context": "raptor",
                "k": 57,
                "target_pf": 0.001,
                "delta": 15,
                "pinned_mean": 4.6314,
                "dmax": 40,
                "support": [1, 2, 3, 4, 10, 11, 40],
                "precode": "hamming",
                "precode_params": {"t": 6},
                "seed": 7,
            }
        }


class AnalysisConfig(VersionedModel):
    """Finite-length inactivation analysis over a grid of receipts."""

    k: int = Field(..., ge=1, description="Source symbols")
    dist: str = Field("r10", description="Output degree distribution")
    m_grid: List[int] = Field(..., min_length=1, description="Numbers of received symbols")
    methods: List[Literal["dp", "binomial", "full"]] = Field(
        default_factory=lambda: ["dp"], description="Analyses to run"
    )
    seed: int = Field(0, ge=0, description="Seed echoed into the output header")

    class Config:
        """Pydantic configuration."""
        extra = "forbid"
        json_schema_extra = {
            "example": {"version": 1, "k": 100, "dist": "r10", "m_grid": [100, 105, 110], "methods": ["dp", "binomial"]}
        }


ModelT = TypeVar("ModelT", bound=BaseModel)


def parse_config(data: Dict[str, Any], model: Type[ModelT]) -> ModelT:
    """Validate a decoded JSON document.

    Raises:
        ConfigError: On any validation failure
    """
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


def load_config(path: str, model: Type[ModelT]) -> ModelT:
    """Read and validate a JSON config file.

    Raises:
        ConfigError: If the file is unreadable, not JSON, or invalid
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    return parse_config(data, model)
