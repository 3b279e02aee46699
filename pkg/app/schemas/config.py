from typing import Dict, List, Literal, Optional

import orjson
from pydantic import BaseModel, Field, field_validator, model_validator

from ..core.config import (
    DEFAULT_DT,
    DEFAULT_FIRST_SPACING,
    DEFAULT_N_MODES,
    DEFAULT_N_NODES,
    DEFAULT_TAIL_TOL,
    MIN_BATCHES,
    MIN_GRID_NODES,
)

Mode = Literal["validate", "simulate", "measure", "nudge", "oracle-check", "regularity"]
Backend = Literal["ring-buffer", "grid-transport"]


# Kernel Section
class KernelConfig(BaseModel):
    family: Literal["exponential", "tabulated"] = "exponential"
    delta: float = Field(1.0, gt=0)
    mu0: float = Field(1.0, gt=0)
    rate: Optional[float] = Field(None, gt=0)
    table_path: Optional[str] = None

    @model_validator(mode="after")
    def table_for_tabulated(self):
        if self.family == "tabulated" and not self.table_path:
            raise ValueError("tabulated kernels need table_path")
        return self


# Noise Section
class PowerNoiseConfig(BaseModel):
    amplitude: float = Field(1.0, ge=0)
    exponent: float = 2.0
    cutoff: Optional[int] = Field(None, ge=1)


class NoiseConfig(BaseModel):
    diagonal: Optional[List[float]] = None
    power: Optional[PowerNoiseConfig] = None

    @field_validator("diagonal")
    def non_negative(cls, v):
        if v is not None and any(q < 0 for q in v):
            raise ValueError("noise amplitudes must be non-negative")
        return v

    @model_validator(mode="after")
    def one_family(self):
        if self.diagonal is not None and self.power is not None:
            raise ValueError("give either diagonal or power noise, not both")
        return self

    @property
    def is_off(self) -> bool:
        return self.power is None and not any(self.diagonal or [])


# Model Section
class ModelConfig(BaseModel):
    kappa: float = Field(0.5, gt=0, le=1)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    potential: List[float] = Field(default_factory=lambda: [0.0, 1.0, 0.0, -1.0])
    noise: NoiseConfig = Field(default_factory=NoiseConfig)


# Discretization Section
class DiscretizationConfig(BaseModel):
    n_modes: int = Field(DEFAULT_N_MODES, ge=1)
    n_nodes: int = Field(DEFAULT_N_NODES, ge=MIN_GRID_NODES)
    dt: float = Field(DEFAULT_DT, gt=0)
    backend: Backend = "ring-buffer"
    collocation: Optional[int] = Field(None, ge=1)
    tail_tol: float = Field(DEFAULT_TAIL_TOL, gt=0)
    first_spacing: float = Field(DEFAULT_FIRST_SPACING, gt=0)
    fast_transform: bool = False


# Run Section
class RunConfig(BaseModel):
    T: float = Field(10.0, ge=0)
    burn_in: Optional[float] = Field(None, ge=0)
    seed: int = Field(0, ge=0)
    ensemble: int = Field(1, ge=1)
    record_stride: int = Field(10, ge=1)
    n_batches: int = Field(MIN_BATCHES, ge=MIN_BATCHES)
    u0: Dict[int, float] = Field(default_factory=dict)

    @field_validator("u0")
    def positive_modes(cls, v):
        if any(k < 1 for k in v):
            raise ValueError("u0 mode indices start at 1")
        return v


# Control Section
class ControlConfig(BaseModel):
    n_hat: int = Field(1, ge=1)
    weighted: bool = Field(True, description="kappa-weighted controlled drift; False = literal unweighted form")
    paths: int = Field(32, ge=1)
    negative_control: bool = True


# Regularity Section
class RegularityConfig(BaseModel):
    m: int = Field(2, ge=1)
    smooth_noise: NoiseConfig = Field(
        default_factory=lambda: NoiseConfig(power=PowerNoiseConfig(amplitude=1.0, exponent=3.0))
    )
    rough_noise: NoiseConfig = Field(
        default_factory=lambda: NoiseConfig(power=PowerNoiseConfig(amplitude=1.0, exponent=1.0))
    )


# Stepper Config (derived from an experiment)
class StepperConfig(BaseModel):
    dt: float = Field(..., gt=0)
    kappa: float = Field(..., gt=0, le=1)
    n_modes: int = Field(..., ge=1)
    scheme: Literal["semi-implicit"] = "semi-implicit"
    backend: Backend = "ring-buffer"
    record_stride: int = Field(1, ge=1)


class ExperimentConfig(BaseModel):
    mode: Mode = "simulate"
    model: ModelConfig = Field(default_factory=ModelConfig)
    discretization: DiscretizationConfig = Field(default_factory=DiscretizationConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    control: ControlConfig = Field(default_factory=ControlConfig)
    regularity: RegularityConfig = Field(default_factory=RegularityConfig)

    @model_validator(mode="after")
    def u0_within_modes(self):
        too_high = [k for k in self.run.u0 if k > self.discretization.n_modes]
        if too_high:
            raise ValueError(f"u0 sets modes {too_high} above n_modes")
        return self

    def stepper(self) -> StepperConfig:
        return StepperConfig(
            dt=self.discretization.dt,
            kappa=self.model.kappa,
            n_modes=self.discretization.n_modes,
            backend=self.discretization.backend,
            record_stride=self.run.record_stride,
        )

    def canonical_json(self) -> bytes:
        return orjson.dumps(
            self.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS
        )
