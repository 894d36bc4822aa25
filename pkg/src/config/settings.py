"""
Configuration for the boundary-layer simulator

Settings holds process-level defaults read from the environment (and an
optional .env file, prefix MHDBL_). RunConfig is the flat JSON file a
single `run` or `verify` invocation is driven by.
"""

import json
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from src.core.dynamics import SolverConfig
from src.core.errors import InvalidParameterError
from src.core.grid import Grid, build_grid
from src.core.state import InitialDataSpec


class Settings(BaseSettings):
    """Application settings"""

    # Output
    output_dir: str = "results"

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Numerics
    seed: int = 0
    max_workers: Optional[int] = None
    f_floor: float = 1e-3

    class Config:
        env_prefix = "MHDBL_"
        env_file = ".env"
        env_file_encoding = "utf-8"


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    return settings


class RunConfig(BaseModel):
    """Every grid, solver and initial-data parameter of one experiment, plus verification knobs"""

    # grid
    nx: int = 32
    ny: int = 256
    ymax: float = Field(20.0, gt=0)
    ell: float = Field(1.0, gt=0.5)
    delta: float = 2.0

    # solver
    dt: float = Field(1e-3, gt=0)
    cfl: float = Field(0.4, gt=0, le=1)
    tend: float = Field(0.1, ge=0)
    f_floor: float = Field(default_factory=lambda: get_settings().f_floor, gt=0)
    output_every: int = Field(10, ge=1)
    dealias: bool = True

    # initial data
    c0: float = Field(1.0, gt=0)
    amp_u: float = 0.1
    amp_f: float = 0.1
    mode: int = Field(1, ge=0)

    # orchestration
    output_dir: Optional[str] = None
    snapshot_every: int = Field(0, ge=0)
    seed: int = Field(default_factory=lambda: get_settings().seed)

    # verification
    mms_levels: List[Tuple[int, int, float]] = Field(default_factory=lambda: [
        (16, 128, 1e-4), (16, 256, 1e-4), (16, 512, 1e-4),
        (16, 256, 4e-4), (16, 256, 2e-4),
    ])
    mms_tend: float = Field(0.02, gt=0)
    mms_ymax: float = Field(20.0, gt=0)
    commutator_sigma: float = Field(0.5, gt=0, lt=1)
    commutator_resolutions: List[int] = Field(default_factory=lambda: [64, 128, 256, 512])
    commutator_trials: int = Field(100, ge=1)
    hardy_resolutions: List[int] = Field(default_factory=lambda: [128, 256, 512])
    energy_resolutions: List[Tuple[int, int]] = Field(default_factory=lambda: [(32, 256), (64, 512)])
    energy_tend: float = Field(0.5, gt=0)
    oracle_ny: int = Field(512, ge=16)
    oracle_dt: float = Field(1e-4, gt=0)
    oracle_tend: float = Field(0.1, gt=0)
    oracle_tolerance: float = Field(2.5e-5, gt=0)
    trace_trials: int = Field(50, ge=1)
    identity_resolutions: List[int] = Field(default_factory=lambda: [128, 256, 512])

    class Config:
        extra = "forbid"

    @field_validator("nx")
    @classmethod
    def nx_power_of_two(cls, value: int) -> int:
        if value < 4 or value & (value - 1):
            raise ValueError(f"must be a power of two >= 4, got {value}")
        return value

    @field_validator("ny")
    @classmethod
    def ny_large_enough(cls, value: int) -> int:
        if value < 16:
            raise ValueError(f"must be >= 16, got {value}")
        return value

    @model_validator(mode="after")
    def delta_exceeds_ell(self) -> "RunConfig":
        if not self.delta > self.ell + 0.5:
            raise ValueError(f"delta must exceed ell + 1/2 = {self.ell + 0.5}, got {self.delta}")
        return self

    def grid(self) -> Grid:
        return build_grid(self.nx, self.ny, self.ymax, self.ell, self.delta)

    def solver_config(self, **overrides) -> SolverConfig:
        values = dict(dt=self.dt, cfl=self.cfl, tend=self.tend, f_floor=self.f_floor,
                      output_every=self.output_every, dealias=self.dealias)
        values.update(overrides)
        return SolverConfig(**values)

    def initial_data_spec(self) -> InitialDataSpec:
        return InitialDataSpec(c0=self.c0, delta=self.delta, amp_u=self.amp_u, amp_f=self.amp_f, mode=self.mode)


def _offending_key(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = first.get("loc") or ()
    if loc:
        return str(loc[0])
    # model-level validators report no location
    message = first.get("msg", "")
    return "delta" if "delta" in message else "config"


def parse_run_config(text: str) -> RunConfig:
    """Validate JSON text; any failure becomes InvalidParameterError naming the key"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError("config", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidParameterError("config", "top level must be a JSON object")
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        key = _offending_key(exc)
        raise InvalidParameterError(key, exc.errors()[0].get("msg", str(exc))) from exc


def load_run_config(path) -> RunConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise InvalidParameterError("config", f"file not found: {config_path}")
    return parse_run_config(config_path.read_text(encoding="utf-8"))
