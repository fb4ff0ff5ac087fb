"""Configuration management for the ydvl laboratory.

Two layers live here: process-level :class:`Settings` read from the environment
(thread cap, log level, data directory) and the per-run :class:`RunConfig`
parsed from flat ``key = value`` files.
"""

from __future__ import annotations

import math
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ydvl.errors import IoError, ParseError, ValidationError

RecipeName = Literal[
    "taylor_green_homogeneous",
    "shear",
    "stratified_shear",
    "multimode",
    "smooth_density",
    "tanh_layer",
    "power_law",
]
DensityProfile = Literal["constant", "sinusoidal", "smooth_product", "tanh_layer", "power_law"]
VorticityProfile = Literal["taylor_green", "shear", "multimode", "power_law", "zero"]


class Settings(BaseSettings):
    """Process settings loaded from environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore"
    )

    threads: int = Field(1, alias="YDVL_THREADS", ge=1, le=256)
    log_level: str = Field("INFO", alias="YDVL_LOG_LEVEL")
    data_directory: Path = Field(Path("data"), alias="YDVL_DATA_DIR")

    @field_validator("data_directory", mode="before")
    @classmethod
    def _expand_data_dir(cls, value: str | Path) -> Path:
        """Ensure the data directory resolves to an absolute path."""

        return Path(value).expanduser().resolve()


@lru_cache
def get_settings() -> Settings:
    """Load and cache process settings."""

    return Settings()


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunConfig(BaseModel):
    """Typed representation of a run configuration file."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    grid_n: int
    t_final: float = Field(alias="T_final", gt=0)
    recipe: RecipeName

    cfl: float = Field(0.5, gt=0, le=1)
    dt_max: float = Field(0.1, gt=0)
    p0: float = 4.0
    rho_star: float = 0.5
    rho_upper: float = 2.0

    rho_profile: Optional[DensityProfile] = None
    omega_profile: Optional[VorticityProfile] = None
    rho_bar: Optional[float] = None
    rho_amplitude: Optional[float] = None
    layer_width: float = Field(0.2, gt=0)
    spectral_slope: float = Field(2.0, gt=0)
    omega_amplitude: float = 1.0

    n_cut: Optional[int] = Field(None, ge=1)
    filter_strength: float = Field(0.0, ge=0)
    pressure_tol: float = Field(1e-10, gt=0)
    pressure_max_iter: int = Field(500, ge=1)

    output_dir: Path = Path("runs")
    snapshot_every: int = Field(10, ge=0)
    diagnostics_every: int = Field(10, ge=1)
    seed: int = 0
    modulus_interpolation: Literal["bilinear", "spectral"] = "bilinear"

    velocity_constant: Optional[float] = Field(None, gt=0)
    gradrho_tol: float = Field(1e-3, ge=0)
    eta_tol: float = Field(1e-2, ge=0)
    bound_tol: float = Field(1e-6, ge=0)
    energy_tol: float = Field(1e-4, ge=0)

    deltas: List[float] = Field(default_factory=lambda: [1e-3, 1e-4, 1e-5])
    perturbation_mode: int = Field(1, ge=1)
    density_perturbation: float = Field(0.0, ge=0)
    sweep_scales: List[int] = Field(default_factory=lambda: [16, 32, 64])
    sweep_samples: int = Field(20, ge=1)

    @field_validator("deltas", "sweep_scales", mode="before")
    @classmethod
    def _parse_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("n_cut", "velocity_constant", "rho_profile", "omega_profile", mode="before")
    @classmethod
    def _parse_optional(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in {"", "none", "inf", "off"}:
            return None
        return value

    @field_validator("grid_n")
    @classmethod
    def _grid_power_of_two(cls, value: int) -> int:
        if value < 8 or value & (value - 1):
            raise ValueError("grid_n must be a power of two and at least 8")
        return value

    @field_validator("p0")
    @classmethod
    def _p0_range(cls, value: float) -> float:
        if not (2.0 < value <= 4.0):
            raise ValueError("p0 must lie in (2, 4]")
        return value

    @model_validator(mode="after")
    def _density_bounds(self) -> "RunConfig":
        if not (0.0 < self.rho_star <= self.rho_upper):
            raise ValueError("density bounds must satisfy 0 < rho_star <= rho_upper")
        if any(delta < 0 or not math.isfinite(delta) for delta in self.deltas):
            raise ValueError("perturbation amplitudes must be finite and non-negative")
        return self


_KEYS = {
    (field.alias or name): name for name, field in RunConfig.model_fields.items()
} | {name: name for name in RunConfig.model_fields}


def parse_config(text: str) -> RunConfig:
    """Parse the flat ``key = value`` grammar into a validated :class:`RunConfig`."""

    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        name = _KEYS[key]
        if name in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        if not value:
            raise ParseError(lineno, f"missing value for {key!r}")
        values[name] = value

    try:
        return RunConfig.model_validate(values)
    except PydanticValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ())) or "config"
        message = first.get("msg", "invalid value").removeprefix("Value error, ")
        raise ValidationError(f"{where}: {message}", operation="harness.parse_config") from exc


def load_config(path: Path) -> RunConfig:
    """Read and parse a configuration file."""

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}", operation="harness.parse_config") from exc
    return parse_config(text)


__all__ = [
    "Settings",
    "RunConfig",
    "RecipeName",
    "DensityProfile",
    "VorticityProfile",
    "get_settings",
    "parse_config",
    "load_config",
]
