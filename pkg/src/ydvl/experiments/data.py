"""Initial-data recipes and their spectral regularisation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

import numpy as np

from ydvl.config import DensityProfile, RunConfig, VorticityProfile
from ydvl.dynamics.state import StepControl
from ydvl.errors import ValidationError
from ydvl.norms.lebesgue import lp_norm
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.grid import Grid, ScalarField, VectorField
from ydvl.spectral.operators import biot_savart, spectral_cutoff

logger = logging.getLogger(__name__)

# name -> (density profile, vorticity profile, rho_bar, rho_amplitude)
PRESETS: Dict[str, tuple[DensityProfile, VorticityProfile, float, float]] = {
    "taylor_green_homogeneous": ("constant", "taylor_green", 1.0, 0.0),
    "shear": ("constant", "shear", 1.0, 0.0),
    "stratified_shear": ("sinusoidal", "shear", 1.5, 0.5),
    "multimode": ("constant", "multimode", 1.0, 0.0),
    "smooth_density": ("smooth_product", "multimode", 1.0, 0.5),
    "tanh_layer": ("tanh_layer", "taylor_green", 1.0, 0.5),
    "power_law": ("power_law", "power_law", 1.0, 0.25),
}


@dataclass(frozen=True, slots=True)
class DatumRecipe:
    """Named analytic formulas for ``ρ₀`` and ``ω₀`` with their parameters."""

    name: str
    rho_profile: DensityProfile
    omega_profile: VorticityProfile
    rho_bar: float = 1.0
    rho_amplitude: float = 0.0
    layer_width: float = 0.2
    spectral_slope: float = 2.0
    omega_amplitude: float = 1.0
    seed: int = 0

    @classmethod
    def preset(cls, name: str, **overrides: object) -> "DatumRecipe":
        if name not in PRESETS:
            raise ValidationError(f"unknown recipe {name!r}", operation="experiments.DatumRecipe")
        rho_profile, omega_profile, rho_bar, amplitude = PRESETS[name]
        recipe = cls(name, rho_profile, omega_profile, rho_bar, amplitude)
        values = {k: v for k, v in overrides.items() if v is not None}
        return replace(recipe, **values) if values else recipe

    @classmethod
    def from_config(cls, config: RunConfig) -> "DatumRecipe":
        return cls.preset(
            config.recipe,
            rho_profile=config.rho_profile,
            omega_profile=config.omega_profile,
            rho_bar=config.rho_bar,
            rho_amplitude=config.rho_amplitude,
            layer_width=config.layer_width,
            spectral_slope=config.spectral_slope,
            omega_amplitude=config.omega_amplitude,
            seed=config.seed,
        )


@dataclass(frozen=True, slots=True)
class Datum:
    rho0: ScalarField
    omega0: ScalarField
    recipe: Optional[DatumRecipe] = None

    @property
    def grid(self) -> Grid:
        return self.rho0.grid

    def velocity(self) -> VectorField:
        return biot_savart(self.omega0)


def power_law_field(grid: Grid, slope: float, seed: int) -> ScalarField:
    """Mean-zero random-phase field with ``|k|^-slope`` amplitudes, scaled to unit sup norm.

    Modes are kept below the two-thirds cutoff so the field is resolved by the
    dealiased dynamics.
    """

    rng = np.random.default_rng(seed)
    tables = grid.tables
    k = np.sqrt(tables.k_sq)
    amplitude = np.zeros_like(k)
    active = (k > 0) & (tables.k_inf <= grid.n / 3.0)
    amplitude[active] = k[active] ** -slope
    phases = rng.uniform(0.0, 2.0 * math.pi, size=k.shape)
    coefficients = amplitude * np.exp(1j * phases) * grid.n * grid.n
    values = grid.inverse(coefficients)
    values = values - values.mean()
    peak = float(np.abs(values).max())
    return ScalarField(grid, values / peak if peak > 0 else values)


def _density(recipe: DatumRecipe, grid: Grid) -> ScalarField:
    bar, amp = recipe.rho_bar, recipe.rho_amplitude
    formulas: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
        "constant": lambda x1, x2: np.full_like(x1, bar),
        "sinusoidal": lambda x1, x2: bar + amp * np.sin(x1),
        "smooth_product": lambda x1, x2: bar + amp * np.sin(x1) * np.sin(x2),
        "tanh_layer": lambda x1, x2: bar + amp * np.tanh(np.sin(x2) / recipe.layer_width),
    }
    if recipe.rho_profile == "power_law":
        rough = power_law_field(grid, recipe.spectral_slope, recipe.seed)
        return bar + amp * rough
    return grid.sample(formulas[recipe.rho_profile])


def _vorticity(recipe: DatumRecipe, grid: Grid) -> ScalarField:
    a = recipe.omega_amplitude
    formulas: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
        "taylor_green": lambda x1, x2: -2.0 * a * np.cos(x1) * np.cos(x2),
        "shear": lambda x1, x2: a * np.cos(x1),
        # even in both coordinates: the maximum sits on a stagnation point
        "multimode": lambda x1, x2: a
        * (np.cos(x1) + 0.6 * np.cos(2.0 * x2) + 0.3 * np.cos(x1) * np.cos(x2)),
        "zero": lambda x1, x2: np.zeros_like(x1),
    }
    if recipe.omega_profile == "power_law":
        return a * power_law_field(grid, recipe.spectral_slope, recipe.seed + 1)
    return grid.sample(formulas[recipe.omega_profile])


def validate_datum(datum: Datum, rho_star: float, rho_upper: float, slack: float = 0.0) -> None:
    """Check ``ρ★ − slack <= ρ₀ <= ρ* + slack`` and a mean-zero ``ω₀``."""

    low, high = float(datum.rho0.values.min()), float(datum.rho0.values.max())
    if low < rho_star - slack or high > rho_upper + slack:
        raise ValidationError(
            f"density range [{low:.6g}, {high:.6g}] outside [{rho_star:g}, {rho_upper:g}]",
            operation="experiments.DatumRecipe",
        )
    scale = max(datum.omega0.sup(), 1.0)
    if abs(datum.omega0.mean()) > 1e-12 * scale:
        raise ValidationError(
            "initial vorticity is not mean-zero", operation="experiments.DatumRecipe"
        )


def build_datum(recipe: DatumRecipe, grid: Grid, rho_star: float, rho_upper: float) -> Datum:
    datum = Datum(_density(recipe, grid), _vorticity(recipe, grid), recipe)
    validate_datum(datum, rho_star, rho_upper)
    return datum


def vorticity_integrability(datum: Datum, p0: float) -> dict[str, float | bool]:
    """Sampled ``‖ω₀‖_{p0}`` and ``‖ω₀‖∞`` and whether both are finite."""

    lp = lp_norm(datum.omega0, p0)
    linf = lp_norm(datum.omega0, math.inf)
    return {"omega0_lp0": lp, "omega0_inf": linf, "admissible": math.isfinite(lp + linf)}


@dataclass(frozen=True, slots=True)
class MollifierScale:
    n_cut: Optional[int] = None

    @property
    def epsilon_n(self) -> float:
        return 0.0 if self.n_cut is None else 1.0 / self.n_cut


@dataclass(frozen=True, slots=True)
class MollifiedDatum:
    datum: Datum
    scale: MollifierScale
    rho_deviation: float
    velocity_l2_error: float
    bounds_hold: bool


def mollify(
    datum: Datum,
    scale: MollifierScale,
    rho_star: Optional[float] = None,
    rho_upper: Optional[float] = None,
) -> MollifiedDatum:
    """Sharp spectral cutoff at ``|k|∞ <= n_cut`` of both data.

    The mean of ``ρ₀`` sits in the kept zero mode. Reported alongside:
    ``‖ρ₀ − ρ₀ₙ‖∞``, ``‖u₀ₙ − u₀‖₂`` and whether the density bounds widened by
    that deviation still hold.
    """

    rho = spectral_cutoff(datum.rho0, scale.n_cut)
    omega = spectral_cutoff(datum.omega0, scale.n_cut)
    deviation = float(np.abs(datum.rho0.values - rho.values).max())
    velocity_error = lp_norm(biot_savart(omega) - biot_savart(datum.omega0), 2.0)

    bounds_hold = True
    if rho_star is not None and rho_upper is not None:
        low, high = float(rho.values.min()), float(rho.values.max())
        bounds_hold = rho_star - deviation <= low and high <= rho_upper + deviation
    logger.debug("mollified at n_cut=%s: deviation %.3e", scale.n_cut, deviation)
    return MollifiedDatum(
        datum=Datum(rho, omega, datum.recipe),
        scale=scale,
        rho_deviation=deviation,
        velocity_l2_error=velocity_error,
        bounds_hold=bounds_hold,
    )


def step_control(config: RunConfig) -> StepControl:
    return StepControl(cfl=config.cfl, dt_max=config.dt_max, filter_strength=config.filter_strength)


def pressure_solver(config: RunConfig) -> PressureSolver:
    """A fresh solver per trajectory; solvers keep per-run counters."""

    return PressureSolver(tol=config.pressure_tol, max_iter=config.pressure_max_iter)


__all__ = [
    "PRESETS",
    "DatumRecipe",
    "Datum",
    "MollifierScale",
    "MollifiedDatum",
    "power_law_field",
    "build_datum",
    "validate_datum",
    "vorticity_integrability",
    "mollify",
    "step_control",
    "pressure_solver",
]
