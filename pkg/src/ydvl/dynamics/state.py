"""Fluid state, step control and state construction from initial data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ydvl.errors import OutOfRange, VacuumViolated
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.grid import Grid, ScalarField, VectorField
from ydvl.spectral.operators import (
    biot_savart,
    curl2d,
    dealias,
    perp_gradient,
)

logger = logging.getLogger(__name__)

VELOCITY_FLOOR = 1e-8


@dataclass(frozen=True, slots=True)
class StepControl:
    cfl: float = 0.5
    dt_max: float = 0.1
    filter_strength: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl <= 1.0):
            raise OutOfRange(f"cfl = {self.cfl} outside (0, 1]", operation="dynamics.StepControl")
        if self.dt_max <= 0.0 or self.filter_strength < 0.0:
            raise OutOfRange(
                "dt_max must be positive and filter_strength non-negative",
                operation="dynamics.StepControl",
            )


@dataclass(frozen=True, slots=True)
class FluidState:
    """Solver state at time ``t``.

    ``u`` is mean-free; the spatial mean of the velocity lives in ``u_mean``.
    ``eta`` and ``x_field`` are evolved independently of ``rho`` and ``u`` so
    that their defining identities can be checked along a run.
    """

    t: float
    rho: ScalarField
    u: VectorField
    u_mean: np.ndarray
    eta: ScalarField
    x_field: VectorField
    pi: ScalarField
    omega: ScalarField = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        mean = np.array(self.u_mean, dtype=np.float64, copy=True).reshape(2)
        mean.flags.writeable = False
        object.__setattr__(self, "u_mean", mean)
        if self.omega is None:
            object.__setattr__(self, "omega", curl2d(self.u))

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    @property
    def velocity(self) -> VectorField:
        """Full velocity ``u + u_mean``."""

        return self.u.shift(self.u_mean)

    @property
    def momentum(self) -> VectorField:
        return self.velocity * self.rho

    def with_time(self, t: float) -> "FluidState":
        return replace(self, t=t)


def initialize_state(
    rho0: ScalarField,
    omega0: ScalarField,
    solver: Optional[PressureSolver] = None,
    u_mean: Optional[np.ndarray] = None,
    t: float = 0.0,
) -> FluidState:
    """Build the state at ``t`` from density and vorticity data.

    Both data are dealiased; ``u`` comes from the Biot-Savart law, and
    ``eta``/``x_field`` are set from their defining identities so the companion
    residuals vanish at construction.
    """

    if float(rho0.values.min()) <= 0.0:
        raise VacuumViolated(
            "initial density is not positive", operation="dynamics.initialize_state"
        )
    solver = solver or PressureSolver()
    rho = dealias(rho0)
    omega = dealias(omega0 - omega0.mean())
    u = biot_savart(omega)
    omega = curl2d(u)
    mean = np.zeros(2) if u_mean is None else np.asarray(u_mean, dtype=np.float64)
    velocity = u.shift(mean)
    x_field = perp_gradient(rho)
    eta = rho * omega + velocity.dot(x_field)
    pi = solver(rho, velocity).pi
    logger.debug("initialised state on n=%d grid", rho.grid.n)
    return FluidState(
        t=t,
        rho=rho,
        u=u,
        u_mean=mean,
        eta=eta,
        x_field=x_field,
        pi=pi,
        omega=omega,
    )


def state_from_velocity(
    rho: ScalarField,
    velocity: VectorField,
    solver: Optional[PressureSolver] = None,
    t: float = 0.0,
) -> FluidState:
    """Build a state from a (divergence-free) velocity instead of a vorticity."""

    solver = solver or PressureSolver()
    mean = velocity.mean()
    u = velocity.shift(-mean)
    omega = curl2d(u)
    x_field = perp_gradient(rho)
    eta = rho * omega + velocity.dot(x_field)
    return FluidState(
        t=t,
        rho=rho,
        u=u,
        u_mean=mean,
        eta=eta,
        x_field=x_field,
        pi=solver(rho, velocity).pi,
        omega=omega,
    )


def cfl_dt(state: FluidState, ctl: StepControl) -> float:
    """``min(dt_max, cfl·h / max(‖u‖∞, 1e-8))`` with the full velocity."""

    speed = max(state.velocity.sup(), VELOCITY_FLOOR)
    return min(ctl.dt_max, ctl.cfl * state.grid.spacing / speed)


def companion_residuals(state: FluidState) -> tuple[float, float]:
    """``(‖η − ρω − u·∇⊥ρ‖∞, ‖X − ∇⊥ρ‖∞)``."""

    x_exact = perp_gradient(state.rho)
    eta_exact = state.rho * state.omega + state.velocity.dot(x_exact)
    eta_residual = (state.eta - eta_exact).sup()
    x_residual = (state.x_field - x_exact).sup()
    return eta_residual, x_residual


def vorticity_from_eta(state: FluidState) -> ScalarField:
    """Recover ``ω = (η − u·∇⊥ρ)/ρ``."""

    return (state.eta - state.velocity.dot(perp_gradient(state.rho))) / state.rho


def kinetic_energy(state: FluidState) -> float:
    """``∫ρ|u|²`` with the full velocity."""

    velocity = state.velocity
    density = state.rho.values * (velocity.x.values**2 + velocity.y.values**2)
    return float(np.sum(density)) * state.grid.cell_area


__all__ = [
    "VELOCITY_FLOOR",
    "StepControl",
    "FluidState",
    "initialize_state",
    "state_from_velocity",
    "cfl_dt",
    "companion_residuals",
    "vorticity_from_eta",
    "kinetic_energy",
]
