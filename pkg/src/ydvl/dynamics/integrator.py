"""Right-hand sides of the coupled system and classical RK4 time stepping.

Evolved variables: density ``ρ``, mean-free velocity ``u`` with its mean
``ū``, momentum vorticity ``η`` and the direction field ``X``::

    ∂tρ = −U·∇ρ
    ∂tu = P[−(U·∇)U − (1/ρ)∇Π]          (mean-free part)
    ∂tū = mean(−(1/ρ)∇Π)
    ∂tη = −U·∇η + ∂ₓU·U
    ∂tX = −(U·∇)X + ∂ₓU

with ``U = u + ū`` and ``∂ₓ = X·∇``. Every product is dealiased.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ydvl.dynamics.state import FluidState, StepControl, cfl_dt
from ydvl.errors import BlowupDetected
from ydvl.norms.directional import directional_derivative
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.grid import ScalarField, VectorField
from ydvl.spectral.operators import (
    advect,
    advect_vector,
    curl2d,
    dealias,
    dealias_vector,
    exponential_filter,
    gradient,
    leray_project,
    perp_gradient,
)

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e6
DT_RECHECK_EVERY = 10


@dataclass(frozen=True, slots=True)
class Tendency:
    """State-shaped increments plus the pressure they were built from."""

    rho: ScalarField
    u: VectorField
    u_mean: np.ndarray
    eta: ScalarField
    x_field: VectorField
    pi: ScalarField


def _pressure_acceleration(rho: ScalarField, pi: ScalarField) -> VectorField:
    grad = gradient(pi)
    inverse = 1.0 / rho.values
    return dealias_vector(
        VectorField(
            ScalarField(rho.grid, inverse * grad.x.values),
            ScalarField(rho.grid, inverse * grad.y.values),
        )
    )


def tendencies(
    state: FluidState, solver: PressureSolver, pi: Optional[ScalarField] = None
) -> Tendency:
    """Evaluate the coupled right-hand side at ``state``.

    ``pi`` may carry a pressure already solved for this exact state.
    """

    velocity = state.velocity
    if pi is None:
        pi = solver(state.rho, velocity).pi

    acceleration = _pressure_acceleration(state.rho, pi)
    raw = -advect_vector(velocity, velocity) - acceleration
    projected = leray_project(raw)
    mean_part = projected.mean()
    du = projected.shift(-mean_part)

    stretch = dealias_vector(directional_derivative(state.x_field, velocity))
    source = dealias(stretch.dot(velocity))

    return Tendency(
        rho=-advect(velocity, state.rho),
        u=du,
        u_mean=-acceleration.mean(),
        eta=source - advect(velocity, state.eta),
        x_field=stretch - advect_vector(velocity, state.x_field),
        pi=pi,
    )


def _axpy(base: ScalarField, terms: list[tuple[float, ScalarField]]) -> ScalarField:
    values = base.values.copy()
    for coefficient, term in terms:
        values += coefficient * term.values
    return ScalarField(base.grid, values)


def _vector_axpy(base: VectorField, terms: list[tuple[float, VectorField]]) -> VectorField:
    return VectorField(
        _axpy(base.x, [(c, t.x) for c, t in terms]),
        _axpy(base.y, [(c, t.y) for c, t in terms]),
    )


def _combine(
    state: FluidState, weighted: list[tuple[float, Tendency]], t: float, pi: ScalarField
) -> FluidState:
    u_mean = state.u_mean.copy()
    for coefficient, tendency in weighted:
        u_mean = u_mean + coefficient * tendency.u_mean
    return FluidState(
        t=t,
        rho=_axpy(state.rho, [(c, k.rho) for c, k in weighted]),
        u=_vector_axpy(state.u, [(c, k.u) for c, k in weighted]),
        u_mean=u_mean,
        eta=_axpy(state.eta, [(c, k.eta) for c, k in weighted]),
        x_field=_vector_axpy(state.x_field, [(c, k.x_field) for c, k in weighted]),
        pi=pi,
    )


def _filter_vector(v: VectorField, strength: float) -> VectorField:
    return VectorField(exponential_filter(v.x, strength), exponential_filter(v.y, strength))


def step_rk4(
    state: FluidState,
    ctl: StepControl,
    solver: PressureSolver,
    dt: Optional[float] = None,
) -> FluidState:
    """Advance one classical four-stage step of size ``dt`` (CFL-chosen when omitted)."""

    dt = cfl_dt(state, ctl) if dt is None else dt
    half = 0.5 * dt

    k1 = tendencies(state, solver, pi=state.pi)
    k2 = tendencies(_combine(state, [(half, k1)], state.t + half, k1.pi), solver)
    k3 = tendencies(_combine(state, [(half, k2)], state.t + half, k2.pi), solver)
    k4 = tendencies(_combine(state, [(dt, k3)], state.t + dt, k3.pi), solver)

    sixth = dt / 6.0
    advanced = _combine(
        state,
        [(sixth, k1), (2.0 * sixth, k2), (2.0 * sixth, k3), (sixth, k4)],
        state.t + dt,
        k4.pi,
    )

    u = leray_project(advanced.u)
    u = u.shift(-u.mean())
    rho, eta, x_field = advanced.rho, advanced.eta, advanced.x_field
    if ctl.filter_strength > 0.0:
        rho = exponential_filter(rho, ctl.filter_strength)
        u = _filter_vector(u, ctl.filter_strength)
        eta = exponential_filter(eta, ctl.filter_strength)
        x_field = _filter_vector(x_field, ctl.filter_strength)

    speed = u.shift(advanced.u_mean).sup()
    if not math.isfinite(speed) or speed > BLOWUP_THRESHOLD:
        raise BlowupDetected(
            f"‖u‖∞ = {speed:.3e} exceeds {BLOWUP_THRESHOLD:g} at t = {advanced.t:.6g}",
            operation="dynamics.step_rk4",
        )

    velocity = u.shift(advanced.u_mean)
    pi = solver(rho, velocity).pi
    return FluidState(
        t=advanced.t,
        rho=rho,
        u=u,
        u_mean=advanced.u_mean,
        eta=eta,
        x_field=x_field,
        pi=pi,
    )


@dataclass
class DtSchedule:
    """Fixed step chosen at the first call, re-evaluated every few steps, shrink-only."""

    ctl: StepControl
    recheck_every: int = DT_RECHECK_EVERY
    dt: Optional[float] = None
    steps: int = 0
    history: list[float] = field(default_factory=list)

    def next(self, state: FluidState, t_final: float) -> float:
        if self.dt is None:
            self.dt = cfl_dt(state, self.ctl)
        elif self.steps % self.recheck_every == 0:
            candidate = cfl_dt(state, self.ctl)
            if candidate < self.dt:
                logger.info("t = %.4g: dt shrinks %.4e -> %.4e", state.t, self.dt, candidate)
                self.dt = candidate
        self.steps += 1
        step = min(self.dt, t_final - state.t)
        self.history.append(step)
        return step


def remaining(state: FluidState, t_final: float) -> bool:
    return t_final - state.t > 1e-12 * max(1.0, abs(t_final))


StepCallback = Callable[[int, FluidState], None]


def integrate(
    state: FluidState,
    ctl: StepControl,
    t_final: float,
    solver: PressureSolver,
    on_step: Optional[StepCallback] = None,
    schedule: Optional[DtSchedule] = None,
) -> FluidState:
    """Run to ``t_final``; the last step is clipped to land on it exactly."""

    schedule = schedule or DtSchedule(ctl)
    steps = 0
    while remaining(state, t_final):
        dt = schedule.next(state, t_final)
        state = step_rk4(state, ctl, solver, dt=dt)
        steps += 1
        if on_step is not None:
            on_step(steps, state)
    logger.debug("integrated to t = %.6g in %d steps", state.t, steps)
    return state


def vorticity_equation_residual(state: FluidState, solver: PressureSolver) -> float:
    """L² norm of ``∂tω + U·∇ω − (1/ρ²)∇⊥ρ·∇Π``.

    ``∂tω`` is the curl of the velocity tendency.
    """

    tendency = tendencies(state, solver, pi=state.pi)
    d_omega = curl2d(tendency.u)
    grad_pi = gradient(state.pi)
    perp = perp_gradient(state.rho)
    weight = 1.0 / state.rho.values**2
    torque = perp.x.values * grad_pi.x.values + perp.y.values * grad_pi.y.values
    source = dealias(ScalarField(state.grid, weight * torque))
    residual = d_omega + advect(state.velocity, state.omega) - source
    return math.sqrt(float(np.sum(residual.values**2)) * state.grid.cell_area)


__all__ = [
    "BLOWUP_THRESHOLD",
    "Tendency",
    "DtSchedule",
    "tendencies",
    "step_rk4",
    "integrate",
    "vorticity_equation_residual",
]
