"""Twin-run stability experiments.

Two trajectories start from a datum and from the same datum plus a
single-mode divergence-free velocity perturbation ``δ·(0, sin(m x₁))``.
Both are advanced in lockstep with the step sizes of the unperturbed run, and
the difference energy ``E = ‖√ρ₁ δu‖₂² + ‖δρ‖₂²`` is recorded at every step.
"""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from ydvl.config import RunConfig, get_settings
from ydvl.dynamics.integrator import DtSchedule, remaining, step_rk4
from ydvl.dynamics.state import FluidState, initialize_state
from ydvl.errors import YdvlError
from ydvl.experiments.data import Datum, pressure_solver, step_control, validate_datum
from ydvl.spectral.operators import gradient

logger = logging.getLogger(__name__)

ENVELOPE_EXPONENTS = (4, 8, 16)
ENERGY_THRESHOLD = 0.5
_LOG_K_BOUNDS = (math.log(1e-12), math.log(1e6))


def stability_energy(s1: FluidState, s2: FluidState) -> float:
    """``‖√ρ₁ δu‖₂² + ‖δρ‖₂²`` on the grid."""

    du = s1.velocity - s2.velocity
    drho = s1.rho.values - s2.rho.values
    weighted = s1.rho.values * (du.x.values**2 + du.y.values**2)
    return float(np.sum(weighted) + np.sum(drho**2)) * s1.grid.cell_area


def stability_budget(s1: FluidState, s2: FluidState) -> tuple[float, float, float]:
    """Magnitudes of the three integrals bounding ``dE/dt``.

    Returned as ``(pressure, stretching, density)``:
    ``|∫(δρ/ρ₂)∇Π₂·δu|``, ``|∫ρ₁ (δu·∇)u₂·δu|`` and ``|∫δu·∇ρ₂ δρ|``.
    """

    area = s1.grid.cell_area
    du = s1.velocity - s2.velocity
    drho = s1.rho.values - s2.rho.values
    u2 = s2.velocity
    grad_pi = gradient(s2.pi)
    grad_rho = gradient(s2.rho)

    work = grad_pi.x.values * du.x.values + grad_pi.y.values * du.y.values
    pressure = np.sum(drho / s2.rho.values * work)

    gx, gy = gradient(u2.x), gradient(u2.y)
    transport_x = du.x.values * gx.x.values + du.y.values * gx.y.values
    transport_y = du.x.values * gy.x.values + du.y.values * gy.y.values
    stretching = np.sum(
        s1.rho.values * (transport_x * du.x.values + transport_y * du.y.values)
    )

    density = np.sum(
        (du.x.values * grad_rho.x.values + du.y.values * grad_rho.y.values) * drho
    )
    return abs(float(pressure)) * area, abs(float(stretching)) * area, abs(float(density)) * area


@dataclass
class StabilityTrace:
    delta: float
    mode: int
    times: np.ndarray
    energy: np.ndarray
    fitted_k: float = math.nan
    window_end: float = math.nan
    envelope_flags: Dict[int, bool] = field(default_factory=dict)
    envelope_constants: Dict[int, float] = field(default_factory=dict)
    t0: float = math.nan
    pressure_term: np.ndarray = field(default_factory=lambda: np.zeros(0))
    stretching_term: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density_term: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def e0(self) -> float:
        return float(self.energy[0])

    @property
    def sup_energy(self) -> float:
        return float(self.energy.max())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.times,
                "energy": self.energy,
                "pressure_term": self.pressure_term,
                "stretching_term": self.stretching_term,
                "density_term": self.density_term,
                "delta": self.delta,
            }
        )

    def summary(self) -> Dict[str, float]:
        row: Dict[str, float] = {
            "delta": self.delta,
            "mode": float(self.mode),
            "e0": self.e0,
            "sup_energy": self.sup_energy,
            "fitted_k": self.fitted_k,
            "window_end": self.window_end,
            "t0": self.t0,
        }
        for p in ENVELOPE_EXPONENTS:
            row[f"envelope_{p}"] = float(self.envelope_flags.get(p, False))
            row[f"min_k_{p}"] = self.envelope_constants.get(p, math.nan)
        return row


def perturb(
    datum: Datum, delta: float, mode: int, density_delta: float = 0.0
) -> Datum:
    """Add ``δ·(0, sin(m x₁))`` to the velocity and ``ε sin(m x₂)`` to the density."""

    if delta == 0.0 and density_delta == 0.0:
        return datum
    grid = datum.grid
    omega = datum.omega0 + grid.sample(lambda x1, x2: delta * mode * np.cos(mode * x1))
    rho = datum.rho0
    if density_delta:
        rho = rho + grid.sample(lambda x1, x2: density_delta * np.sin(mode * x2))
    return Datum(rho, omega, datum.recipe)


def _fit_log_envelope(times: np.ndarray, energy: np.ndarray, e0: float, p: int) -> float:
    """Least-squares ``K`` of ``log E ≈ log((K t)^p + E(0))`` over ``t > 0``."""

    mask = (times > 0) & (energy > 0)
    if mask.sum() < 1 or e0 <= 0.0:
        return math.nan
    t, log_e = times[mask], np.log(energy[mask])

    def objective(log_k: float) -> float:
        model = np.logaddexp(p * (log_k + np.log(t)), math.log(e0))
        return float(np.sum((log_e - model) ** 2))

    result = minimize_scalar(objective, bounds=_LOG_K_BOUNDS, method="bounded")
    return float(math.exp(result.x))


def fit_envelope(
    times: np.ndarray, energy: np.ndarray, t_final: float, p: int = ENVELOPE_EXPONENTS[0]
) -> tuple[float, float]:
    """Fit ``K`` on ``t ∈ (0, min(T, 1/(2K))]``; the window is refined until it settles.

    Returns ``(K, window_end)``.
    """

    e0 = float(energy[0])
    window_end = t_final
    k = math.nan
    for _ in range(8):
        inside = times <= window_end * (1.0 + 1e-12)
        if inside.sum() < 2:
            break
        k = _fit_log_envelope(times[inside], energy[inside], e0, p)
        if not math.isfinite(k):
            break
        new_end = min(t_final, 1.0 / (2.0 * k))
        if math.isclose(new_end, window_end, rel_tol=1e-9):
            break
        window_end = new_end
    return k, window_end


def minimal_envelope_constant(times: np.ndarray, energy: np.ndarray, p: int) -> float:
    """Smallest ``K`` with ``E(t) <= (K t)^p + E(0)`` at every sample."""

    e0 = float(energy[0])
    excess = np.maximum(energy - e0, 0.0)
    positive = times > 0
    if not positive.any():
        return 0.0
    return float(np.max(excess[positive] ** (1.0 / p) / times[positive]))


def envelope_holds(times: np.ndarray, energy: np.ndarray, k: float, p: int) -> bool:
    if not math.isfinite(k):
        return False
    e0 = float(energy[0])
    return bool(np.all(energy <= (k * times) ** p + e0))


def energy_threshold_time(times: np.ndarray, energy: np.ndarray) -> float:
    """Largest sampled ``t`` with ``E <= 1/2`` on all of ``[0, t]``."""

    above = np.nonzero(energy > ENERGY_THRESHOLD)[0]
    if len(above) == 0:
        return float(times[-1])
    if above[0] == 0:
        return 0.0
    return float(times[above[0] - 1])


def twin_run(
    datum: Datum,
    delta: float,
    mode: int,
    config: RunConfig,
    density_delta: float = 0.0,
) -> StabilityTrace:
    """Evolve both trajectories in lockstep and build the stability trace.

    ``δ = 0`` without a density perturbation reproduces the reference
    trajectory bitwise, hence ``E ≡ 0``.
    """

    perturbed = perturb(datum, delta, mode, density_delta)
    if density_delta:
        validate_datum(perturbed, config.rho_star, config.rho_upper)

    ctl = step_control(config)
    solver1, solver2 = pressure_solver(config), pressure_solver(config)
    s1 = initialize_state(datum.rho0, datum.omega0, solver1)
    s2 = initialize_state(perturbed.rho0, perturbed.omega0, solver2)
    schedule = DtSchedule(ctl)

    times, energy = [s1.t], [stability_energy(s1, s2)]
    budgets = [stability_budget(s1, s2)]
    while remaining(s1, config.t_final):
        dt = schedule.next(s1, config.t_final)
        s1 = step_rk4(s1, ctl, solver1, dt=dt)
        s2 = step_rk4(s2, ctl, solver2, dt=dt)
        times.append(s1.t)
        energy.append(stability_energy(s1, s2))
        budgets.append(stability_budget(s1, s2))

    t = np.array(times)
    e = np.array(energy)
    terms = np.array(budgets)
    trace = StabilityTrace(
        delta=delta,
        mode=mode,
        times=t,
        energy=e,
        t0=energy_threshold_time(t, e),
        pressure_term=terms[:, 0],
        stretching_term=terms[:, 1],
        density_term=terms[:, 2],
    )
    if e[0] > 0.0:
        trace.fitted_k, trace.window_end = fit_envelope(t, e, config.t_final)
        for p in ENVELOPE_EXPONENTS:
            trace.envelope_flags[p] = envelope_holds(t, e, trace.fitted_k, p)
            trace.envelope_constants[p] = minimal_envelope_constant(t, e, p)
    logger.info("twin run δ=%g: sup E = %.3e, K = %.4g", delta, trace.sup_energy, trace.fitted_k)
    return trace


@dataclass
class TwinEnsemble:
    """Traces by amplitude plus the amplitudes whose runs failed."""

    traces: Dict[float, StabilityTrace] = field(default_factory=dict)
    failures: Dict[float, str] = field(default_factory=dict)

    def complete(self, deltas: Sequence[float]) -> bool:
        return not self.failures and all(delta in self.traces for delta in deltas)


async def twin_ensemble_async(
    datum: Datum, deltas: Sequence[float], config: RunConfig
) -> TwinEnsemble:
    """Run every amplitude as its own task; a failing run is logged and collected."""

    semaphore = asyncio.Semaphore(get_settings().threads)
    ensemble = TwinEnsemble()

    async def _run(delta: float) -> None:
        async with semaphore:
            try:
                ensemble.traces[delta] = await asyncio.to_thread(
                    twin_run,
                    datum,
                    delta,
                    config.perturbation_mode,
                    config,
                    config.density_perturbation,
                )
            except YdvlError as exc:
                logger.error("Twin run failed for δ=%g: %s", delta, exc)
                ensemble.failures[delta] = str(exc)

    await asyncio.gather(*(_run(delta) for delta in deltas))
    ensemble.traces = {d: ensemble.traces[d] for d in deltas if d in ensemble.traces}
    return ensemble


def twin_ensemble(datum: Datum, deltas: Sequence[float], config: RunConfig) -> TwinEnsemble:
    return asyncio.run(twin_ensemble_async(datum, deltas, config))


__all__ = [
    "ENVELOPE_EXPONENTS",
    "StabilityTrace",
    "TwinEnsemble",
    "stability_energy",
    "stability_budget",
    "perturb",
    "fit_envelope",
    "minimal_envelope_constant",
    "envelope_holds",
    "energy_threshold_time",
    "twin_run",
    "twin_ensemble_async",
    "twin_ensemble",
]
