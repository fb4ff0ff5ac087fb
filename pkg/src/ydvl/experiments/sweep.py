"""Regularisation-sequence sweeps.

Each scale mollifies the datum at its own cutoff and runs the solver on the
common grid. All scales are sampled at the same times, which is what makes
the Cauchy differences between consecutive scales meaningful.
"""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from ydvl.config import RunConfig, get_settings
from ydvl.diagnostics.bounds import time_lp_norm
from ydvl.diagnostics.records import DiagnosticsRecord, measure
from ydvl.dynamics.integrator import DtSchedule, integrate
from ydvl.dynamics.state import FluidState, initialize_state
from ydvl.errors import YdvlError
from ydvl.experiments.data import (
    Datum,
    MollifierScale,
    mollify,
    pressure_solver,
    step_control,
)
from ydvl.norms.directional import directional_derivative
from ydvl.norms.lebesgue import lp_norm, make_exponents
from ydvl.spectral.grid import VectorField

logger = logging.getLogger(__name__)

Monotonicity = Literal["increasing", "decreasing", "constant", "mixed"]


@dataclass
class ScaleResult:
    """Outputs of the run at one cutoff."""

    scale: MollifierScale
    m_final: float
    sup_grad_rho: float
    sup_eta_p0: float
    sup_u: float
    dxu_time_l2: float
    dxu_time_inf: float
    rho_deviation: float
    velocity_l2_error: float
    series: List[DiagnosticsRecord] = field(repr=False, default_factory=list)
    velocities: List[VectorField] = field(repr=False, default_factory=list)

    def summary(self) -> Dict[str, float]:
        return {
            "n_cut": math.inf if self.scale.n_cut is None else float(self.scale.n_cut),
            "epsilon_n": self.scale.epsilon_n,
            "m_final": self.m_final,
            "sup_grad_rho": self.sup_grad_rho,
            "sup_eta_p0": self.sup_eta_p0,
            "sup_u": self.sup_u,
            "dxu_time_l2": self.dxu_time_l2,
            "dxu_time_inf": self.dxu_time_inf,
            "rho_deviation": self.rho_deviation,
            "velocity_l2_error": self.velocity_l2_error,
        }


@dataclass
class SweepReport:
    results: Dict[Optional[int], ScaleResult]
    cauchy: Dict[tuple[Optional[int], Optional[int]], float]
    monotonicity: Monotonicity
    failures: Dict[Optional[int], str] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        ordered = list(self.results)
        for index, key in enumerate(ordered):
            row = self.results[key].summary()
            nxt = ordered[index + 1] if index + 1 < len(ordered) else None
            row["cauchy_next"] = self.cauchy.get((key, nxt), math.nan)
            rows.append(row)
        return pd.DataFrame(rows)


class _StretchAccumulator:
    """Per-step trapezoidal integral of ``‖∂ₓu‖∞``."""

    def __init__(self, state: FluidState) -> None:
        self.t = state.t
        self.last = directional_derivative(state.x_field, state.velocity).sup()
        self.total = 0.0

    def __call__(self, _step: int, state: FluidState) -> None:
        current = directional_derivative(state.x_field, state.velocity).sup()
        self.total += float(trapezoid([self.last, current], [self.t, state.t]))
        self.t, self.last = state.t, current


def sample_times(t_final: float, samples: int) -> np.ndarray:
    return np.linspace(0.0, t_final, samples + 1)


def run_scale(datum: Datum, scale: MollifierScale, config: RunConfig) -> ScaleResult:
    """Mollify at ``scale`` and run to ``config.t_final``, sampling on the common times."""

    mollified = mollify(datum, scale, config.rho_star, config.rho_upper)
    exponents = make_exponents(config.p0)
    solver = pressure_solver(config)
    ctl = step_control(config)

    state = initialize_state(mollified.datum.rho0, mollified.datum.omega0, solver)
    schedule = DtSchedule(ctl)
    accumulator = _StretchAccumulator(state)

    series = [measure(state, exponents)]
    velocities = [state.velocity]
    for t_next in sample_times(config.t_final, config.sweep_samples)[1:]:
        state = integrate(state, ctl, float(t_next), solver, on_step=accumulator, schedule=schedule)
        series.append(measure(state, exponents, previous=series[-1]))
        velocities.append(state.velocity)

    logger.info("scale n_cut=%s finished: M(T) = %.6e", scale.n_cut, accumulator.total)
    return ScaleResult(
        scale=scale,
        m_final=accumulator.total,
        sup_grad_rho=max(r.sup_grad_rho for r in series),
        sup_eta_p0=max(r.lp_eta[exponents.p0] for r in series),
        sup_u=max(r.sup_u for r in series),
        dxu_time_l2=time_lp_norm(series, 2.0),
        dxu_time_inf=time_lp_norm(series, math.inf),
        rho_deviation=mollified.rho_deviation,
        velocity_l2_error=mollified.velocity_l2_error,
        series=series,
        velocities=velocities,
    )


def cauchy_difference(first: ScaleResult, second: ScaleResult) -> float:
    """``sup_t ‖u_a(t) − u_b(t)‖₂`` over the shared sample times."""

    return max(lp_norm(a - b, 2.0) for a, b in zip(first.velocities, second.velocities))


def classify_monotonicity(values: Sequence[float], rtol: float = 1e-10) -> Monotonicity:
    """Trend of ``values`` in order; an empty sequence has none and is ``"mixed"``."""

    if len(values) == 0:
        return "mixed"
    steps = np.diff(np.asarray(values, dtype=np.float64))
    scale = max(float(np.max(np.abs(values))), 1e-300)
    flat = np.abs(steps) <= rtol * scale
    if flat.all():
        return "constant"
    if np.all(flat | (steps > 0)):
        return "increasing"
    if np.all(flat | (steps < 0)):
        return "decreasing"
    return "mixed"


def _ordering(scale: MollifierScale) -> float:
    return math.inf if scale.n_cut is None else float(scale.n_cut)


async def regularization_sweep_async(
    datum: Datum, scales: Sequence[MollifierScale], config: RunConfig
) -> SweepReport:
    """Run every scale as its own task; a failing scale is logged and skipped."""

    ordered = sorted(scales, key=_ordering)
    semaphore = asyncio.Semaphore(get_settings().threads)

    async def _run(scale: MollifierScale) -> ScaleResult | None:
        async with semaphore:
            try:
                return await asyncio.to_thread(run_scale, datum, scale, config)
            except YdvlError as exc:
                logger.error("Sweep failed at n_cut=%s: %s", scale.n_cut, exc)
                failures[scale.n_cut] = str(exc)
                return None

    failures: Dict[Optional[int], str] = {}
    outcomes = await asyncio.gather(*(_run(scale) for scale in ordered))
    results = {
        scale.n_cut: outcome for scale, outcome in zip(ordered, outcomes) if outcome is not None
    }

    keys = list(results)
    cauchy = {
        (a, b): cauchy_difference(results[a], results[b]) for a, b in zip(keys, keys[1:])
    }
    monotonicity = classify_monotonicity([results[k].m_final for k in keys])
    return SweepReport(results=results, cauchy=cauchy, monotonicity=monotonicity, failures=failures)


def regularization_sweep(
    datum: Datum, scales: Sequence[MollifierScale], config: RunConfig
) -> SweepReport:
    return asyncio.run(regularization_sweep_async(datum, scales, config))


__all__ = [
    "ScaleResult",
    "SweepReport",
    "sample_times",
    "run_scale",
    "cauchy_difference",
    "classify_monotonicity",
    "regularization_sweep_async",
    "regularization_sweep",
]
