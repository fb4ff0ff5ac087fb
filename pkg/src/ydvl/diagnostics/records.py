"""Per-time measurement of a fluid state."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import integrate

from ydvl.dynamics.integrator import vorticity_equation_residual
from ydvl.dynamics.state import FluidState, companion_residuals, kinetic_energy
from ydvl.norms.directional import directional_derivative
from ydvl.norms.lebesgue import (
    ExponentSet,
    lp_norm,
    lp_norms,
    sobolev_seminorm,
    vector_product_norm,
)
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.operators import (
    advect_vector,
    band_limited_extrema,
    divergence,
    gradient,
    helmholtz_momentum,
)


def p_label(p: float) -> str:
    """Column-safe label of an exponent: ``2``, ``2.5``, ``inf``."""

    return "inf" if math.isinf(p) else f"{p:g}"


@dataclass(slots=True)
class DiagnosticsRecord:
    t: float
    energy: float
    lp_omega: Dict[float, float]
    lp_eta: Dict[float, float]
    sup_u: float
    sup_grad_rho: float
    dxu_sup: float
    m_accum: float
    eta_identity_resid: float
    x_identity_resid: float
    pressure_l2: float
    div_u_sup: float
    p0: float = 4.0
    lp_u: Dict[float, float] = field(default_factory=dict)
    rho_min: float = math.nan
    rho_max: float = math.nan
    x_sup: float = 0.0
    u_l2: float = 0.0
    dxu_lp0: float = 0.0
    grad_u_lp0: float = 0.0
    advection_l2: float = 0.0
    advection_lq0: float = 0.0
    momentum_resid: float = 0.0
    vorticity_eq_resid: float = math.nan

    def to_row(self) -> Dict[str, Any]:
        """Flat mapping with one column per tracked exponent."""

        row = asdict(self)
        for name in ("lp_omega", "lp_eta", "lp_u"):
            for p, value in row.pop(name).items():
                row[f"{name}_{p_label(p)}"] = value
        return row

    def is_finite(self) -> bool:
        """Every measured value is finite; an unevaluated ``vorticity_eq_resid`` is skipped."""

        row = self.to_row()
        if math.isnan(row["vorticity_eq_resid"]):
            del row["vorticity_eq_resid"]
        return all(math.isfinite(v) for v in row.values() if isinstance(v, float))


def _trapezoid_increment(previous: DiagnosticsRecord, dxu_sup: float, t: float) -> float:
    return float(integrate.trapezoid([previous.dxu_sup, dxu_sup], [previous.t, t]))


def measure(
    state: FluidState,
    exponents: ExponentSet,
    previous: Optional[DiagnosticsRecord] = None,
    solver: Optional[PressureSolver] = None,
) -> DiagnosticsRecord:
    """Measure ``state``; ``m_accum`` continues from ``previous`` by the trapezoidal rule.

    With a ``solver`` the vorticity-equation residual is evaluated too (one
    extra right-hand-side evaluation).
    """

    p_grid = exponents.p_grid
    velocity = state.velocity
    grid = state.grid

    dxu = directional_derivative(state.x_field, velocity)
    dxu_sup = dxu.sup()
    m_accum = 0.0 if previous is None else previous.m_accum + _trapezoid_increment(
        previous, dxu_sup, state.t
    )
    eta_resid, x_resid = companion_residuals(state)
    rho_min, rho_max = band_limited_extrema(state.rho)

    advection = advect_vector(velocity, velocity)
    advection_lq0, _ = vector_product_norm(velocity, exponents)
    momentum = helmholtz_momentum(state.rho, velocity, state.eta)
    exact_momentum = velocity * state.rho

    return DiagnosticsRecord(
        t=state.t,
        energy=kinetic_energy(state),
        lp_omega=lp_norms(state.omega, p_grid),
        lp_eta=lp_norms(state.eta, p_grid),
        sup_u=velocity.sup(),
        sup_grad_rho=gradient(state.rho).sup(),
        dxu_sup=dxu_sup,
        m_accum=m_accum,
        eta_identity_resid=eta_resid,
        x_identity_resid=x_resid,
        pressure_l2=lp_norm(gradient(state.pi), 2.0),
        div_u_sup=divergence(velocity).sup(),
        p0=exponents.p0,
        lp_u=lp_norms(velocity, p_grid),
        rho_min=rho_min,
        rho_max=rho_max,
        x_sup=state.x_field.sup(),
        u_l2=lp_norm(velocity, 2.0),
        dxu_lp0=lp_norm(dxu, exponents.p0),
        grad_u_lp0=sobolev_seminorm(velocity, exponents.p0),
        advection_l2=lp_norm(advection, 2.0),
        advection_lq0=advection_lq0,
        momentum_resid=lp_norm(momentum - exact_momentum, 2.0),
        vorticity_eq_resid=(
            vorticity_equation_residual(state, solver) if solver is not None else math.nan
        ),
    )


def series_arrays(series: list[DiagnosticsRecord], attribute: str) -> np.ndarray:
    return np.array([getattr(record, attribute) for record in series], dtype=np.float64)


__all__ = ["DiagnosticsRecord", "measure", "p_label", "series_arrays"]
