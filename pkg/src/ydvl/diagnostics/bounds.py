"""Inequality checks over diagnostics series.

Each check returns a :class:`BoundEntry` describing the worst record of the
series: ``satisfied`` holds exactly when ``lhs <= rhs * (1 + tol) + ABS_FLOOR``
at every record. Checks are pure functions of the records.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from ydvl.diagnostics.records import DiagnosticsRecord
from ydvl.errors import OutOfRange
from ydvl.norms.lebesgue import ExponentSet

ABS_FLOOR = 1e-12


@dataclass(frozen=True, slots=True)
class BoundEntry:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    tol: float
    t: float = math.nan


@dataclass(slots=True)
class BoundChainReport:
    entries: list[BoundEntry] = field(default_factory=list)
    velocity_constant: float = math.nan
    growth_factor: float = math.nan

    @property
    def satisfied(self) -> bool:
        return all(entry.satisfied for entry in self.entries)

    def entry(self, name: str) -> BoundEntry:
        for item in self.entries:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(entry) for entry in self.entries])


def _holds(lhs: float, rhs: float, tol: float) -> bool:
    return bool(lhs <= rhs * (1.0 + tol) + ABS_FLOOR)


def _worst(name: str, pairs: Iterable[tuple[float, float, float]], tol: float) -> BoundEntry:
    """Pick the record with the largest excess ``lhs − rhs(1+tol)``."""

    best: Optional[tuple[float, float, float]] = None
    best_excess = -math.inf
    all_ok = True
    for t, lhs, rhs in pairs:
        all_ok &= _holds(lhs, rhs, tol)
        excess = lhs - rhs * (1.0 + tol)
        if excess > best_excess:
            best, best_excess = (t, lhs, rhs), excess
    if best is None:
        raise OutOfRange(f"{name}: empty diagnostics series", operation=f"diagnostics.{name}")
    t, lhs, rhs = best
    return BoundEntry(name=name, lhs=lhs, rhs=rhs, satisfied=all_ok, tol=tol, t=t)


def check_gronwall_gradrho(
    series: Sequence[DiagnosticsRecord], grad_rho0_sup: float, tol: float
) -> BoundEntry:
    """``‖∇ρ(t)‖∞ <= ‖∇ρ₀‖∞ + M(t)`` along the series."""

    return _worst(
        "gronwall_gradrho",
        ((r.t, r.sup_grad_rho, grad_rho0_sup + r.m_accum) for r in series),
        tol,
    )


def _norm_at(mapping: dict[float, float], q: float, operation: str) -> float:
    for key, value in mapping.items():
        if key == q or (math.isinf(key) and math.isinf(q)):
            return value
    raise OutOfRange(f"exponent {q} is not tracked by the diagnostics", operation=operation)


def check_eta_transport_bound(
    series: Sequence[DiagnosticsRecord], eta0_norm_q: float, q: float, tol: float
) -> BoundEntry:
    """``‖η(t)‖_q <= ‖η₀‖_q + ∫₀ᵗ ‖∂ₓu‖∞ ‖u‖_q``."""

    operation = "diagnostics.check_eta_transport_bound"
    if not series:
        raise OutOfRange("eta_transport: empty diagnostics series", operation=operation)
    if q < series[0].p0:
        raise OutOfRange(f"q = {q} below p0 = {series[0].p0}", operation=operation)
    times = np.array([r.t for r in series])
    source = np.array([r.dxu_sup * _norm_at(r.lp_u, q, operation) for r in series])
    integral = integrate.cumulative_trapezoid(source, times, initial=0.0)
    return _worst(
        "eta_transport",
        (
            (r.t, _norm_at(r.lp_eta, q, operation), eta0_norm_q + float(acc))
            for r, acc in zip(series, integral)
        ),
        tol,
    )


def fit_velocity_constant(series: Sequence[DiagnosticsRecord], exponents: ExponentSet) -> float:
    """Smallest ``C`` with ``‖u‖∞ <= C(1 + ‖η‖_{p0})`` over a calibration series."""

    operation = "diagnostics.fit_velocity_constant"
    return max(
        (r.sup_u / (1.0 + _norm_at(r.lp_eta, exponents.p0, operation)) for r in series),
        default=0.0,
    )


def check_velocity_linfty_bound(
    record: DiagnosticsRecord, exponents: ExponentSet, constant: float, tol: float = 0.0
) -> BoundEntry:
    """``‖u‖∞ <= C(1 + ‖η‖_{p0})`` with a frozen constant."""

    rhs = constant * (1.0 + _norm_at(record.lp_eta, exponents.p0, "diagnostics.velocity_bound"))
    return _worst("velocity_linfty", [(record.t, record.sup_u, rhs)], tol)


def check_density_bounds(
    series: Sequence[DiagnosticsRecord],
    rho_star: float,
    rho_upper: float,
    eps: float = 0.0,
    tol: float = 0.0,
) -> list[BoundEntry]:
    """``ρ★ − ε <= ρ <= ρ* + ε`` at every record, as a lower and an upper entry."""

    lower = _worst("density_lower", ((r.t, rho_star - eps, r.rho_min) for r in series), tol)
    upper = _worst("density_upper", ((r.t, r.rho_max, rho_upper + eps) for r in series), tol)
    return [lower, upper]


def check_energy_equality(series: Sequence[DiagnosticsRecord], tol: float) -> BoundEntry:
    """``|E(t) − E(0)| <= tol·E(0)``; ``lhs`` is the relative drift."""

    if not series:
        raise OutOfRange("energy_equality: empty diagnostics series", operation="diagnostics")
    e0 = series[0].energy
    scale = e0 if e0 > 0.0 else 1.0
    worst = max(series, key=lambda r: abs(r.energy - e0))
    drift = abs(worst.energy - e0) / scale
    return BoundEntry(
        name="energy_equality", lhs=drift, rhs=tol, satisfied=bool(drift <= tol), tol=tol, t=worst.t
    )


def check_initial_eta_bound(
    record: DiagnosticsRecord, rho_upper: float, q: float, tol: float = 0.0
) -> BoundEntry:
    """``‖η‖_q <= ρ*‖ω‖_q + ‖u‖_q‖∇ρ‖∞`` at one record."""

    operation = "diagnostics.check_initial_eta_bound"
    omega_q = _norm_at(record.lp_omega, q, operation)
    u_q = _norm_at(record.lp_u, q, operation)
    rhs = rho_upper * omega_q + u_q * record.sup_grad_rho
    lhs = _norm_at(record.lp_eta, q, operation)
    return _worst(f"initial_eta_q{q:g}", [(record.t, lhs, rhs)], tol)


def check_geometric_lq_bound(record: DiagnosticsRecord, tol: float = 0.0) -> BoundEntry:
    """``‖∂ₓu‖_{p0} <= ‖X‖∞‖∇u‖_{p0}``."""

    return _worst(
        "geometric_lp0", [(record.t, record.dxu_lp0, record.x_sup * record.grad_u_lp0)], tol
    )


def check_bilinear_holder(record: DiagnosticsRecord, tol: float = 0.0) -> BoundEntry:
    """``‖(u·∇)u‖_{q0} <= ‖u‖₂‖∇u‖_{p0}``."""

    return _worst(
        "bilinear_holder", [(record.t, record.advection_lq0, record.u_l2 * record.grad_u_lp0)], tol
    )


def check_pressure_l2_bound(record: DiagnosticsRecord, tol: float = 0.0) -> BoundEntry:
    """``‖∇Π‖₂ <= max ρ · ‖(u·∇)u‖₂``, the energy estimate of the elliptic problem."""

    return _worst(
        "pressure_l2", [(record.t, record.pressure_l2, record.rho_max * record.advection_l2)], tol
    )


def growth_factor(series: Sequence[DiagnosticsRecord], constant: float) -> float:
    """``exp(C·M(T))``; reported, never asserted."""

    if not series:
        return 1.0
    return math.exp(constant * series[-1].m_accum)


def time_lp_norm(series: Sequence[DiagnosticsRecord], p: float) -> float:
    """``‖dxu_sup‖`` in ``L^p(0, T)`` by the trapezoidal rule; the maximum for ``p = ∞``."""

    values = np.array([r.dxu_sup for r in series])
    if len(values) == 0:
        return 0.0
    if math.isinf(p):
        return float(values.max())
    times = np.array([r.t for r in series])
    return float(integrate.trapezoid(values**p, times)) ** (1.0 / p)


def run_bound_chain(
    series: Sequence[DiagnosticsRecord],
    exponents: ExponentSet,
    *,
    rho_star: float,
    rho_upper: float,
    gradrho_tol: float = 1e-3,
    eta_tol: float = 1e-2,
    bound_tol: float = 1e-6,
    energy_tol: float = 1e-4,
    velocity_constant: Optional[float] = None,
    density_eps: float = 0.0,
) -> BoundChainReport:
    """Evaluate the whole estimate chain over a run.

    Without a frozen ``velocity_constant`` the constant is fitted on this
    series, which makes the velocity entry hold by construction.
    """

    if not series:
        raise OutOfRange("empty diagnostics series", operation="diagnostics.run_bound_chain")
    first = series[0]
    constant = velocity_constant or fit_velocity_constant(series, exponents)

    report = BoundChainReport(velocity_constant=constant)
    report.entries.append(check_gronwall_gradrho(series, first.sup_grad_rho, gradrho_tol))
    report.entries.append(
        check_eta_transport_bound(series, first.lp_eta[exponents.p0], exponents.p0, eta_tol)
    )
    report.entries.append(
        _worst(
            "velocity_linfty",
            (
                (r.t, r.sup_u, constant * (1.0 + r.lp_eta[exponents.p0]))
                for r in series
            ),
            bound_tol,
        )
    )
    report.entries.extend(
        check_density_bounds(series, rho_star, rho_upper, density_eps, bound_tol)
    )
    report.entries.append(check_energy_equality(series, energy_tol))
    report.entries.append(check_initial_eta_bound(first, rho_upper, exponents.p0, bound_tol))
    for name, check in (
        ("geometric_lp0", check_geometric_lq_bound),
        ("bilinear_holder", check_bilinear_holder),
        ("pressure_l2", check_pressure_l2_bound),
    ):
        entries = [check(record, bound_tol) for record in series]
        worst = max(entries, key=lambda e: e.lhs - e.rhs * (1.0 + e.tol))
        report.entries.append(
            BoundEntry(
                name=name,
                lhs=worst.lhs,
                rhs=worst.rhs,
                satisfied=all(e.satisfied for e in entries),
                tol=bound_tol,
                t=worst.t,
            )
        )
    report.growth_factor = growth_factor(series, constant)
    return report


__all__ = [
    "ABS_FLOOR",
    "BoundEntry",
    "BoundChainReport",
    "check_gronwall_gradrho",
    "check_eta_transport_bound",
    "fit_velocity_constant",
    "check_velocity_linfty_bound",
    "check_density_bounds",
    "check_energy_equality",
    "check_initial_eta_bound",
    "check_geometric_lq_bound",
    "check_bilinear_holder",
    "check_pressure_l2_bound",
    "growth_factor",
    "time_lp_norm",
    "run_bound_chain",
]
