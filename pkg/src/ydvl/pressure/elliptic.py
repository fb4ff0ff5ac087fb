"""Variable-coefficient pressure problem ``−div((1/ρ)∇Π) = div((u·∇)u)``.

The operator is applied pseudo-spectrally on mean-zero grid functions and
inverted by ``scipy.sparse.linalg.cg`` through matrix-free linear operators.
The preconditioner is the constant-coefficient inverse Laplacian scaled by
``mean(ρ)``, the reciprocal of the harmonic mean of the coefficient ``1/ρ``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import linalg as sparse_linalg

from ydvl.errors import MeanNotZero, NoConvergence, VacuumViolated
from ydvl.spectral.grid import Grid, ScalarField, VectorField
from ydvl.spectral.operators import advect_vector, divergence, gradient, laplacian

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
RHS_MEAN_TOLERANCE = 1e-11


@dataclass(frozen=True, slots=True)
class EllipticSolveReport:
    iterations: int
    relative_residual: float
    pi: ScalarField
    residual_history: tuple[float, ...] = ()
    c_solve: float = math.nan


class _VariableCoefficientOperator:
    """``Π ↦ −div(a∇Π)`` with ``a = 1/ρ`` on raw sample arrays."""

    def __init__(self, rho: ScalarField) -> None:
        self.grid: Grid = rho.grid
        self.coefficient = 1.0 / rho.values
        tables = self.grid.tables
        self._d1 = 1j * tables.d1
        self._d2 = 1j * tables.d2
        inverse = np.zeros_like(tables.d_sq)
        np.divide(float(rho.values.mean()), tables.d_sq, out=inverse, where=tables.d_sq > 0)
        self._preconditioner = inverse

    def apply(self, values: np.ndarray) -> np.ndarray:
        grid = self.grid
        spectrum = grid.forward(values)
        flux1 = self.coefficient * grid.inverse(self._d1 * spectrum)
        flux2 = self.coefficient * grid.inverse(self._d2 * spectrum)
        return -grid.inverse(self._d1 * grid.forward(flux1) + self._d2 * grid.forward(flux2))

    def precondition(self, residual: np.ndarray) -> np.ndarray:
        grid = self.grid
        return grid.inverse(self._preconditioner * grid.forward(residual))


def _check_density(rho: ScalarField, operation: str) -> None:
    minimum = float(rho.values.min())
    if minimum <= 0.0:
        raise VacuumViolated(f"density minimum {minimum:.3e} is not positive", operation=operation)


def _l2(values: np.ndarray) -> float:
    return math.sqrt(float(np.sum(values * values)))


def _linear_operators(
    operator: _VariableCoefficientOperator,
) -> tuple[sparse_linalg.LinearOperator, sparse_linalg.LinearOperator]:
    shape = operator.grid.shape
    size = shape[0] * shape[1]

    def matvec(vector: np.ndarray) -> np.ndarray:
        return operator.apply(vector.reshape(shape)).ravel()

    def psolve(vector: np.ndarray) -> np.ndarray:
        return operator.precondition(vector.reshape(shape)).ravel()

    A = sparse_linalg.LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    M = sparse_linalg.LinearOperator((size, size), matvec=psolve, dtype=np.float64)
    return A, M


def _pcg(
    operator: _VariableCoefficientOperator,
    rhs: np.ndarray,
    tol: float,
    max_iter: int,
    operation: str,
) -> tuple[np.ndarray, int, float, list[float]]:
    """Preconditioned CG from ``scipy.sparse.linalg`` with true-residual verification.

    ``history`` holds the true relative residual after every iteration; it need
    not decrease monotonically. A solve whose true residual still misses
    ``tol`` restarts from its iterate.
    """

    shape = rhs.shape
    b = rhs.ravel()
    norm_b = _l2(b)
    solution = np.zeros_like(b)
    history: list[float] = []
    if norm_b == 0.0:
        return solution.reshape(shape), 0, 0.0, history

    A, M = _linear_operators(operator)

    def record(iterate: np.ndarray) -> None:
        relative = _l2(b - A.matvec(iterate)) / norm_b
        history.append(relative)
        logger.debug("pcg iteration %d: relative residual %.3e", len(history), relative)

    while True:
        true_relative = _l2(b - A.matvec(solution)) / norm_b
        if true_relative <= tol:
            return solution.reshape(shape), len(history), true_relative, history
        remaining = max_iter - len(history)
        if remaining <= 0:
            raise NoConvergence(len(history), true_relative, operation=operation)
        solution, info = sparse_linalg.cg(
            A,
            b,
            x0=solution,
            rtol=0.5 * tol,
            atol=0.0,
            maxiter=remaining,
            M=M,
            callback=record,
        )
        if info < 0:
            raise NoConvergence(len(history), true_relative, operation=operation)
        if info > 0:
            final = history[-1] if history else true_relative
            raise NoConvergence(len(history), final, operation=operation)


def solve_elliptic(
    rho: ScalarField,
    rhs: ScalarField,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EllipticSolveReport:
    """Solve ``−div((1/ρ)∇Π) = rhs`` for mean-zero ``Π``; ``rhs`` must be mean-zero."""

    operation = "pressure.solve_pressure"
    _check_density(rho, operation)
    mean = rhs.mean()
    if abs(mean) > RHS_MEAN_TOLERANCE * max(1.0, rhs.sup()):
        raise MeanNotZero(f"right-hand side mean {mean:.3e} is not zero", operation=operation)

    operator = _VariableCoefficientOperator(rho)
    values, iterations, relative, history = _pcg(
        operator, rhs.values - mean, tol, max_iter, operation
    )
    pi = ScalarField(rho.grid, values - values.mean())
    logger.debug("pressure solve: %d iterations, relative residual %.3e", iterations, relative)
    return EllipticSolveReport(
        iterations=iterations,
        relative_residual=relative,
        pi=pi,
        residual_history=tuple(history),
    )


def pressure_rhs(u: VectorField) -> ScalarField:
    """``div((u·∇)u)`` with the advective product dealiased before the divergence."""

    return divergence(advect_vector(u, u))


def solve_pressure(
    rho: ScalarField,
    u: VectorField,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EllipticSolveReport:
    """Pressure for density ``rho`` and full velocity ``u``."""

    advection = advect_vector(u, u)
    report = solve_elliptic(rho, divergence(advection), tol, max_iter)
    grad = gradient(report.pi)
    advection_l2 = math.sqrt(float(np.sum(advection.magnitude() ** 2)) * rho.grid.cell_area)
    grad_l2 = math.sqrt(float(np.sum(grad.magnitude() ** 2)) * rho.grid.cell_area)
    denominator = float(rho.values.max()) * advection_l2
    c_solve = grad_l2 / denominator if denominator > 0.0 else 0.0
    return EllipticSolveReport(
        iterations=report.iterations,
        relative_residual=report.relative_residual,
        pi=report.pi,
        residual_history=report.residual_history,
        c_solve=c_solve,
    )


def laplacian_pressure_identity(rho: ScalarField, u: VectorField, pi: ScalarField) -> float:
    """L² norm of ``−ΔΠ + (1/ρ)∇ρ·∇Π − ρ ∇u:∇uᵀ`` (uses ``div u = 0``)."""

    grad_rho = gradient(rho)
    grad_pi = gradient(pi)
    g1, g2 = gradient(u.x), gradient(u.y)
    contraction = g1.x * g1.x + g1.y * g2.x + g2.x * g1.y + g2.y * g2.y
    residual = (
        -laplacian(pi)
        + (grad_rho.x * grad_pi.x + grad_rho.y * grad_pi.y) / rho
        - rho * contraction
    )
    return math.sqrt(float(np.sum(residual.values**2)) * rho.grid.cell_area)


@dataclass
class PressureSolver:
    """Solver handle threaded through the dynamics; remembers the last report."""

    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    solves: int = 0
    last_report: EllipticSolveReport | None = field(default=None, repr=False)

    def __call__(self, rho: ScalarField, u: VectorField) -> EllipticSolveReport:
        report = solve_pressure(rho, u, self.tol, self.max_iter)
        self.solves += 1
        self.last_report = report
        return report


__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "EllipticSolveReport",
    "PressureSolver",
    "solve_elliptic",
    "solve_pressure",
    "pressure_rhs",
    "laplacian_pressure_identity",
]
