"""Tests for the variable-coefficient pressure solver."""

import math

import numpy as np
import pytest

from ydvl.errors import MeanNotZero, NoConvergence, VacuumViolated
from ydvl.pressure.elliptic import (
    PressureSolver,
    laplacian_pressure_identity,
    pressure_rhs,
    solve_elliptic,
    solve_pressure,
)
from ydvl.spectral.grid import Grid, VectorField
from ydvl.spectral.operators import biot_savart, gradient, inverse_laplacian


@pytest.fixture
def stratified_rho(grid64):
    return grid64.sample(lambda x1, x2: 2.0 + np.sin(x1))


def _mixed_velocity(grid: Grid) -> VectorField:
    return biot_savart(grid.sample(lambda x1, x2: np.cos(x1 + 2 * x2) + 0.3 * np.sin(3 * x1)))


def test_rest_state_has_zero_pressure(grid32):
    """No flow, no pressure, no iterations."""
    rho = grid32.sample(lambda x1, x2: 2.0 + 0.5 * np.sin(x1))
    report = solve_pressure(rho, VectorField.zeros(grid32))
    assert report.iterations == 0
    assert report.pi.sup() == 0.0


def test_taylor_green_pressure(grid64, taylor_green_velocity):
    """Unit density recovers Π = −(cos 2x₁ + cos 2x₂)/4."""
    report = solve_pressure(grid64.constant(1.0), taylor_green_velocity)
    expected = grid64.sample(lambda x1, x2: -(np.cos(2 * x1) + np.cos(2 * x2)) / 4.0)
    assert np.max(np.abs(report.pi.values - expected.values)) <= 1e-9
    assert report.relative_residual <= 1e-10


def test_constant_density_matches_inverse_laplacian(grid64):
    """With ρ ≡ ρ₀ the solve reduces to Π = ρ₀(−Δ)⁻¹ div((u·∇)u)."""
    velocity = _mixed_velocity(grid64)
    report = solve_pressure(grid64.constant(3.0), velocity, tol=1e-12)
    expected = inverse_laplacian(pressure_rhs(velocity)) * 3.0
    scale = expected.sup()
    assert np.max(np.abs(report.pi.values - expected.values)) <= 1e-9 * scale


def test_manufactured_solution(grid64, stratified_rho):
    """−div((1/ρ)∇ sin x₂) with ρ = 2 + sin x₁."""
    rhs = grid64.sample(lambda x1, x2: np.sin(x2) / (2.0 + np.sin(x1)))
    report = solve_elliptic(stratified_rho, rhs, tol=1e-12)
    expected = grid64.sample(lambda x1, x2: np.sin(x2))
    assert np.max(np.abs(report.pi.values - expected.values)) <= 1e-10
    assert report.iterations <= 100


def test_residual_history_is_recorded_per_iteration(grid64, stratified_rho, taylor_green_velocity):
    """One true residual per iteration, ending within tolerance."""
    report = solve_pressure(stratified_rho, taylor_green_velocity)
    history = np.array(report.residual_history)
    assert len(history) == report.iterations
    assert report.iterations > 0
    assert history[-1] == pytest.approx(report.relative_residual, rel=1e-12)
    assert history[-1] <= 1e-10
    assert history.min() < history[0]


def test_solution_is_mean_zero(grid64, stratified_rho, taylor_green_velocity):
    """The pressure is normalised to zero mean."""
    report = solve_pressure(stratified_rho, taylor_green_velocity)
    assert abs(report.pi.mean()) <= 1e-14


def test_energy_estimate_constant(grid64, stratified_rho, taylor_green_velocity):
    """‖∇Π‖₂ <= max ρ · ‖(u·∇)u‖₂."""
    report = solve_pressure(stratified_rho, taylor_green_velocity)
    assert 0.0 < report.c_solve <= 1.0 + 1e-8


@pytest.mark.slow
def test_energy_estimate_constant_is_grid_independent():
    """C_solve of resolved data agrees across n = 64, 128, 256 within 10%."""
    constants = []
    for n in (64, 128, 256):
        grid = Grid(n)
        rho = grid.sample(lambda x1, x2: 2.0 + np.sin(x1) * np.cos(x2))
        constants.append(solve_pressure(rho, _mixed_velocity(grid)).c_solve)
    assert max(constants) <= 1.1 * min(constants)


def test_rejects_non_positive_density(grid32):
    """A vanishing density is a vacuum."""
    rho = grid32.sample(lambda x1, x2: np.sin(x1))
    with pytest.raises(VacuumViolated) as excinfo:
        solve_elliptic(rho, grid32.zeros())
    assert excinfo.value.operation == "pressure.solve_pressure"


def test_rejects_rhs_with_mean(grid32):
    """The right-hand side must be mean-zero to be solvable."""
    with pytest.raises(MeanNotZero):
        solve_elliptic(grid32.constant(1.0), grid32.constant(1.0))


def test_iteration_cap(grid64, stratified_rho):
    """Hitting max_iter raises with the iteration count."""
    rhs = grid64.sample(lambda x1, x2: np.sin(x2) / (2.0 + np.sin(x1)))
    with pytest.raises(NoConvergence) as excinfo:
        solve_elliptic(stratified_rho, rhs, tol=1e-14, max_iter=1)
    assert excinfo.value.iterations == 1


class TestLaplacianIdentity:
    def test_taylor_green(self, grid64, taylor_green_velocity):
        """The ΔΠ identity holds for the exact Taylor-Green pressure."""
        rho = grid64.constant(1.0)
        pi = grid64.sample(lambda x1, x2: -(np.cos(2 * x1) + np.cos(2 * x2)) / 4.0)
        assert laplacian_pressure_identity(rho, taylor_green_velocity, pi) <= 1e-8

    def test_rest(self, grid32):
        """Zero flow and zero pressure satisfy it exactly."""
        rho = grid32.constant(1.0)
        assert laplacian_pressure_identity(rho, VectorField.zeros(grid32), grid32.zeros()) == 0.0

    def test_variable_density_solve(self, grid64, stratified_rho, taylor_green_velocity):
        """A solved pressure meets the identity to 100·tol·‖ρ∇u:∇uᵀ‖₂."""
        tol = 1e-11
        report = solve_pressure(stratified_rho, taylor_green_velocity, tol=tol)
        residual = laplacian_pressure_identity(stratified_rho, taylor_green_velocity, report.pi)
        g1, g2 = gradient(taylor_green_velocity.x), gradient(taylor_green_velocity.y)
        source = stratified_rho * (g1.x * g1.x + g1.y * g2.x + g2.x * g1.y + g2.y * g2.y)
        source_l2 = math.sqrt(float(np.sum(source.values**2)) * grid64.cell_area)
        assert residual <= 100 * tol * source_l2


def test_pressure_rhs_is_mean_zero(grid64, taylor_green_velocity):
    """div((u·∇)u) has no mean."""
    assert abs(pressure_rhs(taylor_green_velocity).mean()) <= 1e-14


def test_solver_handle_counts_solves(grid32):
    """The handle counts solves and keeps the last report."""
    solver = PressureSolver(tol=1e-10)
    rho = grid32.constant(1.0)
    solver(rho, VectorField.zeros(grid32))
    report = solver(rho, VectorField.zeros(grid32))
    assert solver.solves == 2
    assert solver.last_report is report
