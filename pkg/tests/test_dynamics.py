"""Tests for the fluid state, the right-hand sides and RK4 stepping."""

import math

import numpy as np
import pytest

from ydvl.dynamics.integrator import (
    BLOWUP_THRESHOLD,
    DtSchedule,
    integrate,
    step_rk4,
    tendencies,
    vorticity_equation_residual,
)
from ydvl.dynamics.state import (
    StepControl,
    cfl_dt,
    companion_residuals,
    initialize_state,
    kinetic_energy,
    state_from_velocity,
    vorticity_from_eta,
)
from ydvl.errors import BlowupDetected, OutOfRange, VacuumViolated
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.grid import Grid, VectorField
from ydvl.spectral.operators import divergence


@pytest.fixture
def taylor_green_state(grid64, taylor_green_velocity):
    return state_from_velocity(grid64.constant(1.0), taylor_green_velocity)


@pytest.fixture
def stratified_state(grid32):
    rho = grid32.sample(lambda x1, x2: 1.0 + 0.5 * np.sin(x1) * np.sin(x2))
    omega = grid32.sample(lambda x1, x2: np.cos(x1) + 0.6 * np.cos(2 * x2))
    return initialize_state(rho, omega)


class TestStepControl:
    @pytest.mark.parametrize("kwargs", [{"cfl": 0.0}, {"cfl": 1.5}, {"dt_max": 0.0}])
    def test_rejects_bad_values(self, kwargs):
        """CFL outside (0, 1] and a non-positive dt_max are refused."""
        with pytest.raises(OutOfRange):
            StepControl(**kwargs)

    def test_cfl_from_unit_speed(self, shear_state):
        """dt = cfl·h for unit speed."""
        assert cfl_dt(shear_state, StepControl(cfl=0.5)) == pytest.approx(0.5 * 2 * math.pi / 64)

    def test_rest_state_uses_dt_max(self, grid32):
        """A fluid at rest steps at dt_max."""
        state = initialize_state(grid32.constant(1.0), grid32.zeros())
        assert cfl_dt(state, StepControl(dt_max=0.05)) == 0.05

    def test_fast_flow(self):
        """dt scales inversely with the peak speed."""
        grid = Grid(128)
        velocity = VectorField(grid.zeros(), grid.sample(lambda x1, x2: 10.0 * np.sin(x1)))
        state = state_from_velocity(grid.constant(1.0), velocity)
        dt = cfl_dt(state, StepControl(cfl=0.25, dt_max=1.0))
        assert dt == pytest.approx(0.25 * (2 * math.pi / 128) / 10.0, rel=1e-12)


class TestState:
    def test_vacuum_rejected(self, grid16):
        """A density touching zero cannot start a run."""
        with pytest.raises(VacuumViolated):
            initialize_state(grid16.sample(lambda x1, x2: np.sin(x1)), grid16.zeros())

    def test_companion_residuals_vanish_at_construction(self, stratified_state):
        """η and X are consistent with ρ and u when built."""
        eta_residual, x_residual = companion_residuals(stratified_state)
        assert eta_residual <= 1e-12
        assert x_residual <= 1e-12

    def test_homogeneous_direction_field_is_zero(self, shear_state):
        """X = ∇⊥ρ vanishes for constant density."""
        assert shear_state.x_field.sup() <= 1e-13

    def test_vorticity_recovered_from_eta(self, stratified_state):
        """ω = (η − u·∇⊥ρ)/ρ recovers the input vorticity."""
        recovered = vorticity_from_eta(stratified_state)
        assert (recovered - stratified_state.omega).sup() <= 1e-12

    def test_velocity_mean_is_carried(self, grid32):
        """The mean velocity lives outside the mean-free part."""
        state = initialize_state(
            grid32.constant(1.0),
            grid32.sample(lambda x1, x2: np.cos(x1)),
            u_mean=np.array([0.5, 0.0]),
        )
        assert np.abs(state.u.mean()).max() <= 1e-15
        assert state.velocity.mean()[0] == pytest.approx(0.5)

    def test_kinetic_energy_of_shear(self, shear_state):
        """∫ρ|u|² of a unit shear is half the torus area."""
        assert kinetic_energy(shear_state) == pytest.approx((2 * math.pi) ** 2 / 2, rel=1e-12)


class TestTendencies:
    def test_rest_state(self, grid32):
        """Every tendency of a fluid at rest is zero."""
        rho = grid32.sample(lambda x1, x2: 2.0 + 0.5 * np.sin(x1))
        tendency = tendencies(initialize_state(rho, grid32.zeros()), PressureSolver())
        for field in (tendency.rho, tendency.u, tendency.eta, tendency.x_field):
            assert field.sup() == 0.0
        assert np.all(tendency.u_mean == 0.0)

    def test_taylor_green_is_steady(self, taylor_green_state):
        """Homogeneous Taylor-Green has no velocity tendency."""
        tendency = tendencies(taylor_green_state, PressureSolver())
        assert tendency.u.sup() <= 1e-9

    def test_homogeneous_density_is_not_transported(self, taylor_green_state):
        """Constant density and zero X stay put."""
        tendency = tendencies(taylor_green_state, PressureSolver())
        assert tendency.rho.sup() <= 1e-12
        assert tendency.x_field.sup() <= 1e-12

    def test_stretching_source_for_shear_over_stratified_density(self, grid32):
        """u = (sin x₂, 0), ρ = 2 + ½ sin x₁: ∂tη = ½ cos x₁ sin 2x₂ and ∂tX = ∇⊥∂tρ."""
        rho = grid32.sample(lambda x1, x2: 2.0 + 0.5 * np.sin(x1))
        velocity = VectorField(grid32.sample(lambda x1, x2: np.sin(x2)), grid32.zeros())
        tendency = tendencies(state_from_velocity(rho, velocity), PressureSolver())
        expected_eta = grid32.sample(lambda x1, x2: 0.5 * np.cos(x1) * np.sin(2 * x2))
        assert (tendency.eta - expected_eta).sup() <= 1e-12
        expected_x = grid32.sample(lambda x1, x2: 0.5 * np.cos(x1) * np.cos(x2))
        expected_y = grid32.sample(lambda x1, x2: 0.5 * np.sin(x1) * np.sin(x2))
        assert (tendency.x_field.x - expected_x).sup() <= 1e-12
        assert (tendency.x_field.y - expected_y).sup() <= 1e-12


class TestStepping:
    def test_rest_state_only_advances_time(self, grid32):
        """A step at rest changes nothing but t."""
        state = initialize_state(grid32.constant(1.0), grid32.zeros())
        stepped = step_rk4(state, StepControl(), PressureSolver(), dt=0.01)
        assert stepped.t == pytest.approx(0.01)
        assert stepped.u.sup() == 0.0
        assert np.array_equal(stepped.rho.values, state.rho.values)

    def test_taylor_green_single_step(self, taylor_green_state):
        """One RK4 step keeps Taylor-Green steady."""
        stepped = step_rk4(taylor_green_state, StepControl(), PressureSolver(), dt=1e-3)
        assert (stepped.velocity - taylor_green_state.velocity).sup() <= 1e-8

    def test_steady_shear(self, grid32):
        """A hundred steps keep a shear steady."""
        state = initialize_state(grid32.constant(1.0), grid32.sample(lambda x1, x2: np.cos(x1)))
        solver, ctl = PressureSolver(), StepControl()
        omega0 = state.omega
        for _ in range(100):
            state = step_rk4(state, ctl, solver, dt=0.01)
        assert (state.omega - omega0).sup() <= 1e-9

    def test_divergence_stays_projected(self, stratified_state):
        """The stepped velocity remains divergence-free."""
        state = step_rk4(stratified_state, StepControl(), PressureSolver(), dt=0.02)
        assert divergence(state.u).sup() <= 1e-10

    def test_blowup_detected(self, grid32):
        """A velocity past the blow-up threshold stops the step."""
        velocity = VectorField(
            grid32.zeros(), grid32.sample(lambda x1, x2: 2.0 * BLOWUP_THRESHOLD * np.sin(x1))
        )
        state = state_from_velocity(grid32.constant(1.0), velocity)
        with pytest.raises(BlowupDetected):
            step_rk4(state, StepControl(), PressureSolver(), dt=1e-12)

    def test_integrate_lands_on_final_time(self, stratified_state):
        """integrate reports every step and stops exactly at t_final."""
        calls = []
        state = integrate(
            stratified_state,
            StepControl(dt_max=0.03),
            0.1,
            PressureSolver(),
            on_step=lambda step, s: calls.append((step, s.t)),
        )
        assert state.t == pytest.approx(0.1, abs=1e-14)
        assert [step for step, _ in calls] == list(range(1, len(calls) + 1))
        assert calls[-1][1] == state.t

    def test_schedule_is_fixed_then_clipped(self, stratified_state):
        """Steps stay fixed and the last one is clipped."""
        schedule = DtSchedule(StepControl(dt_max=0.03))
        integrate(stratified_state, schedule.ctl, 0.1, PressureSolver(), schedule=schedule)
        assert schedule.history[:3] == [0.03, 0.03, 0.03]
        assert schedule.history[-1] == pytest.approx(0.01)
        assert sum(schedule.history) == pytest.approx(0.1)

    def test_schedule_only_shrinks(self, shear_state, mocker):
        """Rechecks may shrink dt but never grow it."""
        schedule = DtSchedule(StepControl(), recheck_every=1)
        mocker.patch(
            "ydvl.dynamics.integrator.cfl_dt", side_effect=[0.02, 0.05, 0.01, 0.03]
        )
        steps = [schedule.next(shear_state, 10.0) for _ in range(4)]
        assert steps == [0.02, 0.02, 0.01, 0.01]


def test_vorticity_equation_residual_small_for_resolved_flow(grid64):
    """A resolved flow satisfies the vorticity equation."""
    rho = grid64.sample(lambda x1, x2: 1.0 + 0.5 * np.sin(x1) * np.sin(x2))
    omega = grid64.sample(lambda x1, x2: np.cos(x1) + 0.6 * np.cos(2 * x2))
    state = initialize_state(rho, omega)
    assert vorticity_equation_residual(state, PressureSolver()) <= 1e-6
