"""Pytest configuration and fixtures."""

import math
from pathlib import Path

import numpy as np
import pytest

from ydvl.config import RunConfig, get_settings, parse_config
from ydvl.diagnostics.records import DiagnosticsRecord
from ydvl.dynamics.state import state_from_velocity
from ydvl.spectral.grid import Grid, VectorField

CONFIGS_DIR = Path(__file__).parent.parent / "configs"


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached process settings around every test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def configs_dir():
    """Return path to the shipped configuration files."""
    return CONFIGS_DIR


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def taylor_green_velocity(grid64):
    """Steady Taylor-Green velocity ``(cos x1 sin x2, −sin x1 cos x2)``."""
    return VectorField(
        grid64.sample(lambda x1, x2: np.cos(x1) * np.sin(x2)),
        grid64.sample(lambda x1, x2: -np.sin(x1) * np.cos(x2)),
    )


@pytest.fixture
def shear_state(grid64):
    """Homogeneous shear ``u = (0, sin x1)`` at unit density."""
    velocity = VectorField(grid64.zeros(), grid64.sample(lambda x1, x2: np.sin(x1)))
    return state_from_velocity(grid64.constant(1.0), velocity)


def config_text(**overrides):
    """Render a small run configuration; keyword values override the defaults."""
    values = {
        "grid_n": 16,
        "T_final": 0.02,
        "recipe": "smooth_density",
        "diagnostics_every": 1,
        "snapshot_every": 0,
    }
    values.update(overrides)
    return "\n".join(f"{key} = {value}" for key, value in values.items()) + "\n"


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """A cheap variable-density run writing under ``tmp_path``."""
    return parse_config(config_text(output_dir=tmp_path / "runs"))


@pytest.fixture
def config_file(tmp_path):
    """Write a small configuration file and return its path."""
    path = tmp_path / "small.cfg"
    path.write_text(config_text(output_dir=tmp_path / "runs"))
    return path


def make_record(**overrides) -> DiagnosticsRecord:
    """A diagnostics record with harmless defaults for bound-check tests."""
    norms = {2.0: 1.0, 4.0: 1.0, 8.0: 1.0, math.inf: 1.0}
    values = dict(
        t=0.0,
        energy=1.0,
        lp_omega=dict(norms),
        lp_eta=dict(norms),
        sup_u=1.0,
        sup_grad_rho=0.5,
        dxu_sup=0.0,
        m_accum=0.0,
        eta_identity_resid=0.0,
        x_identity_resid=0.0,
        pressure_l2=0.0,
        div_u_sup=0.0,
        p0=4.0,
        lp_u=dict(norms),
        rho_min=1.0,
        rho_max=1.0,
    )
    values.update(overrides)
    return DiagnosticsRecord(**values)
