"""Tests for CLI commands."""

from unittest.mock import AsyncMock, patch

import numpy as np
from typer.testing import CliRunner

from ydvl.cli import app
from ydvl.dynamics.state import initialize_state
from ydvl.experiments.sweep import SweepReport
from ydvl.pipeline.orchestrator import SweepResult, TwinResult
from ydvl.spectral.grid import Grid
from ydvl.storage.persistence import DIAGNOSTICS_COLUMNS, write_snapshot

runner = CliRunner()


def test_version_command():
    """Test version command displays the package version."""
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "ydvl v0.1.0" in result.stdout


def test_config_command():
    """Test config command displays settings table."""
    result = runner.invoke(app, ["config"])
    assert result.exit_code == 0
    assert "ydvl Configuration" in result.stdout


def test_run_command(config_file, tmp_path):
    """Test a small run end to end."""
    result = runner.invoke(app, ["run", str(config_file), "--output", str(tmp_path / "out")])
    assert result.exit_code == 0, result.stdout
    assert "Run Summary" in result.stdout
    assert "Estimate Chain" in result.stdout
    assert len(list((tmp_path / "out").glob("smooth_density-*/diagnostics.csv"))) == 1


def test_run_command_reports_invalid_config(tmp_path):
    """Test that validation errors exit with status 1."""
    path = tmp_path / "bad.cfg"
    path.write_text("grid_n = 12\nT_final = 1\nrecipe = shear\n")
    result = runner.invoke(app, ["run", str(path)])
    assert result.exit_code == 1
    assert "harness.parse_config" in result.stdout


def test_run_command_missing_file(tmp_path):
    """Test that an unreadable config exits with status 1."""
    result = runner.invoke(app, ["run", str(tmp_path / "absent.cfg")])
    assert result.exit_code == 1
    assert "Error" in result.stdout


def test_diagnose_command(tmp_path):
    """Test diagnosing stored snapshots into a CSV."""
    grid = Grid(16)
    rho = grid.sample(lambda x1, x2: 1.0 + 0.5 * np.sin(x1))
    state = initialize_state(rho, grid.sample(lambda x1, x2: np.cos(x1)))
    first = write_snapshot(state, tmp_path / "a.ydvl")
    second = write_snapshot(state.with_time(0.5), tmp_path / "b.ydvl")
    output = tmp_path / "diag.csv"

    result = runner.invoke(
        app, ["diagnose", str(second), str(first), "--grid", "16", "--output", str(output)]
    )
    assert result.exit_code == 0, result.stdout
    assert "Snapshot Diagnostics" in result.stdout
    lines = output.read_text().splitlines()
    assert lines[0] == ",".join(DIAGNOSTICS_COLUMNS)
    assert len(lines) == 3


def test_diagnose_command_grid_mismatch(tmp_path):
    """Test that a snapshot on another grid is rejected."""
    grid = Grid(16)
    state = initialize_state(grid.constant(1.0), grid.zeros())
    path = write_snapshot(state, tmp_path / "a.ydvl")
    result = runner.invoke(app, ["diagnose", str(path), "--grid", "32"])
    assert result.exit_code == 1
    assert "harness.read_snapshot" in result.stdout


def test_mollify_command(config_file):
    """Test the mollifier report table."""
    result = runner.invoke(app, ["mollify", str(config_file), "--ncut", "4"])
    assert result.exit_code == 0, result.stdout
    assert "Mollified datum" in result.stdout


@patch("ydvl.cli.RunOrchestrator")
def test_twin_command_parses_deltas(mock_orchestrator_class, config_file, tmp_path):
    """Test that --delta values reach the orchestrator."""
    orchestrator = mock_orchestrator_class.return_value
    orchestrator.run_twin = AsyncMock(
        return_value=TwinResult(traces={}, run_dir=tmp_path, decreasing=True)
    )
    result = runner.invoke(app, ["twin", str(config_file), "--delta", "1e-3,1e-4"])
    assert result.exit_code == 0, result.stdout
    orchestrator.run_twin.assert_awaited_once_with([1e-3, 1e-4])
    assert "Twin-Run Stability" in result.stdout


def test_twin_command_rejects_bad_delta(config_file):
    """Test that a malformed amplitude list exits with status 1."""
    result = runner.invoke(app, ["twin", str(config_file), "--delta", "small"])
    assert result.exit_code == 1
    assert "--delta" in result.stdout


@patch("ydvl.cli.RunOrchestrator")
def test_sweep_command_parses_scales(mock_orchestrator_class, config_file, tmp_path):
    """Test that --scales values reach the orchestrator."""
    report = SweepReport(results={}, cauchy={}, monotonicity="constant")
    orchestrator = mock_orchestrator_class.return_value
    orchestrator.run_sweep = AsyncMock(return_value=SweepResult(report=report, run_dir=tmp_path))
    result = runner.invoke(app, ["sweep", str(config_file), "--scales", "8,16"])
    assert result.exit_code == 0, result.stdout
    orchestrator.run_sweep.assert_awaited_once_with([8, 16])
    assert "constant" in result.stdout


@patch("ydvl.cli.RunOrchestrator")
def test_sweep_command_fails_when_a_scale_fails(mock_orchestrator_class, config_file, tmp_path):
    """Test that a failed cutoff is listed and the sweep exits with status 1."""
    report = SweepReport(
        results={}, cauchy={}, monotonicity="mixed", failures={8: "dynamics.step_rk4: blow-up"}
    )
    orchestrator = mock_orchestrator_class.return_value
    orchestrator.run_sweep = AsyncMock(return_value=SweepResult(report=report, run_dir=tmp_path))
    result = runner.invoke(app, ["sweep", str(config_file), "--scales", "8"])
    assert result.exit_code == 1
    assert "n_cut=8" in result.stdout


@patch("ydvl.cli.RunOrchestrator")
def test_twin_command_fails_when_an_amplitude_fails(mock_orchestrator_class, config_file, tmp_path):
    """Test that a failed amplitude is listed and the twin command exits with status 1."""
    orchestrator = mock_orchestrator_class.return_value
    orchestrator.run_twin = AsyncMock(
        return_value=TwinResult(
            traces={},
            run_dir=tmp_path,
            decreasing=False,
            failures={1e-4: "pressure.solve_pressure: no convergence"},
        )
    )
    result = runner.invoke(app, ["twin", str(config_file), "--delta", "1e-4"])
    assert result.exit_code == 1
    assert "δ=0.0001" in result.stdout
    assert "no convergence" in result.stdout
