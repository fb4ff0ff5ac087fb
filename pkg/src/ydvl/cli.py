"""Command-line interface for the ydvl laboratory."""

import asyncio
import logging
import math
from pathlib import Path
from typing import Callable, List, NoReturn, Optional, TypeVar

import typer
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from . import __version__
from .config import get_settings, load_config
from .errors import YdvlError
from .experiments.data import (
    DatumRecipe,
    MollifierScale,
    build_datum,
    mollify,
    vorticity_integrability,
)
from .logging_utils import configure_logging
from .pipeline.orchestrator import RunOrchestrator, RunResult, diagnose_snapshots
from .spectral.grid import Grid
from .storage.persistence import emit_diagnostics_csv

T = TypeVar("T")

app = typer.Typer(
    name="ydvl",
    help="Pseudo-spectral laboratory for density-dependent Euler flows on the torus",
    rich_markup_mode="rich",
)

console = Console()


def _setup(verbose: bool) -> None:
    configure_logging(logging.DEBUG if verbose else get_settings().log_level)


def _fail(exc: Exception) -> NoReturn:
    console.print(f"[red]Error:[/red] {escape(str(exc))}")
    raise typer.Exit(1)


def _fmt(value: float) -> str:
    return "∞" if math.isinf(value) else f"{value:.6g}"


def _parse_list(text: Optional[str], cast: Callable[[str], T], option: str) -> Optional[List[T]]:
    if not text:
        return None
    try:
        return [cast(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        _fail(YdvlError(f"bad {option} value: {exc}", operation="harness.cli"))


@app.command()
def run(
    config_file: Path = typer.Argument(..., help="Run configuration (key = value lines)"),
    output_dir: Optional[Path] = typer.Option(
        None, "--output", "-o", help="Override the configured output directory"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
):
    """Integrate a configured run and write diagnostics, bounds and snapshots."""

    _setup(verbose)
    try:
        config = load_config(config_file)
        console.print(
            Panel.fit(
                f"[bold blue]ydvl run[/bold blue]\n\n"
                f"Recipe: {config.recipe}\n"
                f"Grid: {config.grid_n} x {config.grid_n}\n"
                f"T_final: {config.t_final:g}\n"
                f"p0: {config.p0:g}   cfl: {config.cfl:g}\n"
                f"Mollifier n_cut: {config.n_cut if config.n_cut is not None else 'off'}"
            )
        )
        orchestrator = RunOrchestrator(config, output_directory=output_dir)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            console=console,
        ) as progress:
            task = progress.add_task("Integrating...", total=1.0)
            result = orchestrator.execute_run(
                progress=lambda fraction: progress.update(task, completed=fraction)
            )
            progress.update(task, description="Run completed!")
    except YdvlError as exc:
        _fail(exc)

    display_run(result)


@app.command()
def diagnose(
    snapshots: List[Path] = typer.Argument(..., help="Snapshot files to measure"),
    p0: float = typer.Option(4.0, "--p0", help="Integrability index in (2, 4]"),
    grid_n: Optional[int] = typer.Option(None, "--grid", help="Expected grid size"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write a diagnostics CSV"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
):
    """Measure stored snapshots."""

    _setup(verbose)
    try:
        series = diagnose_snapshots(snapshots, p0=p0, expected_n=grid_n)
        if output is not None:
            emit_diagnostics_csv(series, output)
    except YdvlError as exc:
        _fail(exc)

    table = Table(title="Snapshot Diagnostics")
    table.add_column("t", style="cyan")
    table.add_column("energy", style="green")
    table.add_column("‖ω‖∞", style="green")
    table.add_column("‖∇ρ‖∞", style="green")
    table.add_column("η residual", style="yellow")
    table.add_column("vorticity eq. residual", style="yellow")
    for record in series:
        table.add_row(
            _fmt(record.t),
            _fmt(record.energy),
            _fmt(record.lp_omega[math.inf]),
            _fmt(record.sup_grad_rho),
            _fmt(record.eta_identity_resid),
            _fmt(record.vorticity_eq_resid),
        )
    console.print(table)
    if output is not None:
        console.print(f"[green]Wrote[/green] {output}")


@app.command()
def sweep(
    config_file: Path = typer.Argument(..., help="Run configuration"),
    scales: Optional[str] = typer.Option(
        None, "--scales", help="Comma-separated cutoffs (default: sweep_scales)"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
):
    """Run the regularisation sweep over mollifier cutoffs."""

    _setup(verbose)
    cutoffs = _parse_list(scales, int, "--scales")
    try:
        config = load_config(config_file)
        orchestrator = RunOrchestrator(config)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("Sweeping scales...", total=None)
            result = asyncio.run(orchestrator.run_sweep(cutoffs))
            progress.update(task, description="Sweep completed!")
    except YdvlError as exc:
        _fail(exc)

    frame = result.report.to_frame()
    table = Table(title=f"Regularisation Sweep ({result.report.monotonicity})")
    for column, style in (
        ("n_cut", "cyan"),
        ("m_final", "green"),
        ("sup_grad_rho", "green"),
        ("sup_eta_p0", "green"),
        ("sup_u", "green"),
        ("dxu_time_l2", "yellow"),
        ("cauchy_next", "yellow"),
    ):
        table.add_column(column, style=style)
    for _, row in frame.iterrows():
        table.add_row(*(_fmt(float(row[c.header])) for c in table.columns))
    console.print(table)
    for n_cut, message in result.report.failures.items():
        console.print(f"[red]Failed[/red] n_cut={n_cut}: {escape(message)}")
    console.print(f"Results written to {result.run_dir}")
    if result.report.failures:
        raise typer.Exit(1)


@app.command()
def twin(
    config_file: Path = typer.Argument(..., help="Run configuration"),
    delta: Optional[str] = typer.Option(
        None, "--delta", help="Comma-separated perturbation amplitudes (default: deltas)"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
):
    """Twin-run stability runs for a list of perturbation amplitudes."""

    _setup(verbose)
    deltas = _parse_list(delta, float, "--delta")
    try:
        config = load_config(config_file)
        orchestrator = RunOrchestrator(config)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("Running twin trajectories...", total=None)
            result = asyncio.run(orchestrator.run_twin(deltas))
            progress.update(task, description="Twin runs completed!")
    except YdvlError as exc:
        _fail(exc)

    table = Table(title="Twin-Run Stability")
    table.add_column("δ", style="cyan")
    table.add_column("E(0)", style="green")
    table.add_column("sup E", style="green")
    table.add_column("fitted K", style="yellow")
    table.add_column("envelopes 4/8/16", style="yellow")
    for value in sorted(result.traces, reverse=True):
        trace = result.traces[value]
        flags = "/".join("✔" if trace.envelope_flags.get(p) else "✘" for p in (4, 8, 16))
        table.add_row(
            f"{value:g}", _fmt(trace.e0), _fmt(trace.sup_energy), _fmt(trace.fitted_k), flags
        )
    console.print(table)
    verdict = "[green]yes[/green]" if result.decreasing else "[red]no[/red]"
    console.print(f"sup E strictly decreasing in δ: {verdict}")
    for value, message in result.failures.items():
        console.print(f"[red]Failed[/red] δ={value:g}: {escape(message)}")
    if result.failures:
        raise typer.Exit(1)


@app.command(name="mollify")
def mollify_command(
    config_file: Path = typer.Argument(..., help="Run configuration"),
    ncut: Optional[int] = typer.Option(None, "--ncut", help="Cutoff |k|∞ <= ncut"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
):
    """Report what a spectral cutoff does to the configured datum."""

    _setup(verbose)
    try:
        config = load_config(config_file)
        grid = Grid(config.grid_n)
        datum = build_datum(
            DatumRecipe.from_config(config), grid, config.rho_star, config.rho_upper
        )
        scale = MollifierScale(ncut if ncut is not None else config.n_cut)
        result = mollify(datum, scale, config.rho_star, config.rho_upper)
        integrability = vorticity_integrability(result.datum, config.p0)
    except YdvlError as exc:
        _fail(exc)

    table = Table(title=f"Mollified datum: {config.recipe}")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("n_cut", str(scale.n_cut) if scale.n_cut is not None else "off")
    table.add_row("ε_n = 1/n_cut", _fmt(scale.epsilon_n))
    table.add_row("‖ρ₀ − ρ₀ₙ‖∞", _fmt(result.rho_deviation))
    table.add_row("‖u₀ₙ − u₀‖₂", _fmt(result.velocity_l2_error))
    table.add_row("density bounds hold", "✅" if result.bounds_hold else "❌")
    table.add_row(f"‖ω₀ₙ‖_{config.p0:g}", _fmt(float(integrability["omega0_lp0"])))
    table.add_row("‖ω₀ₙ‖∞", _fmt(float(integrability["omega0_inf"])))
    console.print(table)


@app.command()
def config():
    """Display process settings."""

    settings = get_settings()
    table = Table(title="ydvl Configuration")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Source", style="yellow")
    table.add_row("Threads", str(settings.threads), "YDVL_THREADS")
    table.add_row("Log level", settings.log_level, "YDVL_LOG_LEVEL")
    table.add_row("Data directory", str(settings.data_directory), "YDVL_DATA_DIR")
    console.print(table)


@app.command()
def version():
    """Display version information."""
    console.print(f"ydvl v{__version__}")


def display_run(result: RunResult) -> None:
    """Summarise a finished run."""

    summary = result.summary
    table = Table(title="Run Summary")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    for key in ("t_final", "steps", "pressure_solves", "energy_initial", "energy_final", "m_final"):
        value = summary[key]
        table.add_row(key, _fmt(value) if isinstance(value, float) else str(value))
    console.print(table)

    bounds = Table(title="Estimate Chain")
    bounds.add_column("Check", style="cyan")
    bounds.add_column("lhs", style="green")
    bounds.add_column("rhs", style="green")
    bounds.add_column("t", style="dim")
    bounds.add_column("Status", style="yellow")
    for entry in result.bounds.entries:
        bounds.add_row(
            entry.name,
            _fmt(entry.lhs),
            _fmt(entry.rhs),
            _fmt(entry.t),
            "✅" if entry.satisfied else "❌",
        )
    console.print(bounds)

    console.print(
        Panel.fit(
            "\n".join(f"• {name}: {path.name}" for name, path in result.output_files.items()),
            title=str(result.run_dir),
            border_style="blue",
        )
    )


if __name__ == "__main__":
    app()
