"""Run orchestration: single runs, snapshot diagnosis, sweeps and twin runs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd

from ydvl.config import RunConfig, Settings, get_settings
from ydvl.diagnostics.bounds import BoundChainReport, run_bound_chain
from ydvl.diagnostics.records import DiagnosticsRecord, measure
from ydvl.dynamics.integrator import integrate
from ydvl.dynamics.state import FluidState, initialize_state
from ydvl.errors import OutOfRange
from ydvl.experiments.data import (
    DatumRecipe,
    MollifiedDatum,
    MollifierScale,
    build_datum,
    mollify,
    pressure_solver,
    step_control,
    vorticity_integrability,
)
from ydvl.experiments.sweep import SweepReport, regularization_sweep_async
from ydvl.experiments.twin import StabilityTrace, twin_ensemble_async
from ydvl.norms.lebesgue import make_exponents
from ydvl.norms.moduli import ll_modulus, zygmund_domination_bound, zygmund_modulus
from ydvl.pressure.elliptic import PressureSolver
from ydvl.spectral.grid import Grid
from ydvl.storage.persistence import (
    DataStore,
    emit_diagnostics_csv,
    extended_frame,
    read_snapshot,
    write_dataframe,
    write_snapshot,
)

ProgressCallback = Callable[[float], None]


@dataclass
class RunResult:
    """Aggregated result of a single run."""

    config: RunConfig
    run_dir: Path
    series: List[DiagnosticsRecord]
    final_state: FluidState
    bounds: BoundChainReport
    summary: Dict[str, Any]
    output_files: Dict[str, Path] = field(default_factory=dict)


@dataclass
class SweepResult:
    report: SweepReport
    run_dir: Path
    output_files: Dict[str, Path] = field(default_factory=dict)


@dataclass
class TwinResult:
    traces: Dict[float, StabilityTrace]
    run_dir: Path
    decreasing: bool
    output_files: Dict[str, Path] = field(default_factory=dict)
    failures: Dict[float, str] = field(default_factory=dict)


class RunOrchestrator:
    """Coordinates data preparation, integration and persistence of outputs."""

    def __init__(
        self,
        config: RunConfig,
        settings: Optional[Settings] = None,
        output_directory: Optional[Path] = None,
    ) -> None:
        self.config = config
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.exponents = make_exponents(config.p0)
        root = Path(output_directory or config.output_dir)
        if not root.is_absolute():
            root = self.settings.data_directory / root
        self.data_store = DataStore(root)

    def prepare(self) -> MollifiedDatum:
        grid = Grid(self.config.grid_n)
        recipe = DatumRecipe.from_config(self.config)
        datum = build_datum(recipe, grid, self.config.rho_star, self.config.rho_upper)
        return mollify(
            datum, MollifierScale(self.config.n_cut), self.config.rho_star, self.config.rho_upper
        )

    def execute_run(self, progress: Optional[ProgressCallback] = None) -> RunResult:
        """Integrate the configured run, emitting diagnostics and snapshots on cadence."""

        config = self.config
        start_time = datetime.now(timezone.utc)
        mollified = self.prepare()
        solver = pressure_solver(config)
        ctl = step_control(config)

        run_dir = self.data_store.create_run_directory(name=config.recipe, timestamp=start_time)
        snapshot_dir = run_dir / "snapshots"
        state = initialize_state(mollified.datum.rho0, mollified.datum.omega0, solver)
        series = [measure(state, self.exponents)]
        moduli = self._moduli(state, "initial")
        self.logger.info(
            "Starting %s run on n=%d to T=%g", config.recipe, config.grid_n, config.t_final
        )

        last_step = 0

        def on_step(step: int, current: FluidState) -> None:
            nonlocal last_step
            last_step = step
            if step % config.diagnostics_every == 0:
                series.append(measure(current, self.exponents, previous=series[-1]))
            if config.snapshot_every and step % config.snapshot_every == 0:
                path = write_snapshot(current, snapshot_dir / f"step_{step:06d}.ydvl")
                self.logger.info("Wrote snapshot %s at t = %.6g", path.name, current.t)
            if progress is not None:
                progress(current.t / config.t_final)

        state = integrate(state, ctl, config.t_final, solver, on_step=on_step)
        if series[-1].t != state.t:
            series.append(measure(state, self.exponents, previous=series[-1]))

        bounds = run_bound_chain(
            series,
            self.exponents,
            rho_star=config.rho_star,
            rho_upper=config.rho_upper,
            gradrho_tol=config.gradrho_tol,
            eta_tol=config.eta_tol,
            bound_tol=config.bound_tol,
            energy_tol=config.energy_tol,
            velocity_constant=config.velocity_constant,
            density_eps=mollified.rho_deviation,
        )
        moduli.update(self._moduli(state, "final"))
        summary = self._create_summary(series, bounds, last_step, solver.solves, mollified)
        summary.update(moduli)
        output_files = self._persist_outputs(run_dir, series, bounds, summary, state)

        self.logger.info(
            "Run completed in %.2fs",
            (datetime.now(timezone.utc) - start_time).total_seconds(),
        )
        return RunResult(
            config=config,
            run_dir=run_dir,
            series=series,
            final_state=state,
            bounds=bounds,
            summary=summary,
            output_files=output_files,
        )

    def _persist_outputs(
        self,
        run_dir: Path,
        series: Sequence[DiagnosticsRecord],
        bounds: BoundChainReport,
        summary: Dict[str, Any],
        state: FluidState,
    ) -> Dict[str, Path]:
        outputs = {
            "diagnostics_csv": emit_diagnostics_csv(series, run_dir / "diagnostics.csv"),
            "final_snapshot": write_snapshot(state, run_dir / "final.ydvl"),
            "summary": self.data_store.write_json(summary, run_dir / "summary.json"),
        }
        write_dataframe(extended_frame(series), run_dir / "diagnostics.parquet")
        outputs["diagnostics_parquet"] = run_dir / "diagnostics.parquet"
        write_dataframe(bounds.to_frame(), run_dir / "bounds.parquet")
        outputs["bounds_parquet"] = run_dir / "bounds.parquet"
        return outputs

    def _create_summary(
        self,
        series: Sequence[DiagnosticsRecord],
        bounds: BoundChainReport,
        steps: int,
        solves: int,
        mollified: MollifiedDatum,
    ) -> Dict[str, Any]:
        first, last = series[0], series[-1]
        return {
            "recipe": self.config.recipe,
            "grid_n": self.config.grid_n,
            "t_final": last.t,
            "steps": steps,
            "pressure_solves": solves,
            "records": len(series),
            "energy_initial": first.energy,
            "energy_final": last.energy,
            "m_final": last.m_accum,
            "rho_deviation": mollified.rho_deviation,
            "velocity_l2_error": mollified.velocity_l2_error,
            "velocity_constant": bounds.velocity_constant,
            "growth_factor": bounds.growth_factor,
            "bounds_satisfied": bounds.satisfied,
            "bounds": {entry.name: entry.satisfied for entry in bounds.entries},
            **vorticity_integrability(mollified.datum, self.config.p0),
            "completed_at": datetime.now(timezone.utc).isoformat(),
        }

    def _moduli(self, state: FluidState, label: str) -> Dict[str, Any]:
        """Sampled LL and Zygmund seminorms of the velocity."""

        mode = self.config.modulus_interpolation
        ll = ll_modulus(state.velocity, mode)
        zygmund = zygmund_modulus(state.velocity, mode)
        bound = zygmund_domination_bound(ll, state.grid)
        return {
            f"ll_u_{label}": ll.seminorm,
            f"zygmund_u_{label}": zygmund.seminorm,
            f"zygmund_dominated_{label}": bool(zygmund.seminorm <= bound),
        }

    def diagnose(self, paths: Sequence[Path]) -> List[DiagnosticsRecord]:
        return diagnose_snapshots(
            paths,
            p0=self.config.p0,
            expected_n=self.config.grid_n,
            solver=pressure_solver(self.config),
        )

    async def run_sweep(self, scales: Optional[Sequence[int]] = None) -> SweepResult:
        mollified = self.prepare()
        cutoffs = scales or self.config.sweep_scales
        report = await regularization_sweep_async(
            mollified.datum, [MollifierScale(n) for n in cutoffs], self.config
        )
        run_dir = self.data_store.create_run_directory(name=f"sweep-{self.config.recipe}")
        frame = report.to_frame()
        write_dataframe(frame, run_dir / "sweep.parquet")
        summary = {
            "recipe": self.config.recipe,
            "scales": [_label(n) for n in report.results],
            "monotonicity": report.monotonicity,
            "failures": {_label(k): v for k, v in report.failures.items()},
            "cauchy": {f"{_label(a)}-{_label(b)}": d for (a, b), d in report.cauchy.items()},
        }
        outputs = {
            "sweep_parquet": run_dir / "sweep.parquet",
            "summary": self.data_store.write_json(summary, run_dir / "summary.json"),
        }
        self.logger.info("Sweep over %d scales: M_n is %s", len(frame), report.monotonicity)
        return SweepResult(report=report, run_dir=run_dir, output_files=outputs)

    async def run_twin(self, deltas: Optional[Sequence[float]] = None) -> TwinResult:
        mollified = self.prepare()
        amplitudes = list(deltas or self.config.deltas)
        ensemble = await twin_ensemble_async(mollified.datum, amplitudes, self.config)
        traces = ensemble.traces
        run_dir = self.data_store.create_run_directory(name=f"twin-{self.config.recipe}")

        ordered = sorted(traces.values(), key=lambda trace: trace.delta, reverse=True)
        sups = [trace.sup_energy for trace in ordered]
        decreasing = ensemble.complete(amplitudes) and all(a > b for a, b in zip(sups, sups[1:]))

        frames = [trace.to_frame() for trace in ordered]
        outputs: Dict[str, Path] = {}
        if frames:
            write_dataframe(pd.concat(frames, ignore_index=True), run_dir / "twin_traces.parquet")
            outputs["traces_parquet"] = run_dir / "twin_traces.parquet"
        summary_rows = [trace.summary() for trace in ordered]
        write_dataframe(pd.DataFrame(summary_rows), run_dir / "twin_summary.parquet")
        outputs["summary_parquet"] = run_dir / "twin_summary.parquet"
        outputs["summary"] = self.data_store.write_json(
            {
                "recipe": self.config.recipe,
                "decreasing_in_delta": decreasing,
                "runs": summary_rows,
                "failures": {f"{delta:g}": message for delta, message in ensemble.failures.items()},
            },
            run_dir / "summary.json",
        )
        if ensemble.failures:
            failed = len(ensemble.failures)
            self.logger.warning("%d of %d twin runs failed", failed, len(amplitudes))
        return TwinResult(
            traces=traces,
            run_dir=run_dir,
            decreasing=decreasing,
            output_files=outputs,
            failures=dict(ensemble.failures),
        )


def diagnose_snapshots(
    paths: Sequence[Path],
    p0: float = 4.0,
    expected_n: Optional[int] = None,
    solver: Optional[PressureSolver] = None,
) -> List[DiagnosticsRecord]:
    """Measure stored snapshots in time order; ``m_accum`` chains across them."""

    if not paths:
        raise OutOfRange("no snapshots given", operation="harness.diagnose")
    states = sorted(
        (read_snapshot(Path(path), expected_n=expected_n) for path in paths),
        key=lambda s: s.t,
    )
    exponents = make_exponents(p0)
    solver = solver or PressureSolver()
    series: List[DiagnosticsRecord] = []
    for state in states:
        previous = series[-1] if series else None
        series.append(measure(state, exponents, previous=previous, solver=solver))
    return series


def _label(n_cut: Optional[int]) -> str:
    return "none" if n_cut is None else str(n_cut)


__all__ = [
    "RunOrchestrator",
    "RunResult",
    "SweepResult",
    "TwinResult",
    "diagnose_snapshots",
]
