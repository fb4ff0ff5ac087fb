"""Persistence helpers for snapshots, diagnostics tables and run summaries."""

from __future__ import annotations

import json
import struct
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ydvl.diagnostics.records import DiagnosticsRecord
from ydvl.dynamics.state import FluidState
from ydvl.errors import FormatError, GridMismatch, IoError
from ydvl.spectral.grid import Grid, ScalarField, VectorField

MAGIC = b"YDVL"
VERSION = 1
FIELD_NAMES = ("rho", "u_x", "u_y", "eta", "x_x", "x_y", "pi")

_HEADER = struct.Struct("<4sIId2d")
_COUNT = struct.Struct("<I")
_NAME_LENGTH = struct.Struct("<H")


def ensure_directory(path: Path) -> Path:
    """Ensure a directory exists and return it."""

    path.mkdir(parents=True, exist_ok=True)
    return path


def write_dataframe(df: pd.DataFrame, path: Path) -> None:
    """Persist a pandas DataFrame as Parquet."""

    ensure_directory(path.parent)
    try:
        df.to_parquet(path, index=False)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}", operation="harness.write_dataframe") from exc


def load_dataframe(path: Path) -> pd.DataFrame:
    """Load a pandas DataFrame from Parquet."""

    try:
        return pd.read_parquet(path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}", operation="harness.load_dataframe") from exc


def _state_arrays(state: FluidState) -> list[np.ndarray]:
    return [
        state.rho.values,
        state.u.x.values,
        state.u.y.values,
        state.eta.values,
        state.x_field.x.values,
        state.x_field.y.values,
        state.pi.values,
    ]


def write_snapshot(state: FluidState, path: Path) -> Path:
    """Write ``state`` in the binary snapshot format.

    Layout: magic ``YDVL``, u32 version, u32 n, f64 t, two f64 mean-velocity
    components, u32 field count, then per field a u16 name length and the
    UTF-8 name, then every field as little-endian f64 samples in row-major
    order with ``x₁`` fastest.
    """

    n = state.grid.n
    chunks = [
        _HEADER.pack(MAGIC, VERSION, n, state.t, *map(float, state.u_mean)),
        _COUNT.pack(len(FIELD_NAMES)),
    ]
    for name in FIELD_NAMES:
        encoded = name.encode("utf-8")
        chunks.append(_NAME_LENGTH.pack(len(encoded)))
        chunks.append(encoded)
    for values in _state_arrays(state):
        chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes(order="C"))

    try:
        ensure_directory(path.parent)
        path.write_bytes(b"".join(chunks))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}", operation="harness.write_snapshot") from exc
    return path


class _Reader:
    def __init__(self, payload: bytes) -> None:
        self.payload = payload
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise FormatError("snapshot is truncated", operation="harness.read_snapshot")
        chunk = self.payload[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout: struct.Struct) -> tuple[Any, ...]:
        return layout.unpack(self.take(layout.size))


def read_snapshot(path: Path, expected_n: Optional[int] = None) -> FluidState:
    """Read a snapshot back into a :class:`FluidState`.

    ``expected_n`` names the grid of the reading context; a different stored
    grid raises :class:`GridMismatch`.
    """

    try:
        payload = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}", operation="harness.read_snapshot") from exc

    reader = _Reader(payload)
    magic, version, n, t, mean_x, mean_y = reader.unpack(_HEADER)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", operation="harness.read_snapshot")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", operation="harness.read_snapshot")
    if expected_n is not None and n != expected_n:
        raise GridMismatch(
            f"snapshot grid n={n} does not match n={expected_n}",
            operation="harness.read_snapshot",
        )

    (count,) = reader.unpack(_COUNT)
    names = []
    for _ in range(count):
        (length,) = reader.unpack(_NAME_LENGTH)
        try:
            names.append(reader.take(length).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(
                "field name is not UTF-8", operation="harness.read_snapshot"
            ) from exc
    if tuple(names) != FIELD_NAMES:
        raise FormatError(f"unexpected fields {names}", operation="harness.read_snapshot")

    grid = Grid(n)
    size = n * n * 8
    arrays = {
        name: np.frombuffer(reader.take(size), dtype="<f8").reshape(n, n).astype(np.float64)
        for name in names
    }
    if reader.offset != len(payload):
        raise FormatError("trailing bytes after last field", operation="harness.read_snapshot")

    def scalar(name: str) -> ScalarField:
        return ScalarField(grid, arrays[name])

    return FluidState(
        t=t,
        rho=scalar("rho"),
        u=VectorField(scalar("u_x"), scalar("u_y")),
        u_mean=np.array([mean_x, mean_y]),
        eta=scalar("eta"),
        x_field=VectorField(scalar("x_x"), scalar("x_y")),
        pi=scalar("pi"),
    )


DIAGNOSTICS_COLUMNS = (
    "t",
    "energy",
    "lp_omega_2",
    "lp_omega_p0",
    "lp_omega_inf",
    "lp_eta_p0",
    "sup_u",
    "sup_grad_rho",
    "dxu_sup",
    "m_accum",
    "eta_identity_resid",
    "x_identity_resid",
    "pressure_l2",
    "div_u_sup",
)


def diagnostics_frame(series: Sequence[DiagnosticsRecord]) -> pd.DataFrame:
    """The CSV column contract: ``p0`` columns are read at the run's ``p0``."""

    rows = []
    for record in series:
        p0 = record.p0
        rows.append(
            {
                "t": record.t,
                "energy": record.energy,
                "lp_omega_2": record.lp_omega[2.0],
                "lp_omega_p0": record.lp_omega[p0],
                "lp_omega_inf": record.lp_omega[float("inf")],
                "lp_eta_p0": record.lp_eta[p0],
                "sup_u": record.sup_u,
                "sup_grad_rho": record.sup_grad_rho,
                "dxu_sup": record.dxu_sup,
                "m_accum": record.m_accum,
                "eta_identity_resid": record.eta_identity_resid,
                "x_identity_resid": record.x_identity_resid,
                "pressure_l2": record.pressure_l2,
                "div_u_sup": record.div_u_sup,
            }
        )
    return pd.DataFrame(rows, columns=list(DIAGNOSTICS_COLUMNS))


def emit_diagnostics_csv(series: Sequence[DiagnosticsRecord], path: Path) -> Path:
    """One row per record, 17 significant digits, ``,`` delimiter and ``.`` decimals."""

    if not series:
        raise IoError("empty diagnostics series", operation="harness.emit_diagnostics_csv")
    frame = diagnostics_frame(series)
    try:
        ensure_directory(path.parent)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as exc:
        raise IoError(
            f"cannot write {path}: {exc}", operation="harness.emit_diagnostics_csv"
        ) from exc
    return path


def extended_frame(series: Iterable[DiagnosticsRecord]) -> pd.DataFrame:
    """Every record field, one column per tracked exponent."""

    return pd.DataFrame([record.to_row() for record in series])


class DataStore:
    """Convenience wrapper for organising run output artifacts."""

    def __init__(self, root: Path) -> None:
        self.root = ensure_directory(root)

    def create_run_directory(
        self, *, name: str | None = None, timestamp: datetime | None = None
    ) -> Path:
        run_id = (timestamp or datetime.now(timezone.utc)).strftime("%Y%m%dT%H%M%SZ")
        run_dir = self.root / (f"{name}-{run_id}" if name else run_id)
        ensure_directory(run_dir)
        return run_dir

    def write_json(self, data: Any, path: Path) -> Path:
        ensure_directory(path.parent)
        with path.open("w", encoding="utf-8") as fh:
            json.dump(data, fh, ensure_ascii=False, indent=2, default=_json_default)
        return path

    def write_jsonl(self, records: Iterable[Mapping[str, Any]], path: Path) -> Path:
        ensure_directory(path.parent)
        with path.open("w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False, default=_json_default) + "\n")
        return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Unsupported type for serialization: {type(value)!r}")


__all__ = [
    "MAGIC",
    "VERSION",
    "FIELD_NAMES",
    "ensure_directory",
    "write_dataframe",
    "load_dataframe",
    "write_snapshot",
    "read_snapshot",
    "DIAGNOSTICS_COLUMNS",
    "diagnostics_frame",
    "emit_diagnostics_csv",
    "extended_frame",
    "DataStore",
]
