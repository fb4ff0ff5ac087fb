"""Periodic grid on the 2π torus and the sampled field types living on it.

Sample layout: ``values[i, j] = f(x1 = j*h, x2 = i*h)``, so the first
coordinate runs along the last (fastest) array axis. Spectral coefficients use
the real-to-complex layout of ``scipy.fft.rfft2``: array axis 0 holds the full
``k2`` range, array axis 1 holds ``k1 = 0 .. n/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import fft

from ydvl.config import get_settings
from ydvl.errors import GridMismatch, NonFiniteField, OutOfRange

TWO_PI = 2.0 * math.pi


class SpectralTables(NamedTuple):
    """Wavenumber arrays for one grid size, broadcast to the rfft2 layout."""

    k1: np.ndarray
    k2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    k_sq: np.ndarray
    d_sq: np.ndarray
    k_inf: np.ndarray


@lru_cache(maxsize=16)
def _tables(n: int) -> SpectralTables:
    k1 = fft.rfftfreq(n, d=1.0 / n)[np.newaxis, :]
    k2 = fft.fftfreq(n, d=1.0 / n)[:, np.newaxis]
    # derivative symbols drop the unpaired Nyquist mode
    d1 = np.where(np.abs(k1) == n // 2, 0.0, k1)
    d2 = np.where(np.abs(k2) == n // 2, 0.0, k2)
    tables = SpectralTables(
        k1=np.broadcast_to(k1, (n, n // 2 + 1)).copy(),
        k2=np.broadcast_to(k2, (n, n // 2 + 1)).copy(),
        d1=np.broadcast_to(d1, (n, n // 2 + 1)).copy(),
        d2=np.broadcast_to(d2, (n, n // 2 + 1)).copy(),
        k_sq=k1**2 + k2**2,
        d_sq=d1**2 + d2**2,
        k_inf=np.maximum(np.abs(k1), np.abs(k2)),
    )
    for array in tables:
        array.flags.writeable = False
    return tables


def fft_workers() -> int:
    """Worker count for the FFT backend; transforms are bitwise stable across it."""

    return get_settings().threads


@dataclass(frozen=True, slots=True)
class Grid:
    """Uniform ``n x n`` discretisation of ``[0, 2π)²``."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 8 or self.n & (self.n - 1):
            raise OutOfRange(
                f"grid size must be a power of two >= 8, got {self.n}", operation="spectral.Grid"
            )

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(x1, x2)`` sample arrays in the field layout."""

        x = self.points
        x2, x1 = np.meshgrid(x, x, indexing="ij")
        return x1, x2

    @property
    def tables(self) -> SpectralTables:
        return _tables(self.n)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return fft.rfft2(values, workers=fft_workers())

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        return fft.irfft2(coefficients, s=self.shape, workers=fft_workers())

    def sample(self, func) -> "ScalarField":  # noqa: ANN001
        """Evaluate ``func(x1, x2)`` on the grid."""

        x1, x2 = self.coordinates()
        values = np.broadcast_to(np.asarray(func(x1, x2), dtype=np.float64), self.shape)
        return ScalarField(self, values)

    def constant(self, value: float) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, float(value)))

    def zeros(self) -> "ScalarField":
        return self.constant(0.0)


@dataclass(frozen=True, slots=True, eq=False)
class ScalarField:
    """Real samples on a :class:`Grid` with a lazily cached spectrum.

    Fields are immutable: ``values`` is a private read-only copy and arithmetic
    returns new fields.
    """

    grid: Grid
    values: np.ndarray
    _spectral: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True, order="C")
        if values.shape != self.grid.shape:
            raise GridMismatch(
                f"samples of shape {values.shape} on grid {self.grid.shape}",
                operation="spectral.ScalarField",
            )
        if not np.isfinite(values).all():
            raise NonFiniteField("field has NaN or Inf samples", operation="spectral.ScalarField")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self._spectral is not None:
            spectral = np.array(self._spectral, dtype=np.complex128, copy=True)
            spectral.flags.writeable = False
            object.__setattr__(self, "_spectral", spectral)

    @classmethod
    def from_spectral(cls, grid: Grid, coefficients: np.ndarray) -> "ScalarField":
        """Build a field from rfft2 coefficients, keeping them as the cached spectrum."""

        return cls(grid, grid.inverse(coefficients), coefficients)

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            coefficients = self.grid.forward(self.values)
            coefficients.flags.writeable = False
            object.__setattr__(self, "_spectral", coefficients)
        return self._spectral

    @property
    def n(self) -> int:
        return self.grid.n

    def mean(self) -> float:
        return float(self.values.mean())

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def _check(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise GridMismatch(
                f"grid {other.grid.n} does not match {self.grid.n}",
                operation="spectral.ScalarField",
            )

    def _operand(self, other: Union["ScalarField", float]) -> Union[np.ndarray, float]:
        if isinstance(other, ScalarField):
            self._check(other)
            return other.values
        return float(other)

    def __add__(self, other: Union["ScalarField", float]) -> "ScalarField":
        return ScalarField(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other: Union["ScalarField", float]) -> "ScalarField":
        return ScalarField(self.grid, self.values - self._operand(other))

    def __rsub__(self, other: float) -> "ScalarField":
        return ScalarField(self.grid, float(other) - self.values)

    def __mul__(self, other: Union["ScalarField", float]) -> "ScalarField":
        return ScalarField(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Union["ScalarField", float]) -> "ScalarField":
        return ScalarField(self.grid, self.values / self._operand(other))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def allclose(self, other: "ScalarField", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.values - other.values)) <= atol)


@dataclass(frozen=True, slots=True, eq=False)
class VectorField:
    """Pair of scalar fields on a shared grid."""

    x: ScalarField
    y: ScalarField

    def __post_init__(self) -> None:
        if self.x.grid != self.y.grid:
            raise GridMismatch(
                "vector components on different grids", operation="spectral.VectorField"
            )

    @classmethod
    def from_arrays(cls, grid: Grid, first: np.ndarray, second: np.ndarray) -> "VectorField":
        return cls(ScalarField(grid, first), ScalarField(grid, second))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid.zeros(), grid.zeros())

    @property
    def grid(self) -> Grid:
        return self.x.grid

    @property
    def components(self) -> tuple[ScalarField, ScalarField]:
        return (self.x, self.y)

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.x.values, self.y.values)

    def mean(self) -> np.ndarray:
        return np.array([self.x.mean(), self.y.mean()])

    def sup(self) -> float:
        return float(self.magnitude().max())

    def dot(self, other: "VectorField") -> ScalarField:
        return self.x * other.x + self.y * other.y

    def shift(self, offset: np.ndarray) -> "VectorField":
        """Add a constant vector."""

        return VectorField(self.x + float(offset[0]), self.y + float(offset[1]))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.x - other.x, self.y - other.y)

    def __mul__(self, other: Union[ScalarField, float]) -> "VectorField":
        return VectorField(self.x * other, self.y * other)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(-self.x, -self.y)


AnyField = Union[ScalarField, VectorField]


def components(f: AnyField) -> tuple[ScalarField, ...]:
    """Return the scalar components of a scalar or vector field."""

    return (f,) if isinstance(f, ScalarField) else f.components


def pointwise_magnitude(f: AnyField) -> np.ndarray:
    return np.abs(f.values) if isinstance(f, ScalarField) else f.magnitude()


__all__ = [
    "TWO_PI",
    "Grid",
    "ScalarField",
    "VectorField",
    "SpectralTables",
    "AnyField",
    "components",
    "pointwise_magnitude",
    "fft_workers",
]
