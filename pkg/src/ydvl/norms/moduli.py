"""Sampled log-Lipschitz and Zygmund moduli of continuity.

Both moduli are sampled lower bounds of the continuum suprema. The offset set
is fixed: every grid point ``z``, dyadic magnitudes ``|y| = 2^-j`` for
``j = 1..J`` with ``J`` the largest index keeping ``2^-J >= 2h``, and the two
axis and two diagonal directions, each taken in both orientations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np
from scipy import ndimage

from ydvl.spectral.grid import AnyField, Grid, ScalarField, components

Interpolation = Literal["bilinear", "spectral"]

_DIAGONAL = 1.0 / math.sqrt(2.0)
DIRECTIONS: tuple[tuple[float, float], ...] = (
    (1.0, 0.0),
    (0.0, 1.0),
    (_DIAGONAL, _DIAGONAL),
    (_DIAGONAL, -_DIAGONAL),
)


@dataclass(frozen=True, slots=True)
class ModulusReport:
    seminorm: float
    arg_offset: float
    samples: int


def dyadic_offsets(grid: Grid) -> tuple[float, ...]:
    """Offset magnitudes ``2^-j``, ``j = 1..J``, with ``2^-J >= 2h`` (at least one)."""

    levels = max(1, math.floor(math.log2(1.0 / (2.0 * grid.spacing))))
    return tuple(2.0**-j for j in range(1, levels + 1))


def _shifted(field: ScalarField, offset: tuple[float, float], mode: Interpolation) -> np.ndarray:
    """Samples of ``z -> f(z + offset)``."""

    h = field.grid.spacing
    # array axis 0 carries x2, axis 1 carries x1
    shift = (-offset[1] / h, -offset[0] / h)
    if mode == "spectral":
        moved = ndimage.fourier_shift(np.array(field.spectral), shift, n=field.grid.n, axis=-1)
        return field.grid.inverse(moved)
    return ndimage.shift(field.values, shift, order=1, mode="grid-wrap", prefilter=False)


def _offset_samples(
    f: AnyField, mode: Interpolation
) -> Iterator[tuple[float, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(|y|, f(z), f(z+y), f(z-y))`` stacks over the offset set."""

    parts = components(f)
    base = np.stack([part.values for part in parts])
    for radius in dyadic_offsets(f.grid):
        for d1, d2 in DIRECTIONS:
            ahead = np.stack([_shifted(part, (radius * d1, radius * d2), mode) for part in parts])
            behind = np.stack(
                [_shifted(part, (-radius * d1, -radius * d2), mode) for part in parts]
            )
            yield radius, base, ahead, behind


def _norm(stack: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(stack * stack, axis=0))


def ll_modulus(f: AnyField, interpolation: Interpolation = "bilinear") -> ModulusReport:
    """Sampled ``sup |f(z+y) − f(z)| / (|y| log(1 + 1/|y|))``."""

    best, arg, count = 0.0, 0.0, 0
    for radius, base, ahead, behind in _offset_samples(f, interpolation):
        weight = radius * math.log1p(1.0 / radius)
        for other in (ahead, behind):
            value = float(_norm(other - base).max()) / weight
            count += base.shape[-1] * base.shape[-2]
            if value > best:
                best, arg = value, radius
    return ModulusReport(seminorm=best, arg_offset=arg, samples=count)


def zygmund_modulus(f: AnyField, interpolation: Interpolation = "bilinear") -> ModulusReport:
    """Sampled ``sup |f(z+y) + f(z−y) − 2f(z)| / |y|``."""

    best, arg, count = 0.0, 0.0, 0
    for radius, base, ahead, behind in _offset_samples(f, interpolation):
        value = float(_norm(ahead + behind - 2.0 * base).max()) / radius
        count += base.shape[-1] * base.shape[-2]
        if value > best:
            best, arg = value, radius
    return ModulusReport(seminorm=best, arg_offset=arg, samples=count)


def zygmund_domination_bound(ll: ModulusReport, grid: Grid) -> float:
    """Upper bound ``2·LL·max log(1 + 1/|y|)`` that the sampled Zygmund seminorm obeys."""

    return 2.0 * ll.seminorm * max(math.log1p(1.0 / r) for r in dyadic_offsets(grid))


__all__ = [
    "ModulusReport",
    "Interpolation",
    "DIRECTIONS",
    "dyadic_offsets",
    "ll_modulus",
    "zygmund_modulus",
    "zygmund_domination_bound",
]
