"""Lebesgue and Sobolev norms on the grid, plus the integrability exponent set."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ydvl.errors import OutOfRange
from ydvl.spectral.grid import AnyField, ScalarField, VectorField, pointwise_magnitude
from ydvl.spectral.operators import gradient

INF = math.inf


@dataclass(frozen=True, slots=True)
class ExponentSet:
    """Exponents derived from the integrability index ``p0``.

    ``theta = 2/p0``, ``1/q0 = 1/2 + 1/p0`` and ``1/p0 + 1/p1 = 1/2``.
    """

    p0: float
    theta: float
    q0: float
    p1: float

    @property
    def p_grid(self) -> tuple[float, ...]:
        """Exponents tracked by the diagnostics: ``{2, p0, 2p0, 8, ∞}``."""

        return tuple(dict.fromkeys((2.0, self.p0, 2.0 * self.p0, 8.0, INF)))


def make_exponents(p0: float) -> ExponentSet:
    if not (2.0 < p0 <= 4.0):
        raise OutOfRange(
            f"p0 = {p0} outside (2, 4]; the estimates need p0 <= 4",
            operation="norms.make_exponents",
        )
    return ExponentSet(
        p0=float(p0),
        theta=2.0 / p0,
        q0=1.0 / (0.5 + 1.0 / p0),
        p1=1.0 / (0.5 - 1.0 / p0),
    )


def _lp_of_magnitude(magnitude: np.ndarray, p: float, cell_area: float) -> float:
    if p < 1.0:
        raise OutOfRange(f"p = {p} below 1", operation="norms.lp_norm")
    if math.isinf(p):
        return float(magnitude.max())
    if p == 2.0:
        return math.sqrt(float(np.sum(magnitude * magnitude)) * cell_area)
    return (float(np.sum(magnitude**p)) * cell_area) ** (1.0 / p)


def lp_norm(f: AnyField, p: float) -> float:
    """Grid quadrature of ``|f|^p`` over the torus, to the power ``1/p``; grid max for ``p = ∞``.

    Vector fields use the pointwise Euclidean magnitude.
    """

    return _lp_of_magnitude(pointwise_magnitude(f), p, f.grid.cell_area)


def lp_norms(f: AnyField, exponents: tuple[float, ...]) -> dict[float, float]:
    magnitude = pointwise_magnitude(f)
    return {p: _lp_of_magnitude(magnitude, p, f.grid.cell_area) for p in exponents}


def gradient_magnitude(f: AnyField) -> np.ndarray:
    """Pointwise Frobenius norm of ``∇f``."""

    parts = [f] if isinstance(f, ScalarField) else list(f.components)
    total = np.zeros(f.grid.shape)
    for component in parts:
        grad = gradient(component)
        total += grad.x.values**2 + grad.y.values**2
    return np.sqrt(total)


def sobolev_seminorm(f: AnyField, p: float) -> float:
    """``‖∇f‖_p`` with the Frobenius norm for vector fields."""

    return _lp_of_magnitude(gradient_magnitude(f), p, f.grid.cell_area)


def holder_pair(f: ScalarField, g: ScalarField, exponents: ExponentSet) -> tuple[float, float]:
    """Return ``(‖fg‖_{q0}, ‖f‖₂‖g‖_{p0})``; the first never exceeds the second."""

    return lp_norm(f * g, exponents.q0), lp_norm(f, 2.0) * lp_norm(g, exponents.p0)


def vector_product_norm(u: VectorField, exponents: ExponentSet) -> tuple[float, float]:
    """Hölder pair for the bilinear term ``(u·∇)u`` in ``L^{q0}``, formed pointwise."""

    g1, g2 = gradient(u.x), gradient(u.y)
    product = VectorField(u.x * g1.x + u.y * g1.y, u.x * g2.x + u.y * g2.y)
    return lp_norm(product, exponents.q0), lp_norm(u, 2.0) * sobolev_seminorm(u, exponents.p0)


__all__ = [
    "INF",
    "ExponentSet",
    "make_exponents",
    "lp_norm",
    "lp_norms",
    "gradient_magnitude",
    "sobolev_seminorm",
    "holder_pair",
    "vector_product_norm",
]
