"""Directional derivatives ``∂ₓf = X·∇f`` along a vector field."""

from __future__ import annotations

from typing import overload

from ydvl.errors import GridMismatch
from ydvl.spectral.grid import ScalarField, VectorField
from ydvl.spectral.operators import divergence, gradient


def _scalar(X: VectorField, f: ScalarField) -> ScalarField:
    if X.grid != f.grid:
        raise GridMismatch(
            "direction and operand on different grids", operation="norms.directional_derivative"
        )
    grad = gradient(f)
    return X.x * grad.x + X.y * grad.y


@overload
def directional_derivative(X: VectorField, u: ScalarField) -> ScalarField: ...


@overload
def directional_derivative(X: VectorField, u: VectorField) -> VectorField: ...


def directional_derivative(X, u):  # noqa: ANN001, ANN201
    """``X¹∂₁u + X²∂₂u`` componentwise, derivatives taken spectrally."""

    if isinstance(u, ScalarField):
        return _scalar(X, u)
    return VectorField(_scalar(X, u.x), _scalar(X, u.y))


def weak_directional_derivative(X: VectorField, u: VectorField) -> VectorField:
    """``div(X ⊗ u)``: equals ``∂ₓu`` whenever ``div X = 0``."""

    first = divergence(VectorField(X.x * u.x, X.y * u.x))
    second = divergence(VectorField(X.x * u.y, X.y * u.y))
    return VectorField(first, second)


__all__ = [
    "directional_derivative",
    "weak_directional_derivative",
]
