"""Tests for Lebesgue norms, exponent bookkeeping, moduli and directional derivatives."""

import math

import numpy as np
import pytest

from ydvl.errors import OutOfRange
from ydvl.norms.directional import (
    directional_derivative,
    weak_directional_derivative,
)
from ydvl.norms.lebesgue import (
    holder_pair,
    lp_norm,
    lp_norms,
    make_exponents,
    sobolev_seminorm,
    vector_product_norm,
)
from ydvl.norms.moduli import (
    dyadic_offsets,
    ll_modulus,
    zygmund_domination_bound,
    zygmund_modulus,
)
from ydvl.spectral.grid import Grid, VectorField
from ydvl.spectral.operators import perp_gradient


class TestLebesgue:
    def test_constant_in_l2(self, grid32):
        """‖1‖₂ is the square root of the torus area."""
        assert lp_norm(grid32.constant(1.0), 2.0) == pytest.approx(2 * math.pi, rel=1e-14)

    def test_sine_sup_and_l2(self, grid64):
        """Sup and L² norms of sin x₁."""
        f = grid64.sample(lambda x1, x2: np.sin(x1))
        assert lp_norm(f, math.inf) == pytest.approx(1.0, abs=1e-15)
        assert lp_norm(f, 2.0) == pytest.approx(2 * math.pi / math.sqrt(2), rel=1e-12)

    def test_p_below_one_rejected(self, grid16):
        """p < 1 is not a norm."""
        with pytest.raises(OutOfRange):
            lp_norm(grid16.zeros(), 0.5)

    def test_vector_fields_use_euclidean_magnitude(self, grid16):
        """Vector norms act on the pointwise Euclidean length."""
        v = VectorField(grid16.constant(3.0), grid16.constant(4.0))
        assert lp_norm(v, math.inf) == pytest.approx(5.0)
        assert lp_norm(v, 2.0) == pytest.approx(5.0 * 2 * math.pi)

    def test_triangle_inequality_on_random_pairs(self, grid32):
        """Minkowski holds for random fields at several p."""
        rng = np.random.default_rng(7)
        f = grid32.sample(lambda x1, x2: rng.standard_normal(x1.shape))
        g = grid32.sample(lambda x1, x2: rng.standard_normal(x1.shape))
        for p in (1.0, 2.0, 4.0, math.inf):
            assert lp_norm(f + g, p) <= lp_norm(f, p) + lp_norm(g, p) + 1e-10

    def test_lp_norms_matches_single_evaluations(self, grid32):
        """The batched norms equal one-at-a-time evaluation."""
        f = grid32.sample(lambda x1, x2: np.cos(x1) * np.sin(2 * x2))
        norms = lp_norms(f, (2.0, 4.0, math.inf))
        for p, value in norms.items():
            assert value == lp_norm(f, p)

    def test_holder_pair(self, grid64):
        """‖fg‖_{q0} <= ‖f‖₂‖g‖_{p0}."""
        f = grid64.sample(lambda x1, x2: np.exp(np.sin(x1)) - 1.0)
        g = grid64.sample(lambda x1, x2: np.cos(x1 + x2) + 0.5 * np.sin(3 * x2))
        lhs, rhs = holder_pair(f, g, make_exponents(4.0))
        assert lhs <= rhs + 1e-10

    def test_bilinear_holder_pair(self, taylor_green_velocity):
        """‖(u·∇)u‖_{q0} <= ‖u‖₂‖∇u‖_{p0} for Taylor-Green."""
        lhs, rhs = vector_product_norm(taylor_green_velocity, make_exponents(3.0))
        assert 0.0 < lhs <= rhs + 1e-10

    def test_sobolev_seminorm_of_sine(self, grid64):
        """‖∇ sin x₁‖∞ = 1."""
        f = grid64.sample(lambda x1, x2: np.sin(x1))
        assert sobolev_seminorm(f, math.inf) == pytest.approx(1.0, abs=1e-12)


class TestExponents:
    def test_p0_four(self):
        """θ, q0 and p1 for p0 = 4."""
        exponents = make_exponents(4.0)
        assert exponents.theta == pytest.approx(0.5)
        assert exponents.q0 == pytest.approx(4.0 / 3.0)
        assert exponents.p1 == pytest.approx(4.0)

    def test_identities_hold_inside_range(self):
        """1/q0 = 1/2 + 1/p0 and 1/p0 + 1/p1 = 1/2."""
        exponents = make_exponents(2.5)
        assert 1 / exponents.q0 == pytest.approx(0.5 + 1 / 2.5)
        assert 1 / 2.5 + 1 / exponents.p1 == pytest.approx(0.5)

    @pytest.mark.parametrize("p0", [2.0, 1.5, 4.5])
    def test_out_of_range(self, p0):
        """p0 outside (2, 4] is refused."""
        with pytest.raises(OutOfRange) as excinfo:
            make_exponents(p0)
        assert excinfo.value.operation == "norms.make_exponents"

    def test_p_grid_deduplicates(self):
        """The tracked exponents are sorted without repeats."""
        assert make_exponents(4.0).p_grid == (2.0, 4.0, 8.0, math.inf)
        assert make_exponents(3.0).p_grid == (2.0, 3.0, 6.0, 8.0, math.inf)


class TestModuli:
    def test_dyadic_offsets_respect_spacing(self, grid64):
        """Offsets halve from 1/2 down to about two grid cells."""
        offsets = dyadic_offsets(grid64)
        assert offsets[0] == 0.5
        assert offsets[-1] >= 2 * grid64.spacing
        assert offsets[-1] / 2 < 2 * grid64.spacing

    @pytest.mark.parametrize("modulus", [ll_modulus, zygmund_modulus])
    def test_constants_have_zero_modulus(self, grid32, modulus):
        """Constants have zero modulus."""
        assert modulus(grid32.constant(2.5)).seminorm == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("modulus, alpha", [(ll_modulus, 2.0), (zygmund_modulus, 3.0)])
    def test_homogeneity(self, grid32, modulus, alpha):
        """Both seminorms scale linearly."""
        f = grid32.sample(lambda x1, x2: np.sin(x1))
        base = modulus(f).seminorm
        assert modulus(alpha * f).seminorm == pytest.approx(alpha * base, rel=1e-12)

    def test_dense_sampling_baselines(self):
        """Closed-form suprema for sin x₁ on a fine grid."""
        grid = Grid(512)
        f = grid.sample(lambda x1, x2: np.sin(x1))
        # 2 sin(r/2) / (r log(1 + 1/r)) and 2 (1 − cos r) / r, both maximal at r = 1/2
        ll = ll_modulus(f)
        zygmund = zygmund_modulus(f)
        assert ll.seminorm == pytest.approx(2 * math.sin(0.25) / (0.5 * math.log(3.0)), rel=1e-3)
        assert zygmund.seminorm == pytest.approx(4 * (1 - math.cos(0.5)), rel=1e-3)
        assert ll.arg_offset == 0.5

    def test_spectral_interpolation_agrees(self, grid64):
        """Bilinear and spectral shifts give close moduli."""
        f = grid64.sample(lambda x1, x2: np.sin(x1) * np.cos(x2))
        bilinear = ll_modulus(f, "bilinear").seminorm
        spectral = ll_modulus(f, "spectral").seminorm
        assert spectral == pytest.approx(bilinear, rel=1e-2)

    def test_zygmund_dominated_by_log_lipschitz(self, grid64, taylor_green_velocity):
        """The Zygmund seminorm stays under its log-Lipschitz bound."""
        ll = ll_modulus(taylor_green_velocity)
        zygmund = zygmund_modulus(taylor_green_velocity)
        assert zygmund.seminorm <= zygmund_domination_bound(ll, grid64)


class TestDirectional:
    def test_shear_along_layers_vanishes(self, grid64):
        """A shear along the density layers is not stretched."""
        rho = grid64.sample(lambda x1, x2: 2.0 + 0.5 * np.sin(x1))
        u = VectorField(grid64.zeros(), grid64.sample(lambda x1, x2: np.sin(x1)))
        assert directional_derivative(perp_gradient(rho), u).sup() <= 1e-12

    def test_constant_operand(self, grid32):
        """Constants have no directional derivative."""
        X = VectorField(
            grid32.sample(lambda x1, x2: np.cos(x2)), grid32.sample(lambda x1, x2: np.sin(x1))
        )
        assert directional_derivative(X, grid32.constant(4.0)).sup() <= 1e-12

    def test_symbolic_case(self, grid64):
        """∂ₓu against a hand-computed product."""
        X = VectorField(grid64.zeros(), grid64.sample(lambda x1, x2: 0.5 * np.cos(x1)))
        u = VectorField(grid64.sample(lambda x1, x2: np.sin(x2)), grid64.zeros())
        dxu = directional_derivative(X, u)
        expected = grid64.sample(lambda x1, x2: 0.5 * np.cos(x1) * np.cos(x2))
        assert np.max(np.abs(dxu.x.values - expected.values)) <= 1e-12
        assert dxu.y.sup() <= 1e-12
        assert lp_norm(dxu, math.inf) == pytest.approx(0.5, abs=1e-12)

    def test_weak_form_agrees_for_divergence_free_direction(self, grid64):
        """div(X ⊗ u) = ∂ₓu when div X = 0."""
        rho = grid64.sample(lambda x1, x2: 1.0 + 0.3 * np.sin(x1) * np.sin(x2))
        X = perp_gradient(rho)
        u = VectorField(
            grid64.sample(lambda x1, x2: np.cos(x1) * np.sin(x2)),
            grid64.sample(lambda x1, x2: -np.sin(x1) * np.cos(x2)),
        )
        strong = directional_derivative(X, u)
        weak = weak_directional_derivative(X, u)
        assert (strong - weak).sup() <= 1e-10
