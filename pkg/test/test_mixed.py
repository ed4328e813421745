#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Tests for mixed curvature functions, mixed volumes and Minkowski's inequality."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovaloid.body import make_ball, make_random_body, volume
from ovaloid.corpus import minkowski_witnesses, random_functions
from ovaloid.mixed import (
    NORMALIZATION,
    ball_mixed_volume,
    ellipticity_eigenvalues,
    is_equality,
    minkowski_slack,
    minkowski_terms,
    mixed_curvature,
    mixed_discriminant,
    mixed_volume,
    steiner_mixed_volume,
)
from ovaloid.sphere import GridMismatchError, ScalarField, SphereGrid, support_operator

logger = logging.getLogger("ovaloid.test")

CIRCLE = SphereGrid(2, 64)
SPHERE = SphereGrid(3, 10)


class TestMixedVolumes:
    """Tests for V[s₀, ..., s_{n-1}]."""

    @pytest.mark.parametrize("grid", [CIRCLE, SPHERE])
    def test_diagonal_is_n_times_volume(self, grid):
        """Test V[s, ..., s] = n·Vol."""
        body = make_random_body(1, 4, 0.1, grid)
        result = mixed_volume(*([body] * grid.dim))
        assert result.value == pytest.approx(grid.dim * volume(body), rel=1e-12)
        assert result.normalization == NORMALIZATION
        assert result.arguments == ("random-1",) * grid.dim

    @pytest.mark.parametrize("r1,r2", [(1.0, 2.0), (0.5, 3.0), (2.0, 2.0)])
    def test_two_balls(self, r1, r2):
        """Test V[B(R₁), B(R₂), B(R₂)] = 4πR₁R₂²."""
        b1, b2 = make_ball(r1, SPHERE), make_ball(r2, SPHERE)
        expected = steiner_mixed_volume(r1, r2, 3)
        assert expected == pytest.approx(4 * np.pi * r1 * r2**2)
        assert mixed_volume(b1, b2, b2).value == pytest.approx(expected, rel=1e-10)

    def test_balls_closed_form(self):
        """Test V of three different balls is 4πR₀R₁R₂."""
        radii = (0.5, 1.0, 3.0)
        balls = [make_ball(r, SPHERE) for r in radii]
        assert mixed_volume(*balls).value == pytest.approx(
            ball_mixed_volume(SPHERE, *radii), rel=1e-10
        )

    def test_circle_two_balls(self):
        """Test V[B(R₁), B(R₂)] = 2πR₁R₂ in the plane."""
        value = mixed_volume(make_ball(1.5, CIRCLE), make_ball(2.0, CIRCLE)).value
        assert value == pytest.approx(steiner_mixed_volume(1.5, 2.0, 2), rel=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_symmetric_in_all_slots(self, seed):
        """Test permuting the arguments leaves V unchanged."""
        a, b, c = (f for _, f in random_functions(SPHERE, 3, seed))
        reference = mixed_volume(a, b, c).value
        scale = max(abs(reference), 1.0)
        for perm in ((b, a, c), (c, b, a), (b, c, a)):
            assert mixed_volume(*perm).value == pytest.approx(reference, abs=1e-10 * scale)

    @settings(max_examples=10, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        alpha=st.floats(-3.0, 3.0),
        beta=st.floats(-3.0, 3.0),
    )
    def test_multilinear(self, seed, alpha, beta):
        """Test V[αf + βg, s, s] = αV[f, s, s] + βV[g, s, s]."""
        body = make_random_body(seed, 4, 0.1, SPHERE)
        (_, f), (_, g) = random_functions(SPHERE, 2, seed)
        combined = mixed_volume(alpha * f + beta * g, body, body).value
        separate = alpha * mixed_volume(f, body, body).value + beta * mixed_volume(g, body, body).value
        scale = (abs(alpha) + abs(beta) + 1.0) * max(f.sup_norm(), g.sup_norm()) * 4 * np.pi
        assert combined == pytest.approx(separate, abs=1e-10 * scale)

    def test_translation_invariance(self):
        """Test adding ⟨v, z⟩ to every argument leaves V[s, s, s] unchanged."""
        body = make_random_body(2, 4, 0.1, SPHERE)
        shifted = body.support + ScalarField.linear(SPHERE, [0.2, -0.1, 0.3])
        expected = mixed_volume(body, body, body).value
        assert mixed_volume(shifted, shifted, shifted).value == pytest.approx(expected, rel=1e-9)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            mixed_volume(make_ball(1.0, SPHERE), make_ball(1.0, SphereGrid(3, 8)), make_ball(1.0, SPHERE))


class TestMixedCurvature:
    """Tests for Q and the mixed discriminant."""

    def test_diagonal_is_inverse_curvature(self):
        """Test Q[s, s] = det_ĝ A[s] = 1/K."""
        body = make_random_body(3, 4, 0.1, SPHERE)
        q = mixed_curvature(body, body)
        np.testing.assert_allclose(q.values, body.second_form.det_g(), rtol=1e-12)

    def test_circle_is_radius_of_curvature(self):
        """Test Q[f] = f'' + f on the circle."""
        f = ScalarField(CIRCLE, np.cos(3 * CIRCLE.theta))
        np.testing.assert_allclose(mixed_curvature(f).values, -8 * f.values, atol=1e-11)

    @pytest.mark.parametrize(
        "first,second,expected",
        [
            (np.eye(2), np.eye(2), 1.0),
            ([[2.0, 0.5], [0.5, 3.0]], [[2.0, 0.5], [0.5, 3.0]], 5.75),
            (np.diag([2.0, 3.0]), np.diag([5.0, 7.0]), (2.0 * 7.0 + 3.0 * 5.0) / 2),
        ],
    )
    def test_discriminant_examples(self, first, second, expected):
        """Test identities, a repeated matrix (its determinant) and two diagonals."""
        shape = SPHERE.shape + (2, 2)
        q = mixed_discriminant(
            SPHERE, np.broadcast_to(first, shape), np.broadcast_to(second, shape)
        )
        np.testing.assert_allclose(q.values, expected, rtol=1e-15)

    @pytest.mark.parametrize("grid", [CIRCLE, SPHERE])
    def test_support_in_the_other_slots(self, grid):
        """Test Q[f, s, ..., s] = h^{ij}A[f]_ij / ((n-1)K) for arbitrary f."""
        body = make_random_body(5, 4, 0.1, grid)
        slots = [body] * (grid.dim - 2)
        for _, f in random_functions(grid, 3, 5):
            trace = np.einsum(
                "...ij,...ij->...",
                body.second_form.inverse().components,
                support_operator(f).components,
            )
            expected = trace * body.second_form.det_g() / (grid.dim - 1)
            np.testing.assert_allclose(
                mixed_curvature(f, *slots).values, expected, atol=1e-10 * np.abs(expected).max()
            )

    def test_wrong_number_of_matrices(self):
        with pytest.raises(ValueError, match="Need 2 matrices"):
            mixed_discriminant(SPHERE, SPHERE.metric)

    def test_ellipticity_on_circle(self):
        np.testing.assert_array_equal(ellipticity_eigenvalues(CIRCLE), 1.0)

    def test_ellipticity_of_ball(self):
        """Test Q̇ = R/2 for the ball of radius R."""
        eigenvalues = ellipticity_eigenvalues(SPHERE, make_ball(3.0, SPHERE))
        np.testing.assert_allclose(eigenvalues, 1.5, rtol=1e-10)

    def test_ellipticity_is_positive(self):
        """Test Q̇ is positive definite for a convex fixed body."""
        eigenvalues = ellipticity_eigenvalues(SPHERE, make_random_body(4, 4, 0.2, SPHERE))
        assert eigenvalues.shape == SPHERE.shape + (2,)
        assert eigenvalues.min() > 0

    def test_ellipticity_needs_one_body(self):
        with pytest.raises(ValueError):
            ellipticity_eigenvalues(SPHERE)


class TestMinkowskiInequality:
    """Tests for V[s,h,...]² ≥ V[s,s,...]·V[h,h,...]."""

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), dim=st.sampled_from([2, 3]))
    def test_slack_is_nonnegative(self, seed, dim):
        """Test the slack is nonnegative for random h."""
        grid = CIRCLE if dim == 2 else SPHERE
        body = make_random_body(seed, 4, 0.1, grid)
        (_, h), = random_functions(grid, 1, seed + 1)
        _, _, v_ss = minkowski_terms(h, body)
        assert minkowski_slack(h, body) >= -1e-9 * v_ss

    @pytest.mark.parametrize("grid", [CIRCLE, SPHERE])
    def test_witnesses_are_equality_cases(self, grid):
        """Test homothets and translates give zero slack."""
        body = make_random_body(5, 4, 0.1, grid)
        for name, h in minkowski_witnesses(body, 4, seed=5):
            slack = minkowski_slack(h, body)
            _, _, v_ss = minkowski_terms(h, body)
            logger.debug(f"{name}: slack {slack:.3e}")
            assert abs(slack) <= 1e-8 * v_ss
            assert is_equality(slack, v_ss)

    def test_generic_function_is_not_equality(self):
        """Test a non-homothetic h has strictly positive slack."""
        body = make_ball(1.0, SPHERE)
        h = 1.0 + 0.3 * ScalarField(SPHERE, SPHERE.cos_theta**2)
        _, _, v_ss = minkowski_terms(h, body)
        slack = minkowski_slack(h, body)
        assert slack > 1e-4 * v_ss
        assert not is_equality(slack, v_ss)

    def test_explicit_extra_slots(self):
        """Test filling the remaining slot with another body."""
        body = make_random_body(6, 4, 0.1, SPHERE)
        other = make_ball(2.0, SPHERE)
        (_, h), = random_functions(SPHERE, 1, 6)
        v_hh, v_sh, v_ss = minkowski_terms(h, body, extras=[other])
        assert v_ss == pytest.approx(mixed_volume(body, body, other).value)
        assert v_sh**2 - v_hh * v_ss >= -1e-9 * v_ss**2

    def test_wrong_number_of_extras(self):
        body = make_ball(1.0, SPHERE)
        with pytest.raises(ValueError, match="extra bodies"):
            minkowski_terms(body.support, body, extras=[])
