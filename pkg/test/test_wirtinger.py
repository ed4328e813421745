#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Tests for the affine Wirtinger inequality and its supporting identities."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovaloid.affine import compute_affine_data
from ovaloid.body import make_ball, make_random_body, volume
from ovaloid.corpus import equality_functions, random_functions
from ovaloid.sphere import ScalarField, SphereGrid
from ovaloid.wirtinger import (
    SCALE_FLOOR,
    affine_invariance_probe,
    companion_identities,
    equality_witness,
    proof_chain_check,
    wirtinger_report,
)

logger = logging.getLogger("ovaloid.test")

CIRCLE = SphereGrid(2, 128)
SPHERE = SphereGrid(3, 16)


class TestClosedForms:
    """Tests for F ≡ 1 on the unit ball."""

    def test_unit_circle(self):
        """Test lhs = mean_term = 2π and no Dirichlet energy."""
        grid = SphereGrid(2, 32)
        report = wirtinger_report(make_ball(1.0, grid), ScalarField.constant(grid, 1.0))
        assert report.lhs == pytest.approx(2 * np.pi, rel=1e-12)
        assert report.mean_term == pytest.approx(2 * np.pi, rel=1e-12)
        assert report.dirichlet_term == pytest.approx(0.0, abs=1e-20)
        assert report.equality_flag

    def test_unit_sphere(self):
        """Test lhs = mean_term = 8π."""
        grid = SphereGrid(3, 8)
        report = wirtinger_report(make_ball(1.0, grid), ScalarField.constant(grid, 1.0))
        assert report.lhs == pytest.approx(8 * np.pi, rel=1e-8)
        assert report.mean_term == pytest.approx(8 * np.pi, rel=1e-8)
        assert abs(report.relative_slack) < 1e-8
        assert report.equality_flag

    def test_zero_function(self):
        """Test F ≡ 0 has a finite relative slack."""
        grid = SphereGrid(2, 16)
        report = wirtinger_report(make_ball(1.0, grid), ScalarField.constant(grid, 0.0))
        assert report.scale == SCALE_FLOOR
        assert report.relative_slack == 0.0
        assert report.equality_flag


class TestInequality:
    """Tests that the slack is nonnegative."""

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_random_curves(self, seed):
        """Test random F on random curves."""
        body = make_random_body(seed, 4, 0.1, CIRCLE)
        data = compute_affine_data(body)
        for _, F in random_functions(CIRCLE, 3, seed):
            report = wirtinger_report(body, F, data)
            assert report.slack >= -1e-7 * report.scale

    @settings(max_examples=5, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_random_surfaces(self, seed):
        """Test random F on random surfaces."""
        body = make_random_body(seed, 4, 0.05, SPHERE)
        data = compute_affine_data(body)
        for _, F in random_functions(SPHERE, 2, seed):
            report = wirtinger_report(body, F, data)
            assert report.slack >= -1e-7 * report.scale

    def test_mean_term_formula(self):
        """Test mean_term = (n-1)/n (∫F dμ̄)²/Vol for F ≡ 2 on a ball of radius 2."""
        grid = SphereGrid(2, 16)
        body = make_ball(2.0, grid)
        report = wirtinger_report(body, ScalarField.constant(grid, 2.0))
        affine_length = 2 * np.pi * 2.0 ** (2 / 3)
        expected = 0.5 * (2.0 * affine_length) ** 2 / volume(body)
        assert report.mean_term == pytest.approx(expected, rel=1e-12)

    def test_data_of_another_body(self):
        """Test precomputed data must belong to the body."""
        grid = SphereGrid(2, 16)
        data = compute_affine_data(make_ball(1.0, grid))
        with pytest.raises(ValueError, match="different body"):
            wirtinger_report(make_ball(1.0, grid), ScalarField.constant(grid, 1.0), data)


class TestEqualityCases:
    """Tests for F = (c·s + ⟨v, z⟩)/K^{1/(n+1)}."""

    @pytest.mark.parametrize("grid", [CIRCLE, SPHERE])
    def test_equality_family(self, grid):
        """Test every witness is flagged as an equality case."""
        body = make_random_body(11, 4, 0.05, grid)
        data = compute_affine_data(body)
        for name, F in equality_functions(body, data, 4, seed=11):
            report = wirtinger_report(body, F, data)
            logger.debug(f"{name}: relative slack {report.relative_slack:.3e}")
            assert abs(report.relative_slack) <= 1e-6
            assert report.equality_flag

    @pytest.mark.parametrize("c", [-1.0, 0.5, 1.0])
    def test_homothety_and_translation(self, c):
        """Test c ∈ {-1, 0.5, 1} with a translation part on a curve."""
        body = make_random_body(12, 4, 0.1, CIRCLE)
        F = equality_witness(body, c, [0.3, -0.1])
        assert abs(wirtinger_report(body, F).relative_slack) <= 1e-6

    def test_pure_translation(self):
        """Test c = 0, v = e₁."""
        body = make_random_body(13, 4, 0.1, CIRCLE)
        F = equality_witness(body, 0.0, [1.0, 0.0])
        assert abs(wirtinger_report(body, F).relative_slack) <= 1e-6

    def test_scalar_shift_is_reported(self):
        """Test a scalar shift of the homothety direction still gives a finite report."""
        grid = SphereGrid(3, 8)
        body = make_random_body(14, 4, 0.1, grid)
        F = equality_witness(body, 1.0, [0.0, 0.0, 0.0], d=1.0)
        report = wirtinger_report(body, F)
        assert np.isfinite(report.slack)


class TestProofChain:
    """Tests for the mixed-volume route to the inequality."""

    @pytest.mark.parametrize("grid", [CIRCLE, SPHERE])
    def test_routes_agree(self, grid):
        """Test (n-1)V[f,f,s,...] = ∫F²H dμ̄ - ∫|∇̄F|² dμ̄."""
        body = make_random_body(21, 4, 0.05, grid)
        data = compute_affine_data(body)
        for _, F in random_functions(grid, 2, 21):
            report = wirtinger_report(body, F, data)
            assert proof_chain_check(body, F, data) <= 1e-6 * report.scale

    @pytest.mark.parametrize("grid", [SphereGrid(2, 64), SphereGrid(3, 8)])
    def test_companion_identities(self, grid):
        """Test V[f,s,...] = ∫F dμ̄ and V[s,...,s] = n·Vol."""
        body = make_random_body(22, 4, 0.1, grid)
        data = compute_affine_data(body)
        (_, F), = random_functions(grid, 1, 22)
        first, second = companion_identities(body, F, data)
        report = wirtinger_report(body, F, data)
        assert first <= 1e-8 * report.scale
        assert second <= 1e-10 * volume(body)


class TestAffineInvariance:
    """Tests that the inequality does not see special linear maps."""

    @pytest.mark.parametrize("stretch", [0.8, 1.25, 1.5])
    def test_terms_are_invariant(self, stretch):
        """Test every term is unchanged under diag(λ, 1/λ)."""
        grid = SphereGrid(2, 256)
        body = make_random_body(31, 4, 0.1, grid)
        (_, F), = random_functions(grid, 1, 31)
        before, after = affine_invariance_probe(body, F, stretch)
        assert after.lhs == pytest.approx(before.lhs, rel=1e-6)
        assert after.mean_term == pytest.approx(before.mean_term, rel=1e-6)
        assert after.dirichlet_term == pytest.approx(before.dirichlet_term, rel=1e-6)
        assert after.slack == pytest.approx(before.slack, abs=1e-6 * before.scale)
