#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Tests for grids, quadrature and spectral differentiation."""

import logging

import numpy as np
import pytest

from ovaloid.sphere import (
    DEFAULT_RESOLUTION,
    GridMismatchError,
    ScalarField,
    SphereGrid,
    SymTensorField,
    analyze,
    covariant_hessian,
    divergence,
    harmonic_basis,
    integrate,
    laplace_beltrami,
    spectral_tail,
    sphere_gradient,
    support_operator,
    synthesize,
)

logger = logging.getLogger("ovaloid.test")


@pytest.fixture
def circle():
    return SphereGrid(2, 64)


@pytest.fixture
def sphere():
    return SphereGrid(3, 8)


def random_field(grid: SphereGrid, lmax: int, seed: int = 0) -> ScalarField:
    labels, _ = harmonic_basis(grid, lmax)
    rng = np.random.default_rng(seed)
    return synthesize(grid, rng.standard_normal(len(labels)))


class TestSphereGrid:
    """Tests for SphereGrid construction and node data."""

    @pytest.mark.parametrize("dim,resolution", [(2, 16), (2, 256), (3, 4), (3, 16)])
    def test_weights_sum_to_area(self, dim, resolution):
        """Test the quadrature weights add up to |S^{n-1}|."""
        grid = SphereGrid(dim, resolution)
        assert grid.weights.sum() == pytest.approx(grid.area, rel=1e-13)

    def test_create_uses_default_resolution(self):
        """Test create() falls back to the per-dimension default."""
        assert SphereGrid.create(2).resolution == DEFAULT_RESOLUTION[2]
        assert SphereGrid.create(3, 0).resolution == DEFAULT_RESOLUTION[3]
        assert SphereGrid.create(3, 12).resolution == 12

    @pytest.mark.parametrize("dim,resolution", [(2, 7), (2, 6), (3, 3), (4, 16), (1, 16)])
    def test_invalid_grid(self, dim, resolution):
        """Test unsupported dimensions and resolutions are rejected."""
        with pytest.raises(ValueError):
            SphereGrid(dim, resolution)

    def test_grids_compare_by_value(self):
        """Test two grids with the same parameters are equal and hashable."""
        assert SphereGrid(3, 8) == SphereGrid(3, 8)
        assert len({SphereGrid(3, 8), SphereGrid(3, 8), SphereGrid(3, 9)}) == 2

    def test_sphere_has_no_pole_nodes(self, sphere):
        """Test the colatitudes are strictly inside (0, π) and ascending."""
        assert np.all(sphere.theta > 0)
        assert np.all(sphere.theta < np.pi)
        assert np.all(np.diff(sphere.theta) > 0)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 16), SphereGrid(3, 6)])
    def test_normals_are_unit_vectors(self, grid):
        """Test every node direction has unit length."""
        lengths = np.linalg.norm(grid.normals, axis=0)
        np.testing.assert_allclose(lengths, 1.0, atol=1e-15)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 16), SphereGrid(3, 6)])
    def test_antipodal_matches_negated_normals(self, grid):
        """Test the antipodal map sends every node to -z."""
        for component in grid.normals:
            np.testing.assert_allclose(grid.antipodal(component), -component, atol=1e-14)


class TestScalarField:
    """Tests for field arithmetic and validation."""

    def test_shape_mismatch(self, circle):
        """Test values of the wrong shape are rejected."""
        with pytest.raises(ValueError, match="does not match"):
            ScalarField(circle, np.ones(10))

    def test_non_finite_values(self, circle):
        """Test NaN values are rejected."""
        values = np.ones(circle.shape)
        values[3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            ScalarField(circle, values)

    def test_arithmetic(self, circle):
        """Test pointwise operators with fields and numbers."""
        f = ScalarField.constant(circle, 2.0)
        g = ScalarField.constant(circle, 3.0)
        assert (f + g).max() == 5.0
        assert (1.0 - f).min() == -1.0
        assert (f * g / 2.0).max() == 3.0
        assert (2.0 / f).max() == 1.0
        assert (-(f**3)).min() == -8.0

    def test_grid_mismatch(self):
        """Test combining fields from different grids raises."""
        f = ScalarField.constant(SphereGrid(2, 16), 1.0)
        g = ScalarField.constant(SphereGrid(2, 32), 1.0)
        with pytest.raises(GridMismatchError):
            f + g

    def test_linear_field(self, sphere):
        """Test linear() restricts ⟨v, z⟩ to the sphere."""
        f = ScalarField.linear(sphere, [0.0, 0.0, 2.0])
        np.testing.assert_allclose(f.values, 2.0 * sphere.cos_theta, atol=1e-15)

    def test_linear_field_wrong_length(self, sphere):
        """Test a vector of the wrong length is rejected."""
        with pytest.raises(ValueError):
            ScalarField.linear(sphere, [1.0, 0.0])


class TestDifferentiation:
    """Tests for the spectral derivative operators."""

    def test_circle_derivatives(self, circle):
        """Test ∂_θ and ∂²_θ of sin 3θ."""
        theta = circle.theta
        f = np.sin(3 * theta)
        np.testing.assert_allclose(circle.d_theta(f), 3 * np.cos(3 * theta), atol=1e-12)
        np.testing.assert_allclose(circle.d_theta(f, order=2), -9 * f, atol=1e-11)

    def test_sphere_colatitude_derivative(self, sphere):
        """Test ∂_θ of z₃ = cos θ (even class) and z₁ = sin θ cos φ (odd class)."""
        theta, phi = sphere.nodes
        z3 = np.cos(theta)
        z1 = np.sin(theta) * np.cos(phi)
        np.testing.assert_allclose(sphere.d_theta(z3), -np.sin(theta), atol=1e-11)
        np.testing.assert_allclose(sphere.d_theta(z1), np.cos(theta) * np.cos(phi), atol=1e-11)
        np.testing.assert_allclose(sphere.d_theta(z3, order=2), -z3, atol=1e-10)
        np.testing.assert_allclose(sphere.d_theta(z1, order=2), -z1, atol=1e-10)

    def test_sphere_longitude_derivative(self, sphere):
        """Test ∂_φ of z₁."""
        theta, phi = sphere.nodes
        z1 = np.sin(theta) * np.cos(phi)
        np.testing.assert_allclose(sphere.d_phi(z1), -np.sin(theta) * np.sin(phi), atol=1e-13)
        np.testing.assert_allclose(sphere.d_phi(z1, order=2), -z1, atol=1e-12)

    def test_circle_has_no_longitude(self, circle):
        """Test ∂_φ is refused on the circle."""
        with pytest.raises(ValueError):
            circle.d_phi(np.zeros(circle.shape))

    @pytest.mark.parametrize("grid", [SphereGrid(2, 32), SphereGrid(3, 8)])
    def test_support_operator_of_linear_functions(self, grid):
        """Test A[⟨v, z⟩] vanishes (translations do not change curvature)."""
        v = np.arange(1, grid.dim + 1, dtype=float)
        A = support_operator(ScalarField.linear(grid, v))
        np.testing.assert_allclose(A.components, 0.0, atol=1e-10)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 32), SphereGrid(3, 8)])
    def test_support_operator_of_constant(self, grid):
        """Test A[1] is the round metric."""
        A = support_operator(ScalarField.constant(grid, 1.0))
        np.testing.assert_allclose(A.components, grid.metric, atol=1e-10)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 32), SphereGrid(3, 10)])
    def test_trace_integrates_to_multiple(self, grid):
        """Test ∫tr_ĝ A[f] dμ = (n-1)∫f dμ."""
        f = random_field(grid, 6, seed=17) + 2.0
        trace = ScalarField(grid, support_operator(f).trace_g())
        assert integrate(trace) == pytest.approx((grid.dim - 1) * integrate(f), rel=1e-11)

    def test_covariant_hessian_is_symmetric(self, sphere):
        """Test the θφ and φθ components agree."""
        hess = covariant_hessian(random_field(sphere, 5, seed=3))
        np.testing.assert_array_equal(hess.components[..., 0, 1], hess.components[..., 1, 0])

    @pytest.mark.parametrize("label_index", [0, 1, 5, 9, 20])
    def test_sphere_laplacian_eigenfunctions(self, sphere, label_index):
        """Test Δ̂Y_lm = -l(l+1) Y_lm."""
        labels, basis = harmonic_basis(sphere, sphere.max_degree)
        l, _ = labels[label_index]  # noqa: E741
        f = ScalarField(sphere, basis[label_index])
        lap = laplace_beltrami(f)
        np.testing.assert_allclose(lap.values, -l * (l + 1) * f.values, atol=1e-9)

    @pytest.mark.parametrize("k", [0, 1, 4, 15])
    def test_circle_laplacian_eigenfunctions(self, circle, k):
        """Test ∂²_θ cos kθ = -k² cos kθ."""
        f = ScalarField(circle, np.cos(k * circle.theta))
        np.testing.assert_allclose(laplace_beltrami(f).values, -(k**2) * f.values, atol=1e-10)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 32), SphereGrid(3, 10), SphereGrid(3, 48)])
    def test_divergence_of_gradient_is_laplacian(self, grid):
        """Test div̂(ĝ^{-1}∇f) equals Δ̂f."""
        f = random_field(grid, 4, seed=11)
        raised = np.einsum("...ij,...j->...i", grid.metric_inverse, sphere_gradient(f))
        np.testing.assert_allclose(
            divergence(grid, raised), laplace_beltrami(f).values, atol=1e-9
        )

    def test_longitude_derivative_over_sin(self, sphere):
        """Test ∂_φ z₁ / sin θ = -sin φ holds up to the poles."""
        theta, phi = sphere.nodes
        z1 = np.sin(theta) * np.cos(phi)
        np.testing.assert_allclose(sphere.d_phi_over_sin(z1), -np.sin(phi), atol=1e-12)

    def test_column_transform_parts(self, sphere):
        """Test several tables come back from one transform in request order."""
        f = random_field(sphere, 5, seed=7)
        first, second = sphere.column_transform(f.values, ("d1", 0), ("value", 2))
        np.testing.assert_allclose(first, sphere.d_theta(f.values), atol=1e-13)
        np.testing.assert_allclose(second, sphere.d_phi(f.values, order=2), atol=1e-11)

    def test_circle_has_no_columns(self, circle):
        with pytest.raises(ValueError):
            circle.column_bases

    @pytest.mark.parametrize("bandlimit", [16, 64])
    def test_laplacian_of_exponential(self, bandlimit):
        """Test Δ̂e^{⟨a,z⟩} = (|a|² - ⟨a,z⟩² - 2⟨a,z⟩)e^{⟨a,z⟩} stays accurate on fine grids."""
        grid = SphereGrid(3, bandlimit)
        a = np.array([0.3, -0.5, 0.8])
        az = ScalarField.linear(grid, a).values
        expected = (a @ a - az**2 - 2 * az) * np.exp(az)
        lap = laplace_beltrami(ScalarField(grid, np.exp(az)))
        error = np.abs(lap.values - expected).max() / np.abs(expected).max()
        logger.debug(f"Laplacian error at B={bandlimit}: {error:.2e}")
        assert error <= 1e-10


class TestQuadrature:
    """Tests for integration and the harmonic basis."""

    def test_integral_of_z_squared(self, sphere):
        """Test ∫ z₃² dμ = 4π/3."""
        f = ScalarField(sphere, sphere.cos_theta**2)
        assert integrate(f) == pytest.approx(4 * np.pi / 3, rel=1e-13)

    @pytest.mark.parametrize("grid", [SphereGrid(2, 16), SphereGrid(3, 6)])
    def test_basis_is_orthonormal(self, grid):
        """Test the quadrature Gram matrix of the basis is the identity."""
        _, basis = harmonic_basis(grid, grid.max_degree)
        flat = basis.reshape(len(basis), -1)
        gram = flat @ (grid.weights.ravel() * flat).T
        np.testing.assert_allclose(gram, np.eye(len(basis)), atol=1e-12)

    def test_even_basis_is_symmetric(self, sphere):
        """Test even_only keeps only antipodally even harmonics."""
        _, basis = harmonic_basis(sphere, 6, even_only=True)
        for row in basis:
            np.testing.assert_allclose(sphere.antipodal(row), row, atol=1e-13)

    def test_basis_is_read_only(self, circle):
        """Test the cached basis cannot be modified in place."""
        _, basis = harmonic_basis(circle, 3)
        with pytest.raises(ValueError):
            basis[0, 0] = 1.0

    def test_analyze_recovers_coefficients(self, sphere):
        """Test projection inverts synthesis for a full coefficient vector."""
        labels, _ = harmonic_basis(sphere, 4)
        coeffs = np.random.default_rng(5).standard_normal(len(labels))
        np.testing.assert_allclose(analyze(synthesize(sphere, coeffs), 4), coeffs, atol=1e-12)

    def test_synthesize_rejects_partial_basis(self, sphere):
        """Test a coefficient count that is not a full basis is rejected."""
        with pytest.raises(ValueError):
            synthesize(sphere, np.ones(5))

    def test_degree_beyond_grid(self, circle):
        """Test asking for unresolved degrees raises."""
        with pytest.raises(ValueError):
            harmonic_basis(circle, circle.max_degree + 1)

    def test_interpolate(self, circle):
        """Test trigonometric interpolation at arbitrary angles."""
        values = np.cos(2 * circle.theta) + 0.5 * np.sin(5 * circle.theta)
        angles = np.array([0.1, 1.3, 4.0])
        expected = np.cos(2 * angles) + 0.5 * np.sin(5 * angles)
        np.testing.assert_allclose(circle.interpolate(values, angles), expected, atol=1e-13)


class TestSymTensorField:
    """Tests for the per-node tensor helpers."""

    def test_inverse(self, sphere):
        """Test T^{ij} T_jk is the identity."""
        tensor = support_operator(1.0 + 0.1 * random_field(sphere, 3, seed=2))
        product = np.einsum("...ij,...jk->...ik", tensor.inverse().components, tensor.components)
        np.testing.assert_allclose(product, np.broadcast_to(np.eye(2), product.shape), atol=1e-12)

    def test_singular_inverse(self, circle):
        """Test a singular tensor cannot be inverted."""
        tensor = SymTensorField.from_parts(circle, np.zeros(circle.shape))
        with pytest.raises(ZeroDivisionError):
            tensor.inverse()

    def test_from_parts_requires_sphere_components(self, sphere):
        """Test sphere tensors need all three components."""
        with pytest.raises(ValueError):
            SymTensorField.from_parts(sphere, np.ones(sphere.shape))

    def test_frame_eigenvalues_of_metric(self, sphere):
        """Test the round metric has unit eigenvalues in the orthonormal frame."""
        tensor = SymTensorField(sphere, sphere.metric)
        np.testing.assert_allclose(tensor.frame_eigenvalues(), 1.0, atol=1e-13)
        np.testing.assert_allclose(tensor.det_g(), 1.0, atol=1e-13)


class TestSpectralTail:
    """Tests for the resolution diagnostic."""

    @pytest.mark.parametrize("grid", [SphereGrid(2, 64), SphereGrid(3, 16)])
    def test_constant_has_no_tail(self, grid):
        assert spectral_tail(ScalarField.constant(grid, 2.0)) < 1e-14

    def test_smooth_field_is_resolved(self):
        """Test an entire function has a tail at roundoff."""
        grid = SphereGrid(3, 24)
        f = ScalarField(grid, np.exp(ScalarField.linear(grid, [0.3, -0.5, 0.8]).values))
        assert spectral_tail(f) < 1e-12

    def test_top_degree_is_all_tail(self, circle):
        """Test a top-degree harmonic has tail one."""
        f = ScalarField(circle, np.cos(30 * circle.theta))
        assert spectral_tail(f) == pytest.approx(1.0)

    def test_kink_is_not_resolved(self, sphere):
        """Test |z₃| leaves a visible tail."""
        assert spectral_tail(ScalarField(sphere, np.abs(sphere.cos_theta))) > 1e-4
