#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""
Affine differential geometry of a convex body in the Gauss-map picture.

Everything is a function on the sphere: the second fundamental form
h_ij = A[s], the Gauss curvature K = 1/det_ĝ h, the affine metric
ḡ = h/K^{1/(n+1)} with measure dμ̄ = K^{-n/(n+1)} dμ, its Laplacian Δ̄, and
the affine mean curvature H.

H is obtained from the curvature identity

    h^{ij} A[f]_ij = Δ̄(f K^{-1/(n+1)}) + f K^{-1/(n+1)} H

evaluated at f = s, where the left-hand side is n - 1. The identity for any
other f is then an independent consistency check.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .body import ConvexBody, require_interior_origin
from .sphere import (
    ScalarField,
    SphereGrid,
    SymTensorField,
    check_same_grid,
    divergence,
    integrate,
    sphere_gradient,
    support_operator,
)

logger = logging.getLogger("ovaloid.affine")


class CurvatureError(ValueError):
    """The Gauss curvature is not positive (corrupt body)."""


@dataclass(frozen=True, eq=False)
class AffineData:
    """
    Affine invariants of a body, all sampled on the body's grid.

    Attributes:
        body: the body the data belongs to
        h: second fundamental form h_ij = A[s]
        h_inv: its inverse h^{ij}
        K: Gauss curvature as a function of the normal
        gbar: affine metric ḡ_ij = h_ij / K^{1/(n+1)}
        mubar_density: dμ̄/dμ = K^{-n/(n+1)}
        H: affine mean curvature
    """

    body: ConvexBody
    h: SymTensorField
    h_inv: SymTensorField
    K: ScalarField
    gbar: SymTensorField
    mubar_density: ScalarField
    H: ScalarField

    @property
    def grid(self) -> SphereGrid:
        return self.body.grid

    @property
    def exponent(self) -> float:
        """1/(n+1)."""
        return 1.0 / (self.grid.dim + 1)


def _bar_laplacian(
    h_inv: SymTensorField, K: ScalarField, density: ScalarField, F: ScalarField
) -> ScalarField:
    # Δ̄F = (1/ρ) div̂(ρ K^{1/(n+1)} h^{ij} ∂_j F) with ρ = dμ̄/dμ
    grid = F.grid
    n = grid.dim
    weight = density.values * K.values ** (1.0 / (n + 1))
    flux = np.einsum("...ij,...j->...i", h_inv.components, sphere_gradient(F))
    return ScalarField(grid, divergence(grid, weight[..., None] * flux) / density.values)


def compute_affine_data(body: ConvexBody) -> AffineData:
    """
    Compute h, K, ḡ, dμ̄ and H for ``body``.

    Raises:
        OriginError: if s ≤ 0 somewhere (recentre the body first)
        CurvatureError: if det_ĝ h ≤ 0 somewhere
    """
    require_interior_origin(body)
    grid = body.grid
    n = grid.dim
    h = body.second_form
    det_g = h.det_g()
    if np.any(det_g <= 0):
        raise CurvatureError(f"Nonpositive curvature on {body.name or 'body'}")

    K = ScalarField(grid, 1.0 / det_g)
    K_a = K ** (1.0 / (n + 1))
    h_inv = h.inverse()
    gbar = h.scaled(1.0 / K_a)
    density = K ** (-n / (n + 1))

    s = body.support
    affine_support = s / K_a
    H = K_a / s * ((n - 1) - _bar_laplacian(h_inv, K, density, affine_support))
    logger.debug(f"Affine data for {body.name}: H in [{H.min():.6g}, {H.max():.6g}]")
    return AffineData(
        body=body, h=h, h_inv=h_inv, K=K, gbar=gbar, mubar_density=density, H=H
    )


def laplace_beltrami_bar(data: AffineData, F: ScalarField) -> ScalarField:
    """Δ̄F = (det ḡ)^{-1/2} ∂_i((det ḡ)^{1/2} ḡ^{ij} ∂_j F)."""
    check_same_grid(data.K, F)
    return _bar_laplacian(data.h_inv, data.K, data.mubar_density, F)


def bar_gradient_normsq(data: AffineData, F: ScalarField) -> ScalarField:
    """|∇̄F|²_ḡ = K^{1/(n+1)} h^{ij} ∂_iF ∂_jF."""
    check_same_grid(data.K, F)
    grad = sphere_gradient(F)
    quad = np.einsum("...ij,...i,...j->...", data.h_inv.components, grad, grad)
    return ScalarField(F.grid, data.K.values**data.exponent * quad)


def integrate_affine(data: AffineData, F: ScalarField) -> float:
    """∫ F dμ̄ as a sphere integral."""
    return integrate(F * data.mubar_density)


def identity_terms(
    data: AffineData, f: ScalarField
) -> tuple[ScalarField, ScalarField, ScalarField]:
    """
    The three terms of the curvature identity for ``f``.

    Returns:
        ``(h^{ij}A[f]_ij, Δ̄(f K^{-1/(n+1)}), f K^{-1/(n+1)} H)``
    """
    check_same_grid(data.K, f)
    lhs = ScalarField(f.grid, data.h_inv.contract(support_operator(f)))
    weighted = f / data.K**data.exponent
    return lhs, laplace_beltrami_bar(data, weighted), weighted * data.H


def identity_residual(data: AffineData, f: ScalarField) -> ScalarField:
    """Left-hand side minus right-hand side of the curvature identity."""
    lhs, laplacian, curvature = identity_terms(data, f)
    return lhs - laplacian - curvature


def classical_affine_curvature(body: ConvexBody) -> ScalarField:
    """
    Affine curvature of a planar curve from its radius of curvature.

    With ρ = s'' + s as a function of the normal angle,
    η = ρ^{-4/3} + ρ^{-1} ∂²_θ(ρ^{-1/3}).
    """
    if body.dim != 2:
        raise NotImplementedError("The classical formula applies to curves")
    grid = body.grid
    rho = body.second_form.components[..., 0, 0]
    second = grid.d_theta(rho ** (-1.0 / 3.0), order=2)
    return ScalarField(grid, rho ** (-4.0 / 3.0) + second / rho)


def ellipsoid_affine_curvature(semiaxes: Sequence[float]) -> float:
    """The constant H of an ellipsoid, (n-1)·(Π aᵢ)^{-2/(n+1)}."""
    n = len(semiaxes)
    return (n - 1) * float(np.prod(semiaxes)) ** (-2.0 / (n + 1))
