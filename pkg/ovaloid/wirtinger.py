#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""
The affine-geometric Wirtinger inequality

    ∫ F² H dμ̄ ≤ (n-1)/n (∫ F dμ̄)² / Vol + ∫ |∇̄F|²_ḡ dμ̄

evaluated on the sphere, together with its equality family and the
mixed-volume chain it is derived from.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .affine import (
    AffineData,
    bar_gradient_normsq,
    compute_affine_data,
    integrate_affine,
)
from .body import ConvexBody, boundary_volume, linear_image, transport_field, volume
from .mixed import mixed_volume
from .sphere import ScalarField, check_same_grid

logger = logging.getLogger("ovaloid.wirtinger")

EQUALITY_TOL = 1e-6

# keeps relative quantities finite when every term vanishes
SCALE_FLOOR = 1e-300


@dataclass(frozen=True)
class WirtingerReport:
    """
    Both sides of the inequality for one (body, F) pair.

    Attributes:
        lhs: ∫ F² H dμ̄
        mean_term: (n-1)/n (∫ F dμ̄)² / Vol
        dirichlet_term: ∫ |∇̄F|²_ḡ dμ̄
        slack: mean_term + dirichlet_term - lhs
        equality_flag: |slack| within the equality tolerance of the scale
    """

    lhs: float
    mean_term: float
    dirichlet_term: float
    slack: float
    equality_flag: bool

    @property
    def scale(self) -> float:
        return abs(self.lhs) + self.mean_term + self.dirichlet_term + SCALE_FLOOR

    @property
    def relative_slack(self) -> float:
        return self.slack / self.scale


def _data_for(body: ConvexBody, data: AffineData | None) -> AffineData:
    if data is None:
        return compute_affine_data(body)
    if data.body is not body:
        raise ValueError("Affine data belongs to a different body")
    return data


def wirtinger_report(
    body: ConvexBody,
    F: ScalarField,
    data: AffineData | None = None,
    tol: float = EQUALITY_TOL,
) -> WirtingerReport:
    """
    Evaluate the inequality for ``F`` (a function of the normal direction).

    Args:
        body: a valid body with the origin in its interior
        F: test function on the body's grid
        data: precomputed affine data of ``body``
        tol: relative tolerance for ``equality_flag``
    """
    data = _data_for(body, data)
    check_same_grid(body.support, F)
    n = body.dim

    lhs = integrate_affine(data, F * F * data.H)
    mean = (n - 1) / n * integrate_affine(data, F) ** 2 / volume(body)
    dirichlet = integrate_affine(data, bar_gradient_normsq(data, F))
    slack = mean + dirichlet - lhs
    scale = abs(lhs) + mean + dirichlet + SCALE_FLOOR
    return WirtingerReport(
        lhs=lhs,
        mean_term=mean,
        dirichlet_term=dirichlet,
        slack=slack,
        equality_flag=abs(slack) <= tol * scale,
    )


def equality_witness(
    body: ConvexBody,
    c: float,
    v: Sequence[float],
    d: float = 0.0,
    data: AffineData | None = None,
) -> ScalarField:
    """
    F = (c·s + ⟨v, z⟩ + d) / K^{1/(n+1)}.

    With ``d == 0`` this is an equality case. A scalar ``d`` is accepted so
    its slack can be measured; it is not an equality case in general.
    """
    data = _data_for(body, data)
    shift = ScalarField.linear(body.grid, np.asarray(v, dtype=float))
    return (c * body.support + shift + d) / data.K**data.exponent


def proof_chain_check(
    body: ConvexBody, F: ScalarField, data: AffineData | None = None
) -> float:
    """
    |(n-1)·V[f,f,s,...,s] - (∫F²H dμ̄ - ∫|∇̄F|² dμ̄)| with f = F K^{1/(n+1)}.

    The first term is computed on the sphere from mixed curvatures, the
    second from the affine quantities.
    """
    data = _data_for(body, data)
    n = body.dim
    f = F * data.K**data.exponent
    sphere_side = (n - 1) * mixed_volume(f, f, *([body] * (n - 2))).value
    report = wirtinger_report(body, F, data)
    return abs(sphere_side - (report.lhs - report.dirichlet_term))


def companion_identities(
    body: ConvexBody, F: ScalarField, data: AffineData | None = None
) -> tuple[float, float]:
    """
    Returns:
        ``(|V[f,s,...,s] - ∫F dμ̄|, |V[s,...,s] - n·Vol|)`` with Vol taken
        from the boundary points
    """
    data = _data_for(body, data)
    n = body.dim
    f = F * data.K**data.exponent
    first = mixed_volume(f, *([body] * (n - 1))).value - integrate_affine(data, F)
    second = mixed_volume(body, *([body] * (n - 1))).value - n * boundary_volume(body)
    return abs(first), abs(second)


def affine_invariance_probe(
    body: ConvexBody, F: ScalarField, stretch: float
) -> tuple[WirtingerReport, WirtingerReport]:
    """
    Reports for (M, F) and for its image under diag(λ, 1/λ) (curves only).

    The image's test function is F carried along with the boundary points.
    """
    matrix = np.diag([stretch, 1.0 / stretch])
    image = linear_image(body, matrix)
    moved = transport_field(F, matrix)
    return wirtinger_report(body, F), wirtinger_report(image, moved)
