#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Mixed curvature functions, mixed volumes and Minkowski's inequality."""

import logging
from dataclasses import dataclass

import numpy as np

from .body import ConvexBody, ConvexityError
from .sphere import (
    Array,
    ScalarField,
    SphereGrid,
    check_same_grid,
    integrate,
    support_operator,
)

logger = logging.getLogger("ovaloid.mixed")

NORMALIZATION = "V[s,...,s] = n*Vol"

# |slack| below this fraction of V[s,s,...] counts as equality
EQUALITY_TOL = 1e-7

Operand = ScalarField | ConvexBody


@dataclass(frozen=True)
class MixedVolumeResult:
    """
    Attributes:
        value: the mixed volume
        arguments: labels of the bodies/fields in slot order
        normalization: the convention in use
    """

    value: float
    arguments: tuple[str, ...]
    normalization: str = NORMALIZATION


def _field(item: Operand) -> ScalarField:
    return item.support if isinstance(item, ConvexBody) else item


def _label(item: Operand) -> str:
    if isinstance(item, ConvexBody):
        return item.name or "body"
    return "field"


def mixed_discriminant(grid: SphereGrid, *matrices: Array) -> ScalarField:
    """
    Polarized determinant of n-1 per-node matrices with one index raised.

    For n = 2 this is the single 1×1 entry. For n = 3::

        ½ (M₁¹₁ M₂²₂ + M₁²₂ M₂¹₁ - M₁¹₂ M₂²₁ - M₁²₁ M₂¹₂)
    """
    d = grid.chart_dim
    if len(matrices) != d:
        raise ValueError(f"Need {d} matrices for dim {grid.dim}, got {len(matrices)}")
    if d == 1:
        return ScalarField(grid, matrices[0][..., 0, 0])
    a, b = matrices
    values = 0.5 * (
        a[..., 0, 0] * b[..., 1, 1]
        + a[..., 1, 1] * b[..., 0, 0]
        - a[..., 0, 1] * b[..., 1, 0]
        - a[..., 1, 0] * b[..., 0, 1]
    )
    return ScalarField(grid, values)


def mixed_curvature(*fields: Operand) -> ScalarField:
    """
    Q[s₁, ..., s_{n-1}], the mixed discriminant of the raised A[sᵢ].

    The arguments need not be support functions of convex bodies.
    """
    supports = [_field(f) for f in fields]
    grid = check_same_grid(*supports)
    return mixed_discriminant(grid, *(support_operator(f).raised() for f in supports))


def mixed_volume(first: Operand, *rest: Operand) -> MixedVolumeResult:
    """V[s₀, s₁, ..., s_{n-1}] = ∫ s₀ Q[s₁, ..., s_{n-1}] dμ."""
    s0 = _field(first)
    value = integrate(s0 * mixed_curvature(*rest))
    return MixedVolumeResult(value, tuple(_label(x) for x in (first, *rest)))


def _reference_slots(body: ConvexBody, extras: list[Operand] | None) -> list[Operand]:
    needed = body.dim - 2
    if extras is None:
        return [body] * needed
    if len(extras) != needed:
        raise ValueError(f"Need {needed} extra bodies for dim {body.dim}, got {len(extras)}")
    return list(extras)


def minkowski_terms(
    h: ScalarField, body: ConvexBody, extras: list[Operand] | None = None
) -> tuple[float, float, float]:
    """
    Returns:
        ``(V[h,h,...], V[s,h,...], V[s,s,...])`` with the remaining slots
        filled by ``extras`` (default: the body itself)
    """
    slots = _reference_slots(body, extras)
    v_hh = mixed_volume(h, h, *slots).value
    v_sh = mixed_volume(body, h, *slots).value
    v_ss = mixed_volume(body, body, *slots).value
    return v_hh, v_sh, v_ss


def minkowski_slack(
    h: ScalarField, body: ConvexBody, extras: list[Operand] | None = None
) -> float:
    """
    V[s,h,...]²/V[s,s,...] - V[h,h,...], nonnegative by Minkowski's inequality.

    Raises:
        ConvexityError: if V[s,s,...] ≤ 0
    """
    v_hh, v_sh, v_ss = minkowski_terms(h, body, extras)
    if v_ss <= 0:
        raise ConvexityError(f"V[s,s,...] = {v_ss:.3e} is not positive")
    return v_sh**2 / v_ss - v_hh


def is_equality(slack: float, reference: float, tol: float = EQUALITY_TOL) -> bool:
    """Classify a Minkowski slack as an equality case relative to V[s,s,...]."""
    return abs(slack) <= tol * abs(reference)


def ellipticity_eigenvalues(grid: SphereGrid, *fixed: Operand) -> Array:
    """
    Per-node eigenvalues of Q̇ for Q[f] = Q[f, s₁, ..., s_{n-2}].

    On the sphere Q[f, s₁] = ½ tr(F (tr S - S)) in an orthonormal frame, so
    Q̇ = ½ (tr S·I - S). On the circle Q[f] = A[f] and Q̇ = 1.

    Returns:
        Array of shape ``grid.shape + (n-1,)``, ascending per node
    """
    if grid.dim == 2:
        return np.ones(grid.shape + (1,))
    if len(fixed) != 1:
        raise ValueError(f"Need exactly one fixed body on the sphere, got {len(fixed)}")
    s1 = _field(fixed[0])
    check_same_grid(s1)
    comps = support_operator(s1).components.copy()
    sin = grid.sin_theta
    comps[..., 0, 1] /= sin
    comps[..., 1, 0] /= sin
    comps[..., 1, 1] /= sin**2
    trace = comps[..., 0, 0] + comps[..., 1, 1]
    qdot = 0.5 * (trace[..., None, None] * np.eye(2) - comps)
    return np.linalg.eigvalsh(qdot)


def ball_mixed_volume(grid: SphereGrid, *radii: float) -> float:
    """Closed form V[ball(R₀), ..., ball(R_{n-1})] = |S^{n-1}| Π Rᵢ."""
    if len(radii) != grid.dim:
        raise ValueError(f"Need {grid.dim} radii, got {len(radii)}")
    return grid.area * float(np.prod(radii))


def steiner_mixed_volume(r1: float, r2: float, n: int) -> float:
    """V[ball(R₁), ball(R₂), ..., ball(R₂)] = |S^{n-1}| R₁ R₂^{n-1}; 4πR₁R₂² for n = 3."""
    if n not in (2, 3):
        raise ValueError(f"Unsupported dimension {n}")
    area = 2 * np.pi if n == 2 else 4 * np.pi
    return float(area * r1 * r2 ** (n - 1))
