#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Smooth strictly convex bodies given by their support functions."""

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Self

import numpy as np
from numpy.typing import NDArray

from .sphere import (
    Array,
    ScalarField,
    SphereGrid,
    SymTensorField,
    analyze,
    harmonic_basis,
    integrate,
    spectral_tail,
    support_operator,
    synthesize,
)

logger = logging.getLogger("ovaloid.body")

FORMAT_VERSION = 1

# bodies whose smallest principal radius falls below this fraction of the
# largest are rejected
MARGIN_THRESHOLD = 1e-8

RANDOM_RETRIES = 8

# random bodies keep every principal radius at least this large (the unit
# ball has 1); thinner bodies need far more resolution for K
RANDOM_MARGIN_FLOOR = 0.25


class ConvexityError(ValueError):
    """The support function does not describe a smooth strictly convex body."""


class OriginError(ValueError):
    """The origin is not interior to the body (s ≤ 0 somewhere)."""


class BodyFormatError(ValueError):
    """A body or field file could not be parsed."""


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """
    A smooth strictly convex body given by its support function s.

    Instances are only created through :meth:`from_support`, which checks
    that A[s] = ∇̂²s + ĝs is positive definite at every node. ``margin`` is
    the smallest eigenvalue of A[s] over the grid (the smallest principal
    radius of curvature).

    Attributes:
        support: support function s sampled on the grid
        margin: minimum eigenvalue of A[s]
        name: identifier used in reports
    """

    support: ScalarField
    margin: float
    name: str = ""

    @classmethod
    def from_support(cls, support: ScalarField, name: str = "") -> Self:
        """
        Validate ``support`` and wrap it as a body.

        Raises:
            ConvexityError: if A[s] is not positive definite with enough margin
        """
        eigenvalues = support_operator(support).frame_eigenvalues()
        margin = float(eigenvalues.min())
        largest = float(np.abs(eigenvalues).max())
        if margin <= 0 or margin < MARGIN_THRESHOLD * largest:
            raise ConvexityError(
                f"Support function {name or '<unnamed>'} is not strictly convex: "
                f"smallest principal radius {margin:.3e}"
            )
        return cls(support=support, margin=margin, name=name)

    @property
    def grid(self) -> SphereGrid:
        return self.support.grid

    @property
    def dim(self) -> int:
        return self.support.grid.dim

    @cached_property
    def second_form(self) -> SymTensorField:
        """h_ij = A[s] in chart components."""
        return support_operator(self.support)

    def renamed(self, name: str) -> "ConvexBody":
        return replace(self, name=name)


def make_ball(radius: float, grid: SphereGrid) -> ConvexBody:
    """Ball of the given radius centred at the origin."""
    if radius <= 0:
        raise ValueError(f"Ball radius must be positive, got {radius}")
    return ConvexBody.from_support(ScalarField.constant(grid, radius), name=f"ball-{radius:g}")


def make_ellipsoid(semiaxes: Sequence[float], grid: SphereGrid) -> ConvexBody:
    """
    Centred ellipsoid (ellipse for dim 2) with axes along the coordinate axes.

    s(z) = sqrt(a²z₁² + b²z₂² [+ c²z₃²])
    """
    axes = np.asarray(semiaxes, dtype=float)
    if axes.shape != (grid.dim,):
        raise ValueError(f"Expected {grid.dim} semiaxes, got {len(axes)}")
    if np.any(axes <= 0):
        raise ValueError(f"Semiaxes must be positive, got {list(axes)}")
    values = np.sqrt(np.tensordot(axes**2, grid.normals**2, axes=1))
    name = "ellipsoid-" + "x".join(f"{a:g}" for a in axes)
    return ConvexBody.from_support(ScalarField(grid, values), name=name)


def make_random_body(
    seed: int,
    bandlimit: int,
    amplitude: float,
    grid: SphereGrid,
    symmetric: bool = False,
    min_margin: float = RANDOM_MARGIN_FLOOR,
) -> ConvexBody:
    """
    Random perturbation of the unit ball, s = 1 + ε·g.

    g is a bandlimited field of degree ≤ ``bandlimit`` with seeded normal
    coefficients (decaying with degree), scaled to unit sup-norm. With
    ``symmetric`` only even degrees are used, so s(z) = s(-z). If the result
    is not convex, or its margin is below ``min_margin``, the amplitude is
    halved, up to eight times.

    Raises:
        ConvexityError: if no amplitude in the halving sequence works
    """
    if amplitude == 0:
        return make_ball(1.0, grid).renamed(f"random-{seed}")

    rng = np.random.default_rng(seed)
    labels, _ = harmonic_basis(grid, bandlimit, even_only=symmetric)
    degrees = np.array([label[0] for label in labels], dtype=float)
    coeffs = rng.standard_normal(len(labels)) / (1.0 + degrees) ** 2
    coeffs[degrees == 0] = 0.0
    g = synthesize(grid, coeffs, even_only=symmetric)
    if g.sup_norm() > 0:
        g = g / g.sup_norm()

    eps = amplitude
    for attempt in range(RANDOM_RETRIES + 1):
        try:
            body = ConvexBody.from_support(1.0 + eps * g, name=f"random-{seed}")
            if body.margin >= min_margin:
                return body
            logger.info(
                f"Random body {seed} has margin {body.margin:.3g} at amplitude {eps:g}, halving"
            )
        except ConvexityError:
            logger.warning(f"Random body {seed} not convex at amplitude {eps:g}, halving")
        if attempt == RANDOM_RETRIES:
            break
        eps /= 2
    raise ConvexityError(
        f"Could not build a convex random body for seed {seed} after {RANDOM_RETRIES} retries"
    )


def resolution_tail(body: ConvexBody) -> float:
    """Spectral tail of the Gauss curvature; large values mean the grid is too coarse."""
    return spectral_tail(ScalarField(body.grid, 1.0 / body.second_form.det_g()))


def volume(body: ConvexBody) -> float:
    """Enclosed area/volume, (1/n) ∫ s det_ĝ A[s] dμ."""
    density = ScalarField(body.grid, body.second_form.det_g())
    return integrate(body.support * density) / body.dim


def boundary_points(body: ConvexBody) -> Array:
    """
    The boundary point with outer normal z, x = s·z + ∇̂s, for every node.

    Returns:
        Ambient coordinates, shape ``(n,) + grid.shape``
    """
    grid = body.grid
    s = body.support.values
    if grid.dim == 2:
        (e_theta,) = grid.tangent_frame
        return s * grid.normals + grid.d_theta(s) * e_theta
    e_theta, e_phi = grid.tangent_frame
    s_t, s_p = grid.column_transform(s, ("d1", 0), ("over_sin", 1))
    return s * grid.normals + s_t * e_theta + s_p * e_phi


def boundary_volume(body: ConvexBody) -> float:
    """Enclosed area/volume from first derivatives of the boundary points, (1/n) ∮⟨x, dS⟩."""
    grid = body.grid
    points = boundary_points(body)
    if grid.dim == 2:
        x, y = points
        flux = x * grid.d_theta(y) - y * grid.d_theta(x)
        return integrate(ScalarField(grid, flux)) / 2
    tangents = [grid.column_transform(c, ("d1", 0), ("over_sin", 1)) for c in points]
    d_theta = np.stack([t for t, _ in tangents])
    d_phi = np.stack([p for _, p in tangents])
    flux = np.sum(points * np.cross(d_theta, d_phi, axis=0), axis=0)
    return integrate(ScalarField(grid, flux)) / 3


def minkowski_sum(first: ConvexBody, second: ConvexBody) -> ConvexBody:
    return ConvexBody.from_support(
        first.support + second.support, name=f"{first.name}+{second.name}"
    )


def translate(body: ConvexBody, vector: Sequence[float] | NDArray[np.float64]) -> ConvexBody:
    """Translate by v, s ← s + ⟨v, z⟩."""
    shift = ScalarField.linear(body.grid, np.asarray(vector, dtype=float))
    return ConvexBody.from_support(body.support + shift, name=body.name)


def scale(body: ConvexBody, factor: float) -> ConvexBody:
    if factor <= 0:
        raise ValueError(f"Scale factor must be positive, got {factor}")
    return ConvexBody.from_support(body.support * factor, name=body.name)


def steiner_point(body: ConvexBody) -> Array:
    """(n/|S^{n-1}|) ∫ s(z) z dμ, the first harmonic moment of s."""
    grid = body.grid
    moments = [integrate(body.support * ScalarField(grid, z)) for z in grid.normals]
    return grid.dim / grid.area * np.array(moments)


def recentre(body: ConvexBody) -> ConvexBody:
    """Translate the body so its Steiner point sits at the origin."""
    point = steiner_point(body)
    logger.debug(f"Recentring {body.name}: Steiner point {point}")
    return translate(body, -point)


def require_interior_origin(body: ConvexBody) -> None:
    """
    Raises:
        OriginError: if s ≤ 0 at some node
    """
    if body.support.min() <= 0:
        raise OriginError(
            f"Origin is not interior to {body.name or 'the body'} "
            f"(min s = {body.support.min():.3e}); recentre it first"
        )


def symmetry_defect(field: ScalarField) -> float:
    """max |f(z) - f(-z)|."""
    return (field - field.antipodal()).sup_norm()


def is_symmetric(body: ConvexBody, tol: float = 1e-12) -> bool:
    return symmetry_defect(body.support) <= tol * max(body.support.sup_norm(), 1.0)


def _preimage_directions(grid: SphereGrid, matrix: Array) -> tuple[Array, Array]:
    if grid.dim != 2:
        raise NotImplementedError("Linear images are implemented for curves only")
    pulled = np.asarray(matrix, dtype=float).T @ grid.normals
    return np.arctan2(pulled[1], pulled[0]), np.linalg.norm(pulled, axis=0)


def linear_image(body: ConvexBody, matrix: Array) -> ConvexBody:
    """
    Support function of the image A·M, s'(z) = s(Aᵀz/|Aᵀz|)·|Aᵀz| (dim 2).
    """
    grid = body.grid
    angles, lengths = _preimage_directions(grid, matrix)
    values = grid.interpolate(body.support.values, angles) * lengths
    return ConvexBody.from_support(ScalarField(grid, values), name=f"{body.name}-image")


def transport_field(field: ScalarField, matrix: Array) -> ScalarField:
    """
    Carry a boundary function to the normal parametrization of A·M.

    A boundary point with normal u maps to one with normal ∝ A^{-T}u, so the
    transported field is F'(z) = F(Aᵀz/|Aᵀz|).
    """
    grid = field.grid
    angles, _ = _preimage_directions(grid, matrix)
    return ScalarField(grid, grid.interpolate(field.values, angles))


def resample(field: ScalarField, grid: SphereGrid) -> ScalarField:
    """Move ``field`` to another grid through its harmonic coefficients."""
    if field.grid == grid:
        return field
    if field.grid.dim != grid.dim:
        raise BodyFormatError(f"Cannot move a dim {field.grid.dim} field to dim {grid.dim}")
    lmax = min(field.grid.max_degree, grid.max_degree)
    return synthesize(grid, analyze(field, lmax))


def field_to_document(field: ScalarField, kind: str = "grid", lmax: int | None = None) -> dict[str, Any]:
    """
    JSON-ready document for a field.

    ``kind`` is ``grid`` (node values in row-major order), ``fourier``
    (circle harmonic coefficients) or ``sh`` (real spherical-harmonic
    coefficients); for the last two ``resolution`` is the degree.
    """
    grid = field.grid
    if kind == "grid":
        resolution = grid.resolution
        data = field.values.ravel()
    elif kind in ("fourier", "sh"):
        expected = "fourier" if grid.dim == 2 else "sh"
        if kind != expected:
            raise BodyFormatError(f"Kind {kind} does not apply to dim {grid.dim}")
        resolution = grid.max_degree if lmax is None else lmax
        data = analyze(field, resolution)
    else:
        raise BodyFormatError(f"Unknown kind {kind}")
    return {
        "format": FORMAT_VERSION,
        "dim": grid.dim,
        "kind": kind,
        "resolution": int(resolution),
        "data": [float(v) for v in data],
    }


def field_from_document(doc: dict[str, Any], grid: SphereGrid | None = None) -> ScalarField:
    """
    Rebuild a field from :func:`field_to_document` output.

    Args:
        doc: the parsed JSON document
        grid: target grid; defaults to the stored grid (``grid`` kind) or the
            default grid of the dimension

    Raises:
        BodyFormatError: on missing keys, a wrong version or inconsistent data
    """
    try:
        version = doc["format"]
        dim = int(doc["dim"])
        kind = doc["kind"]
        resolution = int(doc["resolution"])
        data = np.asarray(doc["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise BodyFormatError(f"Malformed body document: {e}") from e
    if version != FORMAT_VERSION:
        raise BodyFormatError(f"Unsupported format version {version}")

    try:
        if kind == "grid":
            source = SphereGrid.create(dim, resolution)
            field = ScalarField(source, data.reshape(source.shape))
            return field if grid is None else resample(field, grid)
        if kind in ("fourier", "sh"):
            target = grid if grid is not None else SphereGrid.create(dim)
            if target.dim != dim:
                raise BodyFormatError(f"Document is dim {dim}, grid is dim {target.dim}")
            if data.size != _coefficient_count(dim, resolution):
                raise BodyFormatError(
                    f"Degree {resolution} needs {_coefficient_count(dim, resolution)} coefficients, "
                    f"got {data.size}"
                )
            # degrees beyond what the target grid resolves are dropped
            lmax = min(resolution, target.max_degree)
            return synthesize(target, data[: _coefficient_count(dim, lmax)])
    except ValueError as e:
        if isinstance(e, BodyFormatError):
            raise
        raise BodyFormatError(f"Inconsistent body document: {e}") from e
    raise BodyFormatError(f"Unknown kind {kind}")


def _coefficient_count(dim: int, lmax: int) -> int:
    return 2 * lmax + 1 if dim == 2 else (lmax + 1) ** 2


def save(field: ScalarField, path: Path, kind: str = "grid") -> None:
    """Write a body's support function (or any field) as JSON."""
    path.write_text(json.dumps(field_to_document(field, kind), indent=1, sort_keys=True) + "\n")


def load_field(path: Path, grid: SphereGrid | None = None) -> ScalarField:
    """
    Raises:
        FileNotFoundError: If the file does not exist
        BodyFormatError: If the file is not a valid document
    """
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise BodyFormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise BodyFormatError(f"{path} does not hold a JSON object")
    return field_from_document(doc, grid)


def load_body(path: Path, grid: SphereGrid | None = None) -> ConvexBody:
    """Load and validate a body file; the body is named after the file stem."""
    return ConvexBody.from_support(load_field(path, grid), name=path.stem)
