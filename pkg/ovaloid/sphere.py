#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Grids, quadrature and spectral differentiation on the circle and the 2-sphere."""

import logging
from dataclasses import dataclass
from functools import cache, cached_property
from typing import Self

import numpy as np
from numpy.typing import NDArray
from scipy import fft, special

logger = logging.getLogger("ovaloid.sphere")

Array = NDArray[np.float64]

DEFAULT_RESOLUTION = {2: 256, 3: 32}

# below this |det| a chart tensor is treated as singular
DET_GUARD = 1e-14


class GridMismatchError(ValueError):
    """Raised when fields sampled on different grids are combined."""


@dataclass(frozen=True)
class SphereGrid:
    """
    Discretization of the unit sphere S^{n-1} for n in {2, 3}.

    For ``dim == 2`` the grid has ``resolution`` equally spaced angles
    ``θ_k = 2πk/N``. For ``dim == 3`` ``resolution`` is the bandlimit B: 2B
    Gauss-Legendre colatitudes (none at a pole) times 2B equally spaced
    longitudes. Node arrays are laid out as ``(colatitude, longitude)``.

    Grids are immutable and compare equal by ``(dim, resolution)``, so fields
    built on two equal grids combine freely.

    Attributes:
        dim: ambient dimension n
        resolution: N for the circle, bandlimit B for the sphere
    """

    dim: int
    resolution: int

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"Unsupported dimension {self.dim}, expected 2 or 3")
        if self.dim == 2 and (self.resolution < 8 or self.resolution % 2):
            raise ValueError(
                f"Circle grids need an even number of nodes >= 8, got {self.resolution}"
            )
        if self.dim == 3 and self.resolution < 4:
            raise ValueError(f"Sphere bandlimit must be >= 4, got {self.resolution}")

    @classmethod
    def create(cls, dim: int, resolution: int | None = None) -> Self:
        """Return the grid for ``dim`` at ``resolution`` (default per dimension)."""
        if resolution is None or resolution == 0:
            resolution = DEFAULT_RESOLUTION.get(dim, 0)
        return cls(dim=dim, resolution=resolution)

    @property
    def chart_dim(self) -> int:
        """Dimension of the sphere itself, n - 1."""
        return self.dim - 1

    @property
    def area(self) -> float:
        """|S^{n-1}|: 2π or 4π."""
        return 2 * np.pi if self.dim == 2 else 4 * np.pi

    @property
    def shape(self) -> tuple[int, ...]:
        if self.dim == 2:
            return (self.resolution,)
        return (2 * self.resolution, 2 * self.resolution)

    @property
    def max_degree(self) -> int:
        """Highest harmonic degree the grid resolves exactly."""
        if self.dim == 2:
            return self.resolution // 2 - 1
        return self.resolution - 1

    @cached_property
    def _colatitude_rule(self) -> tuple[Array, Array]:
        # Gauss-Legendre in x = cos θ, reordered so θ ascends
        x, w = np.polynomial.legendre.leggauss(2 * self.resolution)
        return x[::-1].copy(), w[::-1].copy()

    @cached_property
    def theta(self) -> Array:
        """Angles (circle) or colatitudes (sphere), one per row of nodes."""
        if self.dim == 2:
            return 2 * np.pi * np.arange(self.resolution) / self.resolution
        x, _ = self._colatitude_rule
        return np.arccos(x)

    @cached_property
    def phi(self) -> Array:
        """Longitudes; empty for the circle."""
        if self.dim == 2:
            return np.zeros(0)
        n = 2 * self.resolution
        return 2 * np.pi * np.arange(n) / n

    @cached_property
    def nodes(self) -> tuple[Array, ...]:
        """Per-node chart coordinates, ``(θ,)`` or ``(θ, φ)`` broadcast to ``shape``."""
        if self.dim == 2:
            return (self.theta,)
        theta, phi = np.meshgrid(self.theta, self.phi, indexing="ij")
        return (theta, phi)

    @cached_property
    def weights(self) -> Array:
        """Quadrature weights per node; they sum to |S^{n-1}|."""
        if self.dim == 2:
            return np.full(self.shape, 2 * np.pi / self.resolution)
        _, w = self._colatitude_rule
        return np.outer(w, np.full(2 * self.resolution, np.pi / self.resolution))

    @cached_property
    def normals(self) -> Array:
        """Unit vectors z at the nodes, shape ``(n,) + shape``."""
        if self.dim == 2:
            return np.stack([np.cos(self.theta), np.sin(self.theta)])
        theta, phi = self.nodes
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )

    @cached_property
    def sin_theta(self) -> Array:
        return np.sin(self.nodes[0])

    @cached_property
    def cos_theta(self) -> Array:
        return np.cos(self.nodes[0])

    @cached_property
    def tangent_frame(self) -> Array:
        """Ambient unit vectors along the chart directions, shape ``(n-1, n) + shape``."""
        if self.dim == 2:
            x, y = self.normals
            return np.stack([-y, x])[None]
        _, phi = self.nodes
        sin, cos = self.sin_theta, self.cos_theta
        e_theta = np.stack([cos * np.cos(phi), cos * np.sin(phi), -sin])
        e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)])
        return np.stack([e_theta, e_phi])

    @cached_property
    def metric(self) -> Array:
        """Round metric ĝ_ij per node in chart components."""
        g = np.zeros(self.shape + (self.chart_dim, self.chart_dim))
        g[..., 0, 0] = 1.0
        if self.dim == 3:
            g[..., 1, 1] = self.sin_theta**2
        return g

    @cached_property
    def metric_inverse(self) -> Array:
        g = np.zeros_like(self.metric)
        g[..., 0, 0] = 1.0
        if self.dim == 3:
            g[..., 1, 1] = 1.0 / self.sin_theta**2
        return g

    @cached_property
    def metric_det(self) -> Array:
        """det ĝ per node: 1 on the circle, sin²θ on the sphere."""
        if self.dim == 2:
            return np.ones(self.shape)
        return self.sin_theta**2

    def antipodal(self, values: Array) -> Array:
        """Return ``values`` evaluated at the antipodes -z of every node."""
        if self.dim == 2:
            return np.roll(values, -self.resolution // 2, axis=-1)
        return np.roll(values[..., ::-1, :], -self.resolution, axis=-1)

    @property
    def column_bases(self) -> tuple["ColumnBasis", ...]:
        """
        Per-order Legendre bases of the longitudinal Fourier columns; sphere only.

        Column m of a smooth field is expanded in P_l^m(cos θ) for
        l = m..2B-1. The projection is exact for columns in that span since
        the 2B-point Gauss-Legendre rule integrates their products exactly.
        """
        return _column_bases(self)

    def column_transform(self, values: Array, *parts: tuple[str, int]) -> list[Array]:
        """
        Differentiate sphere node values through the column bases.

        Args:
            values: node values of a smooth scalar field
            parts: ``(table, φ-order)`` pairs; ``table`` names a
                :class:`ColumnBasis` array and the φ-order multiplies column
                m by (im)^order

        Returns:
            One array of node values per requested part
        """
        n = values.shape[-1]
        columns = fft.rfft(values, axis=-1)
        out = [np.zeros_like(columns) for _ in parts]
        for basis in self.column_bases:
            m = basis.order
            coeffs = basis.analysis @ columns[:, m]
            for target, (table, phi_order) in zip(out, parts, strict=True):
                target[:, m] = (1j * m) ** phi_order * (getattr(basis, table).T @ coeffs)
        return [fft.irfft(target, n=n, axis=-1) for target in out]

    def _longitude_derivative(self, values: Array, order: int) -> Array:
        n = values.shape[-1]
        coeffs = fft.rfft(values, axis=-1)
        k = np.arange(coeffs.shape[-1])
        mult = (1j * k) ** order
        if order % 2:
            mult[-1] = 0.0
        return fft.irfft(coeffs * mult, n=n, axis=-1)

    def d_theta(self, values: Array, order: int = 1) -> Array:
        """∂_θ (order 1) or ∂²_θ (order 2) of a smooth scalar field's node values."""
        if order not in (1, 2):
            raise ValueError(f"Unsupported derivative order {order}")
        if self.dim == 2:
            return self._longitude_derivative(values, order)
        (out,) = self.column_transform(values, ("d1" if order == 1 else "d2", 0))
        return out

    def d_phi_over_sin(self, values: Array) -> Array:
        """∂_φ f / sin θ, evaluated without dividing node values by sin θ; sphere only."""
        if self.dim == 2:
            raise ValueError("The circle has no longitude")
        (out,) = self.column_transform(values, ("over_sin", 1))
        return out

    def d_phi(self, values: Array, order: int = 1) -> Array:
        """∂_φ or ∂²_φ; sphere only."""
        if self.dim == 2:
            raise ValueError("The circle has no longitude")
        return self._longitude_derivative(values, order)

    def interpolate(self, values: Array, angles: Array) -> Array:
        """
        Evaluate the trigonometric interpolant of circle node values.

        Args:
            values: node values on this (dim 2) grid
            angles: arbitrary angles at which to evaluate

        Returns:
            Interpolated values with the shape of ``angles``
        """
        if self.dim != 2:
            raise NotImplementedError("Interpolation is implemented on the circle only")
        n = self.resolution
        coeffs = fft.rfft(values) / n
        coeffs[1:-1] *= 2
        k = np.arange(coeffs.size)
        phase = np.exp(1j * np.multiply.outer(np.asarray(angles), k))
        return np.real(phase @ coeffs)


@dataclass(frozen=True, eq=False)
class ColumnBasis:
    """
    Normalized P_l^m(cos θ) of one order m at the colatitudes, l = m..2B-1.

    Every table has shape ``(degrees, colatitudes)``.

    Attributes:
        order: m
        analysis: quadrature projection onto the basis
        value: P
        d1: ∂_θ P
        d2: ∂²_θ P
        over_sin: P / sin θ
        twist: ∂_θ(P / sin θ)
        lateral: -l(l+1) P - ∂²_θ P
    """

    order: int
    analysis: Array
    value: Array
    d1: Array
    d2: Array
    over_sin: Array
    twist: Array
    lateral: Array


@cache
def _column_bases(grid: SphereGrid) -> tuple[ColumnBasis, ...]:
    if grid.dim == 2:
        raise ValueError("The circle has no colatitude columns")
    x, w = grid._colatitude_rule
    theta = np.arccos(x)
    sin = np.sqrt(1.0 - x**2)
    top = 2 * grid.resolution - 1
    bases = []
    for m in range(grid.resolution + 1):
        degrees = np.arange(m, top + 1)
        p, dp, d2p = np.asarray(
            special.sph_legendre_p(degrees[:, None], m, theta[None, :], diff_n=2)
        )
        norms = (p**2) @ w
        over_sin = p / sin
        bases.append(
            ColumnBasis(
                order=m,
                analysis=p * w / norms[:, None],
                value=p,
                d1=dp,
                d2=d2p,
                over_sin=over_sin,
                twist=(dp - x * over_sin) / sin,
                # Δ̂Y = -l(l+1)Y leaves ∂²_φ/sin²θ + cot θ ∂_θ without a division
                lateral=-(degrees * (degrees + 1.0))[:, None] * p - d2p,
            )
        )
    logger.debug(f"Built column bases for bandlimit {grid.resolution}")
    return tuple(bases)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Real function sampled on a :class:`SphereGrid`.

    Fields on equal grids combine pointwise with the usual arithmetic
    operators; plain numbers broadcast.
    """

    grid: SphereGrid
    values: Array

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"Field shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Field has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: SphereGrid, value: float) -> Self:
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def linear(cls, grid: SphereGrid, vector: NDArray[np.float64] | list[float]) -> Self:
        """The restriction of z ↦ ⟨v, z⟩ to the sphere."""
        v = np.asarray(vector, dtype=float)
        if v.shape != (grid.dim,):
            raise ValueError(f"Expected a vector of length {grid.dim}, got {v.shape}")
        return cls(grid, np.tensordot(v, grid.normals, axes=1))

    def _operand(self, other: "ScalarField | float") -> Array | float:
        if isinstance(other, ScalarField):
            check_same_grid(self, other)
            return other.values
        return float(other)

    def __add__(self, other: "ScalarField | float") -> "ScalarField":
        return ScalarField(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other: "ScalarField | float") -> "ScalarField":
        return ScalarField(self.grid, self.values - self._operand(other))

    def __rsub__(self, other: float) -> "ScalarField":
        return ScalarField(self.grid, float(other) - self.values)

    def __mul__(self, other: "ScalarField | float") -> "ScalarField":
        return ScalarField(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other: "ScalarField | float") -> "ScalarField":
        return ScalarField(self.grid, self.values / self._operand(other))

    def __rtruediv__(self, other: float) -> "ScalarField":
        return ScalarField(self.grid, float(other) / self.values)

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def __pow__(self, exponent: float) -> "ScalarField":
        return ScalarField(self.grid, self.values**exponent)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def antipodal(self) -> "ScalarField":
        """The field z ↦ f(-z)."""
        return ScalarField(self.grid, self.grid.antipodal(self.values))


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """
    Symmetric (n-1)×(n-1) tensor per node, in chart components.

    ``components`` has shape ``grid.shape + (d, d)`` with d = n - 1; chart
    coordinates are θ on the circle and (θ, φ) on the sphere.
    """

    grid: SphereGrid
    components: Array

    def __post_init__(self) -> None:
        d = self.grid.chart_dim
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != self.grid.shape + (d, d):
            raise ValueError(
                f"Tensor shape {comps.shape} does not match grid {self.grid.shape + (d, d)}"
            )
        comps = 0.5 * (comps + np.swapaxes(comps, -1, -2))
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_parts(
        cls,
        grid: SphereGrid,
        tt: Array,
        tp: Array | None = None,
        pp: Array | None = None,
    ) -> Self:
        """Assemble from the θθ, θφ and φφ components (only θθ on the circle)."""
        d = grid.chart_dim
        comps = np.zeros(grid.shape + (d, d))
        comps[..., 0, 0] = tt
        if d == 2:
            if tp is None or pp is None:
                raise ValueError("Sphere tensors need θφ and φφ components")
            comps[..., 0, 1] = tp
            comps[..., 1, 0] = tp
            comps[..., 1, 1] = pp
        return cls(grid, comps)

    def __add__(self, other: "SymTensorField") -> "SymTensorField":
        check_same_grid(self, other)
        return SymTensorField(self.grid, self.components + other.components)

    def scaled(self, factor: ScalarField | float) -> "SymTensorField":
        """Multiply every component by a scalar field or number."""
        if isinstance(factor, ScalarField):
            check_same_grid(self, factor)
            return SymTensorField(self.grid, self.components * factor.values[..., None, None])
        return SymTensorField(self.grid, self.components * float(factor))

    def det(self) -> Array:
        return np.asarray(np.linalg.det(self.components))

    def det_g(self) -> Array:
        """det_ĝ T = det T / det ĝ, the chart-independent determinant."""
        return self.det() / self.grid.metric_det

    def inverse(self) -> "SymTensorField":
        """Contravariant inverse T^{ij} by explicit 1×1 / 2×2 inversion."""
        c = self.components
        det = self.det()
        if np.any(np.abs(det) < DET_GUARD):
            raise ZeroDivisionError("Tensor is singular at some node")
        inv = np.zeros_like(c)
        if self.grid.chart_dim == 1:
            inv[..., 0, 0] = 1.0 / c[..., 0, 0]
        else:
            inv[..., 0, 0] = c[..., 1, 1] / det
            inv[..., 1, 1] = c[..., 0, 0] / det
            inv[..., 0, 1] = -c[..., 0, 1] / det
            inv[..., 1, 0] = -c[..., 1, 0] / det
        return SymTensorField(self.grid, inv)

    def raised(self) -> Array:
        """Mixed components T_i^j = ĝ^{jk} T_ik, shape ``grid.shape + (d, d)``."""
        return np.einsum("...jk,...ik->...ij", self.grid.metric_inverse, self.components)

    def contract(self, other: "SymTensorField") -> Array:
        """Full contraction T^{ij} S_ij, with ``self`` holding upper indices."""
        check_same_grid(self, other)
        return np.einsum("...ij,...ij->...", self.components, other.components)

    def trace_g(self) -> Array:
        """ĝ^{ij} T_ij."""
        return np.einsum("...ij,...ij->...", self.grid.metric_inverse, self.components)

    def frame_eigenvalues(self) -> Array:
        """Eigenvalues in the ĝ-orthonormal frame, ascending, shape ``grid.shape + (d,)``."""
        if self.grid.chart_dim == 1:
            return self.components[..., 0, :]
        sin = self.grid.sin_theta
        frame = self.components.copy()
        frame[..., 0, 1] /= sin
        frame[..., 1, 0] /= sin
        frame[..., 1, 1] /= sin**2
        return np.linalg.eigvalsh(frame)


def check_same_grid(*items: ScalarField | SymTensorField) -> SphereGrid:
    """Return the common grid of ``items`` or raise :class:`GridMismatchError`."""
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise GridMismatchError(
                f"Grid mismatch: dim={grid.dim}/res={grid.resolution} "
                f"vs dim={item.grid.dim}/res={item.grid.resolution}"
            )
    return grid


def sphere_gradient(f: ScalarField) -> Array:
    """
    Chart partials of ``f``: ``(∂_θ f,)`` or ``(∂_θ f, ∂_φ f)``.

    Returns:
        Array of shape ``grid.shape + (n-1,)``
    """
    grid = f.grid
    if grid.dim == 2:
        return grid.d_theta(f.values)[..., None]
    f_t, f_p = grid.column_transform(f.values, ("d1", 0), ("over_sin", 1))
    return np.stack([f_t, grid.sin_theta * f_p], axis=-1)


def covariant_hessian(f: ScalarField) -> SymTensorField:
    """
    Covariant Hessian ∇̂²f of the round metric in chart components.

    On the sphere in the (θ, φ) chart::

        (∇̂²f)_θθ = f_θθ
        (∇̂²f)_θφ = f_θφ - cot θ f_φ
        (∇̂²f)_φφ = f_φφ + sin θ cos θ f_θ
    """
    grid = f.grid
    if grid.dim == 2:
        return SymTensorField.from_parts(grid, grid.d_theta(f.values, order=2))

    # orthonormal-frame components, scaled back to the chart
    f_tt, twist, lateral = grid.column_transform(
        f.values, ("d2", 0), ("twist", 1), ("lateral", 0)
    )
    sin = grid.sin_theta
    return SymTensorField.from_parts(grid, f_tt, sin * twist, sin**2 * lateral)


def support_operator(f: ScalarField) -> SymTensorField:
    """A[f] = ∇̂²f + ĝ f; for a support function this is h_ij."""
    hess = covariant_hessian(f)
    return SymTensorField(f.grid, hess.components + f.grid.metric * f.values[..., None, None])


def laplace_beltrami(f: ScalarField) -> ScalarField:
    """Δ̂f, the ĝ-trace of the covariant Hessian."""
    return ScalarField(f.grid, covariant_hessian(f).trace_g())


def divergence(grid: SphereGrid, vector: Array) -> Array:
    """
    Round-sphere divergence of a tangent vector field.

    Args:
        grid: the grid the field lives on
        vector: contravariant chart components, shape ``grid.shape + (n-1,)``

    Returns:
        Node values of ∇̂_i W^i
    """
    if grid.dim == 2:
        return grid.d_theta(vector[..., 0])

    # Work with the ambient Cartesian components, which are smooth scalar
    # fields; the chart components are not.
    e_theta, e_phi = grid.tangent_frame
    ambient = vector[..., 0] * e_theta + (vector[..., 1] * grid.sin_theta) * e_phi
    div = np.zeros(grid.shape)
    for k in range(3):
        d_t, d_p = grid.column_transform(ambient[k], ("d1", 0), ("over_sin", 1))
        div += d_t * e_theta[k] + d_p * e_phi[k]
    return div


def integrate(f: ScalarField) -> float:
    """Quadrature Σ w_k f_k ≈ ∫ f dμ over S^{n-1}."""
    return float(np.sum(f.grid.weights * f.values))


@cache
def harmonic_basis(
    grid: SphereGrid, lmax: int, even_only: bool = False
) -> tuple[tuple[tuple[int, int], ...], Array]:
    """
    Real orthonormal harmonics of degree ≤ ``lmax`` sampled on ``grid``.

    On the circle the basis is 1/√(2π), cos(kθ)/√π, sin(kθ)/√π with labels
    (k, k) and (k, -k). On the sphere it is the real spherical harmonics
    Y_lm, m = -l..l, with m < 0 carrying sin(|m|φ).

    Returns:
        ``(labels, basis)`` where ``basis`` has shape ``(ncoeffs,) + grid.shape``
        and must not be modified
    """
    if lmax > grid.max_degree:
        raise ValueError(f"Degree {lmax} exceeds what the grid resolves ({grid.max_degree})")

    labels: list[tuple[int, int]] = []
    rows: list[Array] = []
    degrees = range(0, lmax + 1, 2) if even_only else range(lmax + 1)
    if grid.dim == 2:
        theta = grid.theta
        for k in degrees:
            if k == 0:
                labels.append((0, 0))
                rows.append(np.full(grid.shape, 1 / np.sqrt(2 * np.pi)))
                continue
            labels += [(k, k), (k, -k)]
            rows += [np.cos(k * theta) / np.sqrt(np.pi), np.sin(k * theta) / np.sqrt(np.pi)]
    else:
        theta, phi = grid.nodes
        x = np.cos(theta)
        for l in degrees:  # noqa: E741
            for m in range(-l, l + 1):
                am = abs(m)
                norm = np.sqrt(
                    (2 * l + 1)
                    / (4 * np.pi)
                    * np.exp(special.gammaln(l - am + 1) - special.gammaln(l + am + 1))
                )
                legendre = norm * special.lpmv(am, l, x)
                if m > 0:
                    legendre = legendre * np.sqrt(2) * np.cos(m * phi)
                elif m < 0:
                    legendre = legendre * np.sqrt(2) * np.sin(am * phi)
                labels.append((l, m))
                rows.append(legendre)

    basis = np.stack(rows)
    basis.flags.writeable = False
    return tuple(labels), basis


def synthesize(
    grid: SphereGrid, coeffs: Array, even_only: bool = False
) -> ScalarField:
    """Field Σ c_i Y_i from harmonic coefficients ordered as :func:`harmonic_basis`."""
    coeffs = np.asarray(coeffs, dtype=float)
    lmax = _degree_for(grid.dim, coeffs.size, even_only)
    _, basis = harmonic_basis(grid, lmax, even_only)
    return ScalarField(grid, np.tensordot(coeffs, basis, axes=1))


def analyze(f: ScalarField, lmax: int, even_only: bool = False) -> Array:
    """Harmonic coefficients of ``f`` up to ``lmax`` by quadrature projection."""
    _, basis = harmonic_basis(f.grid, lmax, even_only)
    return np.tensordot(basis, f.grid.weights * f.values, axes=f.values.ndim)


def _degree_for(dim: int, count: int, even_only: bool) -> int:
    lmax = 0
    while True:
        degrees = range(0, lmax + 1, 2) if even_only else range(lmax + 1)
        size = sum((1 if l == 0 else 2) if dim == 2 else 2 * l + 1 for l in degrees)  # noqa: E741
        if size == count:
            return lmax
        if size > count:
            raise ValueError(f"{count} coefficients do not form a complete harmonic basis")
        lmax += 1


def spectral_tail(f: ScalarField) -> float:
    """
    Largest coefficient in the top quarter of the degrees the grid carries,
    relative to the largest coefficient overall.

    A well-resolved field has a tail near roundoff.
    """
    grid = f.grid
    if grid.dim == 2:
        coeffs = np.abs(fft.rfft(f.values))
        degrees = np.arange(coeffs.size)
        top = coeffs.size - 1
    else:
        columns = fft.rfft(f.values, axis=-1)
        parts = [np.abs(b.analysis @ columns[:, b.order]) for b in grid.column_bases]
        coeffs = np.concatenate(parts)
        top = 2 * grid.resolution - 1
        degrees = np.concatenate([np.arange(b.order, top + 1) for b in grid.column_bases])
    peak = coeffs.max()
    if peak == 0:
        return 0.0
    return float(coeffs[degrees >= 3 * top // 4].max() / peak)
