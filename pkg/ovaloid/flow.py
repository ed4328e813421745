#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""
Curvature flows of convex bodies solved for the support function.

Every flow is a scalar parabolic equation ∂_t s = -speed on the fixed
sphere grid (the Gauss-map parametrization), integrated with explicit RK4.
A step that would leave the body non-convex, or push the origin out of it,
is retried with half the step until ``dt_min``.
"""

import enum
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Self

import numpy as np

from .affine import CurvatureError
from .body import (
    ConvexBody,
    ConvexityError,
    OriginError,
    is_symmetric,
    load_field,
    require_interior_origin,
    scale,
    symmetry_defect,
    volume,
)
from .sphere import (
    Array,
    ScalarField,
    SphereGrid,
    check_same_grid,
    support_operator,
)
from .sphere import integrate as sphere_integral

logger = logging.getLogger("ovaloid.flow")

DT_MIN = 1e-9

# RK4 is stable for λ·dt in [-2.78, 0] on the negative real axis
RK4_STABILITY = 2.78

# fraction of the stability limit taken by default
STEP_CFL = 0.5

# relative decrease of the ratio per accepted step still counted as monotone
MONOTONE_TOL = 1e-6

EVEN_TOL = 1e-12

WeightCallback = Callable[[ScalarField], ScalarField]


class StepUnderflowError(RuntimeError):
    """The step had to be halved below ``dt_min``; the flow is near a singularity."""


class FlowKind(enum.StrEnum):
    WEIGHTED_AFFINE = "weighted-affine"
    P_CENTRO_AFFINE = "p-centro-affine"
    WEIGHTED_P_CENTRO_AFFINE = "weighted-p-centro-affine"


class Normalization(enum.StrEnum):
    NONE = "none"
    FIXED_VOLUME = "fixed-volume"


def validate_weight(phi: ScalarField, name: str = "Φ") -> None:
    """
    Raises:
        ValueError: if ``phi`` is not positive or not even
    """
    if phi.min() <= 0:
        raise ValueError(f"{name} must be positive, min is {phi.min():.3e}")
    defect = symmetry_defect(phi)
    if defect > EVEN_TOL * max(phi.sup_norm(), 1.0):
        raise ValueError(f"{name} must be even, |Φ(z) - Φ(-z)| reaches {defect:.3e}")


@dataclass(frozen=True)
class FlowParams:
    """
    Attributes:
        kind: which flow to run
        p: exponent of the p-centro-affine flows, p ≥ 1
        phi: positive even weight Φ of the weighted p-flow (None means Φ ≡ 1)
        weight: F as a function of the current support function, for the
            weighted affine flow (None means F ≡ 1)
        normalization: rescaling applied after every step
    """

    kind: FlowKind = FlowKind.P_CENTRO_AFFINE
    p: float = 1.0
    phi: ScalarField | None = None
    weight: WeightCallback | None = None
    normalization: Normalization = Normalization.NONE

    def __post_init__(self) -> None:
        if self.kind != FlowKind.WEIGHTED_AFFINE and self.p < 1:
            raise ValueError(f"p must be at least 1, got {self.p}")
        if self.phi is not None:
            validate_weight(self.phi)


@dataclass(frozen=True)
class FlowState:
    """
    Attributes:
        body: the current body
        t: flow time
        params: the flow being run
        reference_volume: V₀ for fixed-volume normalization
        last_dt: the step actually taken by the last :func:`step`
        steps: number of accepted steps
    """

    body: ConvexBody
    t: float
    params: FlowParams
    reference_volume: float
    last_dt: float = 0.0
    steps: int = 0

    @classmethod
    def start(cls, body: ConvexBody, params: FlowParams) -> Self:
        require_interior_origin(body)
        if params.phi is not None:
            check_same_grid(body.support, params.phi)
        if params.kind != FlowKind.WEIGHTED_AFFINE and not is_symmetric(body):
            logger.warning(
                f"{body.name or 'Body'} is not origin-symmetric; "
                "the ratio need not be monotone"
            )
        return cls(body=body, t=0.0, params=params, reference_volume=volume(body))

    @property
    def grid(self) -> SphereGrid:
        return self.body.grid


def _curvature(support: ScalarField) -> ScalarField:
    det = support_operator(support).det_g()
    if np.any(det <= 0):
        raise CurvatureError("Gauss curvature is not positive")
    return ScalarField(support.grid, 1.0 / det)


def _speed(support: ScalarField, params: FlowParams) -> ScalarField:
    n = support.grid.dim
    if support.min() <= 0:
        raise OriginError(f"Support function reached {support.min():.3e}")
    K = _curvature(support)

    if params.kind == FlowKind.WEIGHTED_AFFINE:
        F: ScalarField | float = 1.0 if params.weight is None else params.weight(support)
        return -(F * K ** (1.0 / (n + 1)))

    q = params.p / (params.p + n)
    speed = support * (K / support ** (n + 1)) ** q
    if params.kind == FlowKind.WEIGHTED_P_CENTRO_AFFINE and params.phi is not None:
        speed = speed * params.phi
    return -speed


def rhs(state: FlowState) -> ScalarField:
    """
    ∂_t s for the state's flow.

    - weighted affine: -F·K^{1/(n+1)}
    - p-centro-affine: -s (K/s^{n+1})^{p/(p+n)}
    - weighted p-centro-affine: the same times Φ

    Raises:
        OriginError: if s ≤ 0
        CurvatureError: if K ≤ 0
    """
    return _speed(state.body.support, state.params)


def _advance(state: FlowState, dt: float) -> ConvexBody:
    params = state.params
    s = state.body.support
    k1 = _speed(s, params)
    k2 = _speed(s + 0.5 * dt * k1, params)
    k3 = _speed(s + 0.5 * dt * k2, params)
    k4 = _speed(s + dt * k3, params)
    updated = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if updated.min() <= 0:
        raise OriginError("Origin left the body")

    body = ConvexBody.from_support(updated, name=state.body.name)
    if params.normalization == Normalization.FIXED_VOLUME:
        factor = (state.reference_volume / volume(body)) ** (1.0 / body.dim)
        body = scale(body, factor)
    return body


def step(state: FlowState, dt: float, dt_min: float = DT_MIN) -> FlowState:
    """
    One RK4 step of size ``dt``, halved as often as needed.

    The returned state's ``last_dt`` is the step that was accepted.

    Raises:
        StepUnderflowError: if no step ≥ ``dt_min`` keeps the body valid
    """
    if dt <= 0:
        raise ValueError(f"Step must be positive, got {dt}")

    trial = dt
    while trial >= dt_min:
        try:
            body = _advance(state, trial)
        except (ValueError, ZeroDivisionError) as e:
            logger.warning(f"Step {trial:.3e} at t={state.t:.6g} rejected ({e}), halving")
            trial /= 2
            continue
        logger.debug(f"Accepted step {trial:.3e} at t={state.t:.6g}")
        return replace(
            state, body=body, t=state.t + trial, last_dt=trial, steps=state.steps + 1
        )
    raise StepUnderflowError(f"Step size fell below {dt_min:g} at t={state.t:.9g}")


def evolution_check(body: ConvexBody, f: ScalarField, dt: float) -> float:
    """
    Compare a central difference of K along ∂_t s = -f with K h^{ij} A[f]_ij.

    The body is moved to s ∓ dt·f (the exact solution for a fixed f) and
    (K(t+dt) - K(t-dt)) / 2dt is compared node by node.

    Returns:
        The sup-norm of the discrepancy

    Raises:
        ConvexityError: if either shifted body leaves the convex cone
    """
    check_same_grid(body.support, f)
    s = body.support
    try:
        ahead = _curvature(s - dt * f)
        behind = _curvature(s + dt * f)
    except CurvatureError as e:
        raise ConvexityError(f"Convexity lost in the central difference, reduce dt ({dt:g})") from e

    finite = (ahead - behind) / (2 * dt)
    K = _curvature(s)
    exact = K.values * body.second_form.inverse().contract(support_operator(f))
    return float(np.abs(finite.values - exact).max())


def isoperimetric_ratio(
    body: ConvexBody, p: float, phi: ScalarField | None = None
) -> float:
    """
    ∫ Φ (s/K)(K/s^{n+1})^{p/(n+p)} dμ / Vol^{(n-p)/(n+p)}.

    Invariant under scaling; constant on balls.
    """
    require_interior_origin(body)
    n = body.dim
    s = body.support
    K = ScalarField(body.grid, 1.0 / body.second_form.det_g())
    integrand = s / K * (K / s ** (n + 1)) ** (p / (n + p))
    if phi is not None:
        integrand = integrand * phi
    return sphere_integral(integrand) / volume(body) ** ((n - p) / (n + p))


def p_affine_ratio(state: FlowState) -> float:
    """The (weighted) p-affine isoperimetric ratio of the current body."""
    params = state.params
    phi = params.phi if params.kind == FlowKind.WEIGHTED_P_CENTRO_AFFINE else None
    return isoperimetric_ratio(state.body, params.p, phi)


def lminusn_residual(body: ConvexBody, psi: ScalarField) -> float:
    """‖s^{n+1}/K - Ψ‖_∞, the residual of the L₋ₙ Minkowski problem."""
    require_interior_origin(body)
    check_same_grid(body.support, psi)
    n = body.dim
    values = body.support.values ** (n + 1) * body.second_form.det_g()
    return float(np.abs(values - psi.values).max())


def _spectral_radius(grid: SphereGrid) -> float:
    if grid.dim == 2:
        return (grid.resolution / 2) ** 2
    # largest |Δ̂| eigenvalue of the colatitude bases, degrees up to 2B - 1
    top = 2 * grid.resolution - 1
    return top * (top + 1.0)


def suggest_dt(state: FlowState, cfl: float = STEP_CFL) -> float:
    """
    Explicit step estimate from the linearised diffusion coefficient.

    Linearising the speed in s gives a diffusion operator with coefficient
    q·|speed|·h^{ij}; its largest eigenvalue times the grid's spectral radius
    bounds the stiffness.
    """
    params = state.params
    n = state.body.dim
    q = 1.0 / (n + 1) if params.kind == FlowKind.WEIGHTED_AFFINE else params.p / (params.p + n)
    speed = np.abs(rhs(state).values)
    radii = state.body.second_form.frame_eigenvalues().min(axis=-1)
    diffusion = q * float(np.max(speed / radii))
    return cfl * RK4_STABILITY / (diffusion * _spectral_radius(state.grid))


def step_size(state: FlowState, dt0: float = 0.0) -> float:
    """
    The step :func:`integrate` takes from ``state``.

    ``dt0 <= 0`` gives :func:`suggest_dt`. A requested step above the
    stability limit (the estimate at cfl 1) is replaced by the estimate.
    """
    limit = suggest_dt(state, cfl=1.0)
    estimate = STEP_CFL * limit
    if dt0 <= 0:
        return estimate
    if dt0 > limit:
        logger.warning(
            f"Requested step {dt0:.3e} exceeds the stability limit {limit:.3e} on "
            f"{state.body.name}, using {estimate:.3e}"
        )
        return estimate
    return dt0


@dataclass(frozen=True)
class TraceRow:
    t: float
    volume: float
    ratio: float
    min_margin: float
    min_s: float
    residual: float | None = None


@dataclass
class FlowTrace:
    """
    Time series of a flow run; rows are appended with strictly increasing t.

    ``step_deltas`` holds the ratio change of every accepted step relative
    to the ratio before the step.
    """

    normalization: Normalization
    rows: list[TraceRow] = field(default_factory=list)
    step_deltas: list[float] = field(default_factory=list)
    min_ratio_delta: float = math.inf
    extinct: bool = False

    def record(self, state: FlowState, psi: ScalarField | None = None) -> TraceRow:
        if self.rows and state.t <= self.rows[-1].t:
            raise ValueError(f"Trace time must increase, got {state.t} after {self.rows[-1].t}")
        body = state.body
        row = TraceRow(
            t=state.t,
            volume=volume(body),
            ratio=p_affine_ratio(state),
            min_margin=body.margin,
            min_s=body.support.min(),
            residual=None if psi is None else lminusn_residual(body, psi),
        )
        self.rows.append(row)
        return row

    @property
    def has_residual(self) -> bool:
        return any(row.residual is not None for row in self.rows)

    def monotone(self, tol: float = MONOTONE_TOL) -> bool:
        return all(delta >= -tol for delta in self.step_deltas)

    @property
    def steps(self) -> int:
        return len(self.step_deltas)


def integrate(
    state: FlowState,
    t_end: float,
    dt0: float = 0.0,
    record_every: int = 1,
    psi: ScalarField | None = None,
    dt_min: float = DT_MIN,
) -> tuple[FlowState, FlowTrace]:
    """
    Run the flow until ``t_end`` or until the step size underflows.

    Args:
        state: initial state
        t_end: final time
        dt0: requested step; 0 uses :func:`suggest_dt`, larger than the
            stability limit falls back to it (see :func:`step_size`)
        record_every: record a trace row every this many accepted steps
            (the final state is always recorded)
        psi: target Ψ for the L₋ₙ residual column
        dt_min: smallest step before the run is reported as extinct

    Returns:
        The final state and the trace
    """
    trace = FlowTrace(normalization=state.params.normalization)
    trace.record(state, psi)
    base = step_size(state, dt0)
    logger.info(f"Running {state.params.kind} flow on {state.body.name} to t={t_end:g}, dt={base:.3e}")

    dt = base
    ratio = trace.rows[-1].ratio
    since_record = 0
    while t_end - state.t > dt_min:
        request = min(dt, t_end - state.t)
        try:
            state = step(state, request, dt_min)
        except StepUnderflowError as e:
            logger.warning(f"Flow stopped: {e}")
            trace.extinct = True
            break

        updated = p_affine_ratio(state)
        trace.min_ratio_delta = min(trace.min_ratio_delta, updated - ratio)
        trace.step_deltas.append((updated - ratio) / abs(ratio))
        ratio = updated

        if state.last_dt < request:
            dt = state.last_dt
        else:
            # grow back after a halving, re-estimating as the body shrinks
            if dt0 <= 0:
                base = suggest_dt(state)
            dt = min(base, 2 * dt)
        since_record += 1
        if since_record >= record_every or t_end - state.t <= dt_min:
            trace.record(state, psi)
            since_record = 0

    if since_record:
        trace.record(state, psi)
    return state, trace


def named_field(name: str, grid: SphereGrid) -> ScalarField:
    """
    A weight or target field from a short name or a field file.

    Names: ``one``; ``cos4:<eps>`` (1 + ε cos 4θ on the circle, 1 + ε Re (x+iy)⁴
    on the sphere); ``cos2k:<k>:<eps>`` likewise with 2k; ``sphere-z2:<eps>``
    (1 + ε z_n²). Anything else is read as a field file.
    """
    head, _, tail = name.partition(":")
    try:
        if name == "one":
            return ScalarField.constant(grid, 1.0)
        if head == "cos4":
            return _cosine_weight(grid, 2, float(tail))
        if head == "cos2k":
            k, eps = tail.split(":")
            return _cosine_weight(grid, int(k), float(eps))
        if head == "sphere-z2":
            return 1.0 + float(tail) * ScalarField(grid, grid.normals[-1] ** 2)
    except ValueError as e:
        raise ValueError(f"Invalid field name {name!r}: {e}") from e
    return load_field(Path(name), grid)


def _cosine_weight(grid: SphereGrid, k: int, eps: float) -> ScalarField:
    x, y = grid.normals[0], grid.normals[1]
    wave: Array = np.real((x + 1j * y) ** (2 * k))
    return 1.0 + eps * ScalarField(grid, wave)


def fixed_weight(F: ScalarField) -> WeightCallback:
    """A weighted-affine-flow weight that does not depend on the body."""

    def weight(support: ScalarField) -> ScalarField:
        check_same_grid(support, F)
        return F

    return weight
