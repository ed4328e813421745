#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""
Seeded corpora of bodies and test functions.

Everything here is a pure function of its arguments: the same seed on two
grids of different resolution gives the same underlying functions, which is
what the convergence studies rely on.
"""

import logging
from collections.abc import Callable

import numpy as np

from .affine import AffineData
from .body import ConvexBody, make_ball, make_ellipsoid, make_random_body
from .sphere import ScalarField, SphereGrid, harmonic_basis, synthesize
from .wirtinger import equality_witness

logger = logging.getLogger("ovaloid.corpus")

CORPUS_KINDS = ("ball", "ellipsoid", "random", "mixed")

BALL_RADII = (1.0, 0.5, 2.0, 1.5, 3.0)

# translation part of equality witnesses, |vᵢ| ≤ this
WITNESS_SHIFT = 0.3

# (body id, generated body or field)
Named = tuple[str, ScalarField]


def random_bodies(
    grid: SphereGrid,
    count: int,
    seed: int,
    bandlimit: int = 4,
    amplitude: float = 0.1,
    symmetric: bool = False,
) -> list[ConvexBody]:
    """``count`` random bodies; body i uses seed ``seed + i``."""
    return [
        make_random_body(seed + i, bandlimit, amplitude, grid, symmetric)
        for i in range(count)
    ]


def _ellipsoid(grid: SphereGrid, seed: int) -> ConvexBody:
    rng = np.random.default_rng(seed)
    axes = rng.uniform(0.8, 1.25, grid.dim)
    return make_ellipsoid(axes, grid)


def body_corpus(
    kind: str,
    grid: SphereGrid,
    count: int,
    seed: int,
    bandlimit: int = 4,
    amplitude: float = 0.1,
    symmetric: bool = False,
) -> list[ConvexBody]:
    """
    Bodies of one kind: ``ball``, ``ellipsoid``, ``random``, or ``mixed``
    (cycling through the other three).

    Raises:
        ValueError: for an unknown kind
    """
    makers: dict[str, Callable[[int], ConvexBody]] = {
        "ball": lambda i: make_ball(BALL_RADII[i % len(BALL_RADII)], grid),
        "ellipsoid": lambda i: _ellipsoid(grid, seed + i),
        "random": lambda i: make_random_body(seed + i, bandlimit, amplitude, grid, symmetric),
    }
    if kind == "mixed":
        order = ("ball", "ellipsoid", "random")
        bodies = [makers[order[i % 3]](i) for i in range(count)]
    elif kind in makers:
        bodies = [makers[kind](i) for i in range(count)]
    else:
        raise ValueError(f"Unknown corpus {kind!r}, expected one of {', '.join(CORPUS_KINDS)}")

    # distinct ids even when two bodies share a constructor name
    return [body.renamed(f"{i:03d}-{body.name}") for i, body in enumerate(bodies)]


def random_functions(
    grid: SphereGrid, count: int, seed: int, bandlimit: int = 4
) -> list[Named]:
    """Bandlimited test functions with normal coefficients decaying like 1/(1+l)."""
    rng = np.random.default_rng(seed)
    labels, _ = harmonic_basis(grid, bandlimit)
    degrees = np.array([label[0] for label in labels], dtype=float)
    functions = []
    for i in range(count):
        coeffs = rng.standard_normal(len(labels)) / (1.0 + degrees)
        functions.append((f"f{i}", synthesize(grid, coeffs)))
    return functions


def equality_functions(
    body: ConvexBody, data: AffineData, count: int, seed: int
) -> list[Named]:
    """
    Equality cases F = (c·s + ⟨v, z⟩)/K^{1/(n+1)}; the first is the pure
    homothety c = 1, v = 0.
    """
    rng = np.random.default_rng(seed)
    cases = [(1.0, np.zeros(body.dim))]
    for _ in range(count - 1):
        c = float(rng.uniform(-1.0, 1.0))
        v = rng.uniform(-WITNESS_SHIFT, WITNESS_SHIFT, body.dim)
        cases.append((c, v))
    return [
        (f"eq{i}", equality_witness(body, c, v, data=data))
        for i, (c, v) in enumerate(cases[:count])
    ]


def scalar_shift_functions(
    body: ConvexBody, data: AffineData, shifts: tuple[float, ...] = (0.5, 1.0)
) -> list[Named]:
    """F = (s + d)/K^{1/(n+1)} for the scalar shifts d."""
    return [
        (f"d{d:g}", equality_witness(body, 1.0, np.zeros(body.dim), d=d, data=data))
        for d in shifts
    ]


def minkowski_witnesses(body: ConvexBody, count: int, seed: int) -> list[Named]:
    """h = c·s + ⟨v, z⟩, the equality cases of Minkowski's inequality."""
    rng = np.random.default_rng(seed)
    witnesses = []
    for i in range(count):
        c = float(rng.uniform(0.2, 2.0))
        v = rng.uniform(-WITNESS_SHIFT, WITNESS_SHIFT, body.dim)
        witnesses.append((f"h{i}", c * body.support + ScalarField.linear(body.grid, v)))
    return witnesses
