#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: geometry.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Polytopes, lazy set expressions and the set algebra built on them.

Polytopes are stored in half-space representation ``{x : F x <= g}`` with
unit-norm rows. Vertex lists are only computed for ambient dimensions up to
`~cascadegov.constants.MAX_VREP_DIM`; larger or implicitly defined sets are
handled as `.SetExpr` trees that only expose support functions.

"""

from __future__ import annotations

import itertools
import re

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .constants import MAX_VREP_DIM, TOL_CONTAINS, TOL_DEDUP, TOL_FLAT, TOL_REDUNDANT
from .exceptions import (
    DimensionError,
    EmptySetError,
    GeometryError,
    InfeasibleError,
    UnboundedError,
)


__all__ = [
    "SetExpr",
    "Polytope",
    "Ball",
    "AffineImage",
    "MinkowskiSum",
    "solve_lp",
    "support",
    "pontryagin_diff",
    "minkowski_sum",
    "affine_image",
    "vertices",
    "hull_hrep",
    "contains",
    "is_empty",
    "is_redundant",
    "reduce_hrep",
    "chebyshev_ball",
    "bounding_box",
    "intersect",
    "cartesian_product",
    "is_subset",
    "dedup_points",
    "dedup_rows",
    "sample_points",
    "format_polytope",
    "parse_polytopes",
]


#: Row norms below this are treated as zero rows.
ZERO_ROW = 1e-12

#: Polytopes with a smaller Chebyshev radius are handled as flat sets.
FLAT_RADIUS = 1e-6


class SetExpr(object):
    """A bounded convex set known through its support function."""

    dim: int

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        """Evaluates the support function for each row of ``directions``."""

        raise NotImplementedError()

    def support(self, direction) -> float:
        """Returns ``max d.x`` over the set."""

        direction = numpy.asarray(direction, dtype=float).reshape(1, -1)
        if direction.shape[1] != self.dim:
            raise DimensionError("direction has the wrong dimension.")

        return float(self.support_batch(direction)[0])

    def __add__(self, other: SetExpr) -> MinkowskiSum:
        return MinkowskiSum([self, other])

    def map(self, M) -> AffineImage:
        """Returns the lazy image of the set under ``x -> M x``."""

        return AffineImage(M, self)


class Polytope(SetExpr):
    """A convex polytope ``{x : F x <= g}``.

    Rows are normalised to unit Euclidean norm on construction. Zero rows are
    dropped if satisfied (``0 <= g``) and turn the polytope into a canonical
    empty set otherwise.

    Parameters
    ----------
    F
        The ``(m, n)`` matrix of half-space normals.
    g
        The ``m`` offsets.
    vertices
        Optional list of extreme points. Callers must ensure they reproduce
        the half-space representation.
    dim
        The ambient dimension. Only needed if ``F`` has no rows.

    """

    def __init__(
        self,
        F,
        g,
        vertices: Optional[numpy.ndarray] = None,
        dim: Optional[int] = None,
    ):
        F = numpy.array(F, dtype=float)
        g = numpy.array(g, dtype=float).ravel()

        if F.ndim != 2:
            if F.size == 0 and dim is not None:
                F = F.reshape(0, dim)
            else:
                raise DimensionError("F must be a two-dimensional array.")

        if F.shape[0] != g.size:
            raise DimensionError("F and g have a different number of rows.")
        if dim is not None and F.shape[1] != dim:
            raise DimensionError(f"F has {F.shape[1]} columns, expected {dim}.")
        if not (numpy.all(numpy.isfinite(F)) and numpy.all(numpy.isfinite(g))):
            raise DimensionError("polytope data is not finite.")

        self.dim = int(F.shape[1])

        norms = numpy.linalg.norm(F, axis=1)
        zero = norms <= ZERO_ROW

        if numpy.any(g[zero] < -TOL_FLAT):
            # Canonical empty set.
            F = numpy.zeros((2, self.dim))
            F[0, 0], F[1, 0] = 1.0, -1.0
            g = numpy.array([-1.0, -1.0])
            vertices = numpy.empty((0, self.dim))
        else:
            F = F[~zero] / norms[~zero, None]
            g = g[~zero] / norms[~zero]

        self.F: numpy.ndarray = F
        self.g: numpy.ndarray = g

        self.F.setflags(write=False)
        self.g.setflags(write=False)

        self._vertices: Optional[numpy.ndarray] = None
        if vertices is not None:
            vertices = numpy.array(vertices, dtype=float).reshape(-1, self.dim)
            vertices.setflags(write=False)
            self._vertices = vertices

    @classmethod
    def box(cls, lower, upper) -> Polytope:
        """Returns the axis-aligned box ``lower <= x <= upper``."""

        lower = numpy.atleast_1d(numpy.array(lower, dtype=float))
        upper = numpy.atleast_1d(numpy.array(upper, dtype=float))
        lower, upper = numpy.broadcast_arrays(lower, upper)

        if numpy.any(lower > upper):
            raise EmptySetError("box has lower bounds above the upper bounds.")

        n = lower.size
        F = numpy.vstack([numpy.eye(n), -numpy.eye(n)])
        g = numpy.concatenate([upper, -lower])

        verts = None
        if n <= MAX_VREP_DIM:
            corners = itertools.product(*zip(lower, upper))
            verts = dedup_points(numpy.array(list(corners), dtype=float))

        return cls(F, g, vertices=verts)

    @classmethod
    def symmetric_box(cls, half_widths) -> Polytope:
        """Returns the box ``|x_i| <= half_widths_i``."""

        half_widths = numpy.atleast_1d(numpy.abs(numpy.array(half_widths, dtype=float)))

        return cls.box(-half_widths, half_widths)

    @classmethod
    def point(cls, x) -> Polytope:
        """Returns the singleton ``{x}``."""

        return cls.box(x, x)

    @classmethod
    def zero(cls, dim: int) -> Polytope:
        """Returns ``{0}`` in ``dim`` dimensions."""

        return cls.point(numpy.zeros(dim))

    @property
    def n_facets(self) -> int:
        """Number of half-spaces."""

        return int(self.F.shape[0])

    @property
    def vertices_cache(self) -> Optional[numpy.ndarray]:
        """The cached vertex list, if any."""

        return self._vertices

    def with_vertices(self) -> Polytope:
        """Returns a copy with the vertex list computed and cached."""

        if self._vertices is not None:
            return self

        return Polytope(self.F, self.g, vertices=vertices(self))

    def contains(self, x, tol: float = TOL_CONTAINS) -> bool:
        """Returns `True` if ``F x <= g + tol``."""

        return contains(self, x, tol=tol)

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        directions = numpy.atleast_2d(numpy.asarray(directions, dtype=float))

        if self._vertices is not None:
            if self._vertices.shape[0] == 0:
                raise EmptySetError("support function of an empty set.")
            return numpy.max(directions @ self._vertices.T, axis=1)

        return numpy.array([solve_lp(dd, self)[0] for dd in directions])

    def scale(self, factor: float) -> Polytope:
        """Returns ``factor * P`` for ``factor > 0``."""

        if factor <= 0:
            raise ValueError("scale factor must be positive.")

        verts = None if self._vertices is None else factor * self._vertices

        return Polytope(self.F, factor * self.g, vertices=verts)

    def __repr__(self):
        nv = "?" if self._vertices is None else self._vertices.shape[0]
        return f"<Polytope (dim={self.dim}, facets={self.n_facets}, vertices={nv})>"


class Ball(SetExpr):
    """Euclidean ball of radius ``radius`` centred at the origin."""

    def __init__(self, radius: float, dim: int):
        if radius < 0:
            raise ValueError("ball radius must be non-negative.")

        self.radius = float(radius)
        self.dim = int(dim)

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        directions = numpy.atleast_2d(numpy.asarray(directions, dtype=float))
        return self.radius * numpy.linalg.norm(directions, axis=1)

    def __repr__(self):
        return f"<Ball (dim={self.dim}, radius={self.radius:g})>"


class AffineImage(SetExpr):
    """The image ``M S`` of a set expression under a linear map."""

    def __init__(self, M, expr: SetExpr):
        M = numpy.atleast_2d(numpy.array(M, dtype=float))

        if M.shape[1] != expr.dim:
            raise DimensionError(
                f"map has {M.shape[1]} columns but the set has dimension {expr.dim}."
            )

        self.M = M
        self.expr = expr
        self.dim = int(M.shape[0])

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        directions = numpy.atleast_2d(numpy.asarray(directions, dtype=float))
        return self.expr.support_batch(directions @ self.M)

    def __repr__(self):
        return f"<AffineImage (dim={self.dim}, of={self.expr!r})>"


class MinkowskiSum(SetExpr):
    """A lazy Minkowski sum of set expressions."""

    def __init__(self, terms: Iterable[SetExpr]):
        flat: List[SetExpr] = []
        for term in terms:
            if isinstance(term, MinkowskiSum):
                flat.extend(term.terms)
            else:
                flat.append(term)

        if len(flat) == 0:
            raise ValueError("a Minkowski sum needs at least one term.")

        dims = {term.dim for term in flat}
        if len(dims) != 1:
            raise DimensionError(f"inconsistent dimensions in Minkowski sum: {dims}.")

        self.terms = flat
        self.dim = dims.pop()

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        directions = numpy.atleast_2d(numpy.asarray(directions, dtype=float))
        supports = [term.support_batch(directions) for term in self.terms]
        return numpy.sum(supports, axis=0)

    def __repr__(self):
        return f"<MinkowskiSum (dim={self.dim}, terms={len(self.terms)})>"


def _check_lp_status(res, what: str = "linear program"):
    if res.status == 0:
        return
    if res.status == 2:
        raise InfeasibleError(f"{what} is infeasible.")
    if res.status == 3:
        raise UnboundedError(f"{what} is unbounded.")

    raise GeometryError(f"{what} failed: {res.message}")


def solve_lp(objective, region: Polytope) -> Tuple[float, numpy.ndarray]:
    """Maximises ``c.x`` over a polytope.

    Returns
    -------
    value, argmax
        The optimal value and a maximiser.

    Raises
    ------
    InfeasibleError
        If the polytope is empty.
    UnboundedError
        If the objective is unbounded over the polytope.

    """

    c = numpy.asarray(objective, dtype=float).ravel()
    if c.size != region.dim:
        raise DimensionError("objective and region have different dimensions.")

    if region.n_facets == 0:
        if numpy.any(c != 0):
            raise UnboundedError("linear program over the whole space is unbounded.")
        return 0.0, numpy.zeros(region.dim)

    res = linprog(
        -c,
        A_ub=region.F,
        b_ub=region.g,
        bounds=[(None, None)] * region.dim,
        method="highs",
    )
    _check_lp_status(res)

    x = numpy.asarray(res.x, dtype=float)

    return float(c @ x), x


def support(S: SetExpr, direction) -> float:
    """Returns the support function of a set expression in a direction."""

    return S.support(direction)


def pontryagin_diff(P: Polytope, S: SetExpr) -> Polytope:
    """Returns ``P ⊖ S = {x : x + s ∈ P for all s ∈ S}``.

    The result keeps the rows of ``P`` and shrinks each offset by the support
    of ``S`` in the direction of the row. Emptiness is not checked here.

    """

    if P.dim != S.dim:
        raise DimensionError(f"cannot subtract a {S.dim}-D set from a {P.dim}-D one.")

    if P.n_facets == 0:
        return P

    h = S.support_batch(P.F)

    return Polytope(P.F, P.g - h, dim=P.dim)


def _check_vrep_dim(dim: int):
    if dim > MAX_VREP_DIM:
        raise DimensionError(
            f"vertex representations are limited to {MAX_VREP_DIM} dimensions "
            f"(got {dim}); use a lazy set expression instead."
        )


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    """Returns ``P ⊕ Q`` from the hull of the pairwise vertex sums."""

    if P.dim != Q.dim:
        raise DimensionError("Minkowski sum of sets with different dimensions.")
    _check_vrep_dim(P.dim)

    VP = vertices(P)
    VQ = vertices(Q)
    if VP.shape[0] == 0 or VQ.shape[0] == 0:
        raise EmptySetError("Minkowski sum with an empty set.")

    sums = (VP[:, None, :] + VQ[None, :, :]).reshape(-1, P.dim)

    return hull_hrep(sums)


def affine_image(M, P: Polytope) -> Polytope:
    """Returns ``{M x : x ∈ P}`` from the hull of the mapped vertices.

    Rank-deficient maps give flat sets, encoded with paired inequalities.

    """

    M = numpy.atleast_2d(numpy.array(M, dtype=float))
    if M.shape[1] != P.dim:
        raise DimensionError("map and polytope have incompatible dimensions.")
    _check_vrep_dim(M.shape[0])

    V = vertices(P)
    if V.shape[0] == 0:
        raise EmptySetError("affine image of an empty set.")

    return hull_hrep(V @ M.T)


def dedup_points(points, tol: float = TOL_DEDUP) -> numpy.ndarray:
    """Removes points closer than ``tol`` to a previously kept point."""

    points = numpy.atleast_2d(numpy.asarray(points, dtype=float))
    if points.shape[0] <= 1:
        return points.copy()

    kept = [points[0]]
    for point in points[1:]:
        if numpy.min(numpy.max(numpy.abs(numpy.array(kept) - point), axis=1)) > tol:
            kept.append(point)

    return numpy.array(kept)


def dedup_rows(F, g, tol: float = TOL_DEDUP) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Merges parallel half-spaces, keeping the tightest offset.

    Rows are assumed to be normalised.

    """

    F = numpy.atleast_2d(numpy.asarray(F, dtype=float))
    g = numpy.asarray(g, dtype=float).ravel()

    kept_F: List[numpy.ndarray] = []
    kept_g: List[float] = []

    for row, offset in zip(F, g):
        if kept_F:
            dots = numpy.array(kept_F) @ row
            match = numpy.flatnonzero(dots > 1.0 - tol)
            if match.size > 0:
                jj = int(match[0])
                kept_g[jj] = min(kept_g[jj], float(offset))
                continue
        kept_F.append(row)
        kept_g.append(float(offset))

    if not kept_F:
        return numpy.zeros((0, F.shape[1])), numpy.zeros(0)

    return numpy.array(kept_F), numpy.array(kept_g)


def chebyshev_ball(P: Polytope) -> Tuple[numpy.ndarray, float]:
    """Returns the centre and radius of the largest ball inside ``P``."""

    n = P.dim
    if P.n_facets == 0:
        raise UnboundedError("the whole space has no Chebyshev ball.")

    c = numpy.zeros(n + 1)
    c[-1] = -1.0

    A = numpy.hstack([P.F, numpy.linalg.norm(P.F, axis=1)[:, None]])
    bounds = [(None, None)] * n + [(0, None)]

    res = linprog(c, A_ub=A, b_ub=P.g, bounds=bounds, method="highs")
    if res.status == 2:
        raise EmptySetError("polytope is empty.")
    _check_lp_status(res, "Chebyshev ball")

    return numpy.asarray(res.x[:n], dtype=float), float(res.x[-1])


def bounding_box(P: Polytope) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Returns the lower and upper corners of the smallest enclosing box."""

    if P.vertices_cache is not None and P.vertices_cache.shape[0] > 0:
        return P.vertices_cache.min(axis=0), P.vertices_cache.max(axis=0)

    eye = numpy.eye(P.dim)
    upper = numpy.array([solve_lp(eye[ii], P)[0] for ii in range(P.dim)])
    lower = numpy.array([-solve_lp(-eye[ii], P)[0] for ii in range(P.dim)])

    return lower, upper


def is_empty(P: Polytope) -> bool:
    """Returns `True` if the polytope has no points."""

    if P.vertices_cache is not None:
        return P.vertices_cache.shape[0] == 0

    if P.n_facets == 0:
        return False

    res = linprog(
        numpy.zeros(P.dim),
        A_ub=P.F,
        b_ub=P.g,
        bounds=[(None, None)] * P.dim,
        method="highs",
    )

    if res.status == 2:
        return True
    _check_lp_status(res, "feasibility problem")

    return False


def is_redundant(P: Polytope, row, offset: float, tol: float = TOL_REDUNDANT) -> bool:
    """Returns `True` if ``row.x <= offset`` holds everywhere on ``P``."""

    row = numpy.asarray(row, dtype=float).ravel()
    norm = numpy.linalg.norm(row)
    if norm <= ZERO_ROW:
        return offset >= -tol

    try:
        value, _ = solve_lp(row / norm, P)
    except UnboundedError:
        return False
    except InfeasibleError:
        return True

    return value <= offset / norm + tol


def contains(P: Polytope, x, tol: float = TOL_CONTAINS) -> bool:
    """Returns `True` if ``F x <= g + tol`` componentwise."""

    x = numpy.asarray(x, dtype=float).ravel()
    if x.size != P.dim:
        raise DimensionError("point and polytope have different dimensions.")

    if P.n_facets == 0:
        return True

    return bool(numpy.all(P.F @ x <= P.g + tol))


def _interval_vertices(P: Polytope) -> numpy.ndarray:
    f = P.F[:, 0]
    upper = numpy.min(P.g[f > 0] / f[f > 0]) if numpy.any(f > 0) else numpy.inf
    lower = numpy.max(P.g[f < 0] / f[f < 0]) if numpy.any(f < 0) else -numpy.inf

    if not (numpy.isfinite(upper) and numpy.isfinite(lower)):
        raise UnboundedError("interval is unbounded.")
    if lower > upper + TOL_FLAT:
        return numpy.empty((0, 1))

    return dedup_points(numpy.array([[lower], [max(lower, upper)]]))


def _flat_vertices(P: Polytope) -> numpy.ndarray:
    """Vertices of a polytope with an empty or near-empty interior.

    The affine hull is estimated from LP maximisers, the polytope is restricted
    to it and its vertices are lifted back.

    """

    n = P.dim
    rng = numpy.random.default_rng(0)
    directions = numpy.vstack(
        [numpy.eye(n), -numpy.eye(n), rng.standard_normal((2 * n, n))]
    )

    samples = numpy.array([solve_lp(dd, P)[1] for dd in directions])
    center = samples.mean(axis=0)

    _, sing, vt = numpy.linalg.svd(samples - center)
    rank = int(numpy.sum(sing > 1e-5 * max(1.0, sing[0])))

    if rank == 0:
        return center.reshape(1, n)

    basis = vt[:rank].T
    F_red = P.F @ basis
    g_red = P.g - P.F @ center

    keep = numpy.linalg.norm(F_red, axis=1) > FLAT_RADIUS
    reduced = Polytope(F_red[keep], g_red[keep], dim=rank)

    V_red = vertices(reduced)

    return dedup_points(center + V_red @ basis.T)


def vertices(P: Polytope) -> numpy.ndarray:
    """Returns the extreme points of a bounded polytope.

    Returns the cached list if available. Vertices are deduplicated at
    `~cascadegov.constants.TOL_DEDUP`. An empty polytope returns an empty
    ``(0, n)`` array.

    Raises
    ------
    UnboundedError
        If the polytope is unbounded.

    """

    if P.vertices_cache is not None:
        return P.vertices_cache.copy()

    _check_vrep_dim(P.dim)

    if P.n_facets == 0:
        raise UnboundedError("the whole space has no vertices.")

    if is_empty(P):
        return numpy.empty((0, P.dim))

    if P.dim == 1:
        return _interval_vertices(P)

    # Raises UnboundedError for unbounded polytopes.
    bounding_box(P)

    center, radius = chebyshev_ball(P)
    if radius <= FLAT_RADIUS:
        return _flat_vertices(P)

    halfspaces = numpy.hstack([P.F, -P.g[:, None]])
    try:
        hs = HalfspaceIntersection(halfspaces, center)
    except QhullError:
        return _flat_vertices(P)

    points = hs.intersections
    points = points[numpy.all(numpy.isfinite(points), axis=1)]

    return dedup_points(points)


def _hull(points: numpy.ndarray) -> ConvexHull:
    try:
        return ConvexHull(points)
    except QhullError:
        return ConvexHull(points, qhull_options="QJ")


def hull_hrep(points, tol_flat: float = TOL_FLAT) -> Polytope:
    """Returns the minimal half-space representation of ``conv(points)``.

    Point sets spanning a proper affine subspace are encoded with paired
    inequalities ``±v.x <= ±v.c + tol_flat`` for each normal ``v`` of the
    subspace, plus the facets of the hull within the subspace.

    """

    V = dedup_points(points)
    if V.size == 0:
        raise EmptySetError("convex hull of an empty point set.")

    k, n = V.shape
    _check_vrep_dim(n)

    center = V.mean(axis=0)

    if k == 1:
        rank = 0
        vt = numpy.eye(n)
    else:
        _, sing, vt = numpy.linalg.svd(V - center)
        rank = int(numpy.sum(sing > 1e-9 * max(1.0, sing[0])))

    basis = vt[:rank].T
    normals = vt[rank:].T

    F_rows: List[numpy.ndarray] = []
    g_rows: List[float] = []

    for nn in normals.T:
        offset = float(nn @ center)
        F_rows += [nn, -nn]
        g_rows += [offset + tol_flat, -offset + tol_flat]

    if rank == 0:
        extreme = center.reshape(1, n)
    else:
        Y = (V - center) @ basis
        if rank == 1:
            imin, imax = int(numpy.argmin(Y[:, 0])), int(numpy.argmax(Y[:, 0]))
            bb = basis[:, 0]
            F_rows += [bb, -bb]
            g_rows += [
                float(Y[imax, 0] + bb @ center),
                float(-Y[imin, 0] - bb @ center),
            ]
            extreme = V[[imin, imax]]
        else:
            hull = _hull(Y)
            for eq in hull.equations:
                normal = basis @ eq[:-1]
                F_rows.append(normal)
                g_rows.append(float(-eq[-1] + normal @ center))
            extreme = V[numpy.sort(hull.vertices)]

    F = numpy.array(F_rows).reshape(-1, n)
    g = numpy.array(g_rows)

    norms = numpy.linalg.norm(F, axis=1)
    F, g = dedup_rows(F / norms[:, None], g / norms)

    return Polytope(F, g, vertices=dedup_points(extreme))


def reduce_hrep(P: Polytope, tol: float = TOL_REDUNDANT) -> Polytope:
    """Removes redundant half-spaces, solving one LP per row.

    Each row is maximised over the polytope formed by the remaining rows plus
    the row itself relaxed by one unit, which keeps the LP bounded.

    """

    if P.n_facets == 0:
        return P

    F, g = dedup_rows(P.F, P.g)
    keep = numpy.ones(F.shape[0], dtype=bool)

    for ii in range(F.shape[0]):
        mask = keep.copy()
        mask[ii] = False

        test = Polytope(
            numpy.vstack([F[mask], F[ii]]),
            numpy.concatenate([g[mask], [g[ii] + 1.0]]),
            dim=P.dim,
        )

        try:
            value, _ = solve_lp(F[ii], test)
        except InfeasibleError:
            return P
        except UnboundedError:
            continue

        if value <= g[ii] + tol:
            keep[ii] = False

    return Polytope(F[keep], g[keep], vertices=P.vertices_cache, dim=P.dim)


def intersect(P: Polytope, Q: Polytope) -> Polytope:
    """Returns ``P ∩ Q``."""

    if P.dim != Q.dim:
        raise DimensionError("intersection of sets with different dimensions.")

    return Polytope(
        numpy.vstack([P.F, Q.F]),
        numpy.concatenate([P.g, Q.g]),
        dim=P.dim,
    )


def cartesian_product(P: Polytope, Q: Polytope) -> Polytope:
    """Returns ``P × Q``."""

    F = numpy.block(
        [
            [P.F, numpy.zeros((P.n_facets, Q.dim))],
            [numpy.zeros((Q.n_facets, P.dim)), Q.F],
        ]
    )
    g = numpy.concatenate([P.g, Q.g])

    verts = None
    VP, VQ = P.vertices_cache, Q.vertices_cache
    if VP is not None and VQ is not None and P.dim + Q.dim <= MAX_VREP_DIM:
        verts = numpy.array([numpy.concatenate([vp, vq]) for vp in VP for vq in VQ])
        verts = verts.reshape(-1, P.dim + Q.dim)

    return Polytope(F, g, vertices=verts, dim=P.dim + Q.dim)


def is_subset(S: SetExpr, P: Polytope, tol: float = TOL_CONTAINS) -> bool:
    """Returns `True` if the set expression ``S`` is contained in ``P``."""

    if S.dim != P.dim:
        raise DimensionError("containment of sets with different dimensions.")

    if P.n_facets == 0:
        return True

    return bool(numpy.all(S.support_batch(P.F) <= P.g + tol))


def sample_points(P: Polytope, n_samples: int, rng=None) -> numpy.ndarray:
    """Draws random points in ``P`` as Dirichlet combinations of its vertices.

    The vertices themselves are always included first.

    """

    rng = rng if rng is not None else numpy.random.default_rng(0)

    V = vertices(P)
    if V.shape[0] == 0:
        raise EmptySetError("cannot sample an empty set.")

    n_random = max(n_samples - V.shape[0], 0)
    weights = rng.dirichlet(numpy.full(V.shape[0], 0.5), size=n_random)

    return numpy.vstack([V, weights @ V])[:n_samples]


def format_polytope(P: Polytope, name: str) -> str:
    """Serialises a polytope to the plain-text set format.

    The block starts with ``polytope <name> dim <n> rows <m> vertices <v>``,
    followed by one ``h`` line per half-space (coefficients then offset), one
    ``v`` line per cached vertex and a closing ``end`` line.

    """

    if not re.fullmatch(r"[\w.\-]+", name):
        raise ValueError(f"invalid polytope name {name!r}.")

    verts = P.vertices_cache
    if verts is None:
        verts = numpy.empty((0, P.dim))

    lines = [f"polytope {name} dim {P.dim} rows {P.n_facets} vertices {len(verts)}"]
    for row, offset in zip(P.F, P.g):
        values = " ".join(f"{value:.17g}" for value in (*row, offset))
        lines.append(f"h {values}")
    for vertex in verts:
        lines.append("v " + " ".join(f"{value:.17g}" for value in vertex))
    lines.append("end")

    return "\n".join(lines) + "\n"


def parse_polytopes(text: str) -> Dict[str, Polytope]:
    """Parses one or more polytope blocks written by `.format_polytope`."""

    polytopes: Dict[str, Polytope] = {}
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]

    idx = 0
    while idx < len(lines):
        header = lines[idx].split()
        if len(header) != 8 or header[0] != "polytope":
            raise GeometryError(f"invalid polytope header: {lines[idx]!r}.")

        name = header[1]
        dim, n_rows, n_verts = int(header[3]), int(header[5]), int(header[7])

        end = idx + 1 + n_rows + n_verts
        if end >= len(lines):
            raise GeometryError(f"truncated polytope block {name!r}.")
        if lines[end] != "end":
            raise GeometryError(f"polytope block {name!r} is not terminated.")

        body = lines[idx + 1 : end]
        rows = [_parse_values(line, "h", dim + 1) for line in body[:n_rows]]
        verts = [_parse_values(line, "v", dim) for line in body[n_rows:]]

        F = numpy.array([row[:-1] for row in rows]).reshape(n_rows, dim)
        g = numpy.array([row[-1] for row in rows])

        polytopes[name] = Polytope(
            F,
            g,
            vertices=numpy.array(verts).reshape(-1, dim) if n_verts > 0 else None,
            dim=dim,
        )

        idx += n_rows + n_verts + 2

    return polytopes


def _parse_values(line: str, tag: str, count: int) -> Sequence[float]:
    parts = line.split()
    if parts[0] != tag or len(parts) != count + 1:
        raise GeometryError(f"invalid {tag!r} line: {line!r}.")

    return [float(value) for value in parts[1:]]
