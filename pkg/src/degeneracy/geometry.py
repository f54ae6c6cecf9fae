"""Residuals, tolerance predicates and point-to-manifold distances.

All residuals are evaluated in float64 through the small kernels
``_cross`` / ``_dot3`` / ``_norm3`` below.  The exhaustive counters in
:mod:`degeneracy.montecarlo` reuse the same kernels on broadcast arrays, so a
subset is classified identically whether it is tested alone or inside a
vectorised sweep.

Threshold conventions:

* ``epsilon`` (determinant / cross-product residuals) is a strict bound,
  ``residual < epsilon``.
* ``delta`` (distance to a manifold) is inclusive, ``distance <= delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from degeneracy.errors import InvalidInputError, RankDeficiencyError

__all__ = [
    "LineManifold",
    "Manifold",
    "PlaneManifold",
    "PointCloud",
    "SphereManifold",
    "ToleranceSpec",
    "as_point",
    "collinearity_residual",
    "coplanarity_residual",
    "fit_sphere",
    "is_collinear",
    "is_coplanar",
    "is_nearly_spherical",
    "manifold_distance",
    "point_line_distance",
    "point_plane_distance",
    "region_membership",
    "sphere_residual",
]


# ---------------------------------------------------------------------------
# kernels (operate on the last axis, broadcast over the rest)
# ---------------------------------------------------------------------------

def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack((a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0), axis=-1)


def _dot3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _norm3(v: np.ndarray) -> np.ndarray:
    return np.sqrt(_dot3(v, v))


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

def as_point(p, dim: int | None = None, name: str = "point") -> np.ndarray:
    """Coerce ``p`` to a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"{name} must be a non-empty 1-D coordinate sequence, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise InvalidInputError(f"{name} has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite coordinates: {arr.tolist()}")
    return arr


class PointCloud:
    """An ``(N, d)`` float64 array of finite points.

    Indexing returns rows as arrays; iteration yields points.  ``dim`` must be
    given explicitly for an empty cloud with ``d != 3``.
    """

    __slots__ = ("_points",)

    def __init__(self, points, dim: int | None = None):
        arr = np.asarray(points, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 3 if dim is None else dim)
        if arr.ndim != 2:
            raise InvalidInputError(f"point cloud must be 2-D (N, d), got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise InvalidInputError("point dimension must be >= 1")
        if dim is not None and arr.shape[1] != dim:
            raise InvalidInputError(f"points have dimension {arr.shape[1]}, expected {dim}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
            raise InvalidInputError(f"point {bad} has non-finite coordinates")
        arr = np.array(arr, dtype=np.float64, copy=True, order="C")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._points)

    def __getitem__(self, idx):
        return self._points[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.array_equal(self._points, other._points)
        )

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, dim={self.dim})"

    @classmethod
    def concat(cls, clouds: Iterable["PointCloud"], dim: int) -> "PointCloud":
        parts = [c.points for c in clouds if len(c)]
        if not parts:
            return cls(np.empty((0, dim)), dim=dim)
        return cls(np.vstack(parts), dim=dim)


@dataclass(frozen=True)
class ToleranceSpec:
    """Residual threshold ``epsilon`` (strict) and manifold distance ``delta`` (inclusive)."""

    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("epsilon", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True, eq=False)
class LineManifold:
    """Line ``{base + t * direction}``; ``direction`` is normalised on construction."""

    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        base = as_point(self.base, name="line base")
        direction = as_point(self.direction, dim=base.size, name="line direction")
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise InvalidInputError("line direction must be non-zero")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction / norm)

    @property
    def dim(self) -> int:
        return self.base.size


@dataclass(frozen=True, eq=False)
class PlaneManifold:
    """Plane ``normal . x + offset = 0`` in 3-D, stored with a unit normal.

    Normalising both coefficients makes the algebraic residual equal to the
    Euclidean distance.
    """

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        normal = as_point(self.normal, dim=3, name="plane normal")
        offset = float(self.offset)
        if not math.isfinite(offset):
            raise InvalidInputError("plane offset must be finite")
        norm = float(np.linalg.norm(normal))
        if norm == 0.0:
            raise InvalidInputError("plane normal must be non-zero")
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "offset", offset / norm)

    @classmethod
    def through_point(cls, point, normal) -> "PlaneManifold":
        p = as_point(point, dim=3)
        n = as_point(normal, dim=3, name="plane normal")
        return cls(n, -float(n @ p))

    @property
    def dim(self) -> int:
        return 3

    @property
    def anchor(self) -> np.ndarray:
        """The plane point closest to the origin."""
        return -self.offset * self.normal


@dataclass(frozen=True, eq=False)
class SphereManifold:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = as_point(self.center, name="sphere center")
        radius = float(self.radius)
        if not math.isfinite(radius) or radius <= 0:
            raise InvalidInputError(f"sphere radius must be finite and > 0, got {radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self.center.size


Manifold = Union[LineManifold, PlaneManifold, SphereManifold]


# ---------------------------------------------------------------------------
# subset residuals
# ---------------------------------------------------------------------------

def collinearity_residual(p1, p2, p3) -> float:
    """``|(p2 - p1) x (p3 - p1)|``, twice the triangle area; 0 iff collinear."""
    a = as_point(p1, 3, "p1")
    b = as_point(p2, 3, "p2")
    c = as_point(p3, 3, "p3")
    return float(_norm3(_cross(b - a, c - a)))


def coplanarity_residual(p1, p2, p3, p4) -> float:
    """Absolute value of the 4x4 homogeneous determinant of four 3-D points.

    Evaluated as the triple product ``((p2-p1) x (p3-p1)) . (p4-p1)``, which is
    six times the tetrahedron volume.
    """
    a = as_point(p1, 3, "p1")
    b = as_point(p2, 3, "p2")
    c = as_point(p3, 3, "p3")
    d = as_point(p4, 3, "p4")
    return float(abs(_dot3(_cross(b - a, c - a), d - a)))


def is_collinear(p1, p2, p3, tol: ToleranceSpec) -> bool:
    return collinearity_residual(p1, p2, p3) < tol.epsilon


def is_coplanar(p1, p2, p3, p4, tol: ToleranceSpec) -> bool:
    return coplanarity_residual(p1, p2, p3, p4) < tol.epsilon


# ---------------------------------------------------------------------------
# point-to-manifold distances
# ---------------------------------------------------------------------------

def _check_dim(p: np.ndarray, manifold: Manifold) -> None:
    if p.size != manifold.dim:
        raise InvalidInputError(
            f"point has dimension {p.size} but {type(manifold).__name__} lives in dimension {manifold.dim}"
        )


def point_line_distance(p, line: LineManifold) -> float:
    q = as_point(p)
    _check_dim(q, line)
    w = q - line.base
    perp = w - float(w @ line.direction) * line.direction
    return float(np.linalg.norm(perp))


def point_plane_distance(p, plane: PlaneManifold) -> float:
    q = as_point(p)
    _check_dim(q, plane)
    return abs(float(plane.normal @ q) + plane.offset)


def sphere_residual(p, sphere: SphereManifold) -> float:
    """Squared-radius residual ``| |p - c|^2 - r^2 |`` (not a length)."""
    q = as_point(p)
    _check_dim(q, sphere)
    w = q - sphere.center
    return abs(float(w @ w) - sphere.radius**2)


def manifold_distance(p, manifold: Manifold) -> float:
    """Euclidean distance from ``p`` to ``manifold``.

    Spheres use the unsquared ``| |p - c| - r |``, unlike :func:`sphere_residual`.
    """
    if isinstance(manifold, LineManifold):
        return point_line_distance(p, manifold)
    if isinstance(manifold, PlaneManifold):
        return point_plane_distance(p, manifold)
    if isinstance(manifold, SphereManifold):
        q = as_point(p)
        _check_dim(q, manifold)
        return abs(float(np.linalg.norm(q - manifold.center)) - manifold.radius)
    raise InvalidInputError(f"unsupported manifold type {type(manifold).__name__}")


def region_membership(p, manifolds: Sequence[tuple[Manifold, float]]) -> bool:
    """True iff ``p`` lies within ``delta_i`` of at least one ``M_i`` (inclusive)."""
    if not manifolds:
        raise InvalidInputError("region_membership needs at least one manifold")
    q = as_point(p)
    hit = False
    for manifold, delta in manifolds:
        delta = float(delta)
        if not math.isfinite(delta) or delta < 0:
            raise InvalidInputError(f"manifold tolerance must be finite and >= 0, got {delta}")
        # evaluate every entry so dimension mismatches are never masked by an early hit
        if manifold_distance(q, manifold) <= delta:
            hit = True
    return hit


# ---------------------------------------------------------------------------
# sphere fitting / near-sphericity
# ---------------------------------------------------------------------------

def fit_sphere(points) -> SphereManifold:
    """Algebraic least-squares sphere through ``points``.

    Solves ``|p|^2 = 2 p . c + k`` for ``(c, k)`` in the least-squares sense,
    with ``r^2 = k + |c|^2``.  Exact on noise-free spherical data.

    Raises:
        RankDeficiencyError: fewer than ``d + 1`` points, or points confined to
            a hyperplane so the centre is not identifiable.
    """
    cloud = points if isinstance(points, PointCloud) else PointCloud(points)
    pts = cloud.points
    n, d = pts.shape
    if n < d + 1:
        raise RankDeficiencyError(f"sphere fit in dimension {d} needs at least {d + 1} points, got {n}")
    # centre the data first; improves conditioning far from the origin
    shift = pts.mean(axis=0)
    q = pts - shift
    A = np.hstack((2.0 * q, np.ones((n, 1))))
    b = np.einsum("ij,ij->i", q, q)
    sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < d + 1:
        raise RankDeficiencyError(
            f"sphere fit system has rank {rank} < {d + 1}: points lie in a common hyperplane"
        )
    c = sol[:d]
    r2 = float(sol[d] + c @ c)
    if not r2 > 0.0:
        raise RankDeficiencyError(f"sphere fit produced non-positive squared radius {r2}")
    return SphereManifold(c + shift, math.sqrt(r2))


def is_nearly_spherical(points, sphere: SphereManifold, tol: ToleranceSpec) -> bool:
    """True iff every point has :func:`sphere_residual` ``<= tol.delta``."""
    cloud = points if isinstance(points, PointCloud) else PointCloud(points)
    if len(cloud) == 0:
        raise InvalidInputError("near-sphericity test needs a non-empty cloud")
    if cloud.dim != sphere.dim:
        raise InvalidInputError(f"cloud dimension {cloud.dim} != sphere dimension {sphere.dim}")
    return bool(np.max(sphere_residuals(cloud, sphere)) <= tol.delta)


def sphere_residuals(cloud: PointCloud, sphere: SphereManifold) -> np.ndarray:
    w = cloud.points - sphere.center
    return np.abs(np.einsum("ij,ij->i", w, w) - sphere.radius**2)
