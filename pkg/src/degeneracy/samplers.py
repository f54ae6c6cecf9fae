"""Seeded synthetic point clouds.

Every sampler is a pure function of its parameters and the seed carried by
``rng``: it draws from its own labelled sub-stream (``rng.stream(label,
stream)``), so calling one sampler never shifts the output of another.  Pass
distinct ``stream`` indices to get independent draws from the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from degeneracy.errors import InvalidInputError
from degeneracy.geometry import LineManifold, PlaneManifold, PointCloud, SphereManifold
from degeneracy.rng import SeededRng, as_rng

__all__ = [
    "NoiseModel",
    "QuantizationGrid",
    "SceneModel",
    "add_noise",
    "plane_basis",
    "quantize",
    "sample_line_segment",
    "sample_plane_patch",
    "sample_scene",
    "sample_sphere_surface",
    "sample_uniform_hypercube",
]


def _positive_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
    return value


def _count(name: str, value: int) -> int:
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise InvalidInputError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class QuantizationGrid:
    """Per-axis quantisation steps."""

    step_x: float
    step_y: float
    step_z: float

    def __post_init__(self):
        for name in ("step_x", "step_y", "step_z"):
            object.__setattr__(self, name, _positive_finite(name, getattr(self, name)))

    @classmethod
    def uniform(cls, step: float) -> "QuantizationGrid":
        return cls(step, step, step)

    @property
    def steps(self) -> np.ndarray:
        return np.array([self.step_x, self.step_y, self.step_z])


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian perturbation with standard deviation ``sigma``."""

    sigma: float = 0.0

    def __post_init__(self):
        sigma = float(self.sigma)
        if not math.isfinite(sigma) or sigma < 0:
            raise InvalidInputError(f"sigma must be finite and >= 0, got {sigma}")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class SceneModel:
    """A cylindrical sensing volume with reflective surfaces inside it.

    The cylinder has its axis on ``z``, radius ``sensing_radius`` and spans
    ``0 <= z <= sensing_height``.  Surface samples are not clipped to the
    cylinder.  ``plane_area`` is used both by the analytic model and as the
    patch area when sampling each listed plane.
    """

    sensing_radius: float
    sensing_height: float
    plane_area: float = 0.0
    sphere: Optional[SphereManifold] = None
    planes: Sequence[PlaneManifold] = field(default_factory=tuple)
    lines: Sequence[LineManifold] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sensing_radius", _positive_finite("sensing_radius", self.sensing_radius))
        object.__setattr__(self, "sensing_height", _positive_finite("sensing_height", self.sensing_height))
        area = float(self.plane_area)
        if not math.isfinite(area) or area < 0:
            raise InvalidInputError(f"plane_area must be finite and >= 0, got {area}")
        object.__setattr__(self, "plane_area", area)
        object.__setattr__(self, "planes", tuple(self.planes))
        object.__setattr__(self, "lines", tuple(self.lines))
        for ln in self.lines:
            if ln.dim != 3:
                raise InvalidInputError("scene lines must be 3-D")
        if self.sphere is not None and self.sphere.dim != 3:
            raise InvalidInputError("scene sphere must be 3-D")

    @property
    def total_volume(self) -> float:
        return math.pi * self.sensing_radius**2 * self.sensing_height

    @property
    def surfaces(self) -> tuple:
        """Planes, then lines, then the sphere (if any): the order of ``n_per_surface``."""
        return self.planes + self.lines + ((self.sphere,) if self.sphere is not None else ())


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_uniform_hypercube(n: int, d: int, rng: Union[SeededRng, int], *, stream: int = 0) -> PointCloud:
    """``n`` i.i.d. points, each coordinate uniform on ``[0, 1)``."""
    n = _count("n", n)
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidInputError(f"dimension must be an integer >= 1, got {d!r}")
    g = as_rng(rng).stream("uniform", stream)
    return PointCloud(g.random((n, int(d))), dim=int(d))


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane axes ``(u, v)`` for a unit ``normal``.

    ``u`` is ``normal x e_i`` for the axis ``e_i`` where ``|normal_i|`` is
    smallest (first index on ties); ``v = normal x u``.
    """
    n = np.asarray(normal, dtype=np.float64)
    pivot = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[pivot] = 1.0
    u = np.cross(n, e)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    v /= np.linalg.norm(v)
    return u, v


def _perturb(points: np.ndarray, noise: NoiseModel, g: np.random.Generator) -> np.ndarray:
    if noise.sigma == 0.0:
        return points
    return points + g.normal(0.0, noise.sigma, size=points.shape)


def sample_plane_patch(
    plane: PlaneManifold,
    extent: Sequence[float],
    n: int,
    noise: NoiseModel,
    rng: Union[SeededRng, int],
    *,
    stream: int = 0,
) -> PointCloud:
    """Uniform points on a rectangular patch of ``plane`` plus Gaussian noise.

    ``extent`` is ``(u_min, u_max, v_min, v_max)`` in the :func:`plane_basis`
    frame, centred on the plane point closest to the origin.
    """
    n = _count("n", n)
    if len(extent) != 4:
        raise InvalidInputError("extent must be (u_min, u_max, v_min, v_max)")
    u_min, u_max, v_min, v_max = (float(x) for x in extent)
    if not all(math.isfinite(x) for x in (u_min, u_max, v_min, v_max)) or not (u_min < u_max and v_min < v_max):
        raise InvalidInputError(f"extent must have positive area, got {tuple(extent)}")
    u, v = plane_basis(plane.normal)
    g = as_rng(rng).stream("plane", stream)
    s = g.uniform(u_min, u_max, size=n)
    t = g.uniform(v_min, v_max, size=n)
    pts = plane.anchor + s[:, None] * u + t[:, None] * v
    return PointCloud(_perturb(pts, noise, g), dim=3)


def sample_sphere_surface(
    sphere: SphereManifold,
    n: int,
    noise: NoiseModel,
    rng: Union[SeededRng, int],
    *,
    stream: int = 0,
) -> PointCloud:
    """Uniform directions (normalised Gaussians) at distance ``r`` from the centre, plus noise."""
    n = _count("n", n)
    d = sphere.dim
    g = as_rng(rng).stream("sphere", stream)
    dirs = g.standard_normal((n, d))
    norms = np.linalg.norm(dirs, axis=1)
    # a zero Gaussian vector has probability zero; redraw just in case
    while n and np.any(norms == 0.0):
        bad = norms == 0.0
        dirs[bad] = g.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(dirs, axis=1)
    pts = sphere.center + sphere.radius * (dirs / norms[:, None]) if n else np.empty((0, d))
    return PointCloud(_perturb(pts, noise, g), dim=d)


def sample_line_segment(
    line: LineManifold,
    t_min: float,
    t_max: float,
    n: int,
    noise: NoiseModel,
    rng: Union[SeededRng, int],
    *,
    stream: int = 0,
) -> PointCloud:
    n = _count("n", n)
    t_min, t_max = float(t_min), float(t_max)
    if not (math.isfinite(t_min) and math.isfinite(t_max) and t_min < t_max):
        raise InvalidInputError(f"need finite t_min < t_max, got ({t_min}, {t_max})")
    g = as_rng(rng).stream("line", stream)
    t = g.uniform(t_min, t_max, size=n)
    pts = line.base + t[:, None] * line.direction
    return PointCloud(_perturb(pts, noise, g), dim=line.dim)


def quantize(cloud: PointCloud, grid: QuantizationGrid) -> PointCloud:
    """Floor-snap every coordinate: ``floor(x / step) * step`` per axis."""
    if cloud.dim != 3:
        raise InvalidInputError(f"quantisation is defined for 3-D clouds, got dimension {cloud.dim}")
    steps = np.broadcast_to(grid.steps, cloud.points.shape)
    idx = np.floor(cloud.points / steps)
    q = idx * steps
    # fl(idx * step) can land a hair below the cell boundary, which would make
    # a second pass drop one cell; step up by ulps until q maps back to idx
    low = np.floor(q / steps) < idx
    while np.any(low):
        q[low] = np.nextafter(q[low], np.inf)
        low = np.floor(q / steps) < idx
    return PointCloud(q, dim=3)


def add_noise(
    cloud: PointCloud,
    noise: NoiseModel,
    rng: Union[SeededRng, int],
    *,
    stream: int = 0,
) -> PointCloud:
    if noise.sigma == 0.0:
        return cloud
    g = as_rng(rng).stream("noise", stream)
    return PointCloud(_perturb(cloud.points, noise, g), dim=cloud.dim)


def _sample_cylinder(scene: SceneModel, n: int, rng: SeededRng) -> np.ndarray:
    R, h = scene.sensing_radius, scene.sensing_height
    out = np.empty((n, 3))
    filled = 0
    batch = 0
    while filled < n:
        g = rng.stream("scene/background", batch)
        need = n - filled
        # acceptance rate is pi/4; oversample so one batch usually suffices
        m = int(need / (math.pi / 4) * 1.1) + 16
        cand = np.column_stack(
            (g.uniform(-R, R, m), g.uniform(-R, R, m), g.uniform(0.0, h, m))
        )
        keep = cand[cand[:, 0] ** 2 + cand[:, 1] ** 2 <= R * R][:need]
        out[filled : filled + len(keep)] = keep
        filled += len(keep)
        batch += 1
    return out


def sample_scene(
    scene: SceneModel,
    n_background: int,
    n_per_surface: Union[int, Sequence[int]],
    noise: NoiseModel,
    rng: Union[SeededRng, int],
) -> PointCloud:
    """Background points uniform in the cylinder followed by noisy surface samples.

    ``n_per_surface`` is one count for every surface or a sequence aligned
    with :attr:`SceneModel.surfaces`.  Plane patches are squares of area
    ``plane_area`` (side ``R`` when the area is zero); line segments span
    ``t in [-R, R]``.  Background points are not perturbed.
    """
    rng = as_rng(rng)
    n_background = _count("n_background", n_background)
    surfaces = scene.surfaces
    if isinstance(n_per_surface, (int, np.integer)) and not isinstance(n_per_surface, bool):
        counts = [_count("n_per_surface", n_per_surface)] * len(surfaces)
    else:
        counts = [_count("n_per_surface", c) for c in n_per_surface]
        if len(counts) != len(surfaces):
            raise InvalidInputError(
                f"n_per_surface has {len(counts)} entries but the scene has {len(surfaces)} surfaces"
            )

    parts = [PointCloud(_sample_cylinder(scene, n_background, rng), dim=3)]
    R = scene.sensing_radius
    half = 0.5 * (math.sqrt(scene.plane_area) if scene.plane_area > 0 else R)
    for i, (surface, count) in enumerate(zip(surfaces, counts)):
        sub = rng.child("scene/surface", i)
        if isinstance(surface, PlaneManifold):
            parts.append(sample_plane_patch(surface, (-half, half, -half, half), count, noise, sub))
        elif isinstance(surface, LineManifold):
            parts.append(sample_line_segment(surface, -R, R, count, noise, sub))
        else:
            parts.append(sample_sphere_surface(surface, count, noise, sub))
    return PointCloud.concat(parts, dim=3)
