"""Degeneracy analysis for point clouds.

Residual-based collinearity / coplanarity predicates, point-to-manifold
distances, seeded samplers (uniform, structured, quantized), closed-form
expected degeneracy counts and an empirical counting engine.
"""

from degeneracy.errors import (
    CapExceededError,
    DegeneracyError,
    InvalidInputError,
    RankDeficiencyError,
)
from degeneracy.geometry import (
    LineManifold,
    PlaneManifold,
    PointCloud,
    SphereManifold,
    ToleranceSpec,
    collinearity_residual,
    coplanarity_residual,
    fit_sphere,
    is_collinear,
    is_coplanar,
    is_nearly_spherical,
    point_line_distance,
    point_plane_distance,
    region_membership,
    sphere_residual,
)
from degeneracy.rng import SeededRng

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "DegeneracyError",
    "InvalidInputError",
    "LineManifold",
    "PlaneManifold",
    "PointCloud",
    "RankDeficiencyError",
    "SeededRng",
    "SphereManifold",
    "ToleranceSpec",
    "collinearity_residual",
    "coplanarity_residual",
    "fit_sphere",
    "is_collinear",
    "is_coplanar",
    "is_nearly_spherical",
    "point_line_distance",
    "point_plane_distance",
    "region_membership",
    "sphere_residual",
]
