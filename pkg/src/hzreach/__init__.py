"""Data-driven reachability and set-based estimation for PWA systems."""

from .setops import (
    Halfspace,
    HybridZonotope,
    MatrixZonotope,
    PolyhedralRegion,
    Zonotope,
    cartesian_product,
    empty_hz,
    from_dict,
    generalized_intersection,
    halfspace_intersection,
    lift_zonotope,
    linear_map,
    matzono_times_set,
    minkowski_sum,
    to_dict,
    union,
)

__version__ = "0.1.0"

__all__ = [
    "Halfspace",
    "HybridZonotope",
    "MatrixZonotope",
    "PolyhedralRegion",
    "Zonotope",
    "cartesian_product",
    "empty_hz",
    "from_dict",
    "generalized_intersection",
    "halfspace_intersection",
    "lift_zonotope",
    "linear_map",
    "matzono_times_set",
    "minkowski_sum",
    "to_dict",
    "union",
    "__version__",
]
