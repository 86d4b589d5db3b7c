from lagreach.geometry.lp import LPResult, solve_lp
from lagreach.geometry.ops import (
    affine_map,
    convert,
    convex_hull,
    inner_polytope,
    intersect,
    is_subset,
    minkowski_sum,
    outer_polytope,
    outer_sum,
    sum_with_segments,
    pontryagin_diff,
    preimage_under_linear,
    reflect,
    slice_polytope,
    support_many,
    volume,
)
from lagreach.geometry.polytope import (
    DIMENSION_CAP,
    ConvexSet,
    DirectionSet,
    Ellipsoid,
    HPolytope,
    Polytope,
    VPolytope,
)
from lagreach.geometry.serialize import from_dict, to_dict

__all__ = [
    "DIMENSION_CAP", "ConvexSet", "DirectionSet", "Ellipsoid", "HPolytope", "LPResult",
    "Polytope", "VPolytope", "affine_map", "convert", "convex_hull", "from_dict",
    "inner_polytope", "intersect", "is_subset", "minkowski_sum", "outer_polytope", "outer_sum",
    "pontryagin_diff", "preimage_under_linear", "reflect", "slice_polytope", "solve_lp",
    "sum_with_segments", "support_many", "to_dict", "volume",
]
