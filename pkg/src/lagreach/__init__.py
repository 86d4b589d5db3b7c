"""Lagrangian under- and over-approximation of stochastic reach tubes for LTV systems."""

from lagreach.disturbance import (
    BoundedSetSpec,
    GaussianDisturbance,
    bisect_bounded_set,
    chi2_quantile,
    gaussian_level_ellipsoid,
    polytope_probability,
)
from lagreach.dp import GridSpec, alpha_level_cells, minmax_value_iteration, stochastic_value_iteration
from lagreach.linsys import LtvSystem, TargetTube, deterministic_reach_tube, one_step_backward_reach
from lagreach.reach import (
    maximal_reach_tube,
    membership,
    minimal_reach_tube,
    multi_maximal_reach_tube,
    multi_minimal_reach_tube,
)
from lagreach.tube import ReachTube, TubeKind

__version__ = "0.1.0"
