"""Reach-tube container and the backward recursion driver shared by all tube kinds."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from lagreach.errors import HorizonMismatch, IndexOutOfRange
from lagreach.geometry import HPolytope, intersect


class TubeKind(str, Enum):
    MINIMAL = "minimal"
    MAXIMAL = "maximal"
    DETERMINISTIC = "deterministic"
    MULTI_MINIMAL_UNION = "multi_minimal_union"
    MULTI_MINIMAL_HULL = "multi_minimal_hull"
    MULTI_MAXIMAL_INTERSECTION = "multi_maximal_intersection"


@dataclass
class ReachTube:
    """Sets indexed by ``k = 0..N``.

    ``sets[k]`` is an ``HPolytope``, or a list of them for union tubes.
    ``step_seconds[k]`` is the wall time spent producing ``sets[k]``.
    """

    kind: TubeKind
    sets: list
    disturbance_sets: list = field(default_factory=list)
    alpha: float | None = None
    step_seconds: list = field(default_factory=list)
    empty_from: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.sets) - 1

    @property
    def is_union(self) -> bool:
        return self.kind == TubeKind.MULTI_MINIMAL_UNION

    def members(self, k: int) -> list:
        self._check_index(k)
        s = self.sets[k]
        return list(s) if isinstance(s, list) else [s]

    def is_empty_at(self, k: int) -> bool:
        return all(m.is_empty for m in self.members(k))

    @property
    def total_seconds(self) -> float:
        return float(sum(self.step_seconds))

    def _check_index(self, k: int):
        if not 0 <= k <= self.horizon:
            raise IndexOutOfRange(f"k={k} outside [0, {self.horizon}]")

    def contains(self, k: int, x, tol: float = 1e-9):
        x = np.asarray(x, float)
        members = self.members(k)
        X = np.atleast_2d(x)
        inside = np.zeros(X.shape[0], dtype=bool)
        for m in members:
            if not m.is_empty:
                inside |= m.contains(X, tol)
        return bool(inside[0]) if x.ndim == 1 else inside


def run_recursion(sys, tube, propagate, kind: TubeKind, step=None, **tube_kwargs) -> ReachTube:
    """``R_N = T_N``; ``R_k = T_k & backward_reach_k(propagate(R_{k+1}))``.

    ``step(k, S)``, when given, replaces the whole ``backward_reach_k(propagate(S))``.

    Once a set comes out empty every earlier set is empty too, so the loop
    stops computing and records the index in ``empty_from``.
    """
    # local import: linsys depends on this module
    from lagreach.linsys import one_step_backward_reach

    N = sys.horizon
    if tube.horizon != N:
        raise HorizonMismatch(f"tube horizon {tube.horizon} != system horizon {N}")
    sets: list = [None] * (N + 1)
    seconds = [0.0] * (N + 1)
    sets[N] = tube[N]
    empty_from = None
    for k in range(N - 1, -1, -1):
        t0 = time.perf_counter()
        if empty_from is not None:
            sets[k] = HPolytope.empty(sys.dim)
        else:
            prev = sets[k + 1]
            if step is not None:
                S = step(k, prev) if not prev.is_empty else HPolytope.empty(sys.dim)
            else:
                S = propagate(prev) if not prev.is_empty else HPolytope.empty(sys.dim)
            if S.is_empty:
                sets[k] = HPolytope.empty(sys.dim)
            elif step is not None:
                sets[k] = intersect(tube[k], S)
            else:
                sets[k] = intersect(tube[k], one_step_backward_reach(sys, k, S))
            if sets[k].is_empty:
                empty_from = k
        seconds[k] = time.perf_counter() - t0
    return ReachTube(kind, sets, step_seconds=seconds, empty_from=empty_from, **tube_kwargs)
