"""Lagrangian under- and over-approximations of stochastic reach tubes.

The minimal tube shrinks the propagated set by the disturbance set before the
backward step; the maximal tube grows it by the reflected set. Multi-set
variants build one tube per disturbance set and combine them per step.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from collections.abc import Mapping, Sequence

import numpy as np

from lagreach.errors import EmptyList
from lagreach.geometry import (
    DirectionSet,
    Ellipsoid,
    convex_hull,
    from_dict,
    intersect,
    minkowski_sum,
    affine_map,
    outer_polytope,
    outer_sum,
    pontryagin_diff,
    preimage_under_linear,
    reflect,
    slice_polytope,
    to_dict,
)
from lagreach.linsys import LtvSystem, TargetTube
from lagreach.tube import ReachTube, TubeKind, run_recursion


def _contains_origin(S) -> bool:
    return bool(S.contains(np.zeros(S.dim), tol=1e-9))


def _reflected(O, directions: DirectionSet | None, seed: int):
    """``-O`` as a polytope; ellipsoids are outer-approximated so the result stays a superset."""
    if isinstance(O, Ellipsoid):
        neg = Ellipsoid(-O.center, O.shape, O.radius_sq)
        D = directions or DirectionSet.default_for(O.dim, seed)
        return outer_polytope(neg, D).to_v(), D
    return reflect(O.to_v()), None


def minimal_reach_tube(sys: LtvSystem, tube: TargetTube, W, alpha: float | None = None) -> ReachTube:
    """Disturbance minimal tube: ``R_k = T_k & Rhat_k(R_{k+1} - W)``.

    ``W`` may be a polytope or an ellipsoid (exact support function on the
    difference, no approximation).
    """
    if W.is_empty:
        raise ValueError("disturbance set is empty")
    if not W.is_bounded():
        raise ValueError("disturbance set must be bounded")
    if not _contains_origin(W):
        warnings.warn("disturbance set does not contain the origin", stacklevel=2)
    Wq = W if isinstance(W, Ellipsoid) else W.to_v()
    return run_recursion(sys, tube, lambda S: pontryagin_diff(S, Wq), TubeKind.MINIMAL,
                         disturbance_sets=[W], alpha=alpha)


def maximal_reach_tube(sys: LtvSystem, tube: TargetTube, O, alpha: float | None = None,
                       directions: DirectionSet | None = None, seed: int = 0,
                       sum_method: str = "auto") -> ReachTube:
    """Disturbance maximal tube: ``R_k = T_k & Rhat_k(R_{k+1} + (-O))``.

    ``sum_method="exact"`` forms the Minkowski sums through vertices.
    ``"support"`` bounds ``R_{k+1} + (-O) + (-B U)`` by support functions along
    the facet normals of both summands, which keeps facet counts flat in
    higher dimension at the price of a (still outer) looser set. ``"auto"``
    is exact up to two dimensions.
    """
    if O.is_empty:
        raise ValueError("disturbance set is empty")
    if not O.is_bounded():
        raise ValueError("disturbance set must be bounded")
    if sum_method == "auto":
        sum_method = "exact" if sys.dim <= 2 else "support"
    negO, D = _reflected(O, directions, seed)
    if sum_method == "exact":
        out = run_recursion(sys, tube, lambda S: minkowski_sum(S, negO).to_h(), TubeKind.MAXIMAL,
                            disturbance_sets=[O], alpha=alpha)
    elif sum_method == "support":
        def step(k, S):
            spread = minkowski_sum(negO, affine_map(sys.input_vertices, -sys.B_at(k)))
            return preimage_under_linear(outer_sum(S, spread), sys.A_at(k)).normalize()

        out = run_recursion(sys, tube, None, TubeKind.MAXIMAL, step=step,
                            disturbance_sets=[O], alpha=alpha)
    else:
        raise ValueError(f"unknown sum_method {sum_method!r}")
    out.meta["sum_method"] = sum_method
    if D is not None:
        out.meta["outer_directions"] = len(D)
        out.meta["direction_seed"] = D.seed
    return out


def _combine(tubes: Sequence[ReachTube], kind: TubeKind, join) -> ReachTube:
    N = tubes[0].horizon
    sets, seconds = [], []
    for k in range(N + 1):
        t0 = time.perf_counter()
        sets.append(join([t.sets[k] for t in tubes]))
        seconds.append(time.perf_counter() - t0 + sum(t.step_seconds[k] for t in tubes))
    empty_from = None
    for k in range(N, -1, -1):
        members = sets[k] if isinstance(sets[k], list) else [sets[k]]
        if all(m.is_empty for m in members):
            empty_from = k
            break
    return ReachTube(kind, sets, disturbance_sets=[t.disturbance_sets[0] for t in tubes],
                     alpha=tubes[0].alpha, step_seconds=seconds, empty_from=empty_from)


def _union(members):
    keep = [m for m in members if not m.is_empty]
    return keep or [members[0]]


def _hull(members):
    keep = [m for m in members if not m.is_empty]
    if not keep:
        return members[0]
    return convex_hull(keep).to_h()


def multi_minimal_reach_tube(sys: LtvSystem, tube: TargetTube, Ws: Sequence, mode: str = "union",
                             alpha: float | None = None,
                             preconditions: Mapping | None = None) -> ReachTube:
    """One minimal tube per set in ``Ws``, combined per step by union or convex hull.

    The combination is not fed back into the recursion. Hull mode is only
    guaranteed to under-approximate when the caller asserts the convexity
    preconditions; whatever flags are passed are recorded in ``meta``.
    """
    if not Ws:
        raise EmptyList("no disturbance sets given")
    singles = [minimal_reach_tube(sys, tube, W, alpha) for W in Ws]
    if mode == "union":
        out = _combine(singles, TubeKind.MULTI_MINIMAL_UNION, _union)
    elif mode == "hull":
        out = _combine(singles, TubeKind.MULTI_MINIMAL_HULL, _hull)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out.meta["preconditions"] = dict(preconditions or {})
    out.meta["singles"] = singles
    return out


def multi_maximal_reach_tube(sys: LtvSystem, tube: TargetTube, Os: Sequence,
                             alpha: float | None = None,
                             directions: DirectionSet | None = None, seed: int = 0,
                             sum_method: str = "auto") -> ReachTube:
    """One maximal tube per set in ``Os``, intersected per step."""
    if not Os:
        raise EmptyList("no disturbance sets given")
    singles = [maximal_reach_tube(sys, tube, O, alpha, directions, seed, sum_method) for O in Os]
    out = _combine(singles, TubeKind.MULTI_MAXIMAL_INTERSECTION, lambda ms: intersect(*ms))
    out.meta["singles"] = singles
    return out


def membership(tube: ReachTube, k: int, x) -> bool:
    return bool(tube.contains(k, np.asarray(x, float)))


# ---------------------------------------------------------------------------
# export


def _set_to_json(S):
    if isinstance(S, list):
        return [to_dict(m) for m in S]
    return to_dict(S)


def _set_from_json(d):
    if isinstance(d, list):
        return [from_dict(m) for m in d]
    return from_dict(d)


def tube_to_dict(tube: ReachTube, include_timings: bool = True) -> dict:
    out = {
        "kind": tube.kind.value,
        "alpha": tube.alpha,
        "horizon": tube.horizon,
        "empty_from": tube.empty_from,
        "sets": [_set_to_json(s) for s in tube.sets],
        "disturbance_sets": [to_dict(s) for s in tube.disturbance_sets],
    }
    meta = {k: v for k, v in tube.meta.items() if k != "singles"}
    if meta:
        out["meta"] = meta
    if include_timings:
        out["timings_ms"] = [1e3 * s for s in tube.step_seconds]
    return out


def tube_from_dict(d: dict) -> ReachTube:
    return ReachTube(
        TubeKind(d["kind"]),
        [_set_from_json(s) for s in d["sets"]],
        disturbance_sets=[from_dict(s) for s in d.get("disturbance_sets", [])],
        alpha=d.get("alpha"),
        step_seconds=[t / 1e3 for t in d.get("timings_ms", [0.0] * len(d["sets"]))],
        empty_from=d.get("empty_from"),
        meta=dict(d.get("meta", {})),
    )


def save_tube(tube: ReachTube, path, include_timings: bool = False):
    with open(path, "w") as fh:
        json.dump(tube_to_dict(tube, include_timings), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_tube(path) -> ReachTube:
    with open(path) as fh:
        return tube_from_dict(json.load(fh))


def _ordered_vertices(P) -> np.ndarray:
    """Vertices, sorted by angle about the centroid when the set is planar."""
    V = np.asarray(P.to_v().vertices)
    if V.shape[0] < 3 or V.shape[1] != 2:
        return V
    ctr = V.mean(axis=0)
    return V[np.argsort(np.arctan2(V[:, 1] - ctr[1], V[:, 0] - ctr[0]))]


def write_vertex_csv(tube: ReachTube, path):
    """One row per vertex: ``k, member, x0 .. x{n-1}``."""
    n = tube.members(0)[0].dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "member"] + [f"x{i}" for i in range(n)])
        for k in range(tube.horizon + 1):
            for j, m in enumerate(tube.members(k)):
                if m.is_empty:
                    continue
                for v in _ordered_vertices(m):
                    w.writerow([k, j] + [repr(float(c)) for c in v])


def write_cross_section_csv(tube: ReachTube, path, fixed: Mapping[int, float]):
    """Vertices of each set sliced at the pinned coordinates ``fixed``."""
    n = tube.members(0)[0].dim
    free = [i for i in range(n) if i not in fixed]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "member"] + [f"x{i}" for i in free])
        for k in range(tube.horizon + 1):
            for j, m in enumerate(tube.members(k)):
                cut = slice_polytope(m, fixed)
                if cut.is_empty:
                    continue
                for v in _ordered_vertices(cut):
                    w.writerow([k, j] + [repr(float(c)) for c in v])

