"""JSON round-tripping for the set types (floats serialised at full precision)."""

from __future__ import annotations

import numpy as np

from lagreach.geometry.polytope import Ellipsoid, HPolytope, VPolytope


def to_dict(S) -> dict:
    if isinstance(S, HPolytope):
        out = {"rep": "H", "A": np.asarray(S.A).tolist(), "b": np.asarray(S.b).tolist()}
        if S.c is not None:
            out["c"] = np.asarray(S.c).tolist()
        if S.n_facets == 0:
            out["dim"] = S.dim
        return out
    if isinstance(S, VPolytope):
        out = {"rep": "V", "vertices": np.asarray(S.vertices).tolist()}
        if S.is_empty:
            out["dim"] = S.dim
        return out
    if isinstance(S, Ellipsoid):
        return {"rep": "ellipsoid", "center": S.center.tolist(),
                "shape": np.asarray(S.shape).tolist(), "radius_sq": S.radius_sq}
    raise TypeError(f"cannot serialise {type(S).__name__}")


def from_dict(d: dict):
    rep = d.get("rep")
    if rep == "H":
        A = np.array(d["A"], dtype=float)
        if A.size == 0:
            A = np.zeros((0, int(d["dim"])))
        return HPolytope(A, d["b"], d.get("c"))
    if rep == "V":
        V = np.array(d["vertices"], dtype=float)
        if V.size == 0:
            V = np.zeros((0, int(d["dim"])))
        return VPolytope(V)
    if rep == "ellipsoid":
        return Ellipsoid(d["center"], d["shape"], d["radius_sq"])
    raise ValueError(f"unknown set representation {rep!r}")
