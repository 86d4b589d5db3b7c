"""Set operations over polytopes (and ellipsoids where they are closed-form)."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from lagreach.errors import (
    DimensionMismatch,
    EmptyList,
    EmptyOperand,
    NonInvertibleMap,
    UnboundedSubtrahend,
)
from lagreach.geometry.polytope import (
    MERGE_TOL,
    DirectionSet,
    Ellipsoid,
    HPolytope,
    VPolytope,
    h_to_v,
    v_to_h,
)

COND_LIMIT = 1e12


def _check_dims(*sets):
    dims = {s.dim for s in sets}
    if len(dims) > 1:
        raise DimensionMismatch(f"operands have dimensions {sorted(dims)}")


def _unit_rows(A, b):
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    return A / norms[:, None], b / norms


def _inherit_normal(out, src):
    if getattr(src, "_normal", False):
        object.__setattr__(out, "_normal", True)
    return out


def affine_map(P, M, t=None):
    """Image ``{M x + t : x in P}``.

    V-polytopes map vertex-wise. H-polytopes need a square invertible ``M``.
    Ellipsoids need ``M`` of full row rank.
    """
    M = np.atleast_2d(np.asarray(M, float))
    if M.shape[1] != P.dim:
        raise DimensionMismatch(f"map has {M.shape[1]} columns, set has dim {P.dim}")
    t = np.zeros(M.shape[0]) if t is None else np.asarray(t, float).ravel()
    if t.size != M.shape[0]:
        raise DimensionMismatch("translation length differs from map output")

    if isinstance(P, VPolytope):
        if P.is_empty:
            return VPolytope.empty(M.shape[0])
        return VPolytope(P.vertices @ M.T + t).normalize()
    if isinstance(P, Ellipsoid):
        return Ellipsoid(M @ P.center + t, M @ P.shape @ M.T, P.radius_sq)
    if M.shape[0] != M.shape[1] or np.linalg.cond(M) > COND_LIMIT:
        raise NonInvertibleMap(
            f"H-polytope image needs an invertible map (cond={np.linalg.cond(M):.3g})")
    if P.is_empty:
        return HPolytope.empty(M.shape[0])
    Minv = np.linalg.inv(M)
    A = P.A @ Minv
    A, b = _unit_rows(A, P.rhs + A @ t)
    return _inherit_normal(HPolytope(A, b), P)


def preimage_under_linear(P: HPolytope, M) -> HPolytope:
    """``{x : M x in P}``."""
    M = np.atleast_2d(np.asarray(M, float))
    if M.shape[0] != P.dim:
        raise DimensionMismatch(f"map has {M.shape[0]} rows, set has dim {P.dim}")
    if P.is_empty:
        return HPolytope.empty(M.shape[1])
    A, b = _unit_rows(P.A @ M, P.rhs)
    out = HPolytope(A, b)
    if M.shape[0] == M.shape[1] and np.linalg.cond(M) < COND_LIMIT:
        _inherit_normal(out, P)
        if "_vrep" in P.__dict__:
            out.__dict__["_vrep"] = VPolytope(P.to_v().vertices @ np.linalg.inv(M).T)
    return out


def reflect(P):
    """``-P``."""
    return affine_map(P, -np.eye(P.dim))


def minkowski_sum(P, Q) -> VPolytope:
    _check_dims(P, Q)
    VP, VQ = P.to_v(), Q.to_v()
    if VP.is_empty or VQ.is_empty:
        return VPolytope.empty(P.dim)
    sums = (VP.vertices[:, None, :] + VQ.vertices[None, :, :]).reshape(-1, P.dim)
    return VPolytope(sums).normalize()


def outer_sum(P, Q, directions=None) -> HPolytope:
    """H-rep superset of ``P + Q`` from support functions.

    Normals are the facets of ``P``, the facets of ``Q`` and any extra
    ``directions``. Along ``P``'s own facets the bound is tight, so the result
    equals the exact sum whenever those normals already describe it (always
    for boxes plus boxes). No vertex enumeration of ``P`` is needed.
    """
    _check_dims(P, Q)
    P = P.to_h().normalize()
    if P.is_empty or Q.is_empty:
        return HPolytope.empty(P.dim)
    VQ = Q.to_v()
    extra = [VQ.to_h().A]
    if directions is not None:
        extra.append(np.atleast_2d(np.asarray(directions, float)))
    D = np.vstack(extra)
    D = D[np.linalg.norm(D, axis=1) > 0]
    A = np.vstack([P.A, D])
    b = np.concatenate([P.rhs + support_many(VQ, P.A), support_many(P, D) + support_many(VQ, D)])
    return HPolytope(A, b).normalize()


def _extrude(A, b, V, g, tol):
    """Exact H-rep and vertices of ``{A x <= b} + [-g, g]`` from facet/vertex incidence.

    Every facet survives with offset ``b + |a.g|``. Each ridge where the two
    neighbouring facets face opposite sides of ``g`` adds the facet spanned by
    the ridge and ``g``.
    """
    n = A.shape[1]
    s = A @ g
    inc = (b[:, None] - A @ V.T) <= tol
    eps = 1e-12 * max(1.0, float(np.linalg.norm(g)))
    pos, neg = np.flatnonzero(s > eps), np.flatnonzero(s < -eps)
    rows, rhs = [A], [b + np.abs(s)]
    if len(pos) and len(neg) and n > 1:
        # float32 keeps the product on BLAS; counts stay exact far beyond any vertex count
        common = inc[pos].astype(np.float32) @ inc[neg].T.astype(np.float32)
        for i, j in zip(*np.nonzero(common >= n - 1)):
            pi, nj = pos[i], neg[j]
            X = V[inc[pi] & inc[nj]]
            if n > 2 and np.linalg.matrix_rank(X[1:] - X[0], tol=1e-9) < n - 2:
                continue
            rows.append((s[pi] * A[nj] - s[nj] * A[pi])[None, :])
            rhs.append(np.array([s[pi] * b[nj] - s[nj] * b[pi]]))
    A2, b2 = _unit_rows(np.vstack(rows), np.concatenate(rhs))
    # candidate vertices are v +- g; keep those pinned by n independent facets
    C = np.vstack([V + g, V - g])
    active = (b2[:, None] - A2 @ C.T) <= tol
    keep = [c for c, act in zip(range(len(C)), active.T)
            if act.sum() >= n and np.linalg.matrix_rank(A2[act], tol=1e-9) == n]
    return A2, b2, C[keep]


def _certified(A, b, V, tol):
    """Extrusion output with duplicate rows merged, or ``None`` if it fails a sanity check.

    The rows are facets by construction, so no redundancy LPs or polar hulls
    are run (those are what lose nearly parallel facets). What is checked: all
    of ``V`` is feasible and every row is touched by vertices spanning a facet.
    """
    n = A.shape[1]
    order = np.lexsort(np.round(A, 9).T[::-1])
    A, b = A[order], b[order]
    keep = np.r_[True, np.max(np.abs(np.diff(A, axis=0)), axis=1) > MERGE_TOL]
    group = np.cumsum(keep) - 1
    bmin = np.full(group[-1] + 1, np.inf)
    np.minimum.at(bmin, group, b)
    A, b = A[keep], bmin
    slack = b[:, None] - A @ V.T
    if slack.min() < -tol:
        return None
    tight = slack <= tol
    for i in range(len(A)):
        X = V[tight[i]]
        if len(X) < n or (n > 1 and np.linalg.matrix_rank(X[1:] - X[0], tol=1e-9) < n - 1):
            return None
    return HPolytope(A, b)


def sum_with_segments(P, generators, shift=None) -> HPolytope:
    """Exact ``P + sum_i [-g_i, g_i] + shift`` as a normalized H-polytope.

    Works facet by facet instead of taking the hull of all vertex sums, which
    keeps nearly degenerate sums in higher dimensions tractable. Falls back to
    the hull of vertex sums if the incidence bookkeeping is inconsistent.
    """
    P = P.to_h().normalize()
    G = np.atleast_2d(np.asarray(generators, float))
    _check_dims(P, VPolytope(G))
    n = P.dim
    shift = np.zeros(n) if shift is None else np.asarray(shift, float).ravel()
    if P.is_empty:
        return HPolytope.empty(n)
    G = G[np.linalg.norm(G, axis=1) > 0]
    A, b = np.asarray(P.A), np.asarray(P.rhs)
    V = P.to_v().vertices
    scale = max(1.0, float(np.abs(V).max()) + float(np.abs(G).sum()))
    tol = 1e-9 * scale
    for g in G:
        A, b, V = _extrude(A, b, V, g, tol)
    out = _certified(A, b, V, tol)
    if out is not None:
        moved = HPolytope(out.A, out.b + out.A @ shift)
        object.__setattr__(moved, "_normal", True)
        moved.__dict__["_vrep"] = VPolytope(V + shift)
        return moved
    zono = VPolytope(shift[None, :])
    for g in G:
        zono = minkowski_sum(zono, VPolytope(np.vstack([g, -g])))
    return minkowski_sum(P, zono).to_h()


def support_many(Q, D: np.ndarray) -> np.ndarray:
    """Support function of ``Q`` at each row of ``D``."""
    D = np.atleast_2d(D)
    if isinstance(Q, Ellipsoid):
        quad = np.einsum("ij,jk,ik->i", D, Q.shape, D)
        return D @ Q.center + np.sqrt(Q.radius_sq * np.maximum(quad, 0.0))
    if isinstance(Q, VPolytope):
        if Q.is_empty:
            return np.full(D.shape[0], -np.inf)
        return np.max(D @ Q.vertices.T, axis=1)
    return np.array([Q.support(d) for d in D])


def pontryagin_diff(P, Q) -> HPolytope:
    """``P - Q = {x : x + q in P for all q in Q}`` by facet-wise support shifts."""
    _check_dims(P, Q)
    P = P.to_h().normalize()
    if P.is_empty:
        return HPolytope.empty(P.dim)
    if Q.is_empty:
        raise EmptyOperand("Pontryagin difference with an empty subtrahend")
    if isinstance(Q, HPolytope):
        if not Q.is_bounded():
            raise UnboundedSubtrahend("subtrahend is unbounded")
        Q = Q.to_v()
    if P.n_facets == 0:
        return P
    h = support_many(Q, P.A)
    return HPolytope(P.A, P.b - h).normalize()


def intersect(*Ps) -> HPolytope:
    if not Ps:
        raise EmptyList("nothing to intersect")
    _check_dims(*Ps)
    Hs = [P.to_h() for P in Ps]
    if any(getattr(H, "_normal", False) and H.is_empty for H in Hs):
        return HPolytope.empty(Hs[0].dim)
    A = np.vstack([H.A for H in Hs])
    b = np.concatenate([H.rhs for H in Hs])
    return HPolytope(A, b).normalize()


def convex_hull(Ps: Sequence) -> VPolytope:
    if len(Ps) == 0:
        raise EmptyList("convex hull of an empty list")
    _check_dims(*Ps)
    verts = [P.to_v().vertices for P in Ps]
    V = np.vstack(verts)
    if V.shape[0] == 0:
        return VPolytope.empty(Ps[0].dim)
    return VPolytope(V).normalize()


def convert(P, cap: int | None = None):
    """Vertex enumeration for H-polytopes, facet enumeration for V-polytopes."""
    if isinstance(P, HPolytope):
        return h_to_v(P, cap)
    return v_to_h(P, cap)


def outer_polytope(E: Ellipsoid, D: DirectionSet) -> HPolytope:
    """Tangent halfspaces of ``E`` with the given outward normals (contains ``E``)."""
    _check_dims(E, D)
    Dm = D.directions
    return HPolytope(Dm, support_many(E, Dm))


def inner_polytope(E: Ellipsoid, D: DirectionSet) -> VPolytope:
    """Hull of the support points of ``E`` along each direction (inside ``E``)."""
    _check_dims(E, D)
    pts = np.array([E.support_point(d) for d in D.directions])
    return VPolytope(pts).normalize()


def slice_polytope(P, fixed: Mapping[int, float]) -> HPolytope:
    """Cross-section with coordinates ``fixed`` pinned; returns the free coordinates."""
    H = P.to_h()
    idx = sorted(fixed)
    if any(i < 0 or i >= H.dim for i in idx):
        raise DimensionMismatch("slice index out of range")
    free = [i for i in range(H.dim) if i not in fixed]
    vals = np.array([fixed[i] for i in idx], float)
    A = np.asarray(H.A)
    b = H.rhs - A[:, idx] @ vals
    return HPolytope(A[:, free], b).normalize()


def volume(P) -> float:
    """Exact volume for dimensions up to 3 (qhull); zero for lower-dimensional sets."""
    from scipy.spatial import ConvexHull, QhullError

    V = P.to_v().vertices
    n = V.shape[1]
    if n > 3:
        raise NotImplementedError("exact volume only for n <= 3")
    if V.shape[0] <= n:
        return 0.0
    if n == 1:
        return float(V.max() - V.min())
    try:
        return float(ConvexHull(V).volume)
    except QhullError:
        return 0.0


def is_subset(P, Q, tol: float = 1e-7) -> bool:
    """``P`` contained in ``Q`` (``Q`` polyhedral): every vertex of ``P`` inside ``Q``."""
    VP = P.to_v()
    if VP.is_empty:
        return True
    return bool(np.all(Q.contains(VP.vertices, tol)))
