"""Polytope and ellipsoid set types.

``HPolytope`` is ``{y : A (y - c) <= b}``; ``VPolytope`` is the convex hull of
a vertex array. Both are immutable; derived properties are cached. Either form
can be empty (an infeasible H system, or a ``(0, n)`` vertex array).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError, cKDTree

from lagreach.errors import (
    DegenerateDirections,
    DimensionCapExceeded,
    DimensionMismatch,
    UnboundedPolytope,
)
from lagreach.geometry.lp import TOL, solve_lp

# Vertex/facet enumeration is refused above this dimension.
DIMENSION_CAP = 6
MERGE_TOL = 1e-9
# combinatorial vertex enumeration is only tried below this many row subsets
_BRUTE_LIMIT = 200_000


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _unique_rows(points: np.ndarray, tol: float) -> np.ndarray:
    """Drop points within ``tol`` (relative, max-norm) of an earlier point."""
    if len(points) <= 1:
        return points
    scale = max(1.0, float(np.abs(points).max()))
    # exact-ish repeats first, so the pair search stays linear in practice
    _, first = np.unique(np.round(points / (0.01 * tol * scale)), axis=0, return_index=True)
    points = points[np.sort(first)]
    pairs = cKDTree(points).query_pairs(tol * scale, p=np.inf, output_type="ndarray")
    if len(pairs) == 0:
        return points
    drop = np.zeros(len(points), dtype=bool)
    for i, j in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]:
        if not drop[i]:
            drop[j] = True
    return points[~drop]


@dataclass(frozen=True, eq=False)
class HPolytope:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
        b = np.array(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise DimensionMismatch(f"A has {A.shape[0]} rows but b has {b.size}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        if self.c is not None:
            c = np.array(self.c, dtype=float).ravel()
            if c.size != A.shape[1]:
                raise DimensionMismatch("center offset length differs from dimension")
            object.__setattr__(self, "c", _frozen(c))

    # construction helpers
    @classmethod
    def box(cls, lower, upper) -> "HPolytope":
        lower = np.asarray(lower, float).ravel()
        upper = np.asarray(upper, float).ravel()
        n = lower.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([upper, -lower]))

    @classmethod
    def empty(cls, n: int) -> "HPolytope":
        p = cls(np.zeros((1, n)), [-1.0])
        object.__setattr__(p, "_normal", True)
        return p

    @classmethod
    def universe(cls, n: int) -> "HPolytope":
        return cls(np.zeros((0, n)), np.zeros(0))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_facets(self) -> int:
        return self.A.shape[0]

    @cached_property
    def rhs(self) -> np.ndarray:
        """Offsets of the uncentred form ``A y <= rhs``."""
        if self.c is None:
            return self.b
        return _frozen(self.b + self.A @ self.c)

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, facets={self.n_facets})"

    # queries
    def chebyshev_ball(self):
        """Largest inscribed ball as ``(center, radius)``; ``None`` when empty.

        The radius is capped at 1e6 so unbounded sets still solve.
        """
        n = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        A = np.hstack([self.A, norms[:, None]])
        bounds = [(None, None)] * n + [(0.0, 1e6)]
        res = solve_lp(np.r_[np.zeros(n), -1.0], A, self.rhs, bounds=bounds)
        if res.status != "optimal":
            return None
        return res.x[:n], float(res.x[n])

    @cached_property
    def is_empty(self) -> bool:
        if self.A.shape[0] == 0:
            return False
        res = solve_lp(np.zeros(self.dim), self.A, self.rhs)
        return res.status == "infeasible"

    def contains(self, x, tol: float = 1e-9):
        x = np.asarray(x, float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.dim:
            raise DimensionMismatch("point dimension differs from polytope")
        if self.A.shape[0] == 0:
            inside = np.ones(X.shape[0], dtype=bool)
        else:
            inside = np.all(X @ self.A.T <= self.rhs + tol, axis=1)
        return bool(inside[0]) if single else inside

    def support(self, d) -> float:
        d = np.asarray(d, float).ravel()
        if d.size != self.dim:
            raise DimensionMismatch("direction dimension differs from polytope")
        res = solve_lp(-d, self.A, self.rhs)
        if res.status == "infeasible":
            return -np.inf
        if res.status == "unbounded":
            return np.inf
        return -res.fun

    def is_bounded(self) -> bool:
        if self.is_empty:
            return True
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if not np.isfinite(self.support(e)) or not np.isfinite(self.support(-e)):
                return False
        return True

    def bounding_box(self):
        n = self.dim
        eye = np.eye(n)
        upper = np.array([self.support(eye[i]) for i in range(n)])
        lower = np.array([-self.support(-eye[i]) for i in range(n)])
        return lower, upper

    # canonical forms
    def normalize(self) -> "HPolytope":
        """Unit-norm rows, merged duplicates, no redundant facets."""
        if getattr(self, "_normal", False):
            return self
        out = _normalize_h(self.A, self.rhs)
        object.__setattr__(out, "_normal", True)
        return out

    @cached_property
    def _vrep(self) -> "VPolytope":
        return h_to_v(self)

    def to_v(self) -> "VPolytope":
        return self._vrep

    def to_h(self) -> "HPolytope":
        return self


@dataclass(frozen=True, eq=False)
class VPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim == 1:
            V = V.reshape(1, -1)
        object.__setattr__(self, "vertices", _frozen(V))

    @classmethod
    def empty(cls, n: int) -> "VPolytope":
        return cls(np.zeros((0, n)))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.vertices.shape[0] == 0

    def __repr__(self):
        return f"VPolytope(dim={self.dim}, vertices={len(self.vertices)})"

    def support(self, d) -> float:
        d = np.asarray(d, float).ravel()
        if d.size != self.dim:
            raise DimensionMismatch("direction dimension differs from polytope")
        if self.is_empty:
            return -np.inf
        return float(np.max(self.vertices @ d))

    def contains(self, x, tol: float = 1e-9):
        return self.to_h().contains(x, tol)

    def is_bounded(self) -> bool:
        return True

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def normalize(self) -> "VPolytope":
        """Extreme points only."""
        if getattr(self, "_normal", False):
            return self
        out = VPolytope(_extreme_points(self.vertices))
        object.__setattr__(out, "_normal", True)
        return out

    @cached_property
    def _hrep(self) -> HPolytope:
        return v_to_h(self)

    def to_h(self) -> HPolytope:
        return self._hrep

    def to_v(self) -> "VPolytope":
        return self


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{y : (y - center)' shape^-1 (y - center) <= radius_sq}``."""

    center: np.ndarray
    shape: np.ndarray
    radius_sq: float

    def __post_init__(self):
        mu = _frozen(np.asarray(self.center, float).ravel())
        S = np.array(self.shape, dtype=float)
        if S.shape != (mu.size, mu.size):
            raise DimensionMismatch("shape matrix must be n x n")
        if np.max(np.abs(S - S.T)) > 1e-9 * max(1.0, np.abs(S).max()):
            raise ValueError("shape matrix is not symmetric")
        S = 0.5 * (S + S.T)
        if np.linalg.eigvalsh(S).min() <= 0:
            raise ValueError("shape matrix is not positive definite")
        if self.radius_sq < 0:
            raise ValueError("radius_sq must be nonnegative")
        object.__setattr__(self, "center", mu)
        object.__setattr__(self, "shape", _frozen(S))
        object.__setattr__(self, "radius_sq", float(self.radius_sq))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def is_empty(self) -> bool:
        return False

    def is_bounded(self) -> bool:
        return True

    @cached_property
    def _inv_shape(self):
        return np.linalg.inv(self.shape)

    def contains(self, x, tol: float = 1e-9):
        x = np.asarray(x, float)
        single = x.ndim == 1
        D = np.atleast_2d(x) - self.center
        q = np.einsum("ij,jk,ik->i", D, self._inv_shape, D)
        inside = q <= self.radius_sq + tol
        return bool(inside[0]) if single else inside

    def support(self, d) -> float:
        d = np.asarray(d, float).ravel()
        return float(d @ self.center + np.sqrt(self.radius_sq * (d @ self.shape @ d)))

    def support_point(self, d) -> np.ndarray:
        d = np.asarray(d, float).ravel()
        Sd = self.shape @ d
        denom = np.sqrt(d @ Sd)
        if self.radius_sq == 0 or denom == 0:
            return self.center.copy()
        return self.center + np.sqrt(self.radius_sq) * Sd / denom


@dataclass(frozen=True, eq=False)
class DirectionSet:
    directions: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        D = np.array(self.directions, dtype=float)
        if D.ndim != 2:
            raise DegenerateDirections("directions must be an (m, n) array")
        norms = np.linalg.norm(D, axis=1)
        if np.any(norms == 0):
            raise DegenerateDirections("zero direction")
        D = D / norms[:, None]
        object.__setattr__(self, "directions", _frozen(D))
        if not self.positively_spans():
            raise DegenerateDirections("directions do not positively span R^n")

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self):
        return self.directions.shape[0]

    def positively_spans(self) -> bool:
        D = self.directions
        m, n = D.shape
        if m < n + 1:
            return False
        # max t  s.t.  sum_i l_i d_i = 0, sum_i l_i = 1, l_i >= t
        c = np.r_[np.zeros(m), -1.0]
        A_eq = np.vstack([np.hstack([D.T, np.zeros((n, 1))]), np.r_[np.ones(m), 0.0]])
        b_eq = np.r_[np.zeros(n), 1.0]
        A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
        res = solve_lp(c, A_ub, np.zeros(m), A_eq, b_eq,
                       bounds=[(None, None)] * m + [(None, 1.0)])
        return res.status == "optimal" and -res.fun > 1e-9

    @classmethod
    def equiangular(cls, m: int) -> "DirectionSet":
        theta = 2 * np.pi * np.arange(m) / m
        return cls(np.column_stack([np.cos(theta), np.sin(theta)]))

    @classmethod
    def axes(cls, n: int) -> "DirectionSet":
        return cls(np.vstack([np.eye(n), -np.eye(n)]))

    @classmethod
    def random(cls, n: int, m: int, seed: int = 0) -> "DirectionSet":
        """Gaussian-normalised random directions; reseeds until they span."""
        rng = np.random.default_rng(seed)
        for _ in range(100):
            D = rng.standard_normal((m, n))
            try:
                return cls(D, seed=seed)
            except DegenerateDirections:
                continue
        raise DegenerateDirections(f"{m} random directions never spanned R^{n}")

    @classmethod
    def default_for(cls, n: int, seed: int = 0) -> "DirectionSet":
        if n == 1:
            return cls.axes(1)
        if n == 2:
            return cls.equiangular(16)
        return cls.random(n, 10 * n, seed)


Polytope = HPolytope | VPolytope
ConvexSet = HPolytope | VPolytope | Ellipsoid


# ---------------------------------------------------------------------------
# canonicalisation and representation conversion


def _normalize_h(A: np.ndarray, rhs: np.ndarray) -> HPolytope:
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= 1e-12
    if np.any(rhs[zero] < -TOL):
        return HPolytope.empty(n)
    A = A[~zero] / norms[~zero, None]
    b = rhs[~zero] / norms[~zero]
    if A.shape[0] == 0:
        return HPolytope(np.zeros((0, n)), np.zeros(0))

    # merge duplicate normals, keeping the tightest offset
    order = np.lexsort(np.round(A, 9).T[::-1])
    A, b = A[order], b[order]
    keep_A, keep_b = [A[0]], [b[0]]
    for a_row, b_val in zip(A[1:], b[1:]):
        if np.max(np.abs(a_row - keep_A[-1])) <= MERGE_TOL:
            keep_b[-1] = min(keep_b[-1], b_val)
            continue
        keep_A.append(a_row)
        keep_b.append(b_val)
    A, b = np.array(keep_A), np.array(keep_b)

    ball = HPolytope(A, b).chebyshev_ball()
    if ball is None:
        return HPolytope.empty(n)
    center, radius = ball
    if n > 1 and 1e-9 * max(1.0, float(np.abs(center).max())) < radius < 1e6 * (1 - 1e-9):
        fast = _irredundant_by_duality(A, b, center)
        if fast is not None:
            keep, V = fast
            out = HPolytope(A[keep], b[keep])
            out.__dict__["_vrep"] = VPolytope(V)
            return out
    return _remove_redundant_lp(A, b)


def _remove_redundant_lp(A: np.ndarray, b: np.ndarray) -> HPolytope:
    """Drop row ``i`` when maximising ``a_i . x`` over the other rows stays within ``b_i``."""
    active = np.ones(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        others = active.copy()
        others[i] = False
        if not others.any():
            break
        Ai = np.vstack([A[others], A[i]])
        bi = np.r_[b[others], b[i] + 1.0]
        res = solve_lp(-A[i], Ai, bi)
        if res.status == "optimal" and -res.fun <= b[i] + TOL * max(1.0, abs(b[i])):
            active[i] = False
    return HPolytope(A[active], b[active])


def _interval_vertices(a: np.ndarray, b: np.ndarray):
    a = a.ravel()
    pos, neg = a > 1e-12, a < -1e-12
    if np.any(b[~(pos | neg)] < -TOL):
        return None
    hi = np.min(b[pos] / a[pos]) if pos.any() else np.inf
    lo = np.max(b[neg] / a[neg]) if neg.any() else -np.inf
    if not (np.isfinite(hi) and np.isfinite(lo)):
        raise UnboundedPolytope("interval is unbounded")
    if lo > hi + TOL * max(1.0, abs(hi)):
        return None
    if hi - lo <= TOL * max(1.0, abs(hi)):
        return np.array([[0.5 * (lo + hi)]])
    return np.array([[lo], [hi]])


def _polish(V: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Snap approximate vertices onto their active facets (least squares)."""
    n = A.shape[1]
    scale = max(1.0, float(np.abs(b).max()))
    out = []
    for v in V:
        active = b - A @ v <= tol * scale
        if active.sum() >= n:
            x, *_ = np.linalg.lstsq(A[active], b[active], rcond=None)
            if np.all(A @ x <= b + 1e-9 * scale):
                v = x
        out.append(v)
    return np.array(out).reshape(-1, n)


def _halfspace_vertices(A, b, center):
    """qhull halfspace intersection, retried with tolerant options on nearly degenerate input.

    The tolerant options can drop a few vertices depending on row order, so
    that path runs on three orderings and keeps the union.
    """
    n = A.shape[1]
    scale = max(1.0, float(np.abs(b).max()))
    for opts in (None, "Qx Q12" if n > 4 else "Q12", "QJ"):
        orders = [np.arange(len(A))]
        if opts is not None:
            rng = np.random.default_rng(len(A))
            orders += [rng.permutation(len(A)) for _ in range(2)]
        found = []
        for order in orders:
            H = np.hstack([A[order], -b[order, None]])
            try:
                hs = HalfspaceIntersection(H, center, qhull_options=opts)
            except QhullError:
                continue
            V = hs.intersections
            if not np.all(np.isfinite(V)):
                raise UnboundedPolytope("polytope is unbounded")
            if opts is not None:
                V = _polish(V, A, b)
                V = V[np.all(V @ A.T <= b + 1e-9 * scale, axis=1)]
            found.append(V)
        if found:
            return _unique_rows(np.vstack(found), 1e-9)
    return None


def _brute_vertices(A, b):
    """Combinatorial vertex enumeration; fallback when qhull gives up."""
    n = A.shape[1]
    found = []
    for rows in combinations(range(A.shape[0]), n):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9 * max(1.0, np.abs(b).max())):
            found.append(x)
    return _unique_rows(np.array(found).reshape(-1, n), 1e-9)


def _vertices_of(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Vertices of a bounded ``{x : A x <= b}``; ``None`` if empty."""
    n = A.shape[1]
    if n == 1:
        return _interval_vertices(A, b)
    P = HPolytope(A, b)
    ball = P.chebyshev_ball()
    if ball is None:
        return None
    center, radius = ball
    if radius >= 1e6 * (1 - 1e-9):
        raise UnboundedPolytope("polytope is unbounded")
    scale = max(1.0, float(np.abs(center).max()))
    if radius > 1e-9 * scale:
        V = _halfspace_vertices(A, b, center)
        if V is None:
            if comb(A.shape[0], n) > _BRUTE_LIMIT:
                raise QhullError(f"vertex enumeration failed for {A.shape[0]} facets in R^{n}")
            return _brute_vertices(A, b)
        return V

    # lower-dimensional: find implicit equalities, then recurse in the hull
    eq = np.zeros(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        res = solve_lp(A[i], A, b)
        if res.status == "optimal" and res.fun >= b[i] - 1e-8 * max(1.0, abs(b[i])):
            eq[i] = True
    _, s, Vt = np.linalg.svd(A[eq]) if eq.any() else (None, np.zeros(0), np.eye(n))
    rank = int(np.sum(s > 1e-9 * max(1.0, s.max() if s.size else 1.0)))
    N = Vt[rank:].T
    if N.shape[1] == 0:
        return center.reshape(1, n)
    Ared = A[~eq] @ N
    bred = b[~eq] - A[~eq] @ center
    if Ared.shape[0] == 0:
        raise UnboundedPolytope("polytope is unbounded")
    Z = _vertices_of(Ared, bred)
    if Z is None:
        return center.reshape(1, n)
    return center + Z @ N.T


def h_to_v(P: HPolytope, cap: int | None = None) -> VPolytope:
    cap = DIMENSION_CAP if cap is None else cap
    if P.dim > cap:
        raise DimensionCapExceeded(f"dimension {P.dim} exceeds cap {cap}")
    if P.is_empty:
        return VPolytope.empty(P.dim)
    if P.n_facets == 0:
        raise UnboundedPolytope("polytope is unbounded")
    V = _vertices_of(np.asarray(P.A), np.asarray(P.rhs))
    if V is None:
        return VPolytope.empty(P.dim)
    out = VPolytope(V).normalize()
    return out


def _hull(Z: np.ndarray) -> ConvexHull:
    """``ConvexHull`` that retries nearly degenerate input with more tolerant qhull options."""
    try:
        return ConvexHull(Z)
    except QhullError:
        pass
    try:
        return ConvexHull(Z, qhull_options="Qt Q12")
    except QhullError:
        return ConvexHull(Z, qhull_options="QJ")


def _extreme_points(V: np.ndarray) -> np.ndarray:
    if V.shape[0] <= 1:
        return V
    V = _unique_rows(V, 1e-12)
    n = V.shape[1]
    if V.shape[0] <= 1:
        return V
    center = V.mean(axis=0)
    D = V - center
    _, s, Vt = np.linalg.svd(D, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * max(1.0, s.max())))
    if rank == 0:
        return V[:1]
    basis = Vt[:rank].T
    Z = D @ basis
    if rank == 1:
        z = Z.ravel()
        return V[[int(np.argmin(z)), int(np.argmax(z))]]
    try:
        hull = _hull(Z)
    except QhullError:
        return V
    return V[np.sort(hull.vertices)]


def v_to_h(P: VPolytope, cap: int | None = None) -> HPolytope:
    cap = DIMENSION_CAP if cap is None else cap
    n = P.dim
    if n > cap:
        raise DimensionCapExceeded(f"dimension {n} exceeds cap {cap}")
    if P.is_empty:
        return HPolytope.empty(n)
    V = _unique_rows(P.vertices, 1e-12)
    center = V.mean(axis=0)
    D = V - center
    if V.shape[0] == 1:
        rank, Vt = 0, np.eye(n)
    else:
        # only Vt is needed, and it must be square
        _, s, Vt = np.linalg.svd(D, full_matrices=D.shape[0] < n)
        rank = int(np.sum(s > 1e-9 * max(1.0, s.max())))
    basis, null = Vt[:rank].T, Vt[rank:].T
    rows, rhs = [], []
    for k in range(null.shape[1]):
        a = null[:, k]
        rows += [a, -a]
        rhs += [a @ center, -(a @ center)]
    if rank == 1:
        z = (D @ basis).ravel()
        a = basis[:, 0]
        rows += [a, -a]
        rhs += [a @ center + z.max(), -(a @ center) - z.min()]
    elif rank >= 2:
        Z = D @ basis
        eqs = _hull(Z).equations
        facet_rows = eqs[:, :-1] @ basis.T
        rows += list(facet_rows)
        rhs += list(-eqs[:, -1] + facet_rows @ center)
    A = np.array(rows).reshape(-1, n)
    out = HPolytope(A, np.array(rhs))
    if rank == n:
        # qhull facets are already irredundant; only merge triangulated pieces
        out = _merge_only(out)
    else:
        out = out.normalize()
    return out


def _group_rows(X: np.ndarray, tol: float) -> np.ndarray:
    """Label rows so that rows within ``tol`` (max-norm, transitively) share a label."""
    # collapse near-identical rows first: triangulated hulls repeat a normal many times
    # and the pair list would otherwise grow quadratically
    _, first, inverse = np.unique(np.round(X / (0.01 * tol)), axis=0,
                                  return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    R = X[first]
    pairs = cKDTree(R).query_pairs(tol, p=np.inf, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs)
                       else ([], ([], [])), shape=(len(R), len(R)))
    _, labels = connected_components(graph, directed=False)
    return labels[inverse]


def _merge_only(P: HPolytope) -> HPolytope:
    """Merge the coplanar pieces of a triangulated hull into single facets."""
    A, b = np.asarray(P.A), np.asarray(P.rhs)
    norms = np.linalg.norm(A, axis=1)
    A, b = A / norms[:, None], b / norms
    A[np.abs(A) < 1e-14] = 0.0
    labels = _group_rows(A, 1e-7)
    _, first = np.unique(labels, return_index=True)
    keep_b = np.full(first.size, -np.inf)
    np.maximum.at(keep_b, labels, b)
    out = HPolytope(A[first], keep_b)
    object.__setattr__(out, "_normal", True)
    return out


def _irredundant_by_duality(A: np.ndarray, b: np.ndarray, center: np.ndarray):
    """Irredundant rows and vertices of a bounded, full-dimensional polytope.

    With ``center`` strictly inside, row ``i`` maps to the polar point
    ``a_i / (b_i - a_i . center)``; facets are the polar hull's vertices and
    vertices come from the polar hull's facets. Returns ``None`` when qhull
    fails or the set is unbounded, so the caller can use LPs instead.
    """
    n = A.shape[1]
    slack = b - A @ center
    if np.any(slack <= 0):
        return None
    D = A / slack[:, None]
    try:
        hull = ConvexHull(D)
    except QhullError:
        return None
    eqs = hull.equations
    if np.max(eqs[:, -1]) > -1e-12:
        return None  # origin on the polar boundary: unbounded primal
    V = center - eqs[:, :-1] / eqs[:, -1:]
    scale = max(1.0, float(np.abs(V).max()))
    V = _unique_rows(V, 1e-10)
    keep = []
    for i in np.sort(hull.vertices):
        tight = V[np.abs(V @ A[i] - b[i]) <= 1e-9 * scale]
        if len(tight) >= n and np.linalg.matrix_rank(tight[1:] - tight[0], tol=1e-9 * scale) == n - 1:
            keep.append(i)
    if len(keep) <= n:
        return None
    return np.array(keep), V
