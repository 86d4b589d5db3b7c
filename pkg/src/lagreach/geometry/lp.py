"""Dense two-phase tableau simplex for the small LPs the polytope calculus needs.

Problems are posed as::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi        (bounds default to free variables)

Pivoting uses Dantzig's rule and falls back to Bland's rule once a run of
degenerate pivots is seen, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9
_DEGENERATE_RUN = 10
_DUAL_RATIO = 3


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    fun: float
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run_simplex(T, basis, allowed, max_iter, tol):
    """Optimise the tableau in place. The last row holds reduced costs."""
    m = T.shape[0] - 1
    iterations = 0
    degenerate = 0
    while iterations < max_iter:
        reduced = T[-1, :-1]
        candidates = np.flatnonzero((reduced < -tol) & allowed)
        if candidates.size == 0:
            return "optimal", iterations
        if degenerate >= _DEGENERATE_RUN:
            col = candidates[0]
        else:
            col = candidates[np.argmin(reduced[candidates])]
        column = T[:m, col]
        positive = np.flatnonzero(column > tol)
        if positive.size == 0:
            return "unbounded", iterations
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + tol * max(1.0, abs(best))]
        row = ties[np.argmin(np.asarray(basis)[ties])]
        degenerate = degenerate + 1 if best <= tol else 0
        _pivot(T, row, col)
        basis[row] = col
        iterations += 1
    return "iteration_limit", iterations


def _as_2d(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.asarray(A, dtype=float)
    return A.reshape(-1, n)


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
             tol: float = TOL, max_iter: int | None = None) -> LPResult:
    """Minimise ``c @ x``; see module docstring for the problem form.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs (``None`` or +-inf for no
    bound), a single pair applied to every variable, or ``None`` (all free).
    Inequality-only problems with many more rows than variables are solved
    through their dual, whose tableau has one row per variable.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = _as_2d(A_ub, n)
    A_eq = _as_2d(A_eq, n)
    b_ub = np.asarray(b_ub if b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrix and right-hand side sizes differ")

    if bounds is None:
        bounds = [(None, None)] * n
    elif len(bounds) == 2 and not hasattr(bounds[0], "__len__"):
        bounds = [tuple(bounds)] * n
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], float)
    if np.any(lo > hi):
        return LPResult("infeasible", None, np.inf, 0)

    if A_eq.shape[0] == 0 and A_ub.shape[0] > _DUAL_RATIO * (n + 1):
        res = _via_dual(c, A_ub, b_ub, lo, hi, tol, max_iter)
        if res is not None:
            return res
    return _primal(c, A_ub, b_ub, A_eq, b_eq, lo, hi, tol, max_iter)[0]


def _via_dual(c, A_ub, b_ub, lo, hi, tol, max_iter):
    """Solve ``min c x, G x <= h`` as ``min h y, G' y = -c, y >= 0``.

    The primal point solves the basic rows with equality. Returns ``None``
    whenever the answer cannot be certified this way (dual infeasible,
    degenerate basis, failed check) so the caller falls back to the primal.
    """
    n = c.size
    eye = np.eye(n)
    fin_hi, fin_lo = np.isfinite(hi), np.isfinite(lo)
    G = np.vstack([A_ub, eye[fin_hi], -eye[fin_lo]])
    h = np.concatenate([b_ub, hi[fin_hi], -lo[fin_lo]])
    zeros = np.zeros(G.shape[0])
    dres, basis, nz = _primal(h, None, None, G.T, -c, zeros, np.full(G.shape[0], np.inf),
                              tol, max_iter)
    if dres.status == "unbounded":
        return LPResult("infeasible", None, np.inf, dres.iterations)
    if dres.status != "optimal":
        return None
    rows = [b for b in basis if b < nz]
    if len(rows) != n:
        return None
    try:
        x = np.linalg.solve(G[rows], h[rows])
    except np.linalg.LinAlgError:
        return None
    scale = 1.0 + float(np.abs(h).max()) + float(np.abs(x).max())
    if np.any(G @ x > h + 1e3 * tol * scale) or abs(c @ x + dres.fun) > 1e3 * tol * scale:
        return None
    return LPResult("optimal", x, float(c @ x), dres.iterations)


def _primal(c, A_ub, b_ub, A_eq, b_eq, lo, hi, tol, max_iter):
    """Two-phase tableau simplex; returns the result, the final basis and the z count."""
    n = c.size
    A_ub = _as_2d(A_ub, n)
    A_eq = _as_2d(A_eq, n)
    b_ub = np.asarray(b_ub if b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).ravel()
    # x = offset + Tmap @ z with z >= 0
    cols = []
    offset = np.zeros(n)
    extra_rows, extra_rhs = [], []
    for j in range(n):
        if np.isfinite(lo[j]):
            offset[j] = lo[j]
            cols.append((j, 1.0))
            if np.isfinite(hi[j]):
                extra_rows.append(len(cols) - 1)
                extra_rhs.append(hi[j] - lo[j])
        elif np.isfinite(hi[j]):
            offset[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    Tmap = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        Tmap[j, k] = s

    G = A_ub @ Tmap
    h = b_ub - A_ub @ offset
    if extra_rows:
        E = np.zeros((len(extra_rows), nz))
        E[np.arange(len(extra_rows)), extra_rows] = 1.0
        G = np.vstack([G, E])
        h = np.concatenate([h, extra_rhs])
    F = A_eq @ Tmap
    f = b_eq - A_eq @ offset
    cz = c @ Tmap
    const = float(c @ offset)

    mi, me = G.shape[0], F.shape[0]
    m = mi + me
    if m == 0:
        if np.any(cz < -tol):
            return LPResult("unbounded", None, -np.inf, 0), [], nz
        return LPResult("optimal", offset.copy(), const, 0), [], nz

    # columns: z (nz) | slacks (mi) | artificials (<= m)
    rows = np.zeros((m, nz + mi))
    rows[:mi, :nz] = G
    rows[:mi, nz:] = np.eye(mi)
    rows[mi:, :nz] = F
    rhs = np.concatenate([h, f])
    flip = rhs < 0
    rows[flip] *= -1.0
    rhs = np.where(flip, -rhs, rhs)

    basis = [-1] * m
    art_rows = []
    for i in range(m):
        if i < mi and not flip[i]:
            basis[i] = nz + i
        else:
            art_rows.append(i)
    na = len(art_rows)
    ncols = nz + mi + na
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nz + mi] = rows
    T[:m, -1] = rhs
    for k, i in enumerate(art_rows):
        T[i, nz + mi + k] = 1.0
        basis[i] = nz + mi + k

    if max_iter is None:
        max_iter = 50 * (m + ncols) + 100
    iterations = 0
    allowed = np.ones(ncols, dtype=bool)

    if na:
        T[-1, :] = 0.0
        for i in art_rows:
            T[-1, :] -= T[i, :]
        T[-1, nz + mi:ncols] = 0.0
        status, it = _run_simplex(T, basis, allowed, max_iter, tol)
        iterations += it
        if status == "iteration_limit":
            return LPResult(status, None, np.nan, iterations), basis, nz
        infeas = -T[-1, -1]
        scale = 1.0 + np.abs(rhs).max()
        if infeas > 1e3 * tol * scale:
            return LPResult("infeasible", None, np.inf, iterations), basis, nz
        # drive remaining artificials out of the basis
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= nz + mi:
                cand = np.flatnonzero(np.abs(T[i, :nz + mi]) > tol)
                if cand.size:
                    col = int(cand[np.argmax(np.abs(T[i, cand]))])
                    _pivot(T, i, col)
                    basis[i] = col
                else:
                    keep[i] = False
        basis = [b for b, k in zip(basis, keep[:m]) if k]
        T = T[keep]
        T = np.delete(T, np.s_[nz + mi:ncols], axis=1)
        ncols = nz + mi
        allowed = np.ones(ncols, dtype=bool)
        m = T.shape[0] - 1

    cost = np.zeros(ncols)
    cost[:nz] = cz
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for i in range(m):
        if cost[basis[i]] != 0.0:
            T[-1, :] -= cost[basis[i]] * T[i, :]
    status, it = _run_simplex(T, basis, allowed, max_iter, tol)
    iterations += it
    if status == "unbounded":
        return LPResult(status, None, -np.inf, iterations), basis, nz
    if status != "optimal":
        return LPResult(status, None, np.nan, iterations), basis, nz
    z = np.zeros(ncols)
    for i in range(m):
        z[basis[i]] = T[i, -1]
    x = offset + Tmap @ z[:nz]
    return LPResult("optimal", x, float(c @ x), iterations), basis, nz
