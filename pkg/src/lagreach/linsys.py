"""Linear time-varying systems, target tubes and the undisturbed backward reach."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from lagreach.errors import DimensionMismatch, IndexOutOfRange, UnboundedPolytope
from lagreach.geometry import (
    HPolytope,
    affine_map,
    minkowski_sum,
    preimage_under_linear,
    sum_with_segments,
)
from lagreach.tube import ReachTube, TubeKind, run_recursion

Matrix = np.ndarray | Callable[[int], np.ndarray]
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class LtvSystem:
    """``x[k+1] = A(k) x[k] + B(k) u[k] + w[k]`` with ``u[k]`` in ``input_space``.

    ``A`` and ``B`` are either constant arrays or callables of ``k``.
    """

    A: Matrix
    B: Matrix
    input_space: HPolytope
    horizon: int

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        for name in ("A", "B"):
            M = getattr(self, name)
            if not callable(M):
                M = np.atleast_2d(np.array(M, dtype=float))
                M.setflags(write=False)
                object.__setattr__(self, name, M)
        n, m = self.dim, self.input_dim
        if self.input_space.dim != m:
            raise DimensionMismatch("input space dimension differs from B columns")
        for k in range(self.horizon):
            A, B = self.A_at(k), self.B_at(k)
            if A.shape != (n, n) or B.shape != (n, m):
                raise DimensionMismatch(f"A/B shapes change at k={k}")
            if np.linalg.cond(A) > COND_LIMIT:
                raise ValueError(f"A({k}) is singular (cond={np.linalg.cond(A):.3g})")
        if self.input_space.is_empty:
            raise ValueError("input space is empty")
        if not self.input_space.is_bounded():
            raise UnboundedPolytope("input space must be bounded")

    def A_at(self, k: int) -> np.ndarray:
        return np.asarray(self.A(k) if callable(self.A) else self.A, float)

    def B_at(self, k: int) -> np.ndarray:
        return np.asarray(self.B(k) if callable(self.B) else self.B, float)

    @property
    def dim(self) -> int:
        return self.A_at(0).shape[0]

    @property
    def input_dim(self) -> int:
        return self.B_at(0).shape[1]

    @property
    def is_time_invariant(self) -> bool:
        return not (callable(self.A) or callable(self.B))

    @cached_property
    def input_vertices(self):
        return self.input_space.to_v()

    def step(self, k: int, x, u, w=None):
        x = np.asarray(x, float)
        out = x @ self.A_at(k).T + np.asarray(u, float) @ self.B_at(k).T
        return out if w is None else out + w


@dataclass(frozen=True, eq=False)
class TargetTube:
    sets: tuple

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise ValueError("a target tube needs at least one set")
        if len({s.dim for s in sets}) != 1:
            raise DimensionMismatch("tube sets have differing dimensions")
        object.__setattr__(self, "sets", tuple(s.to_h() for s in sets))

    @classmethod
    def constant(cls, S: HPolytope, horizon: int) -> "TargetTube":
        return cls([S] * (horizon + 1))

    @property
    def horizon(self) -> int:
        return len(self.sets) - 1

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def __getitem__(self, k: int) -> HPolytope:
        if not 0 <= k <= self.horizon:
            raise IndexOutOfRange(f"k={k} outside [0, {self.horizon}]")
        return self.sets[k]

    def __len__(self):
        return len(self.sets)

    def indicator(self, k: int, X) -> np.ndarray:
        return self[k].contains(np.atleast_2d(X))


# ---------------------------------------------------------------------------
# stock systems


@dataclass(frozen=True)
class DoubleIntegrator:
    T: float = 0.25

    def matrices(self):
        T = self.T
        return np.array([[1.0, T], [0.0, 1.0]]), np.array([[T**2 / 2], [T]])


@dataclass(frozen=True)
class IntegratorChain:
    n: int = 4
    T: float = 0.25

    def matrices(self):
        n, T = self.n, self.T
        A = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                A[i, j] = T ** (j - i) / math.factorial(j - i)
        B = np.array([[T ** (n - i) / math.factorial(n - i)] for i in range(n)])
        return A, B


EARTH_RADIUS_M = 6378.1e3
MU_EARTH = 3.986e14


@dataclass(frozen=True)
class Cwh:
    """Planar Clohessy-Wiltshire-Hill relative dynamics, state ``[x, y, xdot, ydot]``.

    Discretised by zero-order hold over ``T`` seconds.
    """

    T: float = 20.0
    m_d: float = 300.0
    mu: float = MU_EARTH
    orbit_radius: float = 850e3 + EARTH_RADIUS_M

    @property
    def omega(self) -> float:
        return math.sqrt(self.mu / self.orbit_radius**3)

    def continuous(self):
        w = self.omega
        Ac = np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [3 * w**2, 0.0, 0.0, 2 * w],
            [0.0, 0.0, -2 * w, 0.0],
        ])
        Bc = np.array([[0.0, 0.0], [0.0, 0.0], [1 / self.m_d, 0.0], [0.0, 1 / self.m_d]])
        return Ac, Bc

    def matrices(self):
        Ac, Bc = self.continuous()
        n, m = Bc.shape
        M = np.zeros((n + m, n + m))
        M[:n, :n] = Ac
        M[:n, n:] = Bc
        E = expm(M * self.T)
        return E[:n, :n], E[:n, n:]


def stock_system(descriptor, input_space: HPolytope, horizon: int) -> LtvSystem:
    A, B = descriptor.matrices()
    return LtvSystem(A, B, input_space, horizon)


# ---------------------------------------------------------------------------


def one_step_backward_reach(sys: LtvSystem, k: int, S) -> HPolytope:
    """States steerable into ``S`` in one undisturbed step: ``A^-1 (S + (-B U))``."""
    if not 0 <= k < sys.horizon:
        raise IndexOutOfRange(f"k={k} outside [0, {sys.horizon - 1}]")
    if S.dim != sys.dim:
        raise DimensionMismatch("set dimension differs from system dimension")
    if S.is_empty:
        return HPolytope.empty(sys.dim)
    box = _box_bounds(sys.input_space)
    if box is not None:
        # -B U is a zonotope: one segment per input axis
        lo, hi = box
        B = sys.B_at(k)
        total = sum_with_segments(S, (-B * (0.5 * (hi - lo))).T, -B @ (0.5 * (hi + lo)))
    else:
        total = minkowski_sum(S, affine_map(sys.input_vertices, -sys.B_at(k))).to_h()
    return preimage_under_linear(total, sys.A_at(k)).normalize()


def _box_bounds(U):
    """``(lower, upper)`` when ``U`` is an axis-aligned box, else ``None``."""
    H = U.to_h().normalize()
    m = H.dim
    if H.is_empty or H.n_facets != 2 * m:
        return None
    A = np.asarray(H.A)
    axis = np.argmax(np.abs(A), axis=1)
    if not np.allclose(np.abs(A[np.arange(2 * m), axis]), 1.0, atol=1e-12):
        return None
    sign = np.sign(A[np.arange(2 * m), axis])
    lo, hi = np.full(m, np.nan), np.full(m, np.nan)
    for j, sg, r in zip(axis, sign, H.rhs):
        if sg > 0:
            hi[j] = r
        else:
            lo[j] = -r
    if np.isnan(lo).any() or np.isnan(hi).any():
        return None
    return lo, hi


def deterministic_reach_tube(sys: LtvSystem, tube: TargetTube) -> ReachTube:
    """Reachability of the tube with no disturbance."""
    return run_recursion(sys, tube, lambda S: S, TubeKind.DETERMINISTIC)


def tensor_grid(points: Sequence, lower, upper) -> np.ndarray:
    """Tensor grid helper: ``points`` per axis between ``lower`` and ``upper``."""
    axes = [np.linspace(lo, hi, p) for lo, hi, p in zip(lower, upper, points)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
