"""Gridded dynamic-programming baselines.

``stochastic_value_iteration`` computes the probability of staying in the
target tube under the best gridded input; its ``alpha`` super-level sets are
what the Lagrangian tubes should sandwich.  ``minmax_value_iteration`` counts
worst-case tube violations over a finite disturbance set; its zero set is the
grid counterpart of the minimal tube.
"""

from __future__ import annotations

import csv
import math
import struct
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from lagreach.disturbance import GaussianDisturbance
from lagreach.errors import DimensionMismatch, GridCapExceeded, InvalidProbability
from lagreach.linsys import LtvSystem, TargetTube, tensor_grid

GRID_CAP = 1_000_000
TRUNCATION_SIGMAS = 5.0
_MAGIC = b"LGVG"


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Lattice of ``points[i]`` nodes per axis spanning ``[lower, upper]`` inclusive."""

    lower: tuple
    upper: tuple
    points: tuple
    input_points: int = 21
    cap: int = GRID_CAP

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        pts = tuple(int(p) for p in self.points)
        if not (len(lo) == len(hi) == len(pts)):
            raise DimensionMismatch("lower, upper and points lengths differ")
        if any(p < 2 for p in pts):
            raise ValueError("need at least 2 points per axis")
        if not all(math.isfinite(v) for v in lo + hi) or any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("grid bounds must be finite with lower < upper")
        if self.input_points < 1:
            raise ValueError("input_points must be positive")
        if math.prod(pts) > self.cap:
            raise GridCapExceeded(f"{math.prod(pts)} cells exceed the cap of {self.cap}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, lower, upper, points: int, **kw) -> "GridSpec":
        return cls(tuple(lower), tuple(upper), (points,) * len(lower), **kw)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def size(self) -> int:
        return math.prod(self.points)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / (np.array(self.points) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def axes(self) -> list:
        return [np.linspace(l, h, p) for l, h, p in zip(self.lower, self.upper, self.points)]

    @cached_property
    def nodes(self) -> np.ndarray:
        """All lattice nodes, row-major (last axis fastest)."""
        return tensor_grid(self.points, self.lower, self.upper)

    def input_grid(self, U) -> np.ndarray:
        lo, hi = U.bounding_box()
        pts = tensor_grid([self.input_points] * len(lo), lo, hi)
        if self.input_points == 1:
            pts = np.atleast_2d((lo + hi) / 2)
        return pts[U.contains(pts, tol=1e-9)]

    def nearest_index(self, X: np.ndarray):
        """Per-axis nearest node indices and a mask of points inside the grid box."""
        h = self.spacing
        idx = np.rint((X - np.array(self.lower)) / h).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.array(self.points)), axis=-1)
        return idx, inside

    def flat(self, idx: np.ndarray) -> np.ndarray:
        return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.points, mode="clip")

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper),
                "points": list(self.points), "input_points": self.input_points}


@dataclass
class ValueGrid:
    """Value layers ``values[k]`` (shape ``grid.points``) for ``k = 0..N``."""

    grid: GridSpec
    values: list
    kind: str = "stochastic"  # or "minmax"
    seconds: float = 0.0
    meta: dict = field(default_factory=dict)
    domain: list | None = None  # tube indicator per layer, when known

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> np.ndarray:
        return self.values[k]

    def interpolate(self, k: int, X) -> np.ndarray:
        """Multilinear interpolation of layer ``k``; zero outside the grid box."""
        f = RegularGridInterpolator(self.grid.axes, self.values[k], method="linear",
                                    bounds_error=False, fill_value=0.0)
        return f(np.atleast_2d(X))

    def write_csv(self, path, k: int | None = None):
        ks = range(self.horizon + 1) if k is None else [k]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"x{i}" for i in range(self.grid.dim)] + ["value"])
            for kk in ks:
                for x, v in zip(self.grid.nodes, self.values[kk].ravel()):
                    w.writerow([kk] + [repr(float(c)) for c in x] + [repr(float(v))])

    def dump(self, path):
        """Binary snapshot: magic, dims, layer count, points, bounds, then row-major doubles."""
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<II", g.dim, self.horizon + 1))
            fh.write(struct.pack(f"<{g.dim}I", *g.points))
            fh.write(struct.pack(f"<{2 * g.dim}d", *g.lower, *g.upper))
            for layer in self.values:
                fh.write(np.ascontiguousarray(layer, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, kind: str = "stochastic") -> "ValueGrid":
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise ValueError("not a value-grid dump")
            n, layers = struct.unpack("<II", fh.read(8))
            points = struct.unpack(f"<{n}I", fh.read(4 * n))
            bounds = struct.unpack(f"<{2 * n}d", fh.read(16 * n))
            size = math.prod(points)
            values = [np.frombuffer(fh.read(8 * size), dtype="<f8").reshape(points).copy()
                      for _ in range(layers)]
        cap = max(GRID_CAP, size)
        return cls(GridSpec(bounds[:n], bounds[n:], points, cap=cap), values, kind)


def _window_offsets(half: np.ndarray) -> np.ndarray:
    ranges = [np.arange(-r, r + 1) for r in half]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def stochastic_value_iteration(sys: LtvSystem, tube: TargetTube, g: GaussianDisturbance,
                               grid: GridSpec) -> ValueGrid:
    """Backward sweep ``V_k(x) = 1_{T_k}(x) max_u E[V_{k+1}(A x + B u + w)]``.

    The expectation is a weighted sum over lattice nodes within five standard
    deviations (per axis) of the successor mean. Weights are the Gaussian
    density at the node times the cell volume, renormalised to sum to one.
    Nodes beyond the grid box count with value zero, since the grid is meant
    to cover the tube.
    """
    if grid.dim != sys.dim or g.dim != sys.dim:
        raise DimensionMismatch("grid, disturbance and system dimensions must agree")
    t0 = time.perf_counter()
    N = sys.horizon
    X = grid.nodes
    lower, h = np.array(grid.lower), grid.spacing
    pts = np.array(grid.points)
    U = grid.input_grid(sys.input_space)
    half = np.ceil(TRUNCATION_SIGMAS * np.sqrt(np.diag(g.cov)) / h).astype(np.int64)
    offsets = _window_offsets(half)
    Sinv = np.linalg.inv(g.cov)
    steps = offsets * h
    quad_off = np.sum((steps @ Sinv) * steps, axis=1)[None, :]
    # zero border wide enough that every clipped window lies inside the padded array
    pad = 2 * half + 1
    padded_shape = tuple(pts + 2 * pad)
    strides = np.array([math.prod(padded_shape[i + 1:]) for i in range(len(pts))])
    offset_flat = offsets @ strides
    max_weight_error = 0.0

    domain = [tube.indicator(k, X).reshape(grid.points) for k in range(N + 1)]
    values = [None] * (N + 1)
    values[N] = domain[N].astype(float)
    for k in range(N - 1, -1, -1):
        active = np.flatnonzero(domain[k].ravel())
        Vpad = np.pad(values[k + 1], [(p, p) for p in pad]).ravel()
        Ak, Bk = sys.A_at(k), sys.B_at(k)
        drift = X[active] @ Ak.T + g.mean
        best = np.zeros(len(X))
        for u in U:
            m = drift + Bk @ u
            base = np.rint((m - lower) / h).astype(np.int64)
            base = np.clip(base, -half - 1, pts + half)
            # quadratic form of (delta + offset) expanded so only one matmul is needed
            delta = lower + base * h - m
            dS = delta @ Sinv
            quad = np.sum(dS * delta, axis=1)[:, None] + 2.0 * dS @ steps.T + quad_off
            w = np.exp(-0.5 * (quad - quad.min(axis=1, keepdims=True)))
            w /= w.sum(axis=1, keepdims=True)
            max_weight_error = max(max_weight_error, float(np.max(np.abs(w.sum(axis=1) - 1))))
            vals = Vpad[((base + pad) @ strides)[:, None] + offset_flat[None, :]]
            best[active] = np.maximum(best[active], np.sum(w * vals, axis=1))
        values[k] = np.minimum(best, 1.0).reshape(grid.points)
    meta = {"inputs": len(U), "window": len(offsets), "weight_sum_error": max_weight_error}
    return ValueGrid(grid, values, "stochastic", time.perf_counter() - t0, meta, domain)


def alpha_level_cells(values: ValueGrid, alpha: float, k: int | None = None) -> np.ndarray:
    """Boolean mask of tube nodes with value at least ``alpha`` (layer ``k``, or all layers)."""
    if not 0.0 <= alpha <= 1.0 or math.isnan(alpha):
        raise InvalidProbability(f"alpha {alpha!r} outside [0, 1]")

    def layer(j):
        mask = values[j] >= alpha
        if values.domain is not None:
            mask &= values.domain[j]
        return mask

    if k is not None:
        return layer(k)
    return np.stack([layer(j) for j in range(values.horizon + 1)])


def minmax_value_iteration(sys: LtvSystem, tube: TargetTube, W_points, grid: GridSpec):
    """Worst-case violation counts ``J_k`` and the zero set of ``J_0``.

    ``J_N = g_N`` and ``J_k(x) = min_u max_w J_{k+1}(nearest(A x + B u + w)) + g_k(x)``
    with ``g_k = 1 - 1_{T_k}``. A successor off the grid takes the value of the
    nearest edge cell, raised to 1 if the successor itself is outside ``T_{k+1}``.
    """
    W = np.atleast_2d(np.asarray(W_points, float))
    if grid.dim != sys.dim or W.shape[1] != sys.dim:
        raise DimensionMismatch("grid, disturbance points and system dimensions must agree")
    t0 = time.perf_counter()
    N = sys.horizon
    X = grid.nodes
    U = grid.input_grid(sys.input_space)
    costs = [None] * (N + 1)
    costs[N] = (~tube.indicator(N, X)).astype(np.int64).reshape(grid.points)
    for k in range(N - 1, -1, -1):
        gk = (~tube.indicator(k, X)).astype(np.int64)
        Jnext = costs[k + 1].ravel()
        Ak, Bk = sys.A_at(k), sys.B_at(k)
        drift = X @ Ak.T
        best = np.full(len(X), np.iinfo(np.int64).max)
        for u in U:
            worst = np.zeros(len(X), dtype=np.int64)
            for w in W:
                Y = drift + Bk @ u + w
                idx, inside = grid.nearest_index(Y)
                val = Jnext[grid.flat(idx)]
                if not inside.all():
                    out = ~inside
                    val[out] = np.maximum(val[out], (~tube.indicator(k + 1, Y[out])).astype(np.int64))
                worst = np.maximum(worst, val)
            best = np.minimum(best, worst)
        costs[k] = (best + gk).reshape(grid.points)
    vg = ValueGrid(grid, costs, "minmax", time.perf_counter() - t0, {"inputs": len(U)})
    return vg, costs[0] == 0
