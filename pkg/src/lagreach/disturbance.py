"""Bounded disturbance sets with a prescribed Gaussian probability mass.

Two constructions: chi-squared level ellipsoids, and scaled polytopic templates
found by doubling-then-bisection on the scale factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from lagreach.errors import DimensionMismatch, InvalidProbability, InvalidTemplate, NoConvergence
from lagreach.geometry import Ellipsoid, HPolytope, solve_lp

_EPS = 1e-16
_FPMIN = 1e-300


# ---------------------------------------------------------------------------
# special functions


def _gamma_prefactor(a: float, x: float) -> float:
    return math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * _gamma_prefactor(a, x)


def _gamma_cfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * _gamma_prefactor(a, x)


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cfrac(a, x)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cfrac(a, x)


def chi2_cdf(x: float, dof: int) -> float:
    return gamma_p(dof / 2.0, x / 2.0)


def chi2_sf(x: float, dof: int) -> float:
    return gamma_q(dof / 2.0, x / 2.0)


def chi2_pdf(x: float, dof: int) -> float:
    if x <= 0:
        return 0.0 if dof > 2 else (0.5 if dof == 2 else math.inf)
    k = dof / 2.0
    return math.exp((k - 1) * math.log(x) - x / 2 - k * math.log(2.0) - math.lgamma(k))


def _check_probability(p: float, allow_one: bool = False):
    if not (0.0 <= p < 1.0 or (allow_one and p == 1.0)) or math.isnan(p):
        raise InvalidProbability(f"probability {p!r} outside [0, 1)")


def chi2_quantile(dof: int, p: float) -> float:
    """Inverse chi-squared CDF by bracketing followed by safeguarded Newton."""
    if dof < 1 or int(dof) != dof:
        raise ValueError("degrees of freedom must be a positive integer")
    _check_probability(p)
    if p == 0.0:
        return 0.0
    q = 1.0 - p

    def resid(x):
        # use the upper tail in the right half so p near 1 keeps precision
        return chi2_cdf(x, dof) - p if p < 0.5 else q - chi2_sf(x, dof)

    lo, hi = 0.0, max(float(dof), 1.0)
    while resid(hi) < 0:
        lo, hi = hi, 2.0 * hi
    x = 0.5 * (lo + hi)
    for _ in range(200):
        r = resid(x)
        if abs(r) <= 1e-15:
            break
        if r < 0:
            lo = x
        else:
            hi = x
        pdf = chi2_pdf(x, dof)
        step = r / pdf if pdf > 0 and math.isfinite(pdf) else math.inf
        nxt = x - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 4 * _EPS * max(1.0, x):
            x = nxt
            break
        x = nxt
    return x


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# disturbance model


@dataclass(frozen=True, eq=False)
class GaussianDisturbance:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mean, dtype=float).ravel()
        S = np.array(self.cov, dtype=float)
        if S.shape != (mu.size, mu.size):
            raise DimensionMismatch("covariance must be n x n")
        if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.abs(S).max()):
            raise ValueError("covariance is not symmetric")
        np.linalg.cholesky(S)  # raises LinAlgError if not PD
        mu.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "cov", S)

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.cov)

    @cached_property
    def sqrt(self) -> np.ndarray:
        vals, vecs = np.linalg.eigh(self.cov)
        return (vecs * np.sqrt(vals)) @ vecs.T

    @cached_property
    def inv_sqrt(self) -> np.ndarray:
        vals, vecs = np.linalg.eigh(self.cov)
        return (vecs / np.sqrt(vals)) @ vecs.T

    def sample(self, count: int, seed=0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.mean + rng.standard_normal((count, self.dim)) @ self.chol.T

    def density(self, W) -> np.ndarray:
        D = np.atleast_2d(W) - self.mean
        z = np.linalg.solve(self.chol, D.T)
        logdet = 2 * np.sum(np.log(np.diag(self.chol)))
        return np.exp(-0.5 * np.sum(z * z, axis=0) - 0.5 * logdet
                      - 0.5 * self.dim * math.log(2 * math.pi))

    def to_dict(self) -> dict:
        return {"type": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianDisturbance":
        if d.get("type", "gaussian") != "gaussian":
            raise ValueError(f"unsupported disturbance type {d.get('type')!r}")
        return cls(d["mean"], d["cov"])


class SetKind(str, Enum):
    ELLIPSOID = "ellipsoid"
    POLY_TEMPLATE = "poly_template"


@dataclass(frozen=True, eq=False)
class BoundedSetSpec:
    """Request for a set holding ``gamma ** (1 / horizon_steps)`` of the mass.

    For templates the set is ``Poly(A, m b, c) = {y : A (y - c) <= m b}`` with the
    scale ``m`` chosen by bisection.
    """

    kind: SetKind
    gamma: float
    horizon_steps: int
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    c: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SetKind(self.kind))
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidProbability(f"gamma {self.gamma!r} outside [0, 1]")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be positive")
        if self.kind == SetKind.POLY_TEMPLATE:
            if self.A is None or self.b is None:
                raise InvalidTemplate("polytopic template needs A and b")
            A = np.atleast_2d(np.array(self.A, dtype=float))
            b = np.array(self.b, dtype=float).ravel()
            c = np.zeros(A.shape[1]) if self.c is None else np.array(self.c, float).ravel()
            if b.size != A.shape[0] or c.size != A.shape[1]:
                raise DimensionMismatch("template A, b, c sizes disagree")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)
            object.__setattr__(self, "c", c)

    @property
    def target(self) -> float:
        return self.gamma ** (1.0 / self.horizon_steps)

    def template(self, scale: float) -> HPolytope:
        return HPolytope(self.A, scale * self.b, self.c)

    def validate_template(self):
        """The template must satisfy ``Poly(A, 0) = {0}`` and contain its center."""
        if np.any(self.b < 0):
            raise InvalidTemplate("template offsets b must be nonnegative")
        n = self.A.shape[1]
        zeros = np.zeros(self.A.shape[0])
        for i in range(n):
            for sgn in (1.0, -1.0):
                cvec = np.zeros(n)
                cvec[i] = -sgn
                res = solve_lp(cvec, self.A, zeros, bounds=(-1.0, 1.0))
                if res.status != "optimal" or -res.fun > 1e-9:
                    raise InvalidTemplate("Poly(A, 0) is not the single point {0}")

    @classmethod
    def whitened_box(cls, g: GaussianDisturbance, gamma: float, horizon_steps: int,
                     center=None) -> "BoundedSetSpec":
        """Box template aligned with the covariance principal axes, centred on ``center``."""
        W = g.inv_sqrt
        c = g.mean if center is None else np.asarray(center, float)
        return cls(SetKind.POLY_TEMPLATE, gamma, horizon_steps,
                   np.vstack([W, -W]), np.ones(2 * g.dim), c)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "gamma": self.gamma, "horizon_steps": self.horizon_steps}
        if self.kind == SetKind.POLY_TEMPLATE:
            out.update(A=self.A.tolist(), b=self.b.tolist(), c=self.c.tolist())
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "BoundedSetSpec":
        return cls(d["kind"], d["gamma"], d["horizon_steps"], d.get("A"), d.get("b"), d.get("c"))


def gaussian_level_ellipsoid(g: GaussianDisturbance, gamma: float, steps: int) -> Ellipsoid:
    """Ellipsoid ``{(y-mu)' Sigma^-1 (y-mu) <= R^2}`` of mass ``gamma ** (1/steps)``."""
    _check_probability(gamma)
    if steps < 1:
        raise ValueError("steps must be positive")
    r2 = chi2_quantile(g.dim, gamma ** (1.0 / steps))
    return Ellipsoid(g.mean, g.cov, r2)


# ---------------------------------------------------------------------------
# probability of a polytope


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    std_error: float
    method: str  # "exact" | "qmc" | "empty"
    samples: int = 0


def _axis_intervals(G: np.ndarray, r: np.ndarray, n: int):
    """Intervals ``lo <= e_j . eta <= hi`` if the rows of ``G`` use <= n orthogonal directions."""
    norms = np.linalg.norm(G, axis=1)
    zero = norms <= 1e-14
    if np.any(r[zero] < 0):
        return []
    G, r, norms = G[~zero], r[~zero], norms[~zero]
    U = G / norms[:, None]
    dirs, intervals = [], []
    for u, rho in zip(U, r / norms):
        for j, e in enumerate(dirs):
            dot = float(u @ e)
            if abs(abs(dot) - 1.0) <= 1e-10:
                lo, hi = intervals[j]
                intervals[j] = (lo, min(hi, rho)) if dot > 0 else (max(lo, -rho), hi)
                break
        else:
            dirs.append(u)
            intervals.append((-math.inf, rho))
    if len(dirs) > n:
        return None
    D = np.array(dirs).reshape(-1, n)
    if np.max(np.abs(D @ D.T - np.eye(len(dirs))), initial=0.0) > 1e-10:
        return None
    return intervals


@lru_cache(maxsize=8)
def _qmc_normals(n: int, samples: int, seed: int, replicates: int) -> np.ndarray:
    per = samples // replicates
    m = max(1, int(round(math.log2(per))))
    blocks = []
    for r in range(replicates):
        sob = qmc.Sobol(d=n, scramble=True, seed=np.random.default_rng([seed, r]))
        blocks.append(ndtri(sob.random_base2(m)))
    out = np.stack(blocks)
    out.setflags(write=False)
    return out


def polytope_probability(g: GaussianDisturbance, P, samples: int = 2**16, seed: int = 0,
                         replicates: int = 16) -> ProbabilityEstimate:
    """``P(w in P)`` for ``w ~ g``.

    Exact (product of normal CDF differences) when the whitened polytope is a
    box along orthogonal axes; otherwise randomized QMC with ``replicates``
    independent scramblings, whose spread gives the standard error.
    """
    H = P.to_h()
    if H.dim != g.dim:
        raise DimensionMismatch("polytope dimension differs from disturbance")
    if H.is_empty:
        return ProbabilityEstimate(0.0, 0.0, "empty")
    A, rhs = np.asarray(H.A), np.asarray(H.rhs)
    r = rhs - A @ g.mean
    for root in (g.sqrt, g.chol):
        intervals = _axis_intervals(A @ root, r, g.dim)
        if intervals is None:
            continue
        prob = 1.0
        for lo, hi in intervals:
            if hi <= lo:
                return ProbabilityEstimate(0.0, 0.0, "exact")
            prob *= normal_cdf(hi) - normal_cdf(lo)
        return ProbabilityEstimate(float(prob), 0.0, "exact")

    ball = H.chebyshev_ball()
    if ball is None or ball[1] <= 1e-12:
        return ProbabilityEstimate(0.0, 0.0, "exact")
    Z = _qmc_normals(g.dim, samples, seed, replicates)
    W = g.mean + Z @ g.chol.T
    means = np.all(W @ A.T <= rhs, axis=2).mean(axis=1)
    se = float(means.std(ddof=1) / math.sqrt(replicates))
    return ProbabilityEstimate(float(means.mean()), se, "qmc", int(Z.shape[0] * Z.shape[1]))


# ---------------------------------------------------------------------------
# bisection for polytopic bounded sets


@dataclass(frozen=True, eq=False)
class BisectionResult:
    polytope: HPolytope
    scale: float
    probability: float
    std_error: float
    target: float
    iterations: int
    method: str

    def to_dict(self) -> dict:
        from lagreach.geometry import to_dict

        return {"polytope": to_dict(self.polytope), "scale": self.scale,
                "probability": self.probability, "std_error": self.std_error,
                "target": self.target, "iterations": self.iterations, "method": self.method}


def bisect_bounded_set(g: GaussianDisturbance, spec: BoundedSetSpec, tol: float | None = None,
                       max_iter: int = 200, samples: int = 2**16,
                       seed: int = 0) -> BisectionResult:
    """Scale the template until its probability matches ``spec.target``.

    The scale doubles from 1 until the mass reaches the target, then the
    bracket is bisected. The loop stops once ``|p - target| <= tol``
    (``tol`` defaults to 1e-6 for exact probabilities and three standard
    errors for QMC estimates).
    """
    if spec.kind != SetKind.POLY_TEMPLATE:
        raise InvalidTemplate("bisection needs a polytopic template")
    spec.validate_template()
    _check_probability(spec.gamma)
    target = spec.target
    if spec.gamma == 0.0:
        return BisectionResult(spec.template(0.0), 0.0, 0.0, 0.0, target, 0, "exact")

    iterations = 0

    def evaluate(scale):
        nonlocal iterations
        iterations += 1
        if iterations > max_iter:
            raise NoConvergence(f"no convergence within {max_iter} evaluations")
        est = polytope_probability(g, spec.template(scale), samples, seed)
        bound = tol if tol is not None else (3 * est.std_error if est.method == "qmc" else 1e-6)
        return est, abs(est.value - target) <= bound

    def done(scale, est):
        return BisectionResult(spec.template(scale), scale, est.value, est.std_error,
                               target, iterations, est.method)

    scale = 1.0
    est, ok = evaluate(scale)
    if ok:
        return done(scale, est)
    while est.value < target:
        scale *= 2.0
        est, ok = evaluate(scale)
        if ok:
            return done(scale, est)
    lo = 0.0 if scale == 1.0 else scale / 2.0
    hi = scale
    mid = 0.5 * (lo + hi)
    est, ok = evaluate(mid)
    while not ok:
        if est.value > target:
            hi = mid
        else:
            lo = mid
        mid = 0.5 * (lo + hi)
        est, ok = evaluate(mid)
    return done(mid, est)
