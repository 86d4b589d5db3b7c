"""Scenario configuration: JSON schema, validation and the three canonical scenarios."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lagreach.disturbance import GaussianDisturbance, chi2_quantile
from lagreach.errors import ConfigInvalid
from lagreach.geometry import HPolytope, from_dict, to_dict
from lagreach.linsys import Cwh, DoubleIntegrator, IntegratorChain, LtvSystem, TargetTube

SYSTEM_TYPES = ("double_integrator", "integrator_chain", "cwh", "explicit")
STRATEGIES = ("ellipsoid", "box_template", "multi")
CHECKS = ("sandwich", "containment", "nonempty", "speed_ratio", "monotone")
TUBE_KINDS = ("minimal", "maximal")


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigInvalid(f"{path}.{key}" if path else key, "missing required field")
    return d[key]


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(path, f"expected a finite number, got {v!r}")
    return float(v)


def _vector(v, n: int, path: str) -> np.ndarray:
    """Scalars broadcast to length ``n``."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return np.full(n, float(v))
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size != n:
        raise ConfigInvalid(path, f"expected {n} entries, got {arr.size}")
    return arr


def _matrix(v, n: int, path: str) -> np.ndarray:
    """Scalars become multiples of the identity."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v) * np.eye(n)
    arr = np.asarray(v, dtype=float)
    if arr.shape != (n, n):
        raise ConfigInvalid(path, f"expected a {n}x{n} matrix, got shape {arr.shape}")
    return arr


def _polytope(d, path: str):
    try:
        return from_dict(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(path, f"bad polytope: {exc}") from exc


@dataclass
class GridConfig:
    lower: list
    upper: list
    points: list
    input_points: int = 21


@dataclass
class ScenarioConfig:
    name: str
    system: dict
    horizon: int
    alpha: float
    input_space: dict
    tube: dict
    disturbance: dict
    bounded_set: dict = field(default_factory=lambda: {"strategy": "ellipsoid"})
    tubes: list = field(default_factory=lambda: list(TUBE_KINDS))
    oracle: dict = field(default_factory=lambda: {"enabled": False})
    checks: list = field(default_factory=list)
    cross_sections: list = field(default_factory=list)
    seed: int = 0
    output_dir: str = "out"
    notes: dict = field(default_factory=dict)

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigInvalid("", "scenario must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(d) - known)
        if extra:
            raise ConfigInvalid(extra[0], "unknown field")
        kw = {k: _require(d, k, "") for k in
              ("name", "system", "horizon", "alpha", "input_space", "tube", "disturbance")}
        kw.update({k: d[k] for k in known - set(kw) if k in d})
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def with_dim(self, n: int) -> "ScenarioConfig":
        if self.system.get("type") != "integrator_chain":
            raise ConfigInvalid("system.n", "--dim only applies to integrator chains")
        d = self.to_dict()
        d["system"] = dict(self.system, n=int(n))
        d["name"] = f"{self.name}_n{n}"
        return ScenarioConfig.from_dict(d)

    def validate(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigInvalid("name", "expected a nonempty string")
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigInvalid("horizon", "expected an integer >= 1")
        a = _number(self.alpha, "alpha")
        if not 0.0 <= a <= 1.0:
            raise ConfigInvalid("alpha", "must lie in [0, 1]")
        for i, c in enumerate(self.checks):
            if c not in CHECKS:
                raise ConfigInvalid(f"checks[{i}]", f"unknown check {c!r}")
        for i, t in enumerate(self.tubes):
            if t not in TUBE_KINDS:
                raise ConfigInvalid(f"tubes[{i}]", f"unknown tube kind {t!r}")
        strategy = self.bounded_set.get("strategy")
        if strategy not in STRATEGIES:
            raise ConfigInvalid("bounded_set.strategy", f"expected one of {STRATEGIES}")
        if strategy == "multi":
            offsets = _require(self.bounded_set, "offsets", "bounded_set")
            if not isinstance(offsets, list) or not offsets:
                raise ConfigInvalid("bounded_set.offsets", "expected a nonempty list")
            mode = self.bounded_set.get("mode", "hull")
            if mode not in ("hull", "union"):
                raise ConfigInvalid("bounded_set.mode", "expected 'hull' or 'union'")
        oracle_on = bool(self.oracle.get("enabled", False))
        if oracle_on:
            _require(self.oracle, "grid", "oracle")
        for c in ("sandwich", "speed_ratio"):
            if c in self.checks and not oracle_on:
                raise ConfigInvalid("oracle.enabled", f"check {c!r} needs the DP oracle")
        needs_both = {"sandwich", "containment", "speed_ratio"} & set(self.checks)
        if needs_both and set(self.tubes) != set(TUBE_KINDS):
            raise ConfigInvalid("tubes", f"checks {sorted(needs_both)} need both tube kinds")
        # building exercises the nested fields and reports their paths
        self.build_system()
        self.build_tube()
        self.build_disturbance()
        if oracle_on:
            self.build_grid()

    # -- construction -----------------------------------------------------

    def system_descriptor(self):
        s = self.system
        kind = _require(s, "type", "system")
        if kind == "double_integrator":
            return DoubleIntegrator(_number(s.get("T", 0.25), "system.T"))
        if kind == "integrator_chain":
            n = s.get("n", 4)
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ConfigInvalid("system.n", "expected a positive integer")
            return IntegratorChain(n, _number(s.get("T", 0.25), "system.T"))
        if kind == "cwh":
            base = Cwh()
            return Cwh(_number(s.get("T", base.T), "system.T"),
                       _number(s.get("m_d", base.m_d), "system.m_d"),
                       _number(s.get("mu", base.mu), "system.mu"),
                       _number(s.get("orbit_radius", base.orbit_radius), "system.orbit_radius"))
        if kind == "explicit":
            return None
        raise ConfigInvalid("system.type", f"expected one of {SYSTEM_TYPES}")

    def build_system(self) -> LtvSystem:
        desc = self.system_descriptor()
        if desc is None:
            A = np.asarray(_require(self.system, "A", "system"), float)
            B = np.asarray(_require(self.system, "B", "system"), float)
        else:
            A, B = desc.matrices()
        U = _polytope(self.input_space, "input_space").to_h()
        try:
            return LtvSystem(A, B, U, self.horizon)
        except ValueError as exc:
            raise ConfigInvalid("system", str(exc)) from exc

    @property
    def dim(self) -> int:
        desc = self.system_descriptor()
        if desc is None:
            return np.asarray(self.system["A"]).shape[0]
        return desc.matrices()[0].shape[0]

    def build_tube(self) -> TargetTube:
        t, n, N = self.tube, self.dim, self.horizon
        if "sets" in t:
            sets = [_polytope(s, f"tube.sets[{i}]") for i, s in enumerate(t["sets"])]
            if len(sets) != N + 1:
                raise ConfigInvalid("tube.sets", f"expected {N + 1} sets, got {len(sets)}")
            return TargetTube(sets)
        name = _require(t, "name", "tube")
        if name == "viability_box":
            lo = _vector(t.get("lower", -1.0), n, "tube.lower")
            hi = _vector(t.get("upper", 1.0), n, "tube.upper")
            return TargetTube.constant(HPolytope.box(lo, hi), N)
        if name == "cwh_tube":
            if n != 4:
                raise ConfigInvalid("tube.name", "cwh_tube needs a 4-dimensional state")
            return cwh_target_tube(N, t.get("terminal"), t.get("cone_speed", 0.05))
        raise ConfigInvalid("tube.name", f"unknown named tube {name!r}")

    def build_disturbance(self) -> GaussianDisturbance:
        d, n = self.disturbance, self.dim
        if d.get("type", "gaussian") != "gaussian":
            raise ConfigInvalid("disturbance.type", "only 'gaussian' is supported")
        mu = _vector(_require(d, "mean", "disturbance"), n, "disturbance.mean")
        cov = _matrix(_require(d, "cov", "disturbance"), n, "disturbance.cov")
        try:
            return GaussianDisturbance(mu, cov)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ConfigInvalid("disturbance.cov", str(exc)) from exc

    def build_grid(self):
        from lagreach.dp import GridSpec

        gd = self.oracle["grid"]
        n = self.dim
        try:
            return GridSpec(tuple(_vector(_require(gd, "lower", "oracle.grid"), n, "oracle.grid.lower")),
                            tuple(_vector(_require(gd, "upper", "oracle.grid"), n, "oracle.grid.upper")),
                            tuple(int(p) for p in _vector(_require(gd, "points", "oracle.grid"), n,
                                                          "oracle.grid.points")),
                            int(gd.get("input_points", 21)))
        except ValueError as exc:
            raise ConfigInvalid("oracle.grid", str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("", f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


def cwh_target_tube(N: int, terminal=None, cone_speed: float = 0.05) -> TargetTube:
    """Line-of-sight cone ``|z1| <= z2`` with speed bounds, ending in a small docking box."""
    if terminal is None:
        terminal = HPolytope.box([-0.1, -0.1, -0.01, -0.01], [0.1, 0.0, 0.01, 0.01])
    else:
        terminal = from_dict(terminal)
    v = cone_speed
    cone = HPolytope(
        [[1, -1, 0, 0], [-1, -1, 0, 0],
         [0, 0, 1, 0], [0, 0, -1, 0], [0, 0, 0, 1], [0, 0, 0, -1]],
        [0, 0, v, v, v, v],
    )
    return TargetTube([cone] * N + [terminal])


# ---------------------------------------------------------------------------
# canonical scenarios


def _box_dict(lo, hi) -> dict:
    return to_dict(HPolytope.box(lo, hi))


def double_integrator_config() -> ScenarioConfig:
    return ScenarioConfig(
        name="double_integrator",
        system={"type": "double_integrator", "T": 0.25},
        horizon=5,
        alpha=0.8,
        input_space=_box_dict([-0.1], [0.1]),
        tube={"name": "viability_box", "lower": -1.0, "upper": 1.0},
        disturbance={"type": "gaussian", "mean": [0.0, 0.0], "cov": (0.005 * np.eye(2)).tolist()},
        bounded_set={"strategy": "ellipsoid"},
        oracle={"enabled": True, "grid": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0],
                                         "points": [41, 41], "input_points": 21}},
        checks=["sandwich", "containment", "nonempty", "speed_ratio", "monotone"],
        output_dir="out/double_integrator",
        notes={"input_bound": "|u| <= 0.1, borrowed from the chain example"},
    )


def chain_config(n: int = 4) -> ScenarioConfig:
    return ScenarioConfig(
        name="chain",
        system={"type": "integrator_chain", "n": n, "T": 0.25},
        horizon=5,
        alpha=0.8,
        input_space=_box_dict([-0.1], [0.1]),
        tube={"name": "viability_box", "lower": -1.0, "upper": 1.0},
        disturbance={"type": "gaussian", "mean": 0.0, "cov": 1e-5},
        bounded_set={"strategy": "box_template"},
        tubes=["minimal"],
        checks=["nonempty"],
        output_dir="out/chain",
    )


def cwh_config() -> ScenarioConfig:
    cov = 1e-4 * np.diag([1.0, 1.0, 5e-4, 5e-4])
    gamma = 0.8 ** (1 / 5)
    return ScenarioConfig(
        name="cwh",
        system={"type": "cwh", "T": 20.0, "m_d": 300.0, "mu": 3.986e14,
                "orbit_radius": 850e3 + 6378.1e3},
        horizon=5,
        alpha=0.8,
        input_space=_box_dict([-0.1, -0.1], [0.1, 0.1]),
        tube={"name": "cwh_tube"},
        disturbance={"type": "gaussian", "mean": [0.0] * 4, "cov": cov.tolist()},
        bounded_set={"strategy": "box_template"},
        checks=["containment", "nonempty"],
        cross_sections=[{"fixed": {"2": 0.0, "3": 0.0}}],
        output_dir="out/cwh",
        notes={
            "quoted_radius_sq": 6.26,
            "chi2_radius_sq_dof2": round(chi2_quantile(2, gamma), 6),
            "chi2_radius_sq_dof4": round(chi2_quantile(4, gamma), 6),
            "bounded_sets": "whitened boxes by bisection; the ellipsoid radii are recorded only",
        },
    )


CANONICAL = {"double_integrator": double_integrator_config, "chain": chain_config,
             "cwh": cwh_config}


def write_config(cfg: ScenarioConfig, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_scenarios(out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, factory in CANONICAL.items():
        p = out / f"{name}.json"
        write_config(factory(), p)
        paths.append(p)
    return paths
