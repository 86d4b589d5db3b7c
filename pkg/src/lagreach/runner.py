"""Scenario runner: bounded sets, tubes, the DP oracle, checks and output files."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lagreach.disturbance import (
    BoundedSetSpec,
    GaussianDisturbance,
    bisect_bounded_set,
    gaussian_level_ellipsoid,
)
from lagreach.dp import GridSpec, alpha_level_cells, stochastic_value_iteration
from lagreach.errors import ConfigInvalid, InvalidProbability
from lagreach.geometry import HPolytope, is_subset, to_dict
from lagreach.reach import (
    maximal_reach_tube,
    minimal_reach_tube,
    multi_maximal_reach_tube,
    multi_minimal_reach_tube,
    save_tube,
    write_cross_section_csv,
    write_vertex_csv,
)
from lagreach.scenarios import ScenarioConfig
from lagreach.tube import ReachTube

SANDWICH_FRACTION = 0.99
SPEED_RATIO = 2.0
SAMPLE_POINTS = 1000


@dataclass
class DisturbanceSets:
    W: list
    O: list
    records: list = field(default_factory=list)
    seconds: float = 0.0


def _box_spec(g: GaussianDisturbance, gamma: float, N: int, template: str, center=None):
    if template == "whitened":
        return BoundedSetSpec.whitened_box(g, gamma, N, center)
    if template == "identity":
        n = g.dim
        c = g.mean if center is None else center
        return BoundedSetSpec("poly_template", gamma, N, np.vstack([np.eye(n), -np.eye(n)]),
                              np.ones(2 * n), c)
    raise ConfigInvalid("bounded_set.template", f"unknown template {template!r}")


def build_disturbance_sets(cfg: ScenarioConfig, g: GaussianDisturbance, seed: int,
                           kinds=("minimal", "maximal")) -> DisturbanceSets:
    """``W`` carries ``alpha ** (1/N)`` of the mass and ``O`` carries ``(1 - alpha) ** (1/N)``."""
    t0 = time.perf_counter()
    bs, N, alpha = cfg.bounded_set, cfg.horizon, float(cfg.alpha)
    strategy = bs["strategy"]
    levels = {"minimal": alpha, "maximal": 1.0 - alpha}
    out = DisturbanceSets([], [])
    samples = int(bs.get("samples", 2**16))
    for kind in kinds:
        gamma = levels[kind]
        target = out.W if kind == "minimal" else out.O
        try:
            if strategy == "ellipsoid":
                E = gaussian_level_ellipsoid(g, gamma, N)
                target.append(E)
                out.records.append({"role": kind, "kind": "ellipsoid", "gamma": gamma,
                                    "radius_sq": E.radius_sq})
                continue
            centers = [None] if strategy == "box_template" else \
                [g.mean + np.asarray(c, float) for c in bs["offsets"]]
            for c in centers:
                spec = _box_spec(g, gamma, N, bs.get("template", "whitened"), c)
                res = bisect_bounded_set(g, spec, samples=samples, seed=seed)
                target.append(res.polytope)
                rec = res.to_dict()
                rec.pop("polytope")
                out.records.append({"role": kind, "kind": "box", "gamma": gamma,
                                    "center": spec.c.tolist(), **rec})
        except InvalidProbability as exc:
            raise ConfigInvalid("alpha", f"cannot build the {kind} disturbance set: {exc}") from exc
    out.seconds = time.perf_counter() - t0
    return out


# ---------------------------------------------------------------------------
# checks


def boundary_band(mask: np.ndarray) -> np.ndarray:
    """Cells whose 3^n neighbourhood (edges replicated) has mixed membership."""
    padded = np.pad(mask, 1, mode="edge")
    lo = np.ones_like(mask, dtype=bool)
    hi = np.zeros_like(mask, dtype=bool)
    n = mask.ndim
    for shift in np.ndindex(*(3,) * n):
        window = padded[tuple(slice(s, s + m) for s, m in zip(shift, mask.shape))]
        lo &= window
        hi |= window
    return hi & ~lo


def sandwich_fractions(minimal: ReachTube, maximal: ReachTube, values, alpha: float) -> list:
    """Per ``k < N``: share of off-band cells where min -> level set -> max both hold."""
    grid = values.grid
    X = grid.nodes
    out = []
    for k in range(minimal.horizon):
        in_min = minimal.contains(k, X).reshape(grid.points)
        in_max = maximal.contains(k, X).reshape(grid.points)
        level = alpha_level_cells(values, alpha, k)
        band = boundary_band(in_min) | boundary_band(in_max)
        ok = (~in_min | level) & (~level | in_max)
        considered = ~band
        frac = float(ok[considered].mean()) if considered.any() else 1.0
        out.append({"k": k, "fraction": frac, "cells": int(considered.sum()),
                    "violations": int((~ok & considered).sum())})
    return out


def _sample_inside(P: HPolytope, count: int, rng) -> np.ndarray:
    lo, hi = P.bounding_box()
    pts = []
    have = 0
    for _ in range(200):
        X = rng.uniform(lo, hi, size=(4 * count, len(lo)))
        X = X[P.contains(X)]
        pts.append(X)
        have += len(X)
        if have >= count:
            break
    return np.concatenate(pts)[:count]


def containment_check(inner: ReachTube, outer: ReachTube, seed: int, count: int = SAMPLE_POINTS):
    rng = np.random.default_rng(seed)
    details = []
    passed = True
    for k in range(inner.horizon + 1):
        vertex_ok, sample_viol, sampled = True, 0, 0
        for m in inner.members(k):
            if m.is_empty:
                continue
            outer_members = outer.members(k)
            if len(outer_members) == 1:
                vertex_ok &= is_subset(m, outer_members[0])
            X = _sample_inside(m, count, rng)
            sampled += len(X)
            sample_viol += int((~outer.contains(k, X)).sum()) if len(X) else 0
        passed &= vertex_ok and sample_viol == 0
        details.append({"k": k, "vertices_inside": bool(vertex_ok), "samples": sampled,
                        "violations": sample_viol})
    return passed, details


def _nested(tube_sets) -> bool:
    return all(is_subset(tube_sets[k], tube_sets[k + 1]) for k in range(len(tube_sets) - 1))


# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    name: str
    out_dir: Path
    verdicts: dict
    timings: list
    files: list
    report: dict

    @property
    def passed(self) -> bool:
        return all(v["status"] != "fail" for v in self.verdicts.values())


def _slug(alpha: float) -> str:
    return f"{alpha:g}"


def _write_timings(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "k", "milliseconds"])
        for phase, k, ms in rows:
            w.writerow([phase, k, f"{ms:.3f}"])


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def run_scenario(cfg: ScenarioConfig, out_dir=None, checks=None, seed=None,
                 dp_points: int | None = None, log=print) -> RunReport:
    """Run one scenario end to end and write every artefact into ``out_dir``."""
    seed = cfg.seed if seed is None else int(seed)
    checks = list(cfg.checks if checks is None else checks)
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    N, alpha = cfg.horizon, float(cfg.alpha)
    oracle_on = bool(cfg.oracle.get("enabled", False))
    for c in ("sandwich", "speed_ratio"):
        if c in checks and not oracle_on:
            raise ConfigInvalid("oracle.enabled", f"check {c!r} needs the DP oracle")

    sys_ = cfg.build_system()
    tube = cfg.build_tube()
    g = cfg.build_disturbance()
    files, timings = [], []

    want = [k for k in ("minimal", "maximal") if k in cfg.tubes]
    dsets = build_disturbance_sets(cfg, g, seed, want)
    timings.append(("bounded_sets", "total", 1e3 * dsets.seconds))
    log(f"[{cfg.name}] disturbance sets built in {dsets.seconds:.3f} s")
    _dump_json({"disturbance": g.to_dict(), "sets": dsets.records,
                "W": [to_dict(w) for w in dsets.W], "O": [to_dict(o) for o in dsets.O]},
               out / "disturbance_sets.json")
    files.append("disturbance_sets.json")

    tubes: dict[str, ReachTube] = {}
    multi = cfg.bounded_set["strategy"] == "multi"
    for kind in want:
        if kind == "minimal":
            if multi:
                t = multi_minimal_reach_tube(sys_, tube, dsets.W, cfg.bounded_set.get("mode", "hull"),
                                             alpha, cfg.bounded_set.get("preconditions", {}))
            else:
                t = minimal_reach_tube(sys_, tube, dsets.W[0], alpha)
        else:
            if multi:
                t = multi_maximal_reach_tube(sys_, tube, dsets.O, alpha, seed=seed)
            else:
                t = maximal_reach_tube(sys_, tube, dsets.O[0], alpha, seed=seed)
        tubes[kind] = t
        for k, s in enumerate(t.step_seconds):
            timings.append((kind, k, 1e3 * s))
        timings.append((kind, "total", 1e3 * t.total_seconds))
        log(f"[{cfg.name}] {kind} tube: {t.total_seconds:.3f} s, empty_from={t.empty_from}")
        save_tube(t, out / f"tube_{kind}.json")
        write_vertex_csv(t, out / f"tube_{kind}_vertices.csv")
        files += [f"tube_{kind}.json", f"tube_{kind}_vertices.csv"]
        for cs in cfg.cross_sections:
            fixed = {int(i): float(v) for i, v in cs["fixed"].items()}
            tag = "_".join(f"x{i}={v:g}" for i, v in sorted(fixed.items()))
            name = f"cross_section_{kind}_{tag}.csv"
            write_cross_section_csv(t, out / name, fixed)
            files.append(name)

    values = None
    if oracle_on:
        grid = cfg.build_grid()
        if dp_points is not None:
            grid = GridSpec(grid.lower, grid.upper, (int(dp_points),) * grid.dim, grid.input_points)
        values = stochastic_value_iteration(sys_, tube, g, grid)
        timings.append(("dp", "total", 1e3 * values.seconds))
        log(f"[{cfg.name}] DP on {'x'.join(map(str, grid.points))} grid: {values.seconds:.3f} s")
        mask = alpha_level_cells(values, alpha)
        name = f"dp_mask_alpha{_slug(alpha)}.csv"
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"x{i}" for i in range(grid.dim)] + ["in_level_set"])
            for k in range(N + 1):
                for x, m in zip(grid.nodes, mask[k].ravel()):
                    w.writerow([k] + [repr(float(c)) for c in x] + [int(m)])
        values.dump(out / "dp_values.bin")
        files += [name, "dp_values.bin"]

    verdicts, report_extra = {}, {}
    for c in checks:
        if c == "sandwich":
            fr = sandwich_fractions(tubes["minimal"], tubes["maximal"], values, alpha)
            ok = all(f["fraction"] >= SANDWICH_FRACTION for f in fr)
            verdicts[c] = {"status": "pass" if ok else "fail", "threshold": SANDWICH_FRACTION,
                           "per_k": fr}
        elif c == "containment":
            ok, det = containment_check(tubes["minimal"], tubes["maximal"], seed)
            verdicts[c] = {"status": "pass" if ok else "fail", "per_k": det}
        elif c == "nonempty":
            empty = {k: t.is_empty_at(0) for k, t in tubes.items()}
            verdicts[c] = {"status": "fail" if any(empty.values()) else "pass",
                           "empty_at_0": empty}
        elif c == "speed_ratio":
            lag = dsets.seconds + sum(t.total_seconds for t in tubes.values())
            ratio = values.seconds / lag if lag > 0 else float("inf")
            report_extra["speed_ratio"] = {"dp_seconds": values.seconds,
                                           "lagrangian_seconds": lag, "ratio": ratio}
            verdicts[c] = {"status": "pass" if ratio >= SPEED_RATIO else "fail",
                           "threshold": SPEED_RATIO}
        elif c == "monotone":
            if not _nested(tube.sets):
                verdicts[c] = {"status": "skipped", "reason": "target tube is not nested"}
                continue
            det = {}
            for kind, t in tubes.items():
                det[kind] = all(is_subset(t.sets[k], t.sets[k + 1]) for k in range(N)
                                if not t.is_empty_at(k))
            if values is not None:
                det["dp"] = all(bool(np.all(values[k] <= values[k + 1] + 1e-9)) for k in range(N))
            verdicts[c] = {"status": "pass" if all(det.values()) else "fail", "nested": det}
        log(f"[{cfg.name}] {c}: {verdicts[c]['status']}")

    _write_timings(out / "timings.csv", timings)
    passed = all(v["status"] != "fail" for v in verdicts.values())
    _dump_json({"passed": passed, "checks": verdicts}, out / "verdict.json")
    # everything clock-dependent lives in the timing files so the rest is reproducible
    timing_summary = {
        "bounded_sets_seconds": dsets.seconds,
        "tubes": {k: t.total_seconds for k, t in tubes.items()},
        "dp_seconds": None if values is None else values.seconds,
        **report_extra,
    }
    _dump_json(timing_summary, out / "timings.json")
    report = {
        "name": cfg.name, "seed": seed, "horizon": N, "alpha": alpha,
        "config": cfg.to_dict(), "disturbance_sets": dsets.records,
        "tubes": {k: {"empty_from": t.empty_from, "facets": [
            sum(m.n_facets for m in t.members(j)) for j in range(N + 1)]}
            for k, t in tubes.items()},
        "dp": None if values is None else {"grid": values.grid.to_dict(), **values.meta},
        "checks": {k: v["status"] for k, v in verdicts.items()},
    }
    _dump_json(report, out / "report.json")
    files += ["timings.csv", "timings.json", "verdict.json", "report.json"]
    return RunReport(cfg.name, out, verdicts, timings, files, {**report, "timings": timing_summary})
