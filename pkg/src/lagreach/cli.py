"""Command line entry point.

    lagreach run --scenario cfg.json [--check sandwich,monotone] [--seed N] [--out DIR]
                 [--dp-grid P] [--dim n]
    lagreach make-scenarios --out DIR
    lagreach geom <op> FILE [FILE ...]

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration,
3 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback

import numpy as np

from lagreach import geometry as geo
from lagreach.errors import ConfigInvalid
from lagreach.scenarios import CHECKS, load_config, make_scenarios

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


def _floats(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",")])


def _load_set(path):
    with open(path) as fh:
        return geo.from_dict(json.load(fh))


def _geom(args) -> dict:
    sets = [_load_set(p) for p in args.files]
    op = args.op
    binary = {"sum": geo.minkowski_sum, "diff": geo.pontryagin_diff}
    if op in binary:
        if len(sets) != 2:
            raise ConfigInvalid("files", f"{op} takes exactly two sets")
        return geo.to_dict(binary[op](*sets))
    if op == "intersect":
        return geo.to_dict(geo.intersect(*[s.to_h() for s in sets]))
    if op == "hull":
        return geo.to_dict(geo.convex_hull(sets))
    if op == "subset":
        return {"subset": bool(geo.is_subset(sets[0], sets[1]))}
    (P,) = sets if len(sets) == 1 else (None,)
    if P is None:
        raise ConfigInvalid("files", f"{op} takes one set")
    if op == "normalize":
        return geo.to_dict(P.normalize())
    if op == "convert":
        return geo.to_dict(geo.convert(P))
    if op == "volume":
        return {"volume": geo.volume(P)}
    if op == "bbox":
        lo, hi = P.bounding_box()
        return {"lower": lo.tolist(), "upper": hi.tolist()}
    if op == "support":
        if args.direction is None:
            raise ConfigInvalid("direction", "support needs --direction")
        return {"support": float(geo.support_many(P, _floats(args.direction)[None, :])[0])}
    if op == "contains":
        if args.point is None:
            raise ConfigInvalid("point", "contains needs --point")
        return {"contains": bool(P.contains(_floats(args.point)))}
    raise ConfigInvalid("op", f"unknown geometry operation {op!r}")


GEOM_OPS = ("normalize", "convert", "sum", "diff", "intersect", "hull", "subset", "volume",
            "bbox", "support", "contains")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lagreach", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and its checks")
    run.add_argument("--scenario", required=True, help="scenario JSON file")
    run.add_argument("--check", help=f"comma separated subset of {','.join(CHECKS)}")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (default: from the scenario)")
    run.add_argument("--dp-grid", type=int, help="DP points per axis")
    run.add_argument("--dim", type=int, help="state dimension (integrator chain only)")
    run.add_argument("--quiet", action="store_true")

    mk = sub.add_parser("make-scenarios", help="write the canonical scenario files")
    mk.add_argument("--out", required=True)

    gm = sub.add_parser("geom", help="apply one geometry primitive to polytope JSON files")
    gm.add_argument("op", choices=GEOM_OPS)
    gm.add_argument("files", nargs="+")
    gm.add_argument("--direction", help="comma separated direction for 'support'")
    gm.add_argument("--point", help="comma separated point for 'contains'")
    gm.add_argument("--output", help="write JSON here instead of stdout")
    return ap


def _run(args) -> int:
    # local import keeps `geom` and `make-scenarios` light
    from lagreach.runner import run_scenario

    try:
        cfg = load_config(args.scenario)
    except FileNotFoundError as exc:
        raise ConfigInvalid("scenario", str(exc)) from exc
    if args.dim is not None:
        cfg = cfg.with_dim(args.dim)
    checks = None
    if args.check:
        checks = [c.strip() for c in args.check.split(",") if c.strip()]
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigInvalid("check", f"unknown checks {bad}")
    log = (lambda *a, **k: None) if args.quiet else print
    report = run_scenario(cfg, args.out, checks, args.seed, args.dp_grid, log=log)
    log(f"[{cfg.name}] outputs in {report.out_dir}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "make-scenarios":
            for p in make_scenarios(args.out):
                print(p)
            return EXIT_PASS
        result = _geom(args)
        text = json.dumps(result, indent=1, sort_keys=True)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return EXIT_PASS
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
