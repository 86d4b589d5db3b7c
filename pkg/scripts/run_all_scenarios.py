"""Write the canonical scenario files and run each one with its default checks.

    python scripts/run_all_scenarios.py --out out

Each scenario gets its own directory under ``--out``; a one-line summary per
scenario is printed at the end.
"""

import argparse
import sys
import time
from pathlib import Path

from lagreach.runner import run_scenario
from lagreach.scenarios import load_config, make_scenarios


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)

    out = Path(args.out)
    summary = []
    for path in make_scenarios(out / "scenarios"):
        cfg = load_config(path)
        t0 = time.perf_counter()
        report = run_scenario(cfg, out / cfg.name, seed=args.seed)
        checks = ", ".join(f"{k}={v['status']}" for k, v in report.verdicts.items())
        summary.append((cfg.name, report.passed, time.perf_counter() - t0, checks))

    print()
    for name, passed, seconds, checks in summary:
        print(f"{name:20s} {'ok  ' if passed else 'FAIL'} {seconds:7.2f} s  {checks}")
    return 0 if all(s[1] for s in summary) else 1


if __name__ == "__main__":
    sys.exit(main())
