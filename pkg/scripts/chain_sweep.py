"""Minimal reach tube of the integrator chain for a range of state dimensions.

    python scripts/chain_sweep.py --dims 2 3 4 5 --out out/chain_sweep.csv

Writes one row per dimension: wall time, per-step facet counts and whether
the k = 0 set is empty. Dimensions above 5 can take several minutes.
"""

import argparse
import csv
import time

from lagreach.reach import minimal_reach_tube
from lagreach.runner import build_disturbance_sets
from lagreach.scenarios import chain_config


def run(n, seed=0):
    cfg = chain_config(n)
    g = cfg.build_disturbance()
    sets = build_disturbance_sets(cfg, g, seed, ["minimal"])
    t0 = time.perf_counter()
    tube = minimal_reach_tube(cfg.build_system(), cfg.build_tube(), sets.W[0], cfg.alpha)
    seconds = time.perf_counter() - t0
    facets = [tube.sets[k].n_facets for k in range(cfg.horizon + 1)]
    return seconds, facets, tube.is_empty_at(0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--out", help="CSV file for the results")
    args = ap.parse_args(argv)

    rows = []
    for n in args.dims:
        seconds, facets, empty = run(n)
        print(f"n={n}: {seconds:8.2f} s  facets per k {facets}  empty at k=0: {empty}",
              flush=True)
        rows.append([n, f"{seconds:.3f}", " ".join(map(str, facets)), int(empty)])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "seconds", "facets_per_k", "empty_at_0"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
