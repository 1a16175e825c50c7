"""Pilot runs that fixed the default penalty constant C and the frozen test thresholds.

    python scripts/pilot_calibration.py --out pilot.csv

Prints exact-recovery rates on the static chain and mean F1 / switching-edge
success on the p = 8 switching scenario for each C.
"""
import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from fixtures import SWITCH8, chain_path  # noqa: E402
from tvising.core import pairs  # noqa: E402
from tvising.estimator import EstimatorConfig, estimate_graph, estimate_path  # noqa: E402
from tvising.sampler import ParameterPath, generate_dataset, path_value  # noqa: E402


def static_rates(C, seeds, ns=(250, 1000, 4000), p=10, theta=0.5):
    path = chain_path(p, theta)
    truth = {(j, j + 1): 1 for j in range(p - 1)}
    out = []
    for n in ns:
        hits = sum(
            estimate_graph(generate_dataset(path, n, "exact", s), 0.5, EstimatorConfig(h=2.0, lam_auto=C)).edges.entries
            == truth
            for s in seeds
        )
        out.append(hits / len(seeds))
    return out


def switching(C, seeds, n=10_000, theta_min_eval=0.1):
    p = 8
    path = ParameterPath(p, SWITCH8)
    taus = np.linspace(0.1, 0.9, 9)
    f1s, ok = [], 0
    for s in seeds:
        ests = estimate_path(generate_dataset(path, n, "exact", s), taus, EstimatorConfig(h=n ** (-1 / 3), lam_auto=C))
        good = True
        for tau, e in zip(taus, ests):
            th = path_value(path, tau)
            truth = {pr for pr, v in zip(pairs(p), th) if abs(v) >= theta_min_eval}
            band = {pr for pr, v in zip(pairs(p), th) if 0 < abs(v) < theta_min_eval}
            est = set(e.edges.entries) - band
            tp = len(est & truth)
            prec = tp / len(est) if est else float(not truth)
            rec = tp / len(truth) if truth else float(not est)
            f1s.append(0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec))
            if tau < 0.4:
                good &= (0, 1) in est and (2, 3) not in est
            if tau > 0.6:
                good &= (2, 3) in est and (0, 1) not in est
        ok += good
    return float(np.mean(f1s)), ok / len(seeds)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--C", default="0.5,1.0,1.5,2.0", help="comma-separated penalty constants")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", help="optional CSV of the results")
    args = ap.parse_args()
    seeds = range(args.seeds)
    rows = []
    for C in (float(c) for c in args.C.split(",")):
        t0 = time.perf_counter()
        r250, r1000, r4000 = static_rates(C, seeds)
        f1, sw = switching(C, seeds)
        rows.append([C, r250, r1000, r4000, f1, sw])
        print(f"C={C:<4} static {r250:.2f} {r1000:.2f} {r4000:.2f}  switching F1 {f1:.3f} edges {sw:.2f}"
              f"  ({time.perf_counter() - t0:.0f}s)")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["C", "static_n250", "static_n1000", "static_n4000", "switch_mean_f1", "switch_edges_ok"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
