"""Decay of max|Q^ - Q| and max|S^ - S| with n (median over seeds).

    python scripts/concentration.py --seeds 20
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from fixtures import IID5, SMOOTH5  # noqa: E402
from tvising.diagnostics import deviation_report  # noqa: E402
from tvising.estimator import EstimatorConfig  # noqa: E402
from tvising.sampler import ParameterPath, generate_dataset  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--ns", default="500,4000,32000")
    ap.add_argument("--tau", type=float, default=0.5)
    args = ap.parse_args()
    ns = [int(v) for v in args.ns.split(",")]
    for label, edges, bandwidth in (("smooth, h=n^-1/3", SMOOTH5, None), ("iid, h=2", IID5, 2.0)):
        path = ParameterPath(5, edges)
        cov_medians = []
        print(label)
        for n in ns:
            h = n ** (-1 / 3) if bandwidth is None else bandwidth
            devs = [deviation_report(generate_dataset(path, n, "exact", s), path, args.tau, EstimatorConfig(h=h)).deviations
                    for s in range(args.seeds)]
            fis = np.median([d["fisher_max_abs"] for d in devs])
            cov = np.median([d["cov_max_abs"] for d in devs])
            cov_medians.append(cov)
            print(f"  n={n:>6}  fisher {fis:.4f}  cov {cov:.4f}")
        slope = np.polyfit(np.log(ns), np.log(cov_medians), 1)[0]
        print(f"  log-log slope of cov deviation: {slope:.3f}")


if __name__ == "__main__":
    main()
