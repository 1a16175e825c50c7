"""Recovery-probability curves over n for the shipped scenarios.

    TVISING_THREADS=8 python scripts/recovery_curves.py --seeds 20 --outdir results/

Writes one long-format CSV per scenario (the `tvising sweep` format) and
prints mean F1 and signed-exact rate per n.
"""
import argparse
import csv
import io
from collections import defaultdict
from pathlib import Path

from tvising.cli import cmd_sweep
from tvising.io import load_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = {
    "static_chain": ("250,500,1000,2000,4000", ROOT / "scenarios" / "static_chain.json"),
    "switching": ("2500,5000,10000,20000", ROOT / "scenarios" / "switching.json"),
}


def summarize(text):
    agg = defaultdict(lambda: [0.0, 0.0, 0])
    for row in csv.DictReader(io.StringIO(text)):
        if row["status"] != "ok":
            continue
        a = agg[float(row["value"])]
        a[0] += float(row["f1"])
        a[1] += int(row["signed_exact"])
        a[2] += 1
    return {v: (f / k, e / k) for v, (f, e, k) in sorted(agg.items())}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--only", choices=sorted(SCENARIOS))
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (values, path) in SCENARIOS.items():
        if args.only and name != args.only:
            continue
        text = cmd_sweep(load_scenario(path), "n", [float(v) for v in values.split(",")], args.seeds)
        (out / f"{name}_n_sweep.csv").write_text(text)
        print(name)
        for n, (f1, exact) in summarize(text).items():
            print(f"  n={int(n):>6}  mean F1 {f1:.3f}  signed exact {exact:.2f}")


if __name__ == "__main__":
    main()
