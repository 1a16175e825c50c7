"""tvising command line: simulate, estimate, diagnose, evaluate, sweep.

Exit codes: 0 success, 1 internal error, 2 user/input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .diagnostics import check_assumptions, deviation_report
from .estimator import EstimatorConfig, estimate_path
from .evaluation import evaluate, metrics_csv
from .io import (
    Scenario,
    dump_json,
    estimates_document,
    load_json,
    load_scenario,
    parse_taus,
    read_dataset,
    truth_document,
    write_dataset,
)
from .kernel import KernelSpec, weights
from .optimizer import SolveConfig
from .sampler import generate_dataset, path_value

log = logging.getLogger("tvising")

EXIT_OK, EXIT_INTERNAL, EXIT_USER = 0, 1, 2


class UserError(Exception):
    pass


def worker_count() -> int:
    raw = os.environ.get("TVISING_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UserError(f"TVISING_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(scen: Scenario, out_data, out_truth) -> None:
    data = generate_dataset(scen.path(), scen.n, scen.method, scen.seed, burn_in=scen.burn_in)
    write_dataset(data, out_data)
    dump_json(truth_document(scen), out_truth)


def _check_windows(data, taus, cfg: EstimatorConfig) -> None:
    h, _ = cfg.resolve(data.n, data.p)
    for tau in taus:
        weights(cfg.kernel, h, data.times, tau)


def cmd_estimate(data, taus, cfg: EstimatorConfig) -> dict:
    for tau in taus:
        if not 0.0 <= tau <= 1.0:
            raise UserError(f"tau={tau} outside [0, 1]")
    _check_windows(data, taus, cfg)
    ests = estimate_path(data, taus, cfg)
    return estimates_document(data.p, data.n, ests, cfg)


def cmd_evaluate(estimates_doc: dict, truth_doc: dict):
    res = evaluate(estimates_doc, truth_doc)
    return res.to_dict(), metrics_csv(res)


def cmd_diagnose(scen: Scenario, taus, data=None) -> dict:
    path = scen.path()
    cfg = scen.estimator_config()
    reports = []
    for tau in taus:
        theta = path_value(path, tau)
        entry = {"tau": tau, "nodes": [check_assumptions(theta, u, scen.p, tau).to_dict() for u in range(scen.p)]}
        if data is not None:
            entry["deviations"] = deviation_report(data, path, tau, cfg).deviations
        reports.append(entry)
    return {"p": scen.p, "reports": reports}


SWEEP_COLUMNS = ["axis", "value", "seed", "tau", "precision", "recall", "f1", "signed_exact", "n_est", "status"]


def _sweep_cell(scen: Scenario, axis: str, value: float, seed: int) -> list[list]:
    if axis == "n":
        cell = replace(scen, n=int(value), seed=seed)
    elif axis == "lambda":
        cell = replace(scen, lam=float(value), seed=seed)
    elif axis == "h":
        cell = replace(scen, bandwidth=float(value), seed=seed)
    else:
        raise UserError(f"unknown sweep axis {axis!r}")
    try:
        data = generate_dataset(cell.path(), cell.n, cell.method, cell.seed, burn_in=cell.burn_in)
        cfg = cell.estimator_config()
        est_doc = estimates_document(cell.p, cell.n, estimate_path(data, cell.taus, cfg), cfg)
        res = evaluate(est_doc, truth_document(cell))
    except Exception as exc:  # recorded as a failed cell; the sweep goes on
        return [[axis, repr(value), seed, "", "", "", "", "", "", f"error: {type(exc).__name__}: {exc}"]]
    rows = []
    for m, e in zip(res.per_tau, est_doc["estimates"]):
        status = "ok" if not e["error"] else f"error: {e['error']}"
        rows.append([axis, repr(value), seed, repr(m.tau), repr(m.precision), repr(m.recall),
                     repr(m.f1), int(m.signed_exact), m.n_est, status])
    return rows


def cmd_sweep(scen: Scenario, axis: str, values, seeds: int = 1, threads: int | None = None) -> str:
    """Long-format metric table over axis values x seeds x taus."""
    if not values or seeds < 1:
        raise UserError("sweep needs at least one axis value and one seed")
    if axis not in ("n", "lambda", "h"):
        raise UserError(f"unknown sweep axis {axis!r}")
    threads = threads or worker_count()
    jobs = [(i, k, v, scen.seed + k) for i, v in enumerate(values) for k in range(seeds)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {(i, k): pool.submit(_sweep_cell, scen, axis, v, s) for i, k, v, s in jobs}
        results = {key: f.result() for key, f in futures.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for key in sorted(results):
        w.writerows(results[key])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument handling


def _estimator_from_args(args) -> EstimatorConfig:
    return EstimatorConfig(
        kernel=KernelSpec(args.kernel),
        h=args.bandwidth,
        h_auto=args.bandwidth_auto if args.bandwidth_auto is not None else 1.0,
        lam=args.lam,
        lam_auto=args.lambda_auto if args.lambda_auto is not None else 1.0,
        solve=SolveConfig(tol=args.tol, max_iter=args.max_iter),
        combine=args.combine,
    )


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=["box", "tri", "epa", "triangular", "epanechnikov"], default="box")
    bw = p.add_mutually_exclusive_group()
    bw.add_argument("--bandwidth", type=float, help="fixed bandwidth h")
    bw.add_argument("--bandwidth-auto", type=float, metavar="C", help="h = C * n^(-1/3) (default C=1)")
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, help="fixed l1 penalty")
    lam.add_argument("--lambda-auto", type=float, metavar="C", help="lambda = C sqrt(log p) / n^(1/3) (default C=1)")
    p.add_argument("--combine", choices=["and", "or"], default="and")
    p.add_argument("--tol", type=float, default=1e-7, help="KKT residual tolerance")
    p.add_argument("--max-iter", type=int, default=10000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvising", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw a dataset from a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out-data", required=True)
    s.add_argument("--out-truth", required=True)

    e = sub.add_parser("estimate", help="estimate signed graphs at one or more tau")
    e.add_argument("--data", required=True)
    e.add_argument("--tau", required=True, help="value, comma list, or grid:start:stop:count")
    e.add_argument("--zero-one", action="store_true", help="input spins are 0/1")
    e.add_argument("--out", required=True)
    _add_estimator_flags(e)

    d = sub.add_parser("diagnose", help="assumption and deviation report for a scenario")
    d.add_argument("--scenario", required=True)
    d.add_argument("--data")
    d.add_argument("--tau", help="defaults to the scenario grid")
    d.add_argument("--out", required=True)

    v = sub.add_parser("evaluate", help="score estimates against truth")
    v.add_argument("--estimates", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--csv", required=True, help="per-tau metrics table")

    w = sub.add_parser("sweep", help="recovery metrics over n, lambda or h")
    w.add_argument("--scenario", required=True)
    w.add_argument("--axis", choices=["n", "lambda", "h"], required=True)
    w.add_argument("--values", required=True, help="comma-separated axis values")
    w.add_argument("--seeds", type=int, default=1)
    w.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USER if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            cmd_simulate(load_scenario(args.scenario), args.out_data, args.out_truth)
        elif args.command == "estimate":
            data = read_dataset(args.data, zero_one=args.zero_one)
            doc = cmd_estimate(data, parse_taus(args.tau), _estimator_from_args(args))
            dump_json(doc, args.out)
        elif args.command == "diagnose":
            scen = load_scenario(args.scenario)
            taus = parse_taus(args.tau) if args.tau else scen.taus
            data = read_dataset(args.data) if args.data else None
            dump_json(cmd_diagnose(scen, taus, data), args.out)
        elif args.command == "evaluate":
            res, table = cmd_evaluate(load_json(args.estimates), load_json(args.truth))
            dump_json(res, args.out)
            Path(args.csv).write_text(table)
        elif args.command == "sweep":
            values = [float(x) for x in args.values.split(",")]
            Path(args.out).write_text(cmd_sweep(load_scenario(args.scenario), args.axis, values, args.seeds))
    except (UserError, ValueError, OSError, KeyError) as exc:
        print(f"tvising {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:
        log.exception("internal error")
        print(f"tvising {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
