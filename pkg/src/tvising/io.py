"""Scenario, dataset CSV and JSON formats used by the command line."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, pairs, to_spins
from .estimator import EstimatorConfig, GraphEstimate
from .kernel import KernelSpec
from .optimizer import SolveConfig
from .sampler import ParameterPath, PathPreset, path_value


class ScenarioError(ValueError):
    """Invalid scenario field; the message starts with the field path."""


class DataFormatError(ValueError):
    pass


def parse_taus(spec) -> list[float]:
    """A number, a list of numbers, or 'grid:start:stop:count'."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        return [float(t) for t in spec]
    text = str(spec).strip()
    if text.startswith("grid:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"bad tau grid {text!r}; expected grid:start:stop:count")
        start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        if count < 1:
            raise ValueError("tau grid count must be >= 1")
        return [float(t) for t in np.linspace(start, stop, count)]
    return [float(t) for t in text.split(",")]


_EDGE_KEYS = {"u", "v", "kind"}


@dataclass
class Scenario:
    p: int
    n: int
    edges: list = field(default_factory=list)
    seed: int = 0
    method: str = "exact"
    burn_in: int = 1000
    kernel: str = "box"
    bandwidth: float | None = None
    bandwidth_auto: float = 1.0
    lam: float | None = None
    lambda_auto: float = 1.0
    combine: str = "and"
    tol: float = 1e-7
    max_iter: int = 10000
    taus: list = field(default_factory=lambda: [0.5])
    theta_min_eval: float = 0.1

    _JSON_RENAME = {"lam": "lambda"}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ScenarioError("scenario: expected a JSON object")
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        for key in d:
            if key not in known:
                raise ScenarioError(f"{key}: unknown scenario field")
        for key in ("p", "n"):
            if key not in d:
                raise ScenarioError(f"{key}: required field missing")

        def num(key, kind=float, positive=False, nonneg=False, optional=False):
            if key not in d:
                return
            val = d[key]
            name = "lambda" if key == "lam" else key
            if val is None and optional:
                return
            try:
                if kind is int and (isinstance(val, bool) or float(val) != int(val)):
                    raise TypeError
                val = kind(val)
            except (TypeError, ValueError):
                raise ScenarioError(f"{name}: expected {kind.__name__}, got {d[key]!r}") from None
            if positive and not val > 0:
                raise ScenarioError(f"{name}: must be positive")
            if nonneg and val < 0:
                raise ScenarioError(f"{name}: must be >= 0")
            d[key] = val

        num("p", int, positive=True)
        num("n", int, positive=True)
        num("seed", int, nonneg=True)
        num("burn_in", int, nonneg=True)
        num("bandwidth", float, positive=True, optional=True)
        num("bandwidth_auto", float, positive=True)
        num("lam", float, nonneg=True, optional=True)
        num("lambda_auto", float, positive=True)
        num("tol", float, positive=True)
        num("max_iter", int, positive=True)
        num("theta_min_eval", float, nonneg=True)
        if d.get("method", "exact") not in ("exact", "gibbs"):
            raise ScenarioError(f"method: must be 'exact' or 'gibbs', got {d['method']!r}")
        if str(d.get("combine", "and")).lower() not in ("and", "or"):
            raise ScenarioError("combine: must be 'and' or 'or'")
        try:
            KernelSpec(d.get("kernel", "box"))
        except ValueError as exc:
            raise ScenarioError(f"kernel: {exc}") from None
        if "taus" in d:
            try:
                d["taus"] = parse_taus(d["taus"])
            except ValueError as exc:
                raise ScenarioError(f"taus: {exc}") from None
            for i, t in enumerate(d["taus"]):
                if not 0.0 <= t <= 1.0:
                    raise ScenarioError(f"taus[{i}]: {t} outside [0, 1]")
        edges = d.get("edges", [])
        if not isinstance(edges, list):
            raise ScenarioError("edges: expected a list")
        clean = []
        for i, e in enumerate(edges):
            where = f"edges[{i}]"
            if not isinstance(e, dict):
                raise ScenarioError(f"{where}: expected an object")
            for key in _EDGE_KEYS:
                if key not in e:
                    raise ScenarioError(f"{where}.{key}: required field missing")
            for key in ("u", "v"):
                if not isinstance(e[key], int) or not 0 <= e[key] < d["p"]:
                    raise ScenarioError(f"{where}.{key}: must be an integer vertex in [0, {d['p']})")
            if e["u"] == e["v"]:
                raise ScenarioError(f"{where}: self-loop ({e['u']}, {e['v']})")
            params = {k: v for k, v in e.items() if k not in _EDGE_KEYS}
            try:
                PathPreset(e["kind"], params)
            except ValueError as exc:
                raise ScenarioError(f"{where}: {exc}") from None
            clean.append(dict(e))
        d["edges"] = clean
        scen = cls(**d)
        try:
            scen.path()
        except ValueError as exc:
            raise ScenarioError(f"edges: {exc}") from None
        return scen

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def path(self) -> ParameterPath:
        paths = {}
        for e in self.edges:
            params = {k: v for k, v in e.items() if k not in _EDGE_KEYS}
            paths[(e["u"], e["v"])] = PathPreset(e["kind"], params)
        return ParameterPath(self.p, paths)

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            kernel=KernelSpec(self.kernel),
            h=self.bandwidth,
            h_auto=self.bandwidth_auto,
            lam=self.lam,
            lam_auto=self.lambda_auto,
            solve=SolveConfig(tol=self.tol, max_iter=self.max_iter),
            combine=self.combine,
        )


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from None


def dump_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    Path(path).write_text(text + "\n")


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(load_json(path))


# ---------------------------------------------------------------------------
# dataset CSV: header t,x1,...,xp


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"x{j + 1}" for j in range(data.p)])
    for t, row in zip(data.times, data.X):
        writer.writerow([repr(float(t))] + [int(v) for v in row])
    return buf.getvalue()


def write_dataset(data: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(data))


def read_dataset(path, zero_one: bool = False) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 1
    if p < 1 or header[0] != "t" or header[1:] != [f"x{j + 1}" for j in range(p)]:
        raise DataFormatError(f"{path}: line 1: header must be t,x1,...,xp")
    allowed = {"0", "1"} if zero_one else {"-1", "1"}
    times, X = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != p + 1:
            raise DataFormatError(f"{path}: line {lineno}: expected {p + 1} fields, got {len(row)}")
        try:
            t = float(row[0])
        except ValueError:
            raise DataFormatError(f"{path}: line {lineno}: bad time stamp {row[0]!r}") from None
        cells = [c.strip() for c in row[1:]]
        for c in cells:
            if c not in allowed:
                raise DataFormatError(f"{path}: line {lineno}: non-binary value {c!r}")
        times.append(t)
        X.append([int(c) for c in cells])
    if not X:
        raise DataFormatError(f"{path}: no data rows")
    X = to_spins(np.array(X), zero_one=zero_one)
    try:
        return Dataset(X, np.array(times))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# truth and estimate documents


def truth_document(scen: Scenario) -> dict:
    """Signed edges at every tau of the scenario grid.

    Edges with 0 < |theta| < theta_min_eval go to 'band' and are excluded from
    scoring.
    """
    path = scen.path()
    out = []
    for tau in scen.taus:
        theta = path_value(path, tau)
        edges, band = [], []
        for (u, v), th in zip(pairs(scen.p), theta):
            if th == 0:
                continue
            item = {"u": u, "v": v, "theta": float(th)}
            if abs(th) < scen.theta_min_eval:
                band.append(item)
            else:
                edges.append({"u": u, "v": v, "sign": int(np.sign(th)), "theta": float(th)})
        out.append({"tau": float(tau), "edges": edges, "band": band})
    return {
        "p": scen.p,
        "n": scen.n,
        "seed": scen.seed,
        "theta_min_eval": scen.theta_min_eval,
        "taus": [float(t) for t in scen.taus],
        "truth": out,
        "scenario": scen.to_dict(),
    }


def estimate_record(est: GraphEstimate) -> dict:
    rec = {"tau": est.tau, "edges": [], "conflicts": [list(c) for c in est.conflicts],
           "solver_stats": dict(est.solver_stats), "error": est.error}
    if est.edges is not None:
        for (u, v), s in est.edges.entries.items():
            rec["edges"].append({"u": u, "v": v, "sign": s,
                                 "theta_uv_u": float(est.theta[u, v]),
                                 "theta_uv_v": float(est.theta[v, u])})
    return rec


def estimates_document(p: int, n: int, ests, cfg: EstimatorConfig) -> dict:
    h, lam = cfg.resolve(n, p)
    return {
        "p": p,
        "n": n,
        "kernel": cfg.kernel.shape,
        "h": h,
        "lambda": lam,
        "combine": cfg.combine,
        "estimates": [estimate_record(e) for e in ests],
    }
