"""Recovery metrics comparing estimated and true signed graphs."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    pass


@dataclass
class TauMetrics:
    tau: float
    precision: float
    recall: float
    f1: float
    signed_exact: bool
    conflicts: int = 0
    n_true: int = 0
    n_est: int = 0
    true_positives: int = 0


@dataclass
class EvalResult:
    per_tau: list = field(default_factory=list)
    mean_precision: float = 0.0
    mean_recall: float = 0.0
    mean_f1: float = 0.0
    signed_exact_rate: float = 0.0
    signed_exact: bool = False
    total_conflicts: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _key(u, v):
    return (min(u, v), max(u, v))


def compare(est: dict, truth: dict, band=frozenset(), tau: float = 0.0, conflicts: int = 0) -> TauMetrics:
    """Score one tau. ``est``/``truth`` map unordered pairs to signs.

    Pairs in ``band`` are dropped from both sides. P/R/F1 are computed on
    unsigned edges; an empty estimate against an empty truth scores 1.
    """
    est = {k: s for k, s in est.items() if k not in band}
    truth = {k: s for k, s in truth.items() if k not in band}
    tp = len(est.keys() & truth.keys())
    precision = tp / len(est) if est else (1.0 if not truth else 0.0)
    recall = tp / len(truth) if truth else (1.0 if not est else 0.0)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return TauMetrics(
        tau=float(tau), precision=precision, recall=recall, f1=f1,
        signed_exact=est == truth, conflicts=conflicts,
        n_true=len(truth), n_est=len(est), true_positives=tp,
    )


def evaluate(estimates_doc: dict, truth_doc: dict, atol: float = 1e-9) -> EvalResult:
    if estimates_doc.get("p") != truth_doc.get("p"):
        raise GridMismatchError(f"p differs: estimates {estimates_doc.get('p')} vs truth {truth_doc.get('p')}")
    ests = estimates_doc["estimates"]
    truths = truth_doc["truth"]
    et = [e["tau"] for e in ests]
    tt = [t["tau"] for t in truths]
    if len(et) != len(tt) or not np.allclose(et, tt, atol=atol, rtol=0):
        raise GridMismatchError(f"tau grids differ: estimates {et} vs truth {tt}")
    per = []
    for e, t in zip(ests, truths):
        truth = {_key(x["u"], x["v"]): x["sign"] for x in t["edges"]}
        band = {_key(x["u"], x["v"]) for x in t.get("band", [])}
        if e.get("error"):
            # a failed tau scores as an empty estimate
            est = {}
        else:
            est = {_key(x["u"], x["v"]): x["sign"] for x in e["edges"]}
        per.append(compare(est, truth, band, t["tau"], len(e.get("conflicts", []))))
    res = EvalResult(per_tau=per)
    if per:
        res.mean_precision = float(np.mean([m.precision for m in per]))
        res.mean_recall = float(np.mean([m.recall for m in per]))
        res.mean_f1 = float(np.mean([m.f1 for m in per]))
        res.signed_exact_rate = float(np.mean([m.signed_exact for m in per]))
        res.signed_exact = all(m.signed_exact for m in per)
        res.total_conflicts = sum(m.conflicts for m in per)
    return res


METRIC_COLUMNS = ["tau", "precision", "recall", "f1", "signed_exact", "conflicts", "n_true", "n_est"]


def metrics_csv(res: EvalResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for m in res.per_tau:
        w.writerow([repr(m.tau), repr(m.precision), repr(m.recall), repr(m.f1),
                    int(m.signed_exact), m.conflicts, m.n_true, m.n_est])
    return buf.getvalue()
