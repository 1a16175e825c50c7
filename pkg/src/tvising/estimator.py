"""Neighborhood selection at a query time and assembly of the signed graph."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .core import Dataset, NodeParameter, SignedEdgeVector, others
from .kernel import KernelSpec, bandwidth_default, weights
from .optimizer import SolveConfig, SolveResult, lambda_default, solve


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, kkt_residual: float):
        super().__init__(message)
        self.kkt_residual = kkt_residual


@dataclass(frozen=True)
class EstimatorConfig:
    """Either give ``h``/``lam`` directly or leave them None to use the
    auto constants ``h_auto * n^(-1/3)`` and ``lam_auto * sqrt(log p) / n^(1/3)``."""

    kernel: KernelSpec = KernelSpec("box")
    h: float | None = None
    h_auto: float = 1.0
    lam: float | None = None
    lam_auto: float = 1.0
    solve: SolveConfig = SolveConfig()
    combine: str = "and"

    def __post_init__(self):
        combine = self.combine.lower()
        if combine not in ("and", "or"):
            raise ValueError("combine must be 'and' or 'or'")
        object.__setattr__(self, "combine", combine)
        if self.h is not None and not self.h > 0:
            raise ValueError("bandwidth must be positive")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")

    def resolve(self, n: int, p: int) -> tuple[float, float]:
        h = self.h if self.h is not None else bandwidth_default(n, self.h_auto)
        lam = self.lam if self.lam is not None else lambda_default(n, p, self.lam_auto)
        return h, lam


@dataclass(frozen=True, eq=False)
class SignedNeighborhood:
    node: int
    entries: Mapping[int, int]
    theta: NodeParameter | None = None
    result: SolveResult | None = field(default=None, repr=False)

    def __post_init__(self):
        for v, s in self.entries.items():
            if v == self.node:
                raise ValueError("a node cannot neighbor itself")
            if s not in (-1, 1):
                raise ValueError("neighbor signs must be -1 or +1")


@dataclass(frozen=True, eq=False)
class GraphEstimate:
    tau: float
    edges: SignedEdgeVector | None
    theta: np.ndarray | None = None  # row u holds theta_hat_u embedded in R^p
    conflicts: tuple = ()
    solver_stats: Mapping = field(default_factory=dict)
    error: str | None = None


def _neighborhood(u: int, res: SolveResult, p: int) -> SignedNeighborhood:
    idx = others(p, u)
    th = res.theta_hat.theta
    entries = {int(v): int(np.sign(t)) for v, t in zip(idx, th) if t != 0}
    return SignedNeighborhood(u, entries, res.theta_hat, res)


def estimate_neighborhood(data: Dataset, tau: float, u: int, cfg: EstimatorConfig,
                          theta0=None) -> SignedNeighborhood:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau={tau} outside [0, 1]")
    h, lam = cfg.resolve(data.n, data.p)
    w = weights(cfg.kernel, h, data.times, tau)
    res = solve(data, w, u, replace(cfg.solve, lam=lam), theta0=theta0)
    if not res.converged:
        raise ConvergenceError(
            f"node {u} at tau={tau:g} did not converge (kkt residual {res.kkt_residual:.3g})",
            res.kkt_residual,
        )
    return _neighborhood(u, res, data.p)


def combine_neighborhoods(p: int, hoods: Sequence[SignedNeighborhood], rule: str = "and",
                          theta: np.ndarray | None = None) -> tuple[SignedEdgeVector, tuple]:
    """Merge per-node signed neighborhoods into one signed graph.

    AND keeps (u, v) only if both endpoints select each other with equal
    signs; disagreeing signs are dropped and reported as conflicts. OR keeps
    the edge if either endpoint selects it, taking the sign of the larger
    |theta_hat| (ties go to the lower node index).
    """
    by_node = {h.node: h.entries for h in hoods}
    entries, conflicts = {}, []
    for u in range(p):
        for v in range(u + 1, p):
            su = by_node.get(u, {}).get(v, 0)
            sv = by_node.get(v, {}).get(u, 0)
            if rule == "and":
                if su and sv:
                    if su == sv:
                        entries[(u, v)] = su
                    else:
                        conflicts.append((u, v))
            elif su or sv:
                if su and sv and su != sv:
                    conflicts.append((u, v))
                    if theta is not None and abs(theta[v, u]) > abs(theta[u, v]):
                        entries[(u, v)] = sv
                    else:
                        entries[(u, v)] = su
                else:
                    entries[(u, v)] = su or sv
    return SignedEdgeVector(p, entries), tuple(conflicts)


def _estimate(data: Dataset, tau: float, cfg: EstimatorConfig, warm: np.ndarray | None) -> GraphEstimate:
    p = data.p
    hoods = []
    theta = np.zeros((p, p))
    iters, worst = 0, 0.0
    for u in range(p):
        start = None if warm is None else warm[u, others(p, u)]
        hood = estimate_neighborhood(data, tau, u, cfg, theta0=start)
        hoods.append(hood)
        theta[u] = hood.theta.full()
        iters += hood.result.iterations
        worst = max(worst, hood.result.kkt_residual)
    edges, conflicts = combine_neighborhoods(p, hoods, cfg.combine, theta)
    h, lam = cfg.resolve(data.n, p)
    stats = {"h": h, "lambda": lam, "iterations": iters, "max_kkt_residual": worst}
    return GraphEstimate(tau, edges, theta, conflicts, stats)


def estimate_graph(data: Dataset, tau: float, cfg: EstimatorConfig) -> GraphEstimate:
    """Run the per-node program for every vertex and combine."""
    return _estimate(data, tau, cfg, None)


def estimate_path(data: Dataset, taus, cfg: EstimatorConfig, warm_start: bool = True) -> list[GraphEstimate]:
    """Estimate at each tau; a failure at one tau is recorded, not raised."""
    taus = [float(t) for t in taus]
    for t in taus:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"tau={t} outside [0, 1]")
    out, warm = [], None
    for tau in taus:
        try:
            est = _estimate(data, tau, cfg, warm if warm_start else None)
        except (ValueError, RuntimeError, FloatingPointError) as exc:
            out.append(GraphEstimate(tau, None, error=f"{type(exc).__name__}: {exc}"))
            warm = None
            continue
        out.append(est)
        warm = est.theta
    return out
