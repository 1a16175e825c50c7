"""Weighted l1-penalized node-conditional likelihood.

For node ``u`` and weights ``w`` the program is

    F(theta) = -sum_t w_t * gamma(theta; x^t) + lambda * ||theta||_1

solved by proximal Newton: each outer step minimizes the local quadratic
model plus the l1 term by cyclic coordinate descent, then backtracks along
the resulting direction until F decreases sufficiently. Convergence is
declared from the KKT residual, never from parameter change.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DimensionError, NodeParameter, log_cosh2, others, sech2
from .kernel import EmptyWindowError, WeightVector


class NonFiniteObjectiveError(FloatingPointError):
    def __init__(self, iteration: int, value: float):
        super().__init__(f"objective became {value} at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolveConfig:
    lam: float = 0.0
    tol: float = 1e-7
    max_iter: int = 10000
    zero_clip: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.zero_clip < 0:
            raise ValueError("zero_clip must be >= 0")


@dataclass(frozen=True, eq=False)
class SolveResult:
    theta_hat: NodeParameter
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    objective_path: tuple = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class _Problem:
    """Window-restricted design for one node: rows with w_t > 0 only."""

    X: np.ndarray  # (m, p-1) float, covariates x_rest
    y: np.ndarray  # (m,) float, responses x_u
    w: np.ndarray  # (m,) weights, summing to 1
    u: int
    p: int


def _problem(data: Dataset, w: WeightVector, u: int) -> _Problem:
    if w.weights.shape[0] != data.n:
        raise DimensionError(f"{w.weights.shape[0]} weights for {data.n} observations")
    idx = np.flatnonzero(w.weights)
    if idx.size == 0:
        raise EmptyWindowError(f"no observations in bandwidth window (tau={w.tau:g}, h={w.h:g})")
    rows = data.X[idx]
    return _Problem(
        X=rows[:, others(data.p, u)].astype(float),
        y=rows[:, u].astype(float),
        w=w.weights[idx],
        u=u,
        p=data.p,
    )


def _loss(prob: _Problem, theta: np.ndarray) -> float:
    s = prob.X @ theta
    return float(prob.w @ (log_cosh2(s) - prob.y * s))


def _F(prob: _Problem, theta: np.ndarray, lam: float) -> float:
    return _loss(prob, theta) + lam * float(np.abs(theta).sum())


def _weighted_score(prob: _Problem, theta: np.ndarray) -> np.ndarray:
    """sum_t w_t * grad gamma(theta; x^t)."""
    s = prob.X @ theta
    return prob.X.T @ (prob.w * (prob.y - np.tanh(s)))


def _kkt(g: np.ndarray, theta: np.ndarray, lam: float) -> float:
    active = theta != 0
    r = np.where(active, np.abs(g - lam * np.sign(theta)), np.maximum(0.0, np.abs(g) - lam))
    return float(r.max()) if r.size else 0.0


def objective(theta_u: NodeParameter, data: Dataset, w: WeightVector, lam: float, u: int) -> float:
    if theta_u.node != u or theta_u.p != data.p:
        raise DimensionError("node parameter does not match data/vertex")
    return _F(_problem(data, w, u), theta_u.theta, lam)


def weighted_score(theta_u: NodeParameter, data: Dataset, w: WeightVector, u: int) -> np.ndarray:
    if theta_u.node != u or theta_u.p != data.p:
        raise DimensionError("node parameter does not match data/vertex")
    return _weighted_score(_problem(data, w, u), theta_u.theta)


def kkt_residual(theta_u: NodeParameter, data: Dataset, w: WeightVector, lam: float, u: int) -> float:
    """Largest violation of the subgradient optimality system.

    Active coordinates need g_v = lam * sign(theta_v); inactive ones need
    |g_v| <= lam, where g is the weighted score.
    """
    g = weighted_score(theta_u, data, w, u)
    return _kkt(g, theta_u.theta, lam)


def zero_threshold(data: Dataset, w: WeightVector, u: int) -> float:
    """Smallest lambda for which theta = 0 solves the program."""
    g = _weighted_score(_problem(data, w, u), np.zeros(data.p - 1))
    return float(np.abs(g).max()) if g.size else 0.0


def lambda_default(n: int, p: int, C: float = 1.0) -> float:
    """C * sqrt(log p) / n^(1/3)."""
    if n < 2 or p < 2:
        raise ValueError("need n >= 2 and p >= 2")
    if not C > 0:
        raise ValueError("C must be positive")
    return C * math.sqrt(math.log(p)) / n ** (1.0 / 3.0)


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _quadratic_cd(H: np.ndarray, b: np.ndarray, z0: np.ndarray, lam: float,
                  max_sweeps: int = 500, tol: float = 1e-14) -> np.ndarray:
    """argmin_z  b'z + z'Hz/2 + lam*||z||_1  by cyclic coordinate descent."""
    d = b.shape[0]
    z = z0.copy()
    Hz = H @ z
    diag = np.diag(H)
    Hl = H.tolist()
    bl = b.tolist()
    for _ in range(max_sweeps):
        biggest = 0.0
        scale = 0.0
        for j in range(d):
            hjj = diag[j]
            zj = z[j]
            r = bl[j] + Hz[j] - hjj * zj
            new = -_soft(r, lam) / hjj
            delta = new - zj
            if delta != 0.0:
                z[j] = new
                Hz += delta * np.asarray(Hl[j])
                step = abs(delta) * math.sqrt(hjj)
                if step > biggest:
                    biggest = step
            scale = max(scale, abs(new) * math.sqrt(hjj))
        if biggest <= tol * (1.0 + scale):
            break
    return z


def solve(data: Dataset, w: WeightVector, u: int, cfg: SolveConfig,
          theta0: np.ndarray | NodeParameter | None = None) -> SolveResult:
    """Minimize F for node ``u`` under weights ``w``.

    ``theta0`` warm-starts the iteration; the certificate does not depend on it.
    """
    prob = _problem(data, w, u)
    lam = cfg.lam
    d = data.p - 1
    if theta0 is None:
        theta = np.zeros(d)
    else:
        theta = np.array(theta0.theta if isinstance(theta0, NodeParameter) else theta0, dtype=float)
        if theta.shape != (d,):
            raise DimensionError(f"warm start has shape {theta.shape}, expected ({d},)")

    F = _F(prob, theta, lam)
    if not math.isfinite(F):
        raise NonFiniteObjectiveError(0, F)
    path = [F]
    g = _weighted_score(prob, theta)
    kkt = _kkt(g, theta, lam)
    it = 0
    while kkt > cfg.tol and it < cfg.max_iter:
        it += 1
        s = prob.X @ theta
        c = prob.w * sech2(s)
        H = prob.X.T @ (c[:, None] * prob.X)
        # keep the subproblem strictly convex when curvature vanishes
        H[np.diag_indices(d)] += 1e-12 * max(1.0, float(np.diag(H).max())) + 1e-300
        grad = -g
        z = _quadratic_cd(H, grad - H @ theta, theta, lam)
        direction = z - theta
        decrease = float(grad @ direction) + lam * (np.abs(z).sum() - np.abs(theta).sum())
        if decrease >= 0:
            # model predicts no progress; nothing left to gain at this precision
            break
        step = 1.0
        accepted = False
        while step > 1e-16:
            cand = z if step == 1.0 else theta + step * direction
            Fc = _F(prob, cand, lam)
            if not math.isfinite(Fc):
                raise NonFiniteObjectiveError(it, Fc)
            if Fc <= F + 1e-4 * step * decrease:
                accepted = True
                break
            step *= 0.5
        if not accepted or Fc > F:
            break
        theta = cand.copy()
        F = Fc
        path.append(F)
        g = _weighted_score(prob, theta)
        kkt = _kkt(g, theta, lam)

    if cfg.zero_clip > 0:
        small = (theta != 0) & (np.abs(theta) < cfg.zero_clip)
        if small.any():
            theta[small] = 0.0
            F = _F(prob, theta, lam)
            g = _weighted_score(prob, theta)
            kkt = _kkt(g, theta, lam)
    return SolveResult(
        theta_hat=NodeParameter(u, theta),
        objective=F,
        kkt_residual=kkt,
        iterations=it,
        converged=kkt <= cfg.tol,
        objective_path=tuple(path),
    )
