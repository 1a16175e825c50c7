"""Fisher information, covariance, assumption checks and deviation norms.

Population quantities are exact expectations over the 2^p enumerated
states, so everything here is limited to p <= 20.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Dataset, NodeParameter, others, sech2, theta_to_matrix
from .kernel import WeightVector, weights
from .sampler import ParameterPath, all_states, path_value, state_probabilities


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    node: int
    tau: float | None
    matrix: np.ndarray
    reference: str = "truth"  # 'truth' or 'plug-in' for the parameter used in eta


@dataclass
class DiagnosticsReport:
    node: int | None = None
    tau: float | None = None
    C_min: float | None = None
    D_min: float | None = None
    D_max: float | None = None
    alpha: float | None = None
    incoherence: float | None = None
    theta_min: float | None = None
    s: int | None = None
    neighborhood: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    deviations: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        return {k: clean(v) for k, v in asdict(self).items()}


def _weighted_gram(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Symmetrized sum_t c_t x^t x^t'."""
    G = (X * c[:, None]).T @ X
    return (G + G.T) / 2.0


def population_covariance(theta_tau, p: int) -> np.ndarray:
    """Sigma = E[X X'] by enumeration; unit diagonal."""
    prob = state_probabilities(theta_tau, p)
    S = all_states(p).astype(float)
    sigma = (S * prob[:, None]).T @ S
    sigma = (sigma + sigma.T) / 2.0
    np.fill_diagonal(sigma, 1.0)
    return sigma


def population_fisher(theta_tau, u: int, p: int, tau: float | None = None) -> FisherMatrix:
    """Q_u = E[eta(X; theta_u) X_rest X_rest'] over the enumerated law."""
    prob = state_probabilities(theta_tau, p)
    S = all_states(p).astype(float)
    rest = S[:, others(p, u)]
    theta_u = theta_to_matrix(theta_tau, p)[u, others(p, u)]
    eta = sech2(rest @ theta_u)
    Q = (rest * (prob * eta)[:, None]).T @ rest
    Q = (Q + Q.T) / 2.0
    return FisherMatrix(u, tau, Q)


def sample_fisher(data: Dataset, w: WeightVector, theta_ref: NodeParameter, u: int,
                  reference: str = "truth") -> FisherMatrix:
    """Q_hat = sum_t w_t eta(x^t; theta_ref) x_rest^t x_rest^t'."""
    if theta_ref.node != u or theta_ref.p != data.p:
        raise ValueError("reference parameter does not match node/data")
    idx = w.support
    X = data.X[idx].astype(float)
    rest = others(data.p, u)
    eta = sech2(X[:, rest] @ theta_ref.theta)
    # full p x p product then the V\u block, so eta = 1 reproduces sample_covariance bit for bit
    Q = _weighted_gram(X, w.weights[idx] * eta)[np.ix_(rest, rest)]
    return FisherMatrix(u, w.tau, Q, reference)


def sample_covariance(data: Dataset, w: WeightVector) -> np.ndarray:
    """Sigma_hat = sum_t w_t x^t x^t'."""
    idx = w.support
    if idx.size == 0:
        raise ValueError("no observations in bandwidth window")
    return _weighted_gram(data.X[idx].astype(float), w.weights[idx])


def incoherence_norm(Q: np.ndarray, S: np.ndarray) -> float:
    """||Q_{S^c S} Q_SS^{-1}||_inf, the max absolute row sum."""
    Sc = np.setdiff1d(np.arange(Q.shape[0]), S)
    if Sc.size == 0:
        return 0.0
    Q_SS = Q[np.ix_(S, S)]
    M = np.linalg.solve(Q_SS, Q[np.ix_(S, Sc)]).T
    return float(np.abs(M).sum(axis=1).max())


def check_assumptions(theta_tau, u: int, p: int, tau: float | None = None) -> DiagnosticsReport:
    """Dependency bounds, incoherence and theta_min at one node.

    alpha is reported even when it is <= 0, i.e. when incoherence fails;
    a singular Q_SS yields alpha = -inf.
    """
    theta_tau = np.asarray(theta_tau, dtype=float)
    J = theta_to_matrix(theta_tau, p)
    sigma = population_covariance(theta_tau, p)
    ev = np.linalg.eigvalsh(sigma)
    rep = DiagnosticsReport(node=u, tau=tau, D_min=float(ev[0]), D_max=float(ev[-1]))
    nz = np.abs(theta_tau[theta_tau != 0])
    rep.theta_min = float(nz.min()) if nz.size else None
    rep.s = int((J != 0).sum(axis=1).max()) if p else 0

    rest = others(p, u)
    S = np.flatnonzero(J[u, rest] != 0)  # positions in the skip-u ordering
    rep.neighborhood = [int(rest[k]) for k in S]
    if S.size == 0:
        rep.notes.append("empty neighborhood: Q_SS checks skipped")
        return rep
    Q = population_fisher(theta_tau, u, p, tau).matrix
    Q_SS = Q[np.ix_(S, S)]
    rep.C_min = float(np.linalg.eigvalsh(Q_SS)[0])
    if rep.C_min <= 1e-12 * max(1.0, float(np.abs(Q_SS).max())):
        rep.incoherence = math.inf
        rep.alpha = -math.inf
        rep.notes.append("Q_SS singular")
        return rep
    rep.incoherence = incoherence_norm(Q, S)
    rep.alpha = 1.0 - rep.incoherence
    return rep


def deviation_report(data: Dataset, path: ParameterPath, tau: float, cfg, u: int | None = None) -> DiagnosticsReport:
    """max |Q_hat - Q| and max |Sigma_hat - Sigma| at tau against the truth.

    ``u`` selects one node for the Fisher deviation; by default the maximum
    over all nodes is reported.
    """
    if data.n == 0:
        raise ValueError("empty dataset")
    p = data.p
    if path.p != p:
        raise ValueError(f"path has p={path.p}, data has p={p}")
    h, _ = cfg.resolve(data.n, p)
    w = weights(cfg.kernel, h, data.times, tau)
    theta = path_value(path, tau)
    J = theta_to_matrix(theta, p)
    nodes = range(p) if u is None else [u]
    fisher_dev = 0.0
    for node in nodes:
        ref = NodeParameter.from_full(J[node], node)
        Qh = sample_fisher(data, w, ref, node).matrix
        Q = population_fisher(theta, node, p, tau).matrix
        fisher_dev = max(fisher_dev, float(np.abs(Qh - Q).max()))
    cov_dev = float(np.abs(sample_covariance(data, w) - population_covariance(theta, p)).max())
    return DiagnosticsReport(
        node=u, tau=tau,
        deviations={"fisher_max_abs": fisher_dev, "cov_max_abs": cov_dev, "h": h,
                    "effective_n": w.effective_n, "reference": "truth"},
    )
