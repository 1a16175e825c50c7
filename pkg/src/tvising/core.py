"""Data types and node-conditional likelihood of the binary pairwise MRF.

Spins are always stored as -1/+1. A node parameter ``theta_u`` holds the
``p - 1`` couplings of node ``u`` to every other node in *skip-u* order:
position ``k`` corresponds to vertex ``k`` if ``k < u`` and ``k + 1``
otherwise (see :func:`others`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np


class DimensionError(ValueError):
    pass


def others(p: int, u: int) -> np.ndarray:
    """Vertices ``V \\ u`` in the order used by :class:`NodeParameter`."""
    if not 0 <= u < p:
        raise DimensionError(f"vertex {u} out of range for p={p}")
    return np.delete(np.arange(p), u)


def pairs(p: int) -> list[tuple[int, int]]:
    """Unordered pairs ``(u, v)``, ``u < v``, in lexicographic order."""
    return list(combinations(range(p), 2))


def n_pairs(p: int) -> int:
    return p * (p - 1) // 2


def pair_index(p: int, u: int, v: int) -> int:
    """Position of pair ``{u, v}`` in :func:`pairs` order."""
    if u == v:
        raise DimensionError("self-pair has no index")
    if u > v:
        u, v = v, u
    return u * p - u * (u + 1) // 2 + (v - u - 1)


def theta_to_matrix(theta: np.ndarray, p: int) -> np.ndarray:
    """Symmetric ``p x p`` coupling matrix with zero diagonal."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n_pairs(p),):
        raise DimensionError(f"expected {n_pairs(p)} pair parameters, got {theta.shape}")
    m = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    m[iu] = theta
    return m + m.T


def matrix_to_theta(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return m[np.triu_indices(m.shape[0], k=1)].copy()


def to_spins(values, zero_one: bool = False) -> np.ndarray:
    """Validate (and optionally map {0,1} -> {-1,+1}) an array of spins."""
    a = np.asarray(values)
    if zero_one:
        if not np.isin(a, (0, 1)).all():
            raise ValueError("zero-one input must contain only 0 and 1")
        return (2 * a.astype(np.int8) - 1).astype(np.int8)
    if not np.isin(a, (-1, 1)).all():
        raise ValueError("spins must be exactly -1 or +1")
    return a.astype(np.int8)


@dataclass(frozen=True, eq=False)
class Observation:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", to_spins(self.values).ravel())
        if not 0.0 <= self.time <= 1.0:
            raise ValueError(f"time {self.time} outside [0, 1]")

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` observations in {-1,+1}^p with strictly increasing times."""

    X: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        X = to_spins(self.X)
        if X.ndim != 2:
            raise DimensionError("data matrix must be 2-d (n, p)")
        t = np.asarray(self.times, dtype=float).ravel()
        if t.shape[0] != X.shape[0]:
            raise DimensionError(f"{X.shape[0]} rows but {t.shape[0]} time stamps")
        if t.size and (t.min() < 0.0 or t.max() > 1.0):
            raise ValueError("time stamps must lie in [0, 1]")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        X.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "times", t)

    @classmethod
    def equispaced(cls, X) -> "Dataset":
        """Attach the default index set t_i = i/n, i = 1..n."""
        X = np.asarray(X)
        n = X.shape[0]
        return cls(X, np.arange(1, n + 1) / n)

    @classmethod
    def from_observations(cls, observations: Iterable[Observation]) -> "Dataset":
        obs = list(observations)
        if not obs:
            raise ValueError("no observations")
        p = obs[0].p
        if any(o.p != p for o in obs):
            raise DimensionError("observations differ in dimension")
        return cls(np.stack([o.values for o in obs]), np.array([o.time for o in obs]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Observation:
        return Observation(self.X[i], float(self.times[i]))


@dataclass(frozen=True, eq=False)
class NodeParameter:
    node: int
    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=float).ravel()
        if not np.all(np.isfinite(th)):
            raise ValueError("node parameter has non-finite entries")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        if not 0 <= self.node <= th.shape[0]:
            raise DimensionError(f"node {self.node} invalid for p={th.shape[0] + 1}")

    @classmethod
    def zeros(cls, p: int, u: int) -> "NodeParameter":
        return cls(u, np.zeros(p - 1))

    @classmethod
    def from_full(cls, row: np.ndarray, u: int) -> "NodeParameter":
        """Build from a length-p row (entry ``u`` ignored)."""
        row = np.asarray(row, dtype=float)
        return cls(u, row[others(row.shape[0], u)])

    @property
    def p(self) -> int:
        return self.theta.shape[0] + 1

    def full(self) -> np.ndarray:
        row = np.zeros(self.p)
        row[others(self.p, self.node)] = self.theta
        return row

    def support(self) -> frozenset[int]:
        """Vertices (original labels) with nonzero coupling."""
        idx = others(self.p, self.node)
        return frozenset(int(v) for v in idx[self.theta != 0])


@dataclass(frozen=True)
class Graph:
    p: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        clean = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.p and 0 <= v < self.p):
                raise ValueError(f"edge ({u}, {v}) out of range for p={self.p}")
            clean.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(clean))

    def degree(self, u: int) -> int:
        return sum(u in e for e in self.edges)

    def max_degree(self) -> int:
        return max((self.degree(u) for u in range(self.p)), default=0)

    def neighbors(self, u: int) -> set[int]:
        return {b if a == u else a for a, b in self.edges if u in (a, b)}


@dataclass(frozen=True)
class SignedEdgeVector:
    """Signed graph keyed on unordered pairs; absent pairs have sign 0."""

    p: int
    entries: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (u, v), s in dict(self.entries).items():
            if u == v or not (0 <= u < self.p and 0 <= v < self.p):
                raise ValueError(f"invalid pair ({u}, {v}) for p={self.p}")
            if s not in (-1, 0, 1):
                raise ValueError(f"sign must be -1, 0 or +1, got {s}")
            if s:
                clean[(min(u, v), max(u, v))] = int(s)
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __getitem__(self, pair: tuple[int, int]) -> int:
        u, v = pair
        return self.entries.get((min(u, v), max(u, v)), 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedEdgeVector):
            return NotImplemented
        return self.p == other.p and self.entries == other.entries

    def __hash__(self):
        return hash((self.p, tuple(self.entries.items())))

    def __len__(self) -> int:
        return len(self.entries)

    def as_vector(self) -> np.ndarray:
        vec = np.zeros(n_pairs(self.p), dtype=np.int8)
        for (u, v), s in self.entries.items():
            vec[pair_index(self.p, u, v)] = s
        return vec

    @classmethod
    def from_theta(cls, theta: np.ndarray, p: int, threshold: float = 0.0) -> "SignedEdgeVector":
        theta = np.asarray(theta, dtype=float)
        return cls(p, {pr: int(np.sign(th)) for pr, th in zip(pairs(p), theta) if abs(th) > threshold})

    def graph(self) -> Graph:
        return Graph(self.p, frozenset(self.entries))


# ---------------------------------------------------------------------------
# node-conditional likelihood


def _split(theta_u: NodeParameter, x, u: int) -> tuple[float, float, np.ndarray]:
    values = x.values if isinstance(x, Observation) else np.asarray(x)
    if theta_u.node != u:
        raise DimensionError(f"parameter belongs to node {theta_u.node}, not {u}")
    if values.shape[0] != theta_u.p:
        raise DimensionError(f"observation has dimension {values.shape[0]}, parameter expects {theta_u.p}")
    rest = values[others(theta_u.p, u)].astype(float)
    s = float(rest @ theta_u.theta)
    if not np.isfinite(s):
        raise FloatingPointError("non-finite inner product <theta_u, x_rest>")
    return float(values[u]), s, rest


def log_sigmoid(z):
    """``log(1 / (1 + exp(-z)))`` without overflow."""
    return -np.logaddexp(0.0, -z)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    return np.exp(log_sigmoid(z))


def log_cosh2(s):
    """``log(exp(s) + exp(-s))`` in the stable form |s| + log1p(exp(-2|s|))."""
    a = np.abs(s)
    return a + np.log1p(np.exp(-2.0 * a))


def sech2(s):
    a = np.abs(np.asarray(s, dtype=float))
    e = np.exp(-2.0 * a)
    return 4.0 * e / (1.0 + e) ** 2


def conditional_prob(theta_u: NodeParameter, x, u: int) -> float:
    """P(X_u = x_u | x_rest) = exp(2 x_u s) / (exp(2 x_u s) + 1)."""
    xu, s, _ = _split(theta_u, x, u)
    return float(sigmoid(2.0 * xu * s))


def logloss(theta_u: NodeParameter, x, u: int) -> float:
    xu, s, _ = _split(theta_u, x, u)
    a = abs(s)
    # (x_u s - |s|) cancels exactly when x_u agrees with sign(s)
    return (xu * s - a) - float(np.log1p(np.exp(-2.0 * a)))


def score(theta_u: NodeParameter, x, u: int) -> np.ndarray:
    """Gradient of :func:`logloss` in ``theta_u``: x_rest * (x_u - tanh s)."""
    xu, s, rest = _split(theta_u, x, u)
    return rest * (xu - np.tanh(s))


def variance_fn(theta_u: NodeParameter, x, u: int) -> float:
    _, s, _ = _split(theta_u, x, u)
    return float(sech2(s))
