"""Time-varying Ising model: parameter paths, enumeration and sampling.

The joint law at time t is P(x) = exp(sum_{u<v} theta_uv(t) x_u x_v) / Z.
Exact routines enumerate all 2^p states and are limited to p <= 20.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from .core import Dataset, Observation, n_pairs, pair_index, pairs, sigmoid, theta_to_matrix

MAX_ENUM_P = 20


class EnumerationLimitError(ValueError):
    pass


def _check_enum(p: int) -> None:
    if p > MAX_ENUM_P:
        raise EnumerationLimitError(f"enumeration limit: p={p} exceeds {MAX_ENUM_P} (2^p states)")
    if p < 1:
        raise ValueError("p must be >= 1")


@lru_cache(maxsize=8)
def all_states(p: int) -> np.ndarray:
    """All 2^p spin configurations, shape (2^p, p), int8.

    Row k has spin +1 at site j iff bit (p - 1 - j) of k is set.
    """
    _check_enum(p)
    k = np.arange(2**p, dtype=np.int64)[:, None]
    bits = (k >> np.arange(p - 1, -1, -1)) & 1
    out = (2 * bits - 1).astype(np.int8)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _pair_products(p: int) -> np.ndarray:
    """x_u x_v for every state (rows) and pair (columns)."""
    S = all_states(p).astype(np.float64)
    iu, iv = np.triu_indices(p, k=1)
    out = S[:, iu] * S[:, iv]
    out.setflags(write=False)
    return out


def _check_theta(theta, p: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != n_pairs(p):
        raise ValueError(f"expected {n_pairs(p)} pair parameters for p={p}, got {theta.shape[-1]}")
    return theta


def log_weights(theta, p: int) -> np.ndarray:
    """Unnormalized log-probabilities of all states; theta may be (..., P)."""
    _check_enum(p)
    theta = _check_theta(theta, p)
    return theta @ _pair_products(p).T


def log_partition(theta, p: int) -> float:
    return float(logsumexp(log_weights(theta, p)))


def exact_partition(theta, p: int) -> float:
    """Z(theta) by enumeration, accumulated in log space."""
    return math.exp(log_partition(theta, p))


def state_probabilities(theta, p: int) -> np.ndarray:
    # shift by the max then divide by the sum; at theta = 0 every entry is exactly 2^-p
    lw = log_weights(theta, p)
    w = np.exp(lw - lw.max(axis=-1, keepdims=True))
    return w / w.sum(axis=-1, keepdims=True)


def exact_moments(theta, p: int) -> np.ndarray:
    """E[X X'] under the enumerated law (unit diagonal)."""
    prob = state_probabilities(theta, p)
    S = all_states(p).astype(float)
    return (S * prob[:, None]).T @ S


def _inverse_cdf(prob: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(prob, axis=-1)
    cdf[..., -1] = 1.0
    if cdf.ndim == 1:
        return np.searchsorted(cdf, uniforms, side="right")
    # one row of probabilities per uniform
    return (cdf <= np.asarray(uniforms).reshape(-1, 1)).sum(axis=1)


def exact_sample(theta, p: int, rng: np.random.Generator, size: int | None = None):
    """Draw from the enumerated law by inverse CDF over the 2^p table.

    Returns an :class:`Observation` when ``size`` is None, else an int8
    array of shape (size, p).
    """
    prob = state_probabilities(theta, p)
    u = rng.random(1 if size is None else size)
    states = all_states(p)[_inverse_cdf(prob, u)]
    if size is None:
        return Observation(states[0])
    return states


def _gibbs_sweeps(J: np.ndarray, x: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """One full single-site sweep per leading slice of ``uniforms``.

    J: (c, p, p) couplings, or (p, p) shared; x: (c, p) float states updated
    in place; uniforms: (sweeps, c, p).
    """
    p = x.shape[1]
    shared = J.ndim == 2
    for sweep in uniforms:
        for u in range(p):
            s = x @ J[u] if shared else np.einsum("cj,cj->c", x, J[:, u, :])
            # P(x_u = +1 | rest) = exp(2s) / (exp(2s) + 1)
            x[:, u] = np.where(sweep[:, u] < sigmoid(2.0 * s), 1.0, -1.0)
    return x


def gibbs_sample(theta, p: int, rng: np.random.Generator, burn_in: int = 1000, thin: int = 5,
                 size: int | None = None, n_chains: int = 1, init=None):
    """Single-site Gibbs sampler for the Ising law.

    Runs ``n_chains`` independent chains from uniform random starts, discards
    ``burn_in`` sweeps, then keeps the state after every ``thin``-th sweep.
    ``size=None`` returns one :class:`Observation`; otherwise ``size`` states
    are returned as an int8 array, taken round-robin over chains.
    """
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    theta = _check_theta(theta, p)
    J = theta_to_matrix(theta, p)
    want = 1 if size is None else int(size)
    chains = max(1, min(n_chains, want))
    per_chain = -(-want // chains)
    if init is None:
        x = np.where(rng.random((chains, p)) < 0.5, -1.0, 1.0)
    else:
        x = np.broadcast_to(np.asarray(init, dtype=float), (chains, p)).copy()
    if burn_in:
        _gibbs_sweeps(J, x, rng.random((burn_in, chains, p)))
    out = np.empty((per_chain, chains, p), dtype=np.int8)
    for k in range(per_chain):
        _gibbs_sweeps(J, x, rng.random((thin, chains, p)))
        out[k] = x
    flat = out.reshape(-1, p)[:want]
    if size is None:
        return Observation(flat[0])
    return flat


# ---------------------------------------------------------------------------
# parameter paths


def _smootherstep(z):
    """C^2 ramp from 0 (z <= 0) to 1 (z >= 1): 6z^5 - 15z^4 + 10z^3."""
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (z * (6.0 * z - 15.0) + 10.0)


@dataclass(frozen=True)
class PathPreset:
    """A scalar coupling path t -> theta(t).

    kinds and params:
      constant       value
      sine           amplitude, period, phase=0, offset=0
                     offset + amplitude * sin(2 pi (t - phase) / period)
      smooth_switch  amplitude, center, width, direction ('down' | 'up')
                     quintic C^2 ramp across [center - width/2, center + width/2];
                     'down' is on before the ramp, 'up' after it
    """

    kind: str
    params: Mapping[str, float | str] = field(default_factory=dict)

    def __post_init__(self):
        p = dict(self.params)
        if self.kind == "constant":
            p.setdefault("value", 0.0)
        elif self.kind == "sine":
            for key in ("amplitude", "period"):
                if key not in p:
                    raise ValueError(f"sine path needs {key!r}")
            if not p["period"] > 0:
                raise ValueError("sine period must be positive")
            p.setdefault("phase", 0.0)
            p.setdefault("offset", 0.0)
        elif self.kind == "smooth_switch":
            for key in ("amplitude", "center", "width"):
                if key not in p:
                    raise ValueError(f"smooth_switch path needs {key!r}")
            if not p["width"] > 0:
                raise ValueError("smooth_switch width must be positive")
            p.setdefault("direction", "down")
            if p["direction"] not in ("down", "up"):
                raise ValueError("smooth_switch direction must be 'down' or 'up'")
        else:
            raise ValueError(f"unknown path kind {self.kind!r}")
        object.__setattr__(self, "params", p)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        q = self.params
        if self.kind == "constant":
            return np.full_like(t, float(q["value"]))
        if self.kind == "sine":
            return q["offset"] + q["amplitude"] * np.sin(2.0 * np.pi * (t - q["phase"]) / q["period"])
        ramp = _smootherstep((t - (q["center"] - q["width"] / 2.0)) / q["width"])
        frac = 1.0 - ramp if q["direction"] == "down" else ramp
        return q["amplitude"] * frac

    def derivative_bound(self) -> float:
        """Analytic bound on max(|theta'|, |theta''|) over the real line."""
        q = self.params
        if self.kind == "constant":
            return 0.0
        if self.kind == "sine":
            omega = 2.0 * np.pi / q["period"]
            return abs(q["amplitude"]) * max(omega, omega**2)
        a, wd = abs(q["amplitude"]), q["width"]
        # max |S'| = 15/8 at z=1/2; max |S''| = 10/sqrt(3) at z = (3 -+ sqrt(3))/6
        return a * max(15.0 / 8.0 / wd, 10.0 / math.sqrt(3.0) / wd**2)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class ParameterPath:
    """Pairwise coupling paths; unlisted pairs are identically zero."""

    p: int
    edge_paths: Mapping[tuple[int, int], Callable] = field(default_factory=dict)
    M: float | None = None
    s_max: int | None = None

    def __post_init__(self):
        clean = {}
        for (u, v), f in dict(self.edge_paths).items():
            if u == v or not (0 <= u < self.p and 0 <= v < self.p):
                raise ValueError(f"invalid pair ({u}, {v}) for p={self.p}")
            key = (min(u, v), max(u, v))
            if key in clean:
                raise ValueError(f"pair {key} listed twice")
            clean[key] = f
        object.__setattr__(self, "edge_paths", dict(sorted(clean.items())))
        if self.M is None:
            bounds = [f.derivative_bound() for f in clean.values() if hasattr(f, "derivative_bound")]
            object.__setattr__(self, "M", max(bounds, default=0.0))
        if self.s_max is None:
            object.__setattr__(self, "s_max", self._max_degree_on_grid())

    def _max_degree_on_grid(self, m: int = 1001) -> int:
        grid = np.linspace(0.0, 1.0, m)
        theta = self.values(grid)
        deg = np.zeros((m, self.p), dtype=int)
        for k, (u, v) in enumerate(pairs(self.p)):
            on = theta[:, k] != 0
            deg[:, u] += on
            deg[:, v] += on
        return int(deg.max()) if self.p else 0

    def values(self, t) -> np.ndarray:
        """theta(t) for an array of times: shape (len(t), p choose 2)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.shape[0], n_pairs(self.p)))
        for (u, v), f in self.edge_paths.items():
            out[:, pair_index(self.p, u, v)] = f(t)
        return out

    def certify_smoothness(self, m: int = 10_000) -> tuple[float, float]:
        """Max |first| and |second| finite differences on an m-point grid."""
        t = np.linspace(0.0, 1.0, m)
        dt = t[1] - t[0]
        th = self.values(t)
        if th.shape[1] == 0:
            return 0.0, 0.0
        d1 = np.abs(np.diff(th, axis=0) / dt).max()
        d2 = np.abs(np.diff(th, n=2, axis=0) / dt**2).max()
        return float(d1), float(d2)


def path_value(path: ParameterPath, t: float) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    return path.values([t])[0]


def time_stream(seed: int, i: int) -> np.random.Generator:
    """Independent generator for time index ``i`` under base ``seed``."""
    return np.random.default_rng([int(seed), int(i)])


def _base_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return int(rng)


def generate_dataset(path: ParameterPath, n: int, method: str = "exact", rng=0,
                     burn_in: int = 1000, block: int = 256) -> Dataset:
    """One independent draw from P_theta(t_i) at each t_i = i/n.

    ``rng`` is an int seed or a Generator (from which a base seed is drawn).
    Draw ``i`` consumes only ``time_stream(seed, i)``, so the result does not
    depend on how time points are batched. Gibbs draws use a fresh chain per
    time point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = _base_seed(rng)
    times = np.arange(1, n + 1) / n
    theta = path.values(times)
    p = path.p
    X = np.empty((n, p), dtype=np.int8)
    if method == "exact":
        _check_enum(p)
        u = np.array([time_stream(seed, i).random() for i in range(n)])
        if not path.edge_paths:
            X[:] = all_states(p)[_inverse_cdf(np.full(2**p, 2.0**-p), u)]
        else:
            chunk = max(1, (1 << 22) >> p)
            for lo in range(0, n, chunk):
                hi = min(n, lo + chunk)
                prob = state_probabilities(theta[lo:hi], p)
                X[lo:hi] = all_states(p)[_inverse_cdf(prob, u[lo:hi])]
    elif method == "gibbs":
        iu, iv = np.triu_indices(p, k=1)
        for lo in range(0, n, block):
            hi = min(n, lo + block)
            c = hi - lo
            J = np.zeros((c, p, p))
            J[:, iu, iv] = theta[lo:hi]
            J[:, iv, iu] = theta[lo:hi]
            draws = [time_stream(seed, i).random((burn_in + 1) * p) for i in range(lo, hi)]
            U = np.stack(draws).reshape(c, burn_in + 1, p)
            x = np.where(U[:, 0, :] < 0.5, -1.0, 1.0)
            _gibbs_sweeps(J, x, U[:, 1:, :].transpose(1, 0, 2))
            X[lo:hi] = x
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return Dataset(X, times)
