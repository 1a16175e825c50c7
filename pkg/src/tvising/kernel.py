"""Compactly supported smoothing kernels and normalized time weights."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPES = ("box", "triangular", "epanechnikov")
_ALIASES = {"tri": "triangular", "epa": "epanechnikov"}

# slack on |z| <= 1 so points exactly on the window edge survive rounding in (t - tau) / h
_EDGE_SLACK = 1e-12


class EmptyWindowError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    shape: str = "box"
    M_K: float = 1.0

    def __post_init__(self):
        shape = _ALIASES.get(self.shape, self.shape)
        if shape not in SHAPES:
            raise ValueError(f"unknown kernel {self.shape!r}; choose from {SHAPES}")
        object.__setattr__(self, "shape", shape)
        if self.M_K < 1.0:
            raise ValueError("M_K must be >= 1")
        peak = {"box": 0.5, "triangular": 1.0, "epanechnikov": 0.75}[shape]
        if max(peak, peak**2) > self.M_K:
            raise ValueError(f"M_K={self.M_K} does not bound the {shape} kernel")


def _profile(shape: str, z: np.ndarray) -> np.ndarray:
    a = np.abs(z)
    inside = a <= 1.0 + _EDGE_SLACK
    if shape == "box":
        k = np.full_like(a, 0.5)
    elif shape == "triangular":
        k = np.clip(1.0 - a, 0.0, None)
    else:
        k = np.clip(0.75 * (1.0 - a * a), 0.0, None)
    return np.where(inside, k, 0.0)


def kernel_eval(spec: KernelSpec, z):
    """K(z) for the shapes in :data:`SHAPES`; scalar in, scalar out."""
    out = _profile(spec.shape, np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class WeightVector:
    tau: float
    h: float
    weights: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)

    @property
    def effective_n(self) -> float:
        """Kish effective sample size 1 / sum(w^2)."""
        return 1.0 / float(np.sum(self.weights**2))


def weights(spec: KernelSpec, h: float, times, tau: float) -> WeightVector:
    """w_i = K((t_i - tau)/h) / sum_j K((t_j - tau)/h).

    Near the ends of [0, 1] the window is one-sided and simply renormalized.
    """
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("times is empty")
    k = _profile(spec.shape, (t - tau) / h)
    total = k.sum()
    if total <= 0:
        raise EmptyWindowError(f"no observations in bandwidth window [{tau - h:g}, {tau + h:g}] (tau={tau:g}, h={h:g})")
    w = k / total
    w.setflags(write=False)
    return WeightVector(float(tau), float(h), w)


def bandwidth_default(n: int, c: float = 1.0) -> float:
    """c * n^(-1/3), raised if needed so that even a one-sided window at an
    end of [0, 1] holds at least min(n, max(10, 2 log n)) equispaced points."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not c > 0:
        raise ValueError("c must be positive")
    h = c * n ** (-1.0 / 3.0)
    need = min(n, math.ceil(max(10.0, 2.0 * math.log(n))))
    return max(h, need / n)
