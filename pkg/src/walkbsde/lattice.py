"""Uniform time grid and the recombining lattice of the scaled random walk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgument

# |t/h - round(t/h)| below this snaps t onto the grid
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Mesh ``{k*h : k = 0..n}`` of ``[0, T]`` with ``h = T/n``."""

    T: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.T, (int, float)) and math.isfinite(self.T) and self.T > 0):
            raise InvalidArgument(f"horizon T must be positive, got {self.T!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidArgument(f"number of steps n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def sqrt_h(self) -> float:
        return math.sqrt(self.h)

    def _check_time(self, t):
        if not (-SNAP_TOL * self.h <= t <= self.T + SNAP_TOL * self.h):
            raise InvalidArgument(f"time {t!r} outside [0, {self.T}]")

    def index(self, t: float) -> int:
        """Floor index ``n_t = [t/h]``, snapping near-grid times onto the grid."""
        self._check_time(t)
        q = t / self.h
        r = round(q)
        if abs(q - r) < SNAP_TOL:
            return min(int(r), self.n)
        return min(int(math.floor(q)), self.n)

    def ceil_index(self, t: float) -> int:
        self._check_time(t)
        q = t / self.h
        r = round(q)
        if abs(q - r) < SNAP_TOL:
            return min(int(r), self.n)
        return min(int(math.ceil(q)), self.n)

    def floor_time(self, t: float) -> float:
        k = self.index(t)
        return self.T if k == self.n else k * self.h

    def ceil_time(self, t: float) -> float:
        return self.ceil_index(t) * self.h

    def is_grid_point(self, t: float) -> bool:
        return self.index(t) == self.ceil_index(t)

    def times(self) -> np.ndarray:
        # linspace keeps the last entry exactly T
        return np.linspace(0.0, self.T, self.n + 1)

    def nodes(self, k: int, x0: float = 0.0) -> np.ndarray:
        """Lattice positions ``x0 + sqrt(h)(2m - k)``, ``m = 0..k``, at layer ``k``."""
        if not 0 <= k <= self.n:
            raise InvalidArgument(f"layer {k} outside 0..{self.n}")
        return x0 + self.sqrt_h * (2.0 * np.arange(k + 1) - k)

    def node_index(self, k: int, x: float, x0: float = 0.0) -> int:
        """Index ``m`` of the node of layer ``k`` located at ``x``.

        Raises ``InvalidArgument`` when ``x`` is not reachable at that layer.
        """
        q = ((x - x0) / self.sqrt_h + k) / 2.0
        m = round(q)
        if abs(q - m) > SNAP_TOL or not 0 <= m <= k:
            raise InvalidArgument(f"x={x!r} is not a lattice node at layer {k}")
        return int(m)

    def min_stable_n(self, lipschitz: float) -> int:
        """Smallest n with ``(T/n) * lipschitz <= 1/2``."""
        return max(1, math.ceil(2.0 * self.T * lipschitz - 1e-12))


def make_grid(T: float, n: int) -> TimeGrid:
    return TimeGrid(T, n)


def binomial_weights(k: int) -> np.ndarray:
    """``C(k, m) 2^{-k}`` for ``m = 0..k``.

    Evaluated through log-gamma so it stays finite for k in the thousands;
    the terms for ``m`` and ``k - m`` are computed identically, which keeps
    the weights exactly symmetric.
    """
    if k < 0:
        raise InvalidArgument(f"number of steps must be >= 0, got {k}")
    if k == 0:
        return np.ones(1)
    m = np.arange(k + 1, dtype=float)
    logp = gammaln(k + 1.0) - (gammaln(m + 1.0) + gammaln(k - m + 1.0)) - k * math.log(2.0)
    p = np.exp(logp)
    return p / p.sum()


@dataclass(frozen=True, eq=False)
class WalkMarginal:
    """Exact law of ``B^n_s - B^n_t``: ``k`` symmetric steps of size ``sqrt(h)``."""

    support: np.ndarray
    probs: np.ndarray
    steps: int

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.support - mu) ** 2, self.probs))

    def expect(self, fn) -> float:
        return float(np.dot(fn(self.support), self.probs))


def walk_marginal(grid: TimeGrid, t: float, s: float) -> WalkMarginal:
    k = grid.index(s) - grid.index(t)
    if k < 0:
        raise InvalidArgument(f"need t <= s, got t={t!r}, s={s!r}")
    support = grid.sqrt_h * (2.0 * np.arange(k + 1) - k)
    support.setflags(write=False)
    probs = binomial_weights(k)
    probs.setflags(write=False)
    return WalkMarginal(support, probs, k)
