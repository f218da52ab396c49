"""Exact one-dimensional L^r-Wasserstein distances by quantile coupling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, InvalidArgument
from .normal import norm_ppf

MERGE_TOL = 1e-12


def _merge_sorted(points, probs, tol=MERGE_TOL):
    order = np.argsort(points, kind="stable")
    points = points[order]
    probs = probs[order]
    if points.size < 2:
        return points, probs
    new = np.empty(points.size, dtype=bool)
    new[0] = True
    # consecutive gaps; a run of near-equal points collapses onto its first member
    new[1:] = np.diff(points) > tol * np.maximum(1.0, np.abs(points[1:]))
    starts = np.flatnonzero(new)
    return points[starts], np.add.reduceat(probs, starts)


@dataclass(frozen=True, eq=False)
class Distribution1D:
    """A one-dimensional law given by its quantile function.

    ``kind == "finite"``: strictly increasing ``points`` with weights ``probs``.
    ``kind == "quantile"``: ``M`` nondecreasing values ``F^{-1}((i - 1/2)/M)``,
    each carrying weight ``1/M``.
    """

    points: np.ndarray
    probs: np.ndarray
    kind: str

    @classmethod
    def finite(cls, points, probs, tol: float = MERGE_TOL) -> Distribution1D:
        points = np.asarray(points, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        if points.size == 0:
            raise InvalidArgument("empty distribution")
        if points.shape != probs.shape:
            raise InvalidArgument("points and probs differ in length")
        if not np.all(np.isfinite(points)):
            raise EvaluationError("non-finite support point")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12 * max(1, points.size) ** 0.5:
            raise InvalidArgument(f"probabilities must be nonnegative and sum to 1 "
                                  f"(sum={probs.sum()!r})")
        keep = probs > 0
        pts, pr = _merge_sorted(points[keep], probs[keep], tol)
        return cls(pts, pr, "finite")

    @classmethod
    def point_mass(cls, x: float) -> Distribution1D:
        return cls(np.array([float(x)]), np.ones(1), "finite")

    @classmethod
    def quantile_sampled(cls, values) -> Distribution1D:
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise InvalidArgument("empty distribution")
        if not np.all(np.isfinite(values)):
            raise EvaluationError("non-finite quantile value")
        if np.any(np.diff(values) < 0):
            values = np.sort(values)
        return cls(values, np.full(values.size, 1.0 / values.size), "quantile")

    def __len__(self):
        return self.points.size

    def cumulative(self) -> np.ndarray:
        if self.kind == "quantile":
            return np.arange(1, self.points.size + 1) / self.points.size
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def mean(self) -> float:
        return float(np.dot(self.points, self.probs))

    def expect(self, fn) -> float:
        return float(np.dot(np.asarray(fn(self.points), dtype=float), self.probs))

    def shift(self, c: float) -> Distribution1D:
        return Distribution1D(self.points + c, self.probs, self.kind)


def gaussian_quantiles(mean: float, variance: float, M: int) -> Distribution1D:
    """``M``-point quantile sample ``mean + sqrt(variance) Phi^{-1}((i - 1/2)/M)``."""
    if variance < 0:
        raise InvalidArgument(f"variance must be nonnegative, got {variance!r}")
    if M < 2:
        raise InvalidArgument(f"need at least 2 quantile points, got {M}")
    half = M // 2
    lower = norm_ppf((np.arange(1, half + 1) - 0.5) / M)
    middle = [0.0] if M % 2 else []
    z = np.concatenate([lower, middle, -lower[::-1]])
    return Distribution1D.quantile_sampled(mean + np.sqrt(variance) * z)


def pushforward(d: Distribution1D, fn) -> Distribution1D:
    """Law of ``fn(X)`` for ``X ~ d``."""
    img = np.asarray(fn(d.points), dtype=float)
    if img.shape != d.points.shape:
        img = np.broadcast_to(img, d.points.shape).astype(float)
    if not np.all(np.isfinite(img)):
        raise EvaluationError("map produced a non-finite image")
    if d.kind == "quantile":
        return Distribution1D.quantile_sampled(np.sort(img))
    return Distribution1D.finite(img, d.probs)


def wasserstein_r(a: Distribution1D, b: Distribution1D, r: float = 1.0) -> float:
    """``(int_0^1 |F_a^{-1}(q) - F_b^{-1}(q)|^r dq)^{1/r}``, summed exactly.

    Both quantile functions are step functions; their merged breakpoints
    split ``[0, 1]`` into segments where both are constant.
    """
    if r < 1:
        raise InvalidArgument(f"order r must be >= 1, got {r!r}")
    if len(a) == 0 or len(b) == 0:
        raise InvalidArgument("empty distribution")
    ca, cb = a.cumulative(), b.cumulative()
    levels = np.union1d(ca, cb)
    prev = np.concatenate([[0.0], levels[:-1]])
    dq = levels - prev
    mid = 0.5 * (levels + prev)
    ia = np.minimum(np.searchsorted(ca, mid, side="left"), ca.size - 1)
    ib = np.minimum(np.searchsorted(cb, mid, side="left"), cb.size - 1)
    gap = np.abs(a.points[ia] - b.points[ib])
    if r == 1:
        return float(np.dot(dq, gap))
    return float(np.dot(dq, gap ** r) ** (1.0 / r))


def w1_dual_lower_bound(a: Distribution1D, b: Distribution1D, test_fns) -> float:
    """``max_f |E_a f - E_b f|`` over 1-Lipschitz test functions; bounds W1 from below."""
    best = 0.0
    for fn in test_fns:
        best = max(best, abs(a.expect(fn) - b.expect(fn)))
    return best
