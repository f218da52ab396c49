"""Infimal-convolution regularisation of a generator that is only Hölder in ``x``.

``f^eta(t, x, y, z) = inf_p f(t, p, y, z) + eta |x - p|`` is ``eta``-Lipschitz
in ``x``, never exceeds ``f``, and stays within ``c eta^{-eps/(1-eps)}`` of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSmoothingError, EvaluationError, InvalidArgument
from .problem import Generator

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
REFINE_WIDTH = 1e-10
_CHUNK = 2048


@dataclass(frozen=True)
class SmoothingParams:
    """Penalty level ``eta`` and the settings of the minimiser search.

    ``refine_iterations = None`` runs golden-section steps until each
    bracket is narrower than ``1e-10 R``.
    """

    eta: float
    search_radius_factor: float = 2.0
    coarse_grid_points: int = 65
    refine_iterations: int | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgument(f"eta must be positive, got {self.eta!r}")
        if self.search_radius_factor < 1:
            raise InvalidArgument("search_radius_factor must be >= 1")
        if self.coarse_grid_points < 17:
            raise InvalidArgument(
                f"coarse_grid_points must be >= 17, got {self.coarse_grid_points}")


def search_radius(fx_norm: float, eps: float, eta: float, factor: float = 2.0) -> float:
    """Radius beyond which no minimiser can sit.

    A minimiser ``q = x - p`` satisfies ``eta |q| <= f(x) - f(p) <= ||f_x|| |q|^eps``,
    hence ``|q| <= (||f_x|| / eta)^{1/(1-eps)}``.
    """
    return factor * (fx_norm / eta) ** (1.0 / (1.0 - eps))


def smoothing_constant(fx_norm: float, eps: float) -> float:
    """``c(s) = (eps s)^{eps/(1-eps)} s (1-eps)``."""
    return (eps * fx_norm) ** (eps / (1.0 - eps)) * fx_norm * (1.0 - eps)


def smoothing_bound(fx_norm: float, eps: float, eta: float) -> float:
    """Uniform bound ``c(||f_x||) eta^{-eps/(1-eps)}`` on ``f - f^eta``."""
    if eps >= 1:
        return 0.0
    return smoothing_constant(fx_norm, eps) * eta ** (-eps / (1.0 - eps))


def power_generator(eps: float, scale: float = 1.0) -> Generator:
    """``f(t, x, y, z) = scale |x|^eps``: the model generator for the smoothing bound."""
    return Generator(lambda t, x, y, z: scale * np.abs(x) ** eps + 0.0 * (t + y + z),
                     alpha=1.0, ft_norm=0.0, fx_norm=abs(scale), fy_lip=0.0, fz_lip=0.0,
                     K_f=0.0, label=f"{scale:g}|x|^{eps:g}", eps=eps, x_kinks=(0.0,))


def _golden(obj, a, b, iters):
    """Vectorised golden-section search of ``obj`` on brackets ``[a, b]``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - GOLDEN * (b - a), d)
        new_d = np.where(left, c, a + GOLDEN * (b - a))
        c, d = new_c, new_d
        probe = np.where(left, c, d)
        fp = obj(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    return np.minimum(fc, fd)


def _minimise(f, eta, R, coarse, iters, t, x, y, z):
    """``min_{|q| <= R} f(t, x - q, y, z) + eta |q|`` for flat arrays."""
    grid = np.linspace(-R, R, coarse)
    if not np.any(grid == 0.0):
        grid = np.sort(np.append(grid, 0.0))
    step = 2.0 * R / (coarse - 1)

    def obj_at(q):
        return f(t[:, None], x[:, None] - q, y[:, None], z[:, None]) + eta * np.abs(q)

    vals = np.asarray(obj_at(grid[None, :]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("generator returned a non-finite value during smoothing")
    best = vals.min(axis=1)
    # kinks of f in x are candidate minimisers: q = x - kink
    for kink in f.x_kinks:
        q = x - kink
        inside = np.abs(q) <= R
        if inside.any():
            cand = np.asarray(obj_at(q[:, None]), dtype=float)[:, 0]
            best = np.where(inside, np.minimum(best, cand), best)
    k = min(3, grid.size)
    top = np.argpartition(vals, k - 1, axis=1)[:, :k]
    for j in range(k):
        centre = grid[top[:, j]]
        a = np.maximum(centre - step, -R)
        b = np.minimum(centre + step, R)

        def obj(q):
            return np.asarray(f(t, x - q, y, z), dtype=float) + eta * np.abs(q)

        best = np.minimum(best, _golden(obj, a, b, iters))
    return best


def inf_convolve(f: Generator, params: SmoothingParams) -> Generator:
    """``f^eta``; the result carries ``eta`` as its x-Lipschitz norm.

    For ``eps = 1`` the generator is already Lipschitz: it is returned
    unchanged when ``eta >= ||f_x||``, otherwise the smoothing is degenerate.
    """
    eta = float(params.eta)
    if f.eps >= 1.0:
        if eta >= f.fx_norm:
            return f
        raise DegenerateSmoothingError(
            f"f is Lipschitz in x with norm {f.fx_norm:g} > eta={eta:g}; "
            "inf-convolution would change it and the bound does not apply")
    if f.fx_norm == 0:
        return f
    R = search_radius(f.fx_norm, f.eps, eta, params.search_radius_factor)
    coarse = params.coarse_grid_points
    step = 2.0 * R / (coarse - 1)
    iters = params.refine_iterations
    if iters is None:
        iters = max(1, math.ceil(math.log(REFINE_WIDTH * R / (2.0 * step)) / math.log(GOLDEN)))

    def func(t, x, y, z):
        t, x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y, z)))
        shape = x.shape
        t, x, y, z = (v.ravel() for v in (t, x, y, z))
        out = np.empty(x.size)
        for lo in range(0, x.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            out[sl] = _minimise(f, eta, R, coarse, iters, t[sl], x[sl], y[sl], z[sl])
        return out.reshape(shape)

    return Generator(func, alpha=f.alpha, ft_norm=f.ft_norm, fx_norm=eta, fy_lip=f.fy_lip,
                     fz_lip=f.fz_lip, K_f=f.K_f, label=f"{f.label}^eta={eta:g}", eps=1.0)


def smoothing_gap(f: Generator, f_eta: Generator, x_grid, t: float = 0.0, y: float = 0.0,
                  z: float = 0.0) -> float:
    """``max (f - f^eta)`` over ``x_grid`` at fixed ``(t, y, z)``."""
    x = np.asarray(x_grid, dtype=float)
    diff = np.asarray(f(t, x, y, z), dtype=float) - np.asarray(f_eta(t, x, y, z), dtype=float)
    if diff.min() < -1e-10:
        i = int(np.argmin(diff))
        raise EvaluationError(
            f"smoothed generator exceeds f by {-diff[i]:.3g} at x={x[i]!r}; it must minorise f")
    return float(diff.max())
