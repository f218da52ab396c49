"""Oracles for the continuous solution ``(u, grad u)`` of the limiting PDE.

Three routes, in decreasing order of trust: closed forms, Gaussian
quadrature of the heat semigroup (``f = 0``), and a Picard iteration of
the probabilistic representation formulas for general ``f``.  A fourth,
:func:`self_refined`, reads a fine lattice solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import erf

from .errors import HorizonGradientError, InvalidArgument, MemoryGuardError, OracleAccuracyError

if TYPE_CHECKING:
    from .problem import ProblemSpec, TerminalCondition

METHODS = ("closed-form", "manufactured", "heat-quadrature", "picard", "self-refined")

# truncation of the Gaussian integral, in standard deviations
TAIL_SD = 8.0
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ContinuousSolution:
    """``u(t, x)`` and ``grad u(t, x)`` of the limiting problem.

    ``accuracy`` is the method's own estimate of its sup error; ``cheap``
    tells callers whether evaluating on ~1e6 points is reasonable.
    """

    u_func: Callable
    grad_func: Callable
    T: float
    method: str = "closed-form"
    accuracy: float = 0.0
    cheap: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown oracle method {self.method!r}")

    def u(self, t, x):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr > self.T + 1e-12) or np.any(t_arr < 0):
            raise InvalidArgument(f"time outside [0, {self.T}]")
        out = np.asarray(self.u_func(t_arr, np.asarray(x, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    def grad_u(self, t, x):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr > self.T + 1e-12) or np.any(t_arr < 0):
            raise InvalidArgument(f"time outside [0, {self.T}]")
        if np.any(t_arr >= self.T):
            raise HorizonGradientError("grad u is not defined at the horizon t = T")
        out = np.asarray(self.grad_func(t_arr, np.asarray(x, dtype=float)), dtype=float)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Gaussian expectations


MAX_HERMITE = 300


def _hermite_rule(n):
    # numpy's weight computation overflows somewhere above 350 nodes
    if n > MAX_HERMITE:
        raise InvalidArgument(f"at most {MAX_HERMITE} Hermite nodes are supported, got {n}")
    z, w = np.polynomial.hermite_e.hermegauss(n)
    return z, w / math.sqrt(2.0 * math.pi)


def _legendre_rule(n):
    return np.polynomial.legendre.leggauss(n)


def gaussian_moments(func, x, sigma, kinks=(), nodes=200):
    """``E[func(x + sigma Z)]`` and ``E[func(x + sigma Z) Z]`` for standard normal ``Z``.

    Smooth integrands (no ``kinks``) use an ``nodes``-point Hermite rule.
    Otherwise the integral over ``|Z| <= 8`` is split into ``nodes // 8``
    uniform panels plus panels graded geometrically toward each kink
    preimage ``(kink - x) / sigma``, with a 10-point Legendre rule per panel.
    ``x`` and ``sigma`` broadcast together; ``sigma`` must be positive.
    """
    x, sigma = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(sigma, dtype=float))
    shape = x.shape
    x = x.ravel()
    sigma = sigma.ravel()
    m0 = np.empty(x.size)
    m1 = np.empty(x.size)
    if not kinks:
        z, w = _hermite_rule(nodes)
        for lo in range(0, x.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            vals = func(x[sl, None] + sigma[sl, None] * z[None, :])
            m0[sl] = vals @ w
            m1[sl] = vals @ (w * z)
        return m0.reshape(shape), m1.reshape(shape)

    zq, wq = _legendre_rule(10)
    base = np.linspace(-TAIL_SD, TAIL_SD, max(nodes // 8, 4) + 1)
    offsets = TAIL_SD * 2.0 ** -np.arange(0, 48)
    offsets = np.concatenate([-offsets, [0.0], offsets[::-1]])
    for lo in range(0, x.size, _CHUNK // 4):
        sl = slice(lo, lo + _CHUNK // 4)
        xs, ss = x[sl], sigma[sl]
        parts = [np.broadcast_to(base, (xs.size, base.size))]
        for k in kinks:
            zstar = (k - xs) / ss
            parts.append(zstar[:, None] + offsets[None, :])
        br = np.sort(np.clip(np.concatenate(parts, axis=1), -TAIL_SD, TAIL_SD), axis=1)
        a, b = br[:, :-1], br[:, 1:]
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        z = (mid[:, :, None] + half[:, :, None] * zq[None, None, :]).reshape(xs.size, -1)
        w = (half[:, :, None] * wq[None, None, :]).reshape(xs.size, -1)
        w = w * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        vals = func(xs[:, None] + ss[:, None] * z)
        m0[sl] = np.sum(vals * w, axis=1)
        m1[sl] = np.sum(vals * w * z, axis=1)
    return m0.reshape(shape), m1.reshape(shape)


def heat_solution(g: TerminalCondition, T: float, quad_nodes: int = 200) -> ContinuousSolution:
    """Heat-semigroup solution for ``f = 0``.

    ``u(t, x) = E g(x + sqrt(T-t) Z)`` and
    ``grad u(t, x) = E[g(x + sqrt(T-t) Z) Z] / sqrt(T-t)``.  The accuracy is
    the sup difference between ``quad_nodes`` and ``2 * quad_nodes`` on a probe
    set (``quad_nodes // 2`` when the Hermite rule cannot be doubled).
    """
    if quad_nodes < 32:
        raise InvalidArgument(f"quad_nodes must be >= 32, got {quad_nodes}")

    def make(nodes):
        def both(t, x):
            t, x = np.broadcast_arrays(t, x)
            sig = np.sqrt(np.maximum(T - t, 0.0))
            at_T = sig <= 0.0
            m0, m1 = gaussian_moments(g.func, x, np.where(at_T, 1.0, sig), g.kinks, nodes)
            return np.where(at_T, g.func(x), m0), m1 / np.where(at_T, 1.0, sig)

        return (lambda t, x: both(t, x)[0]), (lambda t, x: both(t, x)[1])

    u, grad = make(quad_nodes)
    other = 2 * quad_nodes
    if not g.kinks and other > MAX_HERMITE:
        # halving instead of doubling overstates the error; never understates it
        other = quad_nodes // 2
    u2, grad2 = make(other)
    pt = np.repeat([0.0, 0.5 * T, 0.9 * T, 0.99 * T], 9)
    px = np.tile(np.linspace(-2.0, 2.0, 9), 4)
    acc = max(np.max(np.abs(u(pt, px) - u2(pt, px))),
              np.max(np.abs(grad(pt, px) - grad2(pt, px))))
    return ContinuousSolution(u, grad, float(T), "heat-quadrature", float(acc), cheap=False)


def abs_heat_solution(T: float, scale: float = 1.0) -> ContinuousSolution:
    """Closed form for ``g = scale |x|``: ``E|x + s Z| = s sqrt(2/pi) e^{-x^2/2s^2} + x erf(x/(s sqrt 2))``."""

    def u(t, x):
        t, x = np.broadcast_arrays(t, x)
        s = np.sqrt(np.maximum(T - t, 0.0))
        safe = np.where(s > 0, s, 1.0)
        val = (safe * math.sqrt(2.0 / math.pi) * np.exp(-0.5 * (x / safe) ** 2)
               + x * erf(x / (safe * math.sqrt(2.0))))
        return scale * np.where(s > 0, val, np.abs(x))

    def grad(t, x):
        t, x = np.broadcast_arrays(t, x)
        s = np.sqrt(T - t)
        return scale * erf(x / (s * math.sqrt(2.0)))

    return ContinuousSolution(u, grad, float(T), "closed-form")


# ---------------------------------------------------------------------------
# Picard iteration


def _smoothstep(v):
    return v * v * (3.0 - 2.0 * v), 6.0 * v * (1.0 - v)


def _convolve_rows(rows, sigmas, dx, pad):
    """Trapezoid Gaussian smoothing of each row: ``E[F(x + sigma Z)]`` and ``E[F(x + sigma Z) Z] / sigma``.

    Rows are edge-padded by ``pad`` points, so a kernel of half-width at
    most ``pad`` cells never wraps around; the circular FFT product then
    equals the linear convolution on the original points.
    """
    npts = rows.shape[1]
    padded = np.pad(rows, ((0, 0), (pad, pad)), mode="edge")
    size = 1 << int(math.ceil(math.log2(padded.shape[1] + 2 * pad + 1)))
    j = np.arange(-pad, pad + 1) * dx
    z = j[None, :] / sigmas[:, None]
    ker = np.exp(-0.5 * z * z)
    ker /= ker.sum(axis=1, keepdims=True)
    kgrad = ker * j[None, :]
    # exact on linear functions: E[(x + sigma Z) Z] / sigma = 1
    kgrad /= (kgrad * j[None, :]).sum(axis=1, keepdims=True)

    def apply(kernel):
        # correlation with a symmetric/antisymmetric kernel of half-width pad
        kpad = np.zeros((kernel.shape[0], size))
        kpad[:, :pad + 1] = kernel[:, pad:][:, ::-1][:, ::-1]
        kpad[:, size - pad:] = kernel[:, :pad]
        spec = np.fft.rfft(padded, size, axis=1) * np.conj(np.fft.rfft(kpad, axis=1))
        out = np.fft.irfft(spec, size, axis=1)
        return out[:, pad:pad + npts]

    return apply(ker), apply(kgrad)


def _small_sigma_moments(row, xg, sigma, zh, wh):
    """Hermite rule on a cubic spline of ``row``, for kernels narrower than the grid."""
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(xg, row)
    y = np.clip(xg[:, None] + sigma * zh[None, :], xg[0], xg[-1])
    vals = spline(y)
    return vals @ wh, (vals * zh) @ wh / sigma


def picard_solution(problem: ProblemSpec, time_levels: int = 64,
                    space_grid: tuple = (-4.0, 4.0, 161), max_iter: int = 60,
                    tol: float = 1e-8, time_nodes: int = 24) -> ContinuousSolution:
    """Fixed point of the representation formulas for ``(u, grad u)``.

    ``u`` and ``grad u`` live on a tensor grid (``time_levels`` uniform times,
    ``space_grid = (lo, hi, points)`` plus an 8-sd margin on each side) and
    are interpolated with bicubic splines.  Time integrals from ``t`` to
    ``T`` use the substitution ``r = t + (T - t) w(v)`` with the smoothstep
    ``w``, which absorbs both the ``(r - t)^{-1/2}`` kernel and a
    ``(T - r)^{-1/2}`` blow-up of the source.  Gaussian expectations in
    space are trapezoid sums over the grid, computed as convolutions.

    ``accuracy`` is the last sup-difference between iterates on the core
    grid; it does not include the discretisation error of the grid itself.
    """
    if time_levels < 64:
        raise InvalidArgument(f"time_levels must be >= 64, got {time_levels}")
    T = problem.T
    g, f = problem.terminal, problem.generator
    lo, hi, npts = space_grid
    dx = (hi - lo) / (npts - 1)
    extra = int(math.ceil(TAIL_SD * math.sqrt(T) / dx))
    xg = lo + dx * np.arange(-extra, npts + extra)
    tg = np.linspace(0.0, T, time_levels)
    zh, wh = _hermite_rule(16)
    vq, wq = _legendre_rule(time_nodes)
    vq = 0.5 * (vq + 1.0)
    wq = 0.5 * wq
    wv, dwv = _smoothstep(vq)

    # terminal contribution is fixed across iterations
    U0 = np.empty((time_levels, xg.size))
    G0 = np.empty((time_levels, xg.size))
    for i, t in enumerate(tg[:-1]):
        m0, m1 = gaussian_moments(g.func, xg, math.sqrt(T - t), g.kinks, 200)
        U0[i] = m0
        G0[i] = m1 / math.sqrt(T - t)
    U0[-1] = g(xg)
    G0[-1] = np.gradient(U0[-1], xg, edge_order=2)
    if f.is_zero:
        max_iter = 1

    # quadrature pairs (t_i, r_iq) flattened
    tau = T - tg[:-1]
    R = tg[:-1, None] + tau[:, None] * wv[None, :]
    SIG = np.sqrt(tau[:, None] * wv[None, :])
    W = tau[:, None] * (wq * dwv)[None, :]
    r_flat, sig_flat = R.ravel(), SIG.ravel()
    wide = sig_flat >= 1.5 * dx

    U, G = U0.copy(), G0.copy()
    resid = math.inf
    for it in range(max_iter):
        if f.is_zero:
            resid = 0.0
            break
        su = RectBivariateSpline(tg, xg, U)
        sg = RectBivariateSpline(tg, xg, G)
        rr = np.repeat(r_flat, xg.size)
        yy = np.tile(xg, r_flat.size)
        F = np.asarray(f(rr, yy, su.ev(rr, yy), sg.ev(rr, yy)), dtype=float)
        F = F.reshape(r_flat.size, xg.size)
        EU = np.empty_like(F)
        EZ = np.empty_like(F)
        EU[wide], EZ[wide] = _convolve_rows(F[wide], sig_flat[wide], dx, extra)
        for p in np.flatnonzero(~wide):
            EU[p], EZ[p] = _small_sigma_moments(F[p], xg, sig_flat[p], zh, wh)
        EU = EU.reshape(tau.size, wv.size, xg.size)
        EZ = EZ.reshape(tau.size, wv.size, xg.size)
        Un, Gn = U0.copy(), G0.copy()
        Un[:-1] += np.einsum("iqx,iq->ix", EU, W)
        Gn[:-1] += np.einsum("iqx,iq->ix", EZ, W)
        core = slice(extra, extra + npts)
        resid = max(np.max(np.abs(Un[:, core] - U[:, core])),
                    np.max(np.abs(Gn[:-1, core] - G[:-1, core])))
        U, G = Un, Gn
        if resid <= tol:
            break
    else:
        raise OracleAccuracyError(
            f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations "
            f"(last residual {resid:.3g})", residual=resid)

    su = RectBivariateSpline(tg, xg, U)
    sg = RectBivariateSpline(tg, xg, G)

    def u(t, x):
        t, x = np.broadcast_arrays(t, x)
        return su.ev(t, x)

    def grad(t, x):
        t, x = np.broadcast_arrays(t, x)
        return sg.ev(t, x)

    return ContinuousSolution(u, grad, T, "picard", float(resid), cheap=False)


# ---------------------------------------------------------------------------
# self-refined lattice oracle

MAX_REF_N = 16384


def self_refined(problem: ProblemSpec, n_ref: int, x0: float | None = None) -> ContinuousSolution:
    """Lattice solution at ``n_ref`` steps used as a stand-in for ``u``.

    ``u(t, x)`` interpolates layer ``n_t`` linearly in ``x``; ``grad u`` is
    the discrete gradient.  Accuracy is ``|U^{n_ref} - U^{n_ref/2}|`` at the
    root, the first-order Richardson estimate of the error of the fine level.
    """
    from .lattice import make_grid
    from .solver import solve_backward

    if n_ref > MAX_REF_N:
        raise MemoryGuardError(f"n_ref={n_ref} exceeds the limit {MAX_REF_N}")
    if x0 is None:
        x0 = problem.start[1]
    grid = make_grid(problem.T, n_ref)
    sol = solve_backward(problem, grid, x0)
    coarse = solve_backward(problem, make_grid(problem.T, max(n_ref // 2, 1)), x0)
    acc = abs(sol.layer(0)[0] - coarse.layer(0)[0])

    def u(t, x):
        t, x = np.broadcast_arrays(t, x)
        out = np.empty(t.shape)
        for idx in np.ndindex(t.shape):
            k = grid.index(float(t[idx]))
            out[idx] = np.interp(x[idx], grid.nodes(k, x0), sol.layer(k))
        return out

    def grad(t, x):
        t, x = np.broadcast_arrays(t, x)
        out = np.empty(t.shape)
        for idx in np.ndindex(t.shape):
            k = grid.index(float(t[idx]))
            out[idx] = np.interp(x[idx], grid.nodes(k, x0), sol.delta_layer(k))
        return out

    return ContinuousSolution(u, grad, problem.T, "self-refined", float(acc), cheap=False)
