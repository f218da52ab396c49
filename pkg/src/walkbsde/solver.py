"""Backward induction for the random-walk BSDE on the recombining lattice.

Layer ``k`` holds ``U^n(kh, x0 + sqrt(h)(2m - k))`` for ``m = 0..k``.  Each
interior value solves the implicit scalar equation

    y = D+ U_{k+1}(x) + h f((k+1)h, x, y, grad^n U_{k+1}(x))

where ``D+`` averages the two children and ``grad^n`` is their difference
quotient over ``2 sqrt(h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, GridPointError, InvalidArgument, SchemeUnstableError
from .lattice import TimeGrid, binomial_weights
from .problem import ProblemSpec
from .wasserstein import Distribution1D

FIXED_POINT_TOL = 1e-13
MAX_ITER = 60
MAX_CONTRACTION = 0.5


def _offset(k):
    return k * (k + 1) // 2


@dataclass(frozen=True, eq=False)
class LatticeSolution:
    """Triangular array of ``U^n`` values, stored flat layer after layer."""

    grid: TimeGrid
    x0: float
    values: np.ndarray
    fixed_point_residuals: np.ndarray
    iterations: np.ndarray

    def layer(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.grid.n:
            raise InvalidArgument(f"layer {k} outside 0..{self.grid.n}")
        return self.values[_offset(k):_offset(k + 1)]

    def nodes(self, k: int) -> np.ndarray:
        return self.grid.nodes(k, self.x0)

    def delta_layer(self, k: int) -> np.ndarray:
        """``Delta^n`` on layer ``k``: difference quotient of layer ``k + 1``."""
        if not 0 <= k < self.grid.n:
            raise InvalidArgument(f"Delta^n is defined on layers 0..{self.grid.n - 1}, got {k}")
        nxt = self.layer(k + 1)
        return (nxt[1:] - nxt[:-1]) / (2.0 * self.grid.sqrt_h)

    @property
    def root(self) -> float:
        return float(self.values[0])


def solve_backward(problem: ProblemSpec, grid: TimeGrid, x0: float = 0.0,
                   tol: float = FIXED_POINT_TOL, max_iter: int = MAX_ITER) -> LatticeSolution:
    f = problem.generator
    g = problem.terminal
    if abs(grid.T - problem.T) > 1e-12 * problem.T:
        raise InvalidArgument(f"grid horizon {grid.T} differs from problem horizon {problem.T}")
    h = grid.h
    if h * f.fy_lip > MAX_CONTRACTION:
        n_min = grid.min_stable_n(f.fy_lip)
        raise SchemeUnstableError(
            f"h*||f_y||_Lip = {h * f.fy_lip:g} > {MAX_CONTRACTION}: the implicit step does not "
            f"contract; use n >= {n_min}", n_min)
    n = grid.n
    sqh = grid.sqrt_h
    values = np.empty(_offset(n + 1))
    residuals = np.zeros(n)
    iterations = np.zeros(n, dtype=np.int16)

    xs = grid.nodes(n, x0)
    last = np.asarray(g(xs), dtype=float)
    if not np.all(np.isfinite(last)):
        bad = int(np.flatnonzero(~np.isfinite(last))[0])
        raise EvaluationError(f"non-finite terminal value g({xs[bad]!r}) at node (k={n}, m={bad})")
    values[_offset(n):] = last

    for k in range(n - 1, -1, -1):
        nxt = values[_offset(k + 1):_offset(k + 2)]
        avg = 0.5 * (nxt[1:] + nxt[:-1])
        z = (nxt[1:] - nxt[:-1]) / (2.0 * sqh)
        cur = values[_offset(k):_offset(k + 1)]
        if f.is_zero:
            cur[:] = avg
            continue
        t = (k + 1) * h
        x = x0 + sqh * (2.0 * np.arange(k + 1) - k)
        y = avg
        for it in range(1, max_iter + 1):
            fy = np.asarray(f(t, x, y, z), dtype=float)
            if not np.all(np.isfinite(fy)):
                bad = int(np.flatnonzero(~np.isfinite(fy))[0])
                raise EvaluationError(
                    f"non-finite generator value at node (k={k}, m={bad}), t={t!r}, x={x[bad]!r}")
            y_new = avg + h * fy
            res = float(np.max(np.abs(y_new - y)))
            y = y_new
            # scaled floor: rounding in |y| ~ 1e3 alone exceeds 1e-13
            if res <= tol * max(1.0, float(np.max(np.abs(y)))):
                break
        # one more step doubles as the residual of the implicit equation
        y_new = avg + h * np.asarray(f(t, x, y, z), dtype=float)
        residuals[k] = float(np.max(np.abs(y_new - y)))
        iterations[k] = it + 1
        cur[:] = y_new
    values.setflags(write=False)
    return LatticeSolution(grid, float(x0), values, residuals, iterations)


def u_n(sol: LatticeSolution, t: float, node_index: int) -> float:
    """``U^n(t, .)`` at node ``node_index`` of layer ``n_t`` (piecewise constant in t)."""
    k = sol.grid.index(t)
    if not 0 <= node_index <= k:
        raise InvalidArgument(f"node index {node_index} outside 0..{k} at layer {k}")
    return float(sol.layer(k)[node_index])


def delta_n(sol: LatticeSolution, t: float, node_index: int) -> float:
    """``Delta^n(t, x) = grad^n U^n(floor(t) + h, x)`` at a node of layer ``n_t``."""
    k = sol.grid.index(t)
    if k >= sol.grid.n:
        raise InvalidArgument("Delta^n is undefined at the horizon t = T")
    if not 0 <= node_index <= k:
        raise InvalidArgument(f"node index {node_index} outside 0..{k} at layer {k}")
    nxt = sol.layer(k + 1)
    return float((nxt[node_index + 1] - nxt[node_index]) / (2.0 * sol.grid.sqrt_h))


def _start_node(sol, kt, start_index):
    if start_index is None:
        if kt % 2:
            raise InvalidArgument(
                f"the root x0={sol.x0} is not a node of layer {kt}; pass start_index")
        return kt // 2
    if not 0 <= start_index <= kt:
        raise InvalidArgument(f"start index {start_index} outside 0..{kt}")
    return start_index


def y_law(sol: LatticeSolution, t: float, s: float, start_index: int | None = None) -> Distribution1D:
    """Exact law of ``Y^{n,t,x}_s = U^n(s, B^{n,t,x}_s)``.

    The walk starts at node ``start_index`` of layer ``n_t``; by default the
    node sitting at the root coordinate ``x0``.
    """
    grid = sol.grid
    kt, ks = grid.index(t), grid.index(s)
    if ks < kt:
        raise InvalidArgument(f"need t <= s, got t={t!r}, s={s!r}")
    m0 = _start_node(sol, kt, start_index)
    probs = binomial_weights(ks - kt)
    vals = sol.layer(ks)[m0:m0 + ks - kt + 1]
    return Distribution1D.finite(vals, probs)


def z_law(sol: LatticeSolution, t: float, s: float, start_index: int | None = None) -> Distribution1D:
    """Exact law of ``Z^{n,t,x}_s = Delta^n(s, B^{n,t,x}_s)`` for off-grid ``s``."""
    grid = sol.grid
    if not t < s < grid.T:
        raise InvalidArgument(f"need t < s < T, got t={t!r}, s={s!r}")
    if grid.is_grid_point(s):
        raise GridPointError(
            f"s={s!r} lies on the grid, where Z^n is a left limit; evaluate at an "
            f"off-grid time such as s - h/2")
    kt, ks = grid.index(t), grid.index(s)
    m0 = _start_node(sol, kt, start_index)
    probs = binomial_weights(ks - kt)
    vals = sol.delta_layer(ks)[m0:m0 + ks - kt + 1]
    return Distribution1D.finite(vals, probs)


def delta_n_by_representation(problem: ProblemSpec, sol: LatticeSolution, t: float,
                              x: float) -> float:
    """``Delta^n(t, x)`` from the expectation representation instead of the recursion.

    Computes

        E[g(B_T)(B_T - x)/(T - t_)] + sum_j h E[f((j+1)h, Theta_j)(B_j - x)/((j - k)h)]

    with ``k = n_t``, ``t_ = kh`` and ``j = k+1 .. n-1``, where ``B_j`` is the
    walk started at ``x`` at layer ``k`` and ``Theta_j`` collects the lattice
    values ``(B_j, U^n(jh, B_j), Delta^n(jh, B_j))``.  Every expectation is a
    finite binomial sum.
    """
    grid = sol.grid
    k = grid.index(t)
    n = grid.n
    if k >= n:
        raise InvalidArgument("Delta^n is undefined at the horizon t = T")
    m0 = grid.node_index(k, x, sol.x0)
    h, sqh = grid.h, grid.sqrt_h
    g, f = problem.terminal, problem.generator

    steps = n - k
    pos = x + sqh * (2.0 * np.arange(steps + 1) - steps)
    total = float(np.dot(binomial_weights(steps), g(pos) * (pos - x))) / (steps * h)
    if f.is_zero:
        return total
    for j in range(k + 1, n):
        d = j - k
        pos = x + sqh * (2.0 * np.arange(d + 1) - d)
        uu = sol.layer(j)[m0:m0 + d + 1]
        dd = sol.delta_layer(j)[m0:m0 + d + 1]
        fv = np.asarray(f((j + 1) * h, pos, uu, dd), dtype=float)
        total += h * float(np.dot(binomial_weights(d), fv * (pos - x))) / (d * h)
    return total


def solution_distance(a: LatticeSolution, b: LatticeSolution) -> tuple[float, float]:
    """``(max |U_a - U_b|, h * sum_k E|Delta_a - Delta_b|^2)`` over the lattice.

    The second entry weights layer ``k`` by the walk's binomial law at step ``k``.
    """
    if a.grid != b.grid or a.x0 != b.x0:
        raise InvalidArgument("solutions live on different lattices")
    sup_y = float(np.max(np.abs(a.values - b.values)))
    h = a.grid.h
    z = 0.0
    for k in range(a.grid.n):
        diff = a.delta_layer(k) - b.delta_layer(k)
        z += float(np.dot(binomial_weights(k), diff * diff))
    return sup_y, h * z


def contraction_ok(problem: ProblemSpec, n: int) -> bool:
    return problem.T / n * problem.generator.fy_lip <= MAX_CONTRACTION


def min_stable_n(problem: ProblemSpec) -> int:
    return max(1, math.ceil(2.0 * problem.T * problem.generator.fy_lip - 1e-12))
