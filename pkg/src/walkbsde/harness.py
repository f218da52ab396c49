"""Convergence studies, rate fits, property suites and deterministic export.

Nothing here is random: laws on the walk side are exact binomial
pushforwards, laws on the Brownian side are quantile samples, and every
expectation is a quadrature.  Re-running a study reproduces its tables
bit for bit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InsufficientDataError, InvalidArgument, OracleAccuracyError
from .lattice import make_grid, walk_marginal
from .problem import (ProblemSpec, TerminalCondition, build_problem, shifted,
                      shifted_generator)
from .reference import ContinuousSolution, gaussian_moments
from .solver import (contraction_ok, min_stable_n, solution_distance, solve_backward,
                     y_law, z_law)
from .wasserstein import Distribution1D, gaussian_quantiles, pushforward, wasserstein_r

TARGETS = ("pointwise_u", "pointwise_grad", "law_Y", "law_Z", "rio",
           "holder_expectation", "stability")
CSV_COLUMNS = ("n", "target", "t", "s", "r", "error", "oracle_accuracy")

SLOPE_TOL = 0.07
MIN_R2 = 0.9
ORACLE_RATIO = 0.1
# errors at or below this count as exact zeros and are left out of fits
ZERO_ERROR = 1e-13


class ErrorRow(NamedTuple):
    n: int
    target: str
    t: float
    s: float
    r: float
    error: float
    oracle_accuracy: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through ``(log n, log error)``."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple
    excluded: tuple = ()

    def passes(self, rate: float, tol: float = SLOPE_TOL, min_r2: float = MIN_R2) -> bool:
        return self.slope <= -rate + tol and self.r_squared >= min_r2


def fit_rate(points) -> RateFit:
    """Fit ``log error = intercept + slope log n``; zero errors are set aside."""
    pts = [(int(n), float(e)) for n, e in points]
    usable = tuple((n, e) for n, e in pts if e > ZERO_ERROR)
    excluded = tuple((n, e) for n, e in pts if e <= ZERO_ERROR)
    if len(usable) < 3:
        raise InsufficientDataError(
            f"need at least 3 positive errors to fit a rate, got {len(usable)}")
    x = np.log([n for n, _ in usable])
    y = np.log([e for _, e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateFit(float(slope), float(intercept), r2, usable, excluded)


@dataclass
class StudySpec:
    """What to measure: problem, discretisations, evaluation times and targets."""

    problem: str
    params: dict = field(default_factory=dict)
    n_list: tuple = (16, 64, 256, 1024)
    eval_times: tuple = (0.5,)
    r_list: tuple = (1.0,)
    targets: tuple = ("pointwise_u", "law_Y", "law_Z")
    t0: float = 0.0
    M: int = 10 ** 6
    oracle: str = "auto"
    check_oracle: bool = True
    output: str | None = None

    def __post_init__(self):
        self.n_list = tuple(int(n) for n in self.n_list)
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise InvalidArgument(f"n_list must be strictly increasing, got {self.n_list}")
        if any(r < 1 for r in self.r_list):
            raise InvalidArgument("Wasserstein orders must be >= 1")
        bad = [t for t in self.targets if t not in TARGETS]
        if bad:
            raise InvalidArgument(f"unknown targets {bad}; available: {', '.join(TARGETS)}")

    def build(self) -> ProblemSpec:
        problem = build_problem(self.problem, **self.params)
        T = problem.T
        for s in self.eval_times:
            if not self.t0 <= s <= T:
                raise InvalidArgument(f"evaluation time {s} outside [{self.t0}, {T}]")
            # near-horizon Z behaviour belongs to z_prefactor_sweep
            if "law_Z" in self.targets and s > T - T / 8:
                raise InvalidArgument(
                    f"law_Z studies need s <= 7T/8, got s={s}; use z_prefactor_sweep near T")
        for n in self.n_list:
            if not contraction_ok(problem, n):
                raise InvalidArgument(
                    f"n={n} violates h*||f_y||_Lip <= 1/2; minimal admissible n is "
                    f"{min_stable_n(problem)}")
        return problem


@dataclass
class FitResult:
    target: str
    t: float
    s: float
    r: float
    expected_rate: float
    fit: RateFit | None
    passed: bool
    note: str = ""
    series: tuple = ()


@dataclass
class StudyResult:
    rows: list
    fits: list
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.fits) and all(c["passed"] for c in self.checks)

    def failures(self) -> list:
        out = [f"{f.target}(t={f.t:g}, s={f.s:g}, r={f.r:g}): {f.note}"
               for f in self.fits if not f.passed]
        out += [f"{c['name']}: {c.get('note', '')}" for c in self.checks if not c["passed"]]
        return out


# ---------------------------------------------------------------------------
# oracle evaluation on large quantile samples


TABLE_POINTS = 4001


def _evaluate_on(oracle: ContinuousSolution, which: str, s: float, x: np.ndarray):
    """``u(s, x)`` or ``grad u(s, x)`` on many points plus an error estimate.

    Expensive oracles are tabulated on a uniform grid spanning ``x`` and
    interpolated with a cubic spline; the estimate compares the spline with
    direct evaluations at cell midpoints.
    """
    fn = oracle.u if which == "u" else oracle.grad_u
    if oracle.cheap or x.size <= TABLE_POINTS:
        return np.asarray(fn(s, x), dtype=float), 0.0
    lo, hi = float(x.min()), float(x.max())
    if hi - lo < 1e-12:
        return np.full(x.shape, float(fn(s, np.array([lo]))[0])), 0.0
    grid = np.linspace(lo, hi, TABLE_POINTS)
    spline = CubicSpline(grid, np.asarray(fn(s, grid), dtype=float))
    probe = 0.5 * (grid[:-1] + grid[1:])[::10]
    interp_err = float(np.max(np.abs(spline(probe) - np.asarray(fn(s, probe)))))
    return spline(x), interp_err


def _brownian_law(oracle, which, t0, x0, s, M):
    """Quantile sample of ``u(s, B^{t0,x0}_s)`` (or of ``grad u``) and its error estimate."""
    if s <= t0:
        val = oracle.u(s, np.array([x0])) if which == "u" else oracle.grad_u(s, np.array([x0]))
        return Distribution1D.point_mass(float(np.asarray(val).ravel()[0])), oracle.accuracy
    base = gaussian_quantiles(x0, s - t0, M)
    vals, err = _evaluate_on(oracle, which, s, base.points)
    return pushforward(base, lambda _: vals), oracle.accuracy + err


def resolve_oracle(problem: ProblemSpec, policy: str = "auto") -> ContinuousSolution:
    from .reference import picard_solution, self_refined

    if policy in ("auto", "exact") and problem.exact is not None:
        return problem.exact
    if policy == "exact":
        raise InvalidArgument(f"problem {problem.id!r} has no exact solution")
    if policy in ("auto", "picard"):
        return picard_solution(problem)
    if policy == "self-refined":
        return self_refined(problem, 4096)
    raise InvalidArgument(f"unknown oracle policy {policy!r}")


# ---------------------------------------------------------------------------
# studies


def run_convergence(spec: StudySpec) -> StudyResult:
    """Error table per ``n`` for the requested targets, plus one rate fit per series.

    ``law_Z`` is measured at the cell midpoint ``(n_s + 1/2) h`` of each
    requested time ``s``; the CSV records the midpoint actually used.
    """
    problem = spec.build()
    oracle = resolve_oracle(problem, spec.oracle)
    T = problem.T
    t0, x0 = spec.t0, problem.start[1]
    rate = problem.expected_rate()
    rows = []
    law_cache = {}

    def law(which, s, M):
        key = (which, s, M)
        if key not in law_cache:
            law_cache[key] = _brownian_law(oracle, which, t0, x0, s, M)
        return law_cache[key]

    for n in spec.n_list:
        grid = make_grid(T, n)
        sol = solve_backward(problem, grid, x0)
        k0 = grid.index(t0)
        if k0 % 2:
            raise InvalidArgument(f"x0 is not a lattice node at t0={t0} for n={n}")
        m0 = k0 // 2
        if "pointwise_u" in spec.targets:
            err = abs(float(oracle.u(t0, x0)) - float(sol.layer(k0)[m0]))
            rows.append(ErrorRow(n, "pointwise_u", t0, t0, math.nan, err, oracle.accuracy))
        if "pointwise_grad" in spec.targets:
            err = abs(float(oracle.grad_u(t0, x0)) - float(sol.delta_layer(k0)[m0]))
            rows.append(ErrorRow(n, "pointwise_grad", t0, t0, math.nan, err, oracle.accuracy))
        for s in spec.eval_times:
            if "law_Y" in spec.targets:
                ylaw = y_law(sol, t0, s)
                s_used = grid.floor_time(s)
                for r in spec.r_list:
                    ref, acc = law("u", s_used, spec.M)
                    w = wasserstein_r(ylaw, ref, r)
                    if spec.check_oracle and s_used > t0:
                        ref2, _ = law("u", s_used, 2 * spec.M)
                        acc += abs(w - wasserstein_r(ylaw, ref2, r))
                    rows.append(ErrorRow(n, "law_Y", t0, s_used, r, w, acc))
            if "law_Z" in spec.targets:
                s_mid = (grid.index(s) + 0.5) * grid.h
                if s_mid >= T:
                    raise InvalidArgument(f"law_Z needs s < T, got s={s}")
                zlaw = z_law(sol, t0, s_mid)
                for r in spec.r_list:
                    ref, acc = _brownian_law(oracle, "grad", t0, x0, s_mid, spec.M)
                    w = wasserstein_r(zlaw, ref, r)
                    if spec.check_oracle:
                        ref2, _ = _brownian_law(oracle, "grad", t0, x0, s_mid, 2 * spec.M)
                        acc += abs(w - wasserstein_r(zlaw, ref2, r))
                    rows.append(ErrorRow(n, "law_Z", t0, s_mid, r, w, acc))

    fits = _fit_groups(rows, spec, rate)
    if spec.check_oracle:
        _check_oracle(rows)
    return StudyResult(rows, fits, meta={"problem": problem.id, "params": problem.params,
                                         "oracle": oracle.method,
                                         "oracle_accuracy": oracle.accuracy,
                                         "expected_rate": rate})


def _fit_groups(rows, spec, rate):
    groups = {}
    for row in rows:
        if row.target in ("pointwise_u", "pointwise_grad"):
            key = (row.target, row.t, row.t, math.nan)
        else:
            # law_Z midpoints move with n: key on the requested time instead
            nominal = _nominal_time(row, spec)
            key = (row.target, row.t, nominal, row.r)
        groups.setdefault(key, []).append(row)
    fits = []
    for (target, t, s, r), group in groups.items():
        pts = [(row.n, row.error) for row in group]
        fits.append(_judge(target, t, s, r, pts, rate))
    return fits


def _nominal_time(row, spec):
    if row.target != "law_Y" and row.target != "law_Z":
        return row.s
    best = min(spec.eval_times, key=lambda s: abs(s - row.s))
    return float(best)


def _judge(target, t, s, r, pts, rate, tol=SLOPE_TOL, min_r2=MIN_R2):
    series = tuple((int(n), float(e)) for n, e in pts)
    if all(e <= ZERO_ERROR for _, e in pts):
        fit = RateFit(0.0, 0.0, 1.0, (), series)
        return FitResult(target, t, s, r, rate, fit, True, "exact: all errors zero", series)
    try:
        fit = fit_rate(pts)
    except InsufficientDataError as exc:
        return FitResult(target, t, s, r, rate, None, False, str(exc), series)
    ok = fit.passes(rate, tol, min_r2)
    note = (f"slope {fit.slope:.4f} vs bound {-rate + tol:.4f}, "
            f"r^2 {fit.r_squared:.4f} (min {min_r2})")
    return FitResult(target, t, s, r, rate, fit, ok, note, series)


def _check_oracle(rows):
    for row in rows:
        if row.error > ZERO_ERROR and row.oracle_accuracy > ORACLE_RATIO * row.error:
            ratio = row.oracle_accuracy / row.error
            raise OracleAccuracyError(
                f"oracle too coarse for {row.target} at n={row.n}, s={row.s:g}: "
                f"accuracy/error = {ratio:.3g} > {ORACLE_RATIO}", ratio=ratio)


def rio_study(n_list, r: float = 2.0, M: int = 10 ** 6, T: float = 1.0,
              tol: float = SLOPE_TOL, min_r2: float = 0.98):
    """``W_r(B^n_T, N(0, T))`` per ``n`` against an ``M``-point Gaussian quantile sample."""
    gauss = gaussian_quantiles(0.0, T, M)
    rows = []
    for n in n_list:
        grid = make_grid(T, n)
        wm = walk_marginal(grid, 0.0, T)
        walk = Distribution1D.finite(wm.support, wm.probs)
        rows.append(ErrorRow(int(n), "rio", 0.0, T, float(r), wasserstein_r(walk, gauss, r), 0.0))
    fit_pts = [(row.n, row.error) for row in rows]
    result = _judge("rio", 0.0, T, r, fit_pts, 0.5, tol, min_r2)
    return StudyResult(rows, [result], meta={"study": "rio", "M": M, "T": T})


def gaussian_walk_moments(g: TerminalCondition, n: int, T: float, x0: float = 0.0):
    """``(E g(x0 + B^n_T), E[g(x0 + B^n_T) B^n_T])`` summed exactly over the binomial law."""
    wm = walk_marginal(make_grid(T, n), 0.0, T)
    vals = g(x0 + wm.support)
    return float(np.dot(wm.probs, vals)), float(np.dot(wm.probs, vals * wm.support))


def holder_expectation_study(g: TerminalCondition, n_list, T: float = 1.0, x0: float = 0.0,
                             tol: float = SLOPE_TOL):
    """``|E g(B^n_T) - E g(B_T)|`` and the ``B_T``-weighted difference, per ``n``."""
    sd = math.sqrt(T)
    m0, m1 = gaussian_moments(g.func, np.array([x0]), np.array([sd]), g.kinks, 200)
    bm0, bm1 = float(m0[0]), float(m1[0]) * sd
    # halving the node count estimates the quadrature error
    c0, c1 = gaussian_moments(g.func, np.array([x0]), np.array([sd]), g.kinks, 100)
    acc0, acc1 = abs(float(c0[0]) - bm0), abs(float(c1[0]) * sd - bm1)
    rows = []
    for n in n_list:
        e0, e1 = gaussian_walk_moments(g, n, T, x0)
        rows.append(ErrorRow(int(n), "holder_expectation", 0.0, T, math.nan, abs(e0 - bm0), acc0))
        rows.append(ErrorRow(int(n), "holder_weighted", 0.0, T, math.nan, abs(e1 - bm1), acc1))
    rate = g.eps / 2.0
    fits = []
    for target in ("holder_expectation", "holder_weighted"):
        pts = [(row.n, row.error) for row in rows if row.target == target]
        fits.append(_judge(target, 0.0, T, math.nan, pts, rate, tol))
    return StudyResult(rows, fits, meta={"study": "holder", "eps": g.eps, "T": T, "x0": x0})


def stability_study(problem: ProblemSpec, perturbations, n: int, shape=None,
                    ratio_band=(9.0, 11.0)):
    """Distance between base and perturbed lattices for each ``(dg, df)``.

    The perturbed data are ``g + dg * shape`` (``shape = 1`` by default) and
    ``f + df``.  Consecutive perturbations a factor 10 apart must have
    distance ratios inside ``ratio_band``.
    """
    grid = make_grid(problem.T, n)
    x0 = problem.start[1]
    base = solve_backward(problem, grid, x0)
    rows, checks, dists = [], [], []
    for dg, df in perturbations:
        if shape is None:
            g2 = shifted(problem.terminal, dg)
        else:
            g0 = problem.terminal
            g2 = TerminalCondition(lambda x, g0=g0, dg=dg: g0.func(x) + dg * shape(x),
                                   g0.eps, g0.holder_norm, f"{g0.label}+pert", g0.kinks)
        p2 = ProblemSpec(g2, shifted_generator(problem.generator, df), problem.T,
                         problem.start, None, problem.id, problem.params)
        sup_y, z_norm = solution_distance(base, solve_backward(p2, grid, x0))
        tag = f"[dg={dg:.17g};df={df:.17g}]"
        rows.append(ErrorRow(n, "stability_sup_y" + tag, 0.0, problem.T, math.nan, sup_y, 0.0))
        rows.append(ErrorRow(n, "stability_z_norm" + tag, 0.0, problem.T, math.nan, z_norm, 0.0))
        dists.append(((dg, df), sup_y, z_norm))
    for (p_a, y_a, _), (p_b, y_b, _) in zip(dists, dists[1:]):
        size_a = max(abs(p_a[0]), abs(p_a[1]))
        size_b = max(abs(p_b[0]), abs(p_b[1]))
        if size_a == 0 or y_a == 0:
            continue
        scale = size_b / size_a
        ratio = y_b / y_a
        lo, hi = ratio_band
        ok = abs(scale - 10.0) > 1e-9 or lo <= ratio <= hi
        checks.append({"name": f"stability_ratio[{p_a}->{p_b}]", "ratio": ratio,
                       "scale": scale, "passed": bool(ok),
                       "note": f"sup_y ratio {ratio:.6g} for size ratio {scale:.6g}"})
    return StudyResult(rows, [], checks, meta={"study": "stability", "n": n,
                                                "problem": problem.id})


def z_prefactor_sweep(problem: ProblemSpec, n: int = 1024, j_max: int = 6, r: float = 1.0,
                      M: int = 10 ** 6, oracle: ContinuousSolution | None = None,
                      max_spread: float = 3.0):
    """``sqrt(T - s) W_r(Z^n_s, Z_s)`` at the midpoints of ``s_j = T(1 - 2^-j)``."""
    oracle = oracle or resolve_oracle(problem)
    T = problem.T
    grid = make_grid(T, n)
    x0 = problem.start[1]
    sol = solve_backward(problem, grid, x0)
    rows = []
    scaled = []
    for j in range(1, j_max + 1):
        s = (grid.index(T * (1.0 - 2.0 ** -j)) + 0.5) * grid.h
        ref, acc = _brownian_law(oracle, "grad", 0.0, x0, s, M)
        w = wasserstein_r(z_law(sol, 0.0, s), ref, r)
        rows.append(ErrorRow(n, "law_Z", 0.0, s, r, w, acc))
        rows.append(ErrorRow(n, "law_Z_scaled", 0.0, s, r, math.sqrt(T - s) * w,
                             math.sqrt(T - s) * acc))
        scaled.append(math.sqrt(T - s) * w)
    spread = max(scaled) / min(scaled)
    check = {"name": "z_prefactor_spread", "spread": spread, "passed": spread <= max_spread,
             "note": f"max/min of sqrt(T-s)*W = {spread:.4g} (limit {max_spread})"}
    return StudyResult(rows, [], [check], meta={"study": "z_prefactor", "n": n,
                                                "problem": problem.id})


# ---------------------------------------------------------------------------
# regularity suite


def _holder_pairs(values, x, eps):
    """Max of ``|v_i - v_j| / |x_i - x_j|^eps`` over all pairs."""
    dv = np.abs(values[:, None] - values[None, :])
    dx = np.abs(x[:, None] - x[None, :])
    mask = dx > 0
    return float(np.max(dv[mask] / dx[mask] ** eps))


def _sample_x(points):
    half = np.geomspace(1e-4, 4.0, points)
    return np.concatenate([-half[::-1], [0.0], half])


def regularity_quantities(problem: ProblemSpec, oracle: ContinuousSolution, j_max: int,
                          x_points: int, n: int) -> dict:
    """Scaled regularity quantities on one sampling level.

    Times are ``T(1 - 2^-j)``, ``j = 0..j_max``; space points are symmetric
    and geometrically dense near the origin.
    """
    T = problem.T
    eps = problem.eps if not problem.generator.is_zero else problem.terminal.eps
    ts = T * (1.0 - 2.0 ** -np.arange(0, j_max + 1))
    xs = _sample_x(x_points)
    # u is defined up to the horizon, where u(T, .) = g
    U = np.array([np.asarray(oracle.u(t, xs)) for t in np.append(ts, T)])
    G = np.array([np.asarray(oracle.grad_u(t, xs)) for t in ts])
    tau = T - ts
    out = {}
    weight = (1.0 + np.abs(xs)) ** eps
    out["u_growth"] = float(np.max(np.abs(U) / weight))
    out["u_holder_space"] = max(_holder_pairs(row, xs, eps) for row in U)
    out["grad_blowup"] = float(np.max(tau[:, None] ** ((1.0 - eps) / 2.0) * np.abs(G)))
    out["grad_holder_space"] = max(math.sqrt(tau[i]) * _holder_pairs(G[i], xs, eps)
                                   for i in range(ts.size))
    # pairs r < t: |grad u(t) - grad u(r)| sqrt(T - t) / (t - r)^(eps/2)
    best = 0.0
    for i in range(ts.size):
        for k in range(i):
            val = np.abs(G[i] - G[k]) * math.sqrt(tau[i]) / (ts[i] - ts[k]) ** (eps / 2.0)
            best = max(best, float(np.max(val)))
    out["grad_time"] = best
    grid = make_grid(T, n)
    sol = solve_backward(problem, grid, problem.start[1])
    growth, blow = 0.0, 0.0
    for k in range(n + 1):
        xk = sol.nodes(k)
        growth = max(growth, float(np.max(np.abs(sol.layer(k)) / (1.0 + np.abs(xk)) ** eps)))
        if k < n:
            blow = max(blow, float(np.max(np.abs(sol.delta_layer(k))))
                       * (T - k * grid.h) ** ((1.0 - eps) / 2.0))
    out["Un_growth"] = growth
    out["Delta_n_blowup"] = blow
    return out


def regularity_suite(problem: ProblemSpec, oracle: ContinuousSolution | None = None,
                     levels=((6, 60, 256), (12, 240, 1024)), max_variation: float = 0.2):
    """Compare every scaled quantity between a coarse and a refined sampling level.

    Each level is ``(j_max, x_points, n)``.  A quantity passes when finite
    on both levels and its relative variation is at most ``max_variation``.
    """
    oracle = oracle or resolve_oracle(problem)
    coarse = regularity_quantities(problem, oracle, *levels[0])
    fine = regularity_quantities(problem, oracle, *levels[1])
    checks, rows = [], []
    for name in coarse:
        a, b = coarse[name], fine[name]
        finite = math.isfinite(a) and math.isfinite(b)
        variation = abs(b - a) / max(abs(a), abs(b), 1e-300) if finite else math.inf
        if max(abs(a), abs(b)) <= 1e-12:
            variation = 0.0
        checks.append({"name": name, "coarse": a, "fine": b, "variation": variation,
                       "passed": bool(finite and variation <= max_variation),
                       "note": f"coarse {a:.6g}, fine {b:.6g}, variation {variation:.3g}"})
        rows.append(ErrorRow(levels[0][2], name, 0.0, problem.T, math.nan, a, 0.0))
        rows.append(ErrorRow(levels[1][2], name, 0.0, problem.T, math.nan, b, 0.0))
    return StudyResult(rows, [], checks, meta={"study": "regularity", "problem": problem.id,
                                                "oracle": oracle.method})


# ---------------------------------------------------------------------------
# export


def fmt(x) -> str:
    """17 significant digits; empty for not-applicable entries."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row.n), row.target, fmt(row.t), fmt(row.s), fmt(row.r),
                         fmt(row.error), fmt(row.oracle_accuracy)])
    return buf.getvalue()


def _json_value(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_value(str(k), indent, level + 1)}: "
                 f"{_json_value(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _json_value(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""
    return _json_value(obj, indent, 0) + "\n"


def summary(result: StudyResult, config: dict | None = None) -> dict:
    fits = []
    for f in result.fits:
        entry = {"target": f.target, "t": f.t, "s": f.s, "r": f.r,
                 "expected_rate": f.expected_rate,
                 "slope_bound": -f.expected_rate + SLOPE_TOL, "passed": f.passed,
                 "note": f.note}
        if f.fit is not None:
            entry.update({"slope": f.fit.slope, "intercept": f.fit.intercept,
                          "r_squared": f.fit.r_squared,
                          "points": [list(p) for p in f.fit.points],
                          "excluded_zero": [list(p) for p in f.fit.excluded]})
        fits.append(entry)
    return {"config": config or {}, "meta": result.meta, "fits": fits,
            "checks": result.checks, "passed": result.passed,
            "failures": result.failures(),
            "policy": "slope tolerance and r^2 thresholds are artifact policy"}


def study_spec_dict(spec: StudySpec) -> dict:
    return asdict(spec)
