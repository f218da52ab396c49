"""Terminal conditions, generators and the built-in problem library.

Every regularity constant is declared by whoever builds the object;
:func:`check_terminal` and :func:`check_generator` only spot-check the
declared moduli on sampled points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .reference import ContinuousSolution

SPOT_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class TerminalCondition:
    """Terminal function ``g`` with Hölder exponent ``eps`` and norm ``holder_norm``.

    ``kinks`` lists points where ``g`` is not smooth; quadrature oracles
    grade their panels toward them.
    """

    func: Callable
    eps: float
    holder_norm: float
    label: str
    kinks: tuple = ()

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Generator:
    """Driver ``f(t, x, y, z)`` together with the moduli of continuity it satisfies.

    ``eps`` is the Hölder exponent in ``x``; ``alpha`` the one in time.
    """

    func: Callable
    alpha: float
    ft_norm: float
    fx_norm: float
    fy_lip: float
    fz_lip: float
    K_f: float
    label: str
    eps: float = 1.0
    is_zero: bool = False
    x_kinks: tuple = ()

    @property
    def lip(self) -> float:
        return max(self.fy_lip, self.fz_lip)

    def __call__(self, t, x, y, z):
        return self.func(t, np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                         np.asarray(z, dtype=float))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    terminal: TerminalCondition
    generator: Generator
    T: float
    start: tuple = (0.0, 0.0)
    exact: ContinuousSolution | None = None
    id: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t0 = self.start[0]
        if not 0.0 <= t0 <= self.T:
            raise InvalidArgument(f"start time {t0} outside [0, {self.T}]")

    @property
    def eps(self) -> float:
        return min(self.terminal.eps, self.generator.eps)

    @property
    def alpha(self) -> float:
        return self.generator.alpha

    def expected_rate(self) -> float:
        """Exponent ``alpha ∧ eps/2`` of the proven convergence rate."""
        if self.generator.is_zero:
            return self.terminal.eps / 2.0
        return min(self.alpha, self.eps / 2.0)


def zero_generator() -> Generator:
    return Generator(lambda t, x, y, z: np.zeros(np.broadcast(x, y, z).shape),
                     alpha=1.0, ft_norm=0.0, fx_norm=0.0, fy_lip=0.0, fz_lip=0.0,
                     K_f=0.0, label="zero", is_zero=True)


def holder_terminal(eps: float, scale: float = 1.0) -> TerminalCondition:
    """``g(x) = scale * |x|**eps`` with ``||g||_eps = |scale|``."""
    if not 0.0 < eps <= 1.0:
        raise InvalidArgument(f"Hölder exponent must lie in (0, 1], got {eps!r}")
    return TerminalCondition(lambda x: scale * np.abs(x) ** eps, eps=float(eps),
                             holder_norm=abs(scale), label=f"{scale:g}*|x|^{eps:g}",
                             kinks=(0.0,))


def affine_terminal(slope: float, intercept: float = 0.0) -> TerminalCondition:
    return TerminalCondition(lambda x: slope * x + intercept, eps=1.0,
                             holder_norm=abs(slope), label=f"{slope:g}*x+{intercept:g}")


def constant_terminal(c: float) -> TerminalCondition:
    return TerminalCondition(lambda x: np.full(np.shape(x), float(c)), eps=1.0,
                             holder_norm=0.0, label=f"{c:g}")


def shifted(g: TerminalCondition, delta: float) -> TerminalCondition:
    return TerminalCondition(lambda x: g.func(x) + delta, g.eps, g.holder_norm,
                             f"{g.label}+{delta:g}", g.kinks)


def shifted_generator(f: Generator, delta: float) -> Generator:
    if delta == 0.0:
        return f
    return Generator(lambda t, x, y, z: f.func(t, x, y, z) + delta, f.alpha, f.ft_norm,
                     f.fx_norm, f.fy_lip, f.fz_lip, f.K_f + abs(delta),
                     f"{f.label}+{delta:g}", f.eps, False, f.x_kinks)


@dataclass(frozen=True)
class SmoothField:
    """A smooth ``u*(t, x)`` together with the derivatives the generator needs."""

    u: Callable
    u_t: Callable
    u_x: Callable
    u_xx: Callable
    label: str = "u*"


def manufactured_problem(u_star: SmoothField, lam: float, mu: float, T: float, *,
                         alpha: float = 1.0, ft_norm: float, fx_norm: float,
                         g_norm: float, K_f: float, x0: float = 0.0,
                         id: str = "manufactured", params: dict | None = None) -> ProblemSpec:
    """Problem whose exact solution is ``u_star``.

    The generator is
    ``-u*_t - u*_xx/2 + lam (y - u*) + mu (z - u*_x)``, so the heat operator
    applied to ``u_star`` is cancelled and ``(u*, u*_x)`` solves the PDE.
    The moduli (``ft_norm``, ``fx_norm``, ``g_norm``, ``K_f``) are the
    caller's declaration.
    """

    def f(t, x, y, z):
        return (-u_star.u_t(t, x) - 0.5 * u_star.u_xx(t, x)
                + lam * (y - u_star.u(t, x)) + mu * (z - u_star.u_x(t, x)))

    gen = Generator(f, alpha=alpha, ft_norm=ft_norm, fx_norm=fx_norm, fy_lip=abs(lam),
                    fz_lip=abs(mu), K_f=K_f, label=f"manufactured[{u_star.label}]")
    term = TerminalCondition(lambda x: u_star.u(T, x), eps=1.0, holder_norm=g_norm,
                             label=f"{u_star.label}(T,.)")
    exact = ContinuousSolution(u_star.u, u_star.u_x, T, method="manufactured")
    return ProblemSpec(term, gen, float(T), (0.0, x0), exact, id, dict(params or {}))


def sine_field(T: float) -> SmoothField:
    """``sin(x) exp(-(T-t)/2)``, a space-time harmonic for the heat operator."""
    return SmoothField(
        u=lambda t, x: np.sin(x) * np.exp(-(T - t) / 2.0),
        u_t=lambda t, x: 0.5 * np.sin(x) * np.exp(-(T - t) / 2.0),
        u_x=lambda t, x: np.cos(x) * np.exp(-(T - t) / 2.0),
        u_xx=lambda t, x: -np.sin(x) * np.exp(-(T - t) / 2.0),
        label="sin(x)exp(-(T-t)/2)",
    )


def rough_field(T: float, alpha: float) -> SmoothField:
    """Sine field plus ``cos(x) (T-t)^(1+alpha)/(1+alpha)``.

    Its time derivative carries ``-(T-t)^alpha cos(x)``, which makes the
    manufactured generator exactly alpha-Hölder in time.
    """
    a1 = 1.0 + alpha
    base = sine_field(T)

    def tau(t):
        return np.maximum(T - np.asarray(t, dtype=float), 0.0)

    return SmoothField(
        u=lambda t, x: base.u(t, x) + np.cos(x) * tau(t) ** a1 / a1,
        u_t=lambda t, x: base.u_t(t, x) - np.cos(x) * tau(t) ** alpha,
        u_x=lambda t, x: base.u_x(t, x) - np.sin(x) * tau(t) ** a1 / a1,
        u_xx=lambda t, x: base.u_xx(t, x) - np.cos(x) * tau(t) ** a1 / a1,
        label=f"sin-rough{alpha:g}",
    )


def holder_problem(eps: float = 0.5, T: float = 1.0, scale: float = 1.0,
                   x0: float = 0.0) -> ProblemSpec:
    """``g = scale |x|^eps``, ``f = 0``; exact solution by the heat semigroup."""
    from .reference import abs_heat_solution, heat_solution

    g = holder_terminal(eps, scale)
    exact = abs_heat_solution(T, scale) if eps == 1.0 else heat_solution(g, T)
    return ProblemSpec(g, zero_generator(), float(T), (0.0, x0), exact, "holder-g",
                       {"eps": eps, "T": T, "scale": scale, "x0": x0})


def linear_generator_problem(lam: float, T: float = 1.0, x0: float = 0.0) -> ProblemSpec:
    """``g = 1``, ``f = lam * y``; exact ``u(t, x) = exp(lam (T - t))``."""
    gen = Generator(lambda t, x, y, z: lam * y, alpha=1.0, ft_norm=0.0, fx_norm=0.0,
                    fy_lip=abs(lam), fz_lip=0.0, K_f=0.0, label=f"{lam:g}*y")
    exact = ContinuousSolution(
        lambda t, x: np.exp(lam * (T - np.asarray(t, dtype=float))) * np.ones_like(x),
        lambda t, x: np.zeros(np.broadcast(t, x).shape),
        T, method="closed-form")
    return ProblemSpec(constant_terminal(1.0), gen, float(T), (0.0, x0), exact, "linear",
                       {"lambda": lam, "T": T, "x0": x0})


def sine_problem(lam: float = 1.0, mu: float = 1.0, T: float = 1.0,
                 x0: float = 0.0) -> ProblemSpec:
    field_ = sine_field(T)
    s = abs(lam) + abs(mu)
    # f(t,x,0,0) = -lam u* - mu u*_x is bounded by |lam| + |mu|
    return manufactured_problem(field_, lam, mu, T, alpha=1.0, ft_norm=0.5 * s, fx_norm=s,
                                g_norm=1.0, K_f=s, x0=x0, id="manufactured",
                                params={"lambda": lam, "mu": mu, "T": T, "x0": x0})


def time_rough_problem(alpha: float = 0.25, lam: float = 1.0, mu: float = 1.0,
                       T: float = 1.0, x0: float = 0.0) -> ProblemSpec:
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"time exponent must lie in (0, 1], got {alpha!r}")
    field_ = rough_field(T, alpha)
    a1 = 1.0 + alpha
    s = abs(lam) + abs(mu)
    # rough part (T-t)^alpha cos(x) has alpha-norm 1; the rest is Lipschitz in
    # time with constant L, i.e. alpha-Hölder with constant L T^(1-alpha)
    smooth_t = 0.5 * s + (0.5 + s) * T ** alpha + 0.5 * (1 + s) * T ** a1 / a1
    ft = 1.0 + smooth_t * T ** (1.0 - alpha)
    top = T ** alpha + (0.5 + s) * T ** a1 / a1
    fx = s + top
    return manufactured_problem(field_, lam, mu, T, alpha=alpha, ft_norm=ft, fx_norm=fx,
                                g_norm=1.0, K_f=s + top, x0=x0, id="time-rough",
                                params={"alpha": alpha, "lambda": lam, "mu": mu, "T": T,
                                        "x0": x0})


def affine_problem(slope: float = 1.0, intercept: float = 0.0, T: float = 1.0,
                   x0: float = 0.0) -> ProblemSpec:
    exact = ContinuousSolution(
        lambda t, x: slope * np.asarray(x, dtype=float) + intercept + 0.0 * np.asarray(t),
        lambda t, x: np.full(np.broadcast(t, x).shape, float(slope)),
        T, method="closed-form")
    return ProblemSpec(affine_terminal(slope, intercept), zero_generator(), float(T),
                       (0.0, x0), exact, "affine",
                       {"slope": slope, "intercept": intercept, "T": T, "x0": x0})


# id -> (builder, accepted parameter names)
PROBLEMS = {
    "holder-g": (holder_problem, ("eps", "T", "scale", "x0")),
    "linear": (lambda lam=1.0, T=1.0, x0=0.0: linear_generator_problem(lam, T, x0),
               ("lambda", "T", "x0")),
    "manufactured": (lambda lam=1.0, mu=1.0, T=1.0, x0=0.0: sine_problem(lam, mu, T, x0),
                     ("lambda", "mu", "T", "x0")),
    "time-rough": (lambda alpha=0.25, lam=1.0, mu=1.0, T=1.0, x0=0.0:
                   time_rough_problem(alpha, lam, mu, T, x0),
                   ("alpha", "lambda", "mu", "T", "x0")),
    "affine": (affine_problem, ("slope", "intercept", "T", "x0")),
}

_KWARG = {"lambda": "lam"}


def build_problem(problem_id: str, **params) -> ProblemSpec:
    """Instantiate a library problem; unknown ids or parameters raise ``InvalidArgument``."""
    if problem_id not in PROBLEMS:
        raise InvalidArgument(
            f"unknown problem id {problem_id!r}; available: {', '.join(sorted(PROBLEMS))}")
    builder, names = PROBLEMS[problem_id]
    kwargs = {}
    for key, value in params.items():
        if value is None:
            continue
        if key not in names:
            raise InvalidArgument(f"problem {problem_id!r} does not take parameter {key!r}")
        kwargs[_KWARG.get(key, key)] = value
    return builder(**kwargs)


def builtin_problems() -> list[ProblemSpec]:
    """The fixed library spanning every (alpha, eps) regime studied."""
    out = [holder_problem(eps) for eps in (0.25, 0.5, 1.0)]
    out.append(linear_generator_problem(1.0))
    out += [sine_problem(lam, mu) for lam, mu in ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0))]
    out += [time_rough_problem(alpha) for alpha in (0.25, 0.5)]
    return out


def check_terminal(g: TerminalCondition, n_pairs: int = 2000, seed: int = 0,
                   radius: float = 5.0) -> bool:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-radius, radius, n_pairs)
    xp = np.concatenate([rng.uniform(-radius, radius, n_pairs // 2),
                         x[n_pairs // 2:] + rng.normal(0, 1e-3, n_pairs - n_pairs // 2)])
    lhs = np.abs(g(x) - g(xp))
    rhs = g.holder_norm * np.abs(x - xp) ** g.eps
    return bool(np.all(lhs <= rhs * (1 + SPOT_RTOL) + 1e-12))


def check_generator(f: Generator, T: float, n_pairs: int = 2000, seed: int = 0,
                    radius: float = 5.0) -> bool:
    """Spot-check the joint modulus inequality on random pairs of quadruples."""
    rng = np.random.default_rng(seed)

    def draw(m):
        return (rng.uniform(0, T, m), rng.uniform(-radius, radius, m),
                rng.uniform(-radius, radius, m), rng.uniform(-radius, radius, m))

    t, x, y, z = draw(n_pairs)
    tp, xp, yp, zp = draw(n_pairs)
    # half the pairs close together, where Hölder moduli bite hardest
    k = n_pairs // 2
    for a, b, scale in ((t, tp, 1e-3 * T), (x, xp, 1e-3), (y, yp, 1e-3), (z, zp, 1e-3)):
        b[k:] = a[k:] + rng.normal(0, scale, n_pairs - k)
    tp = np.clip(tp, 0.0, T)
    lhs = np.abs(np.asarray(f(t, x, y, z)) - np.asarray(f(tp, xp, yp, zp)))
    rhs = (f.ft_norm * np.abs(t - tp) ** f.alpha + f.fx_norm * np.abs(x - xp) ** f.eps
           + f.fy_lip * np.abs(y - yp) + f.fz_lip * np.abs(z - zp))
    ok = np.all(lhs <= rhs * (1 + SPOT_RTOL) + 1e-12)
    tt = np.linspace(0.0, T, 257)
    kf = np.max(np.abs(np.asarray(f(tt, np.zeros_like(tt), np.zeros_like(tt), np.zeros_like(tt)))))
    return bool(ok and kf <= f.K_f * (1 + SPOT_RTOL) + 1e-12)


def holder_constant(eps: float) -> float:
    """``E|G|^eps`` for a standard normal ``G``."""
    return 2.0 ** (eps / 2.0) * math.gamma((eps + 1.0) / 2.0) / math.sqrt(math.pi)
