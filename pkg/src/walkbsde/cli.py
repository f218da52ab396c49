"""Command-line entry point.

Every run writes ``results.csv`` and ``summary.json`` (plus SVG plots with
``--plot``) into ``<out>/<command>-<hash>``, where the hash is taken over
the canonical configuration.  The exit status is 0 exactly when every
check of the study passed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import WalkBSDEError
from .harness import (StudyResult, StudySpec, dumps_json, holder_expectation_study,
                      regularity_suite, rio_study, rows_to_csv, run_convergence,
                      stability_study, summary)
from .lattice import make_grid
from .problem import PROBLEMS, build_problem, holder_terminal
from .solver import solve_backward

COMMANDS = ("solve", "rates", "rio", "holder", "stability", "regularity", "list")
OUT_ENV = "WALKBSDE_OUT"
DEFAULT_OUT = "runs"

DEFAULT_N = {
    "solve": (256,),
    "rates": (16, 64, 256, 1024),
    "rio": (4, 16, 64, 256, 1024),
    "holder": (4, 16, 64, 256, 1024, 4096),
    "stability": (256,),
    "regularity": (256, 1024),
    "list": (),
}

# flag name -> problem parameter name
PARAM_FLAGS = {"eps": "eps", "lambda": "lambda", "mu": "mu", "alpha": "alpha", "T": "T",
               "x0": "x0", "scale": "scale", "slope": "slope", "intercept": "intercept"}


@dataclass
class RunConfig:
    """Everything that determines a run's output."""

    command: str
    problem: str = "holder-g"
    params: dict = field(default_factory=dict)
    n: list = field(default_factory=list)
    time: list = field(default_factory=lambda: [0.5])
    r: list = field(default_factory=lambda: [1.0])
    targets: list = field(default_factory=lambda: ["pointwise_u", "law_Y", "law_Z"])
    M: int = 10 ** 6
    oracle: str = "auto"
    perturbations: list = field(default_factory=lambda: [[1e-3, 0.0], [1e-2, 0.0], [1e-1, 0.0]])
    out: str = ""
    plot: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise WalkBSDEError(f"unknown command {self.command!r}; use one of {COMMANDS}")
        if not self.n:
            self.n = list(DEFAULT_N[self.command])
        self.n = [int(v) for v in self.n]
        self.time = [float(v) for v in self.time]
        self.r = [float(v) for v in self.r]
        self.targets = [str(v) for v in self.targets]
        self.perturbations = [[float(a), float(b)] for a, b in self.perturbations]
        self.params = {str(k): float(v) for k, v in sorted(self.params.items())}
        self.M = int(self.M)
        if not self.out:
            self.out = os.environ.get(OUT_ENV, DEFAULT_OUT)

    def canonical(self) -> dict:
        """Study-defining fields only; the output location and plotting are excluded."""
        d = asdict(self)
        d.pop("out")
        d.pop("plot")
        return d

    def digest(self) -> str:
        return hashlib.sha256(dumps_json(self.canonical()).encode()).hexdigest()[:16]

    def run_dir(self) -> Path:
        return Path(self.out) / f"{self.command}-{self.digest()}"


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _pairs(text):
    try:
        return [[float(a) for a in item.split(":")] for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected dg:df pairs, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="walkbsde",
        description="Random-walk BSDE scheme: solves, convergence studies and property suites.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    p.add_argument("--problem", help="problem id (see `walkbsde list`)")
    for flag in PARAM_FLAGS:
        p.add_argument(f"--{flag}", type=float, default=None, dest=f"param_{flag}")
    p.add_argument("--n", type=_int_list, help="comma-separated step counts")
    p.add_argument("--time", type=_float_list, help="evaluation times s for law targets")
    p.add_argument("--r", type=_float_list, help="Wasserstein orders")
    p.add_argument("--targets", type=_str_list)
    p.add_argument("--M", type=int, help="Gaussian quantile sample size")
    p.add_argument("--oracle", choices=("auto", "exact", "picard", "self-refined"))
    p.add_argument("--perturbations", type=_pairs, help="stability sizes as dg:df,dg:df,...")
    p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--plot", action="store_true", help="also write SVG plots")
    return p


def parse_config(argv=None) -> RunConfig:
    """Merge the optional config file with the flags; flags win."""
    args = build_parser().parse_args(argv)
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise WalkBSDEError(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise WalkBSDEError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise WalkBSDEError("config file must hold a JSON object")
        unknown = sorted(set(data) - CONFIG_KEYS)
        if unknown:
            raise WalkBSDEError(f"unknown config key {unknown[0]!r}; allowed: "
                                f"{', '.join(sorted(CONFIG_KEYS))}")
        data = dict(data)
        data["params"] = dict(data.get("params", {}))
    data["command"] = args.command
    params = data.setdefault("params", {})
    for flag, name in PARAM_FLAGS.items():
        value = getattr(args, f"param_{flag}")
        if value is not None:
            params[name] = value
    for key in ("problem", "n", "time", "r", "targets", "M", "oracle", "perturbations", "out"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.plot:
        data["plot"] = True
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as exc:
        raise WalkBSDEError(f"malformed configuration: {exc}")


def _problem(cfg: RunConfig):
    return build_problem(cfg.problem, **cfg.params)


def execute(cfg: RunConfig) -> StudyResult:
    """Run the configured command and return its result (``list`` excluded)."""
    cmd = cfg.command
    if cmd == "rates":
        spec = StudySpec(cfg.problem, dict(cfg.params), tuple(cfg.n), tuple(cfg.time),
                         tuple(cfg.r), tuple(cfg.targets), M=cfg.M, oracle=cfg.oracle)
        return run_convergence(spec)
    if cmd == "rio":
        return rio_study(cfg.n, r=cfg.r[0], M=cfg.M, T=cfg.params.get("T", 1.0))
    if cmd == "holder":
        g = holder_terminal(cfg.params.get("eps", 0.5), cfg.params.get("scale", 1.0))
        return holder_expectation_study(g, cfg.n, T=cfg.params.get("T", 1.0),
                                        x0=cfg.params.get("x0", 0.0))
    if cmd == "stability":
        return stability_study(_problem(cfg), [tuple(p) for p in cfg.perturbations], cfg.n[0])
    if cmd == "regularity":
        return regularity_suite(_problem(cfg))
    if cmd == "solve":
        return _solve(cfg)
    raise WalkBSDEError(f"command {cmd!r} produces no study")


def _solve(cfg: RunConfig) -> StudyResult:
    from .harness import ErrorRow

    problem = _problem(cfg)
    rows, checks = [], []
    x0 = problem.start[1]
    for n in cfg.n:
        sol = solve_backward(problem, make_grid(problem.T, n), x0)
        u0 = sol.root
        d0 = float(sol.delta_layer(0)[0])
        if problem.exact is not None:
            rows.append(ErrorRow(n, "pointwise_u", 0.0, 0.0, float("nan"),
                                 abs(u0 - float(problem.exact.u(0.0, x0))),
                                 problem.exact.accuracy))
        checks.append({"name": f"solve[n={n}]", "passed": True, "U": u0, "Delta": d0,
                       "max_fixed_point_residual": float(sol.fixed_point_residuals.max(initial=0)),
                       "note": ""})
    return StudyResult(rows, [], checks, meta={"study": "solve", "problem": problem.id})


def _list_problems(stream):
    for pid, (_, names) in PROBLEMS.items():
        print(f"{pid:14s} parameters: {', '.join(names)}", file=stream)


def _plots(cfg: RunConfig, result: StudyResult, run_dir: Path) -> list:
    from .plotting import emit_plot

    written = []
    for i, fit in enumerate(result.fits):
        name = f"{i:02d}-{fit.target}.svg"
        emit_plot(fit.series, run_dir / name, reference_slope=-fit.expected_rate,
                  title=f"{fit.target} (s={fit.s:g})")
        written.append(name)
    return written


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        cfg = parse_config(argv)
        if cfg.command == "list":
            _list_problems(stdout)
            return 0
        result = execute(cfg)
    except WalkBSDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run_dir = cfg.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "results.csv").write_text(rows_to_csv(result.rows))
    (run_dir / "summary.json").write_text(dumps_json(summary(result, cfg.canonical())))
    if cfg.plot:
        _plots(cfg, result, run_dir)
    for fit in result.fits:
        status = "PASS" if fit.passed else "FAIL"
        print(f"{status} {fit.target} s={fit.s:g} r={fit.r:g}: {fit.note}", file=stdout)
    for check in result.checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']} {check.get('note', '')}".rstrip(), file=stdout)
    print(f"output: {run_dir}", file=stdout)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
