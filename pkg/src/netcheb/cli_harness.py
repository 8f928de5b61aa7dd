"""Configuration-driven experiment runner with CSV reports.

Config files are flat ``key = value`` text, one setting per line, ``#``
starts a comment. Example::

    experiment = validation
    method = both
    n = 60, 120, 600
    dt = 1e-4
    cap_dt = true        # use min(dt, CFL bound) per N instead of rejecting
    filter_p = 10
    t_final = 0.1666666666666667
    output_times = 0.1666666666666667

Outputs written to ``output_dir``:

* ``profiles_<method>_N<n>.csv`` -- columns ``edge, x, u, t``
* ``rates.csv`` -- ``method, N, error, rate`` (incoming edges, as in the
  convergence study) plus ``error_network, rate_network`` over all edges
* ``timing.csv`` -- ``method, N, steps, seconds``
* ``junction_<method>_N<n>.csv`` -- ``t, u_b, mismatch`` per accepted step
* ``spacetime_gap.csv`` for the space-time experiment
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from netcheb.cheb_core import FilterSpec, cgl_points, forward_transform
from netcheb.errors import ConfigError, NonPositiveError, SolverFailure, ZeroReference
from netcheb.flux_models import get_flux
from netcheb.fvs_baseline import ReferenceSolution, cell_centers, run_fvs
from netcheb.netsolver import (
    NetworkConfig,
    SsvSpec,
    cfl_timestep,
    run_network_simulation,
    run_single_edge,
)
from netcheb.spacetime2d import SpaceTimeProblem, solve_spacetime

log = logging.getLogger(__name__)

EXPERIMENTS = ("validation", "riemann_junction", "single_edge_2d")
METHODS = ("chebyshev", "fvs", "both", "cheb2d")
PROFILE_COLUMNS = ("edge", "x", "u", "t")


# --- initial data --------------------------------------------------------------


def indicator(a: float, b: float, height: float = 1.0) -> Callable:
    """``height`` on ``(a, b]``: the left-limit convention at the jumps."""

    def u0(x):
        x = np.asarray(x, dtype=float)
        return height * ((x > a) & (x <= b)).astype(float)

    return u0


def constant(value: float) -> Callable:
    return lambda x: np.full(np.shape(x), float(value))


def validation_initial() -> tuple:
    return indicator(-0.5, 0.0), indicator(-0.25, 0.0, 0.75), constant(0.0)


def riemann_initial() -> tuple:
    return constant(0.25), constant(2.0 / 3.0), constant(0.8)


def single_edge_initial() -> Callable:
    """Unit block on ``(-3/4, -1/4]`` followed by ``-(2/3)(x - 5/2)`` on ``(-1/4, 1/2]``."""
    block = indicator(-0.75, -0.25)
    ramp = indicator(-0.25, 0.5)
    return lambda x: block(x) - (2.0 / 3.0) * (np.asarray(x, dtype=float) - 2.5) * ramp(x)


# --- metrics -------------------------------------------------------------------


def relative_l1_error(numeric: Sequence, reference, points: Sequence | None = None) -> float:
    """``sum |u - u*| / sum |u*|`` over the nodes of all given edges.

    ``reference`` is either per-edge arrays aligned with ``numeric`` or a
    sampler ``reference(edge, x)``, in which case ``points`` gives the
    nodes of each edge.
    """
    if callable(reference):
        if points is None:
            raise ValueError("a reference sampler needs the sample points of each edge")
        ref = [np.asarray(reference(h, x), dtype=float) for h, x in enumerate(points)]
    else:
        ref = [np.asarray(r, dtype=float) for r in reference]
    num = [np.asarray(u, dtype=float) for u in numeric]
    if len(num) != len(ref) or any(a.shape != b.shape for a, b in zip(num, ref)):
        raise ValueError("numeric and reference values do not line up edge by edge")
    denom = sum(float(np.sum(np.abs(r))) for r in ref)
    if denom == 0.0:
        raise ZeroReference("reference values sum to zero in absolute value")
    return sum(float(np.sum(np.abs(u - r))) for u, r in zip(num, ref)) / denom


def convergence_rate(errors: Sequence[tuple[float, float]]) -> list[float]:
    """Observed orders ``log(E_i / E_{i+1}) / log(N_{i+1} / N_i)`` between consecutive rows."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two (N, error) pairs")
    for n, e in errors:
        if not e > 0:
            raise NonPositiveError(f"error {e!r} at N={n} is not positive")
    ns = [n for n, _ in errors]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"N must increase strictly, got {ns}")
    return [
        math.log(e0 / e1) / math.log(n1 / n0)
        for (n0, e0), (n1, e1) in zip(errors, errors[1:])
    ]


def profile_l1_gap(u_a, u_b, samples: int = 4001) -> float:
    """``int_{-1}^{1} |u_a - u_b| dx`` for two nodal profiles on CGL grids (degrees may differ).

    Both interpolants are evaluated on a uniform grid and integrated with the
    trapezoidal rule.
    """
    xs = np.linspace(-1.0, 1.0, samples)
    vals = []
    for u in (u_a, u_b):
        u = np.asarray(u, dtype=float)
        vals.append(np.polynomial.chebyshev.chebval(xs, forward_transform(u, cgl_points(u.size - 1))))
    return float(np.trapezoid(np.abs(vals[0] - vals[1]), xs))


# --- configuration -------------------------------------------------------------


@dataclass
class ExperimentConfig:
    experiment: str = "validation"
    n: tuple = (120,)
    dt: float = 1e-4
    filter_p: int = 10
    t_final: float | None = None
    flux: str | None = None
    output_times: tuple = ()
    output_dir: Path = Path("out")
    method: str = "chebyshev"
    cap_dt: bool = False
    reference_m: int = 12000
    viscosity: str = "filter"  # or "ssv"
    ssv_epsilon: float = 1.0
    ssv_s: int = 1
    nt: int | None = None  # time degree for cheb2d; defaults to n
    solver_tol: float = 1e-9
    max_newton: int = 30
    max_fixed_point: int = 20000

    def __post_init__(self):
        if self.t_final is None:
            self.t_final = {"validation": 1.0 / 6.0, "riemann_junction": 1.0, "single_edge_2d": 1.0}.get(
                self.experiment, 1.0
            )
        if self.flux is None:
            self.flux = "lwr_extended" if self.experiment == "single_edge_2d" else "lwr"
        self.output_dir = Path(self.output_dir)
        self.n = tuple(int(v) for v in np.atleast_1d(self.n))
        self.output_times = tuple(float(v) for v in self.output_times)

    @property
    def t_start(self) -> float:
        """The space-time experiment lives on ``t in [-1, 1]``."""
        return -1.0 if self.experiment == "single_edge_2d" else 0.0

    def filter_spec(self):
        if self.viscosity == "ssv":
            return SsvSpec(self.ssv_epsilon, self.ssv_s)
        return FilterSpec(p=self.filter_p)

    def step_for(self, n: int) -> float:
        """Time step for ``n``: ``dt`` itself, or capped at the CFL bound when ``cap_dt``."""
        bound = cfl_timestep([cgl_points(n)], [get_flux(self.flux)])
        return min(self.dt, bound) if self.cap_dt else self.dt

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "cheb2d" and self.experiment != "single_edge_2d":
            raise ConfigError("method cheb2d is only available for the single_edge_2d experiment")
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if any(n < 2 for n in self.n):
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.filter_p < 1:
            raise ConfigError(f"filter_p must be a positive integer, got {self.filter_p}")
        if self.viscosity not in ("filter", "ssv"):
            raise ConfigError(f"viscosity must be 'filter' or 'ssv', got {self.viscosity!r}")
        if self.reference_m < 6000:
            raise ConfigError(f"reference_m must be at least 6000, got {self.reference_m}")
        try:
            model = get_flux(self.flux)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        if not self.cap_dt:
            for n in self.n:
                bound = cfl_timestep([cgl_points(n)], [model])
                if self.dt > bound * (1.0 + 1e-12):
                    raise ConfigError(
                        f"dt={self.dt:g} exceeds the CFL bound {bound:.6g} for n={n} and flux "
                        f"{self.flux!r}; lower dt or set cap_dt = true"
                    )
        return self


_CONVERTERS = {
    "experiment": str,
    "n": lambda s: tuple(int(v) for v in _split(s)),
    "nt": int,
    "dt": float,
    "filter_p": int,
    "t_final": float,
    "flux": str,
    "output_times": lambda s: tuple(float(v) for v in _split(s)),
    "output_dir": Path,
    "method": str,
    "cap_dt": lambda s: _parse_bool(s),
    "reference_m": int,
    "viscosity": str,
    "ssv_epsilon": float,
    "ssv_s": int,
    "solver_tol": float,
    "max_newton": int,
    "max_fixed_point": int,
}


def _split(s: str) -> list[str]:
    return [v for v in s.replace(",", " ").split() if v]


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``overrides`` (already typed or raw strings) win over the file."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        try:
            values[key] = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in values.items() if k in known}).validate()


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


# --- running -------------------------------------------------------------------


@dataclass
class RunRecord:
    method: str
    n: int
    seconds: float
    steps: int
    profiles: list  # (t, [x per edge], [u per edge])
    junction: np.ndarray | None = None
    error: float | None = None
    error_network: float | None = None
    value_range: tuple = (np.nan, np.nan)
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    rates: list = field(default_factory=list)

    def run(self, method: str, n: int) -> RunRecord:
        for r in self.runs:
            if r.method == method and r.n == n:
                return r
        raise KeyError((method, n))


def _network_setup(cfg: ExperimentConfig):
    initial = validation_initial() if cfg.experiment == "validation" else riemann_initial()
    models = (get_flux(cfg.flux),) * 3
    return initial, models


def _profile_times(cfg: ExperimentConfig) -> tuple:
    times = [t for t in cfg.output_times if cfg.t_start <= t <= cfg.t_final]
    return tuple(sorted(set(times) | {cfg.t_final}))


def _run_chebyshev(cfg: ExperimentConfig, n: int) -> RunRecord:
    initial, models = _network_setup(cfg)
    net = NetworkConfig(
        n=n, dt=cfg.step_for(n), t_final=cfg.t_final, initial=initial, models=models,
        filter=cfg.filter_spec(), output_times=_profile_times(cfg),
    )
    start = time.perf_counter()
    traj = run_network_simulation(net)
    seconds = time.perf_counter() - start
    x = [g.points for g in traj.grids]
    profiles = [(t, x, traj.nodal_values(s)) for t, s in zip(traj.times, traj.states)]
    return RunRecord("chebyshev", n, seconds, len(traj.junction), profiles,
                     junction=traj.junction_array(), value_range=traj.value_range)


def _run_fvs(cfg: ExperimentConfig, m: int) -> RunRecord:
    initial, models = _network_setup(cfg)
    start = time.perf_counter()
    traj = run_fvs(initial, models, m, cfg.dt, cfg.t_final, output_times=_profile_times(cfg))
    seconds = time.perf_counter() - start
    x = [cell_centers(m)] * 3
    profiles = [(t, x, [g.cells for g in snap]) for t, snap in zip(traj.times, traj.snapshots)]
    return RunRecord("fvs", m, seconds, len(traj.junction), profiles,
                     junction=traj.junction_array(), value_range=traj.value_range)


def _reference(cfg: ExperimentConfig) -> ReferenceSolution:
    initial, models = _network_setup(cfg)
    traj = run_fvs(initial, models, cfg.reference_m, cfg.dt, cfg.t_final)
    return ReferenceSolution(traj.final, traj.times[-1])


def _attach_errors(run: RunRecord, ref: ReferenceSolution) -> None:
    _, x, u = run.profiles[-1]
    run.error = relative_l1_error(u[:2], ref, x[:2])
    run.error_network = relative_l1_error(u, ref, x)


def _run_single_edge(cfg: ExperimentConfig, n: int) -> tuple[RunRecord, ...]:
    model = get_flux(cfg.flux)
    u0 = single_edge_initial()
    times = _profile_times(cfg)
    out = []
    start = time.perf_counter()
    try:
        traj = run_single_edge(
            u0, model, n, cfg.step_for(n), cfg.t_final, filter=cfg.filter_spec(),
            far_left=float(u0(np.array([-1.0]))[0]), t_start=cfg.t_start, output_times=times,
        )
    except SolverFailure as exc:
        raise SolverFailure(f"single_edge_2d, filtered midpoint, N={n}: {exc}") from exc
    seconds = time.perf_counter() - start
    x = [traj.grid.points]
    midpoint = RunRecord("chebyshev", n, seconds, int(round((cfg.t_final - cfg.t_start) / traj.dt)),
                         [(t, x, [traj.values(i)]) for i, t in enumerate(traj.times)],
                         value_range=traj.value_range)
    out.append(midpoint)
    if cfg.method in ("cheb2d", "both"):
        problem = SpaceTimeProblem(u0=u0, model=model, nx=n, nt=cfg.nt or n)
        start = time.perf_counter()
        try:
            result = solve_spacetime(
                problem, tol=cfg.solver_tol, max_newton=cfg.max_newton,
                max_fixed_point=cfg.max_fixed_point,
                filter_spec=FilterSpec(p=cfg.filter_p),
            )
        except SolverFailure as exc:
            raise SolverFailure(f"single_edge_2d, N={n}: {exc}") from exc
        seconds = time.perf_counter() - start
        gx = result.solution.grid_x.points
        profiles = [(t, [gx], [result.profile(t)]) for t in times]
        gap = profile_l1_gap(profiles[-1][2][0], midpoint.profiles[-1][2][0])
        out.append(RunRecord("cheb2d", n, seconds, result.iterations, profiles,
                             extra={"gap": gap, "residual": result.residual_norm, "solver": result.method}))
    return tuple(out)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every (method, N) cell of the config and write the CSV reports."""
    cfg.validate()
    report = ExperimentReport(cfg)
    if cfg.experiment == "single_edge_2d":
        for n in cfg.n:
            report.runs.extend(_run_single_edge(cfg, n))
    else:
        methods = ("chebyshev", "fvs") if cfg.method == "both" else (cfg.method,)
        for method in methods:
            for n in cfg.n:
                try:
                    run = _run_chebyshev(cfg, n) if method == "chebyshev" else _run_fvs(cfg, n)
                except SolverFailure as exc:
                    raise SolverFailure(f"{cfg.experiment}, {method}, N={n}: {exc}") from exc
                report.runs.append(run)
        if cfg.experiment == "validation":
            ref = _reference(cfg)
            for run in report.runs:
                _attach_errors(run, ref)
    write_reports(report)
    return report


# --- CSV output ----------------------------------------------------------------


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_reports(report: ExperimentReport) -> dict:
    cfg, out = report.config, report.config.output_dir
    files = report.files
    for run in report.runs:
        rows = []
        for t, xs, us in run.profiles:
            for h, (x, u) in enumerate(zip(xs, us), 1):
                rows.extend((h, _fmt(xi), _fmt(ui), _fmt(t)) for xi, ui in zip(x, u))
        files[f"profiles_{run.method}_N{run.n}"] = _write_csv(
            out / f"profiles_{run.method}_N{run.n}.csv", PROFILE_COLUMNS, rows
        )
        if run.junction is not None and run.junction.size:
            files[f"junction_{run.method}_N{run.n}"] = _write_csv(
                out / f"junction_{run.method}_N{run.n}.csv", ("t", "u_b", "mismatch"),
                ([_fmt(v) for v in row] for row in run.junction),
            )
    files["timing"] = _write_csv(
        out / "timing.csv", ("method", "N", "steps", "seconds"),
        ((r.method, r.n, r.steps, f"{r.seconds:.6f}") for r in report.runs),
    )
    if cfg.experiment == "validation":
        rows = []
        for method in dict.fromkeys(r.method for r in report.runs):
            runs = sorted((r for r in report.runs if r.method == method), key=lambda r: r.n)
            inc = [None] + (convergence_rate([(r.n, r.error) for r in runs]) if len(runs) > 1 else [])
            net = [None] + (convergence_rate([(r.n, r.error_network) for r in runs]) if len(runs) > 1 else [])
            for r, a, b in zip(runs, inc, net):
                rows.append((method, r.n, _fmt(r.error), _fmt(a), _fmt(r.error_network), _fmt(b)))
                report.rates.append({"method": method, "N": r.n, "error": r.error, "rate": a,
                                     "error_network": r.error_network, "rate_network": b})
        files["rates"] = _write_csv(
            out / "rates.csv", ("method", "N", "error", "rate", "error_network", "rate_network"), rows
        )
    if cfg.experiment == "single_edge_2d":
        rows = [(r.n, _fmt(r.extra["gap"]), _fmt(r.extra["residual"]), r.extra["solver"])
                for r in report.runs if r.method == "cheb2d"]
        if rows:
            files["spacetime_gap"] = _write_csv(
                out / "spacetime_gap.csv", ("N", "l1_gap", "residual", "solver"), rows
            )
    return files


# --- command line --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netcheb", description="Spectral network solver experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="key = value config file")
    run.add_argument("--out", dest="output_dir", help="output directory (overrides output_dir)")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--n", help="N, or a comma-separated list of N")
    run.add_argument("--dt", help="time step")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"output_dir": args.output_dir, "method": args.method, "n": args.n, "dt": args.dt}
    try:
        cfg = load_config(args.config, overrides)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    for name, path in sorted(report.files.items()):
        print(f"{name}: {path}")
    for row in report.rates:
        rate = "" if row["rate"] is None else f"  rate {row['rate']:.4f}"
        print(f"{row['method']:>9} N={row['N']:<5} error {row['error']:.4e}{rate}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
