"""First-order Godunov finite volumes on the same three-edge network.

Serves as the comparison baseline and, on a fine grid, as the reference
solution for error measurements. Each edge is [-1, 1] split into M
uniform cells with centres at ``-1 + (j + 1/2) dx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from netcheb.errors import CflViolation, SolverFailure
from netcheb.flux_models import FluxModel, godunov_flux
from netcheb.junction import JunctionTraces, junction_residual, solve_boundary_value
from netcheb.netsolver import LEFT, RIGHT, NetworkConfig, step_schedule


@dataclass(frozen=True)
class FVGrid:
    cells: np.ndarray
    junction_end: str = RIGHT

    @property
    def m(self) -> int:
        return self.cells.size

    @property
    def dx(self) -> float:
        return 2.0 / self.cells.size

    def centers(self) -> np.ndarray:
        return cell_centers(self.cells.size)


def cell_centers(m: int) -> np.ndarray:
    return -1.0 + (np.arange(m) + 0.5) * (2.0 / m)


def cell_averages(u0: Callable, m: int, subsamples: int = 32) -> np.ndarray:
    """Midpoint-rule cell averages; exact for piecewise constants with jumps on sub-cell boundaries."""
    dx = 2.0 / m
    offsets = (np.arange(subsamples) + 0.5) / subsamples
    x = -1.0 + (np.arange(m)[:, None] + offsets[None, :]) * dx
    return np.asarray(u0(x.ravel()), dtype=float).reshape(m, subsamples).mean(axis=1)


def fvs_initial(initial: Sequence[Callable], m: int) -> tuple:
    ends = (RIGHT, RIGHT, LEFT)
    return tuple(FVGrid(cell_averages(u0, m), end) for u0, end in zip(initial, ends))


def fvs_traces(grids: Sequence[FVGrid], u_max: float = 1.0) -> JunctionTraces:
    return JunctionTraces.clamped(grids[0].cells[-1], grids[1].cells[-1], grids[2].cells[0], u_max=u_max)


def fvs_junction(grids: Sequence[FVGrid], models: Sequence[FluxModel], tol: float = 1e-12):
    """Boundary value and ``|G_1 + G_2 - G_3|`` for the current boundary cells."""
    traces = fvs_traces(grids, models[2].u_max)
    u_b = solve_boundary_value(traces, models, tol=tol)
    return u_b, abs(junction_residual(u_b, traces, *models)), traces


def fvs_step(
    grids: Sequence[FVGrid],
    models: Sequence[FluxModel],
    dt: float,
    *,
    far_field: Sequence[float | None] | None = None,
    tol: float = 1e-12,
) -> tuple:
    """One Godunov step on all three edges.

    Junction faces carry ``G_h(U_last, u_b)`` (incoming) and
    ``G_3(u_b, U_first)`` (outgoing), so the junction is conservative to the
    root-solver tolerance. Free ends use the Godunov flux against
    ``far_field[h]``, or a zero-gradient ghost cell when it is ``None``.
    """
    for g, m in zip(grids, models):
        if dt * m.lipschitz > g.dx / 2.0 * (1.0 + 1e-12):
            raise CflViolation(dt, g.dx / (2.0 * m.lipschitz))
    far_field = (None, None, None) if far_field is None else tuple(far_field)
    u_b, _, _ = fvs_junction(grids, models, tol)

    out = []
    for g, m, far in zip(grids, models, far_field):
        u = g.cells
        faces = np.empty(u.size + 1)
        faces[1:-1] = godunov_flux(m, u[:-1], u[1:])
        if g.junction_end == RIGHT:
            faces[0] = m.f(u[0]) if far is None else godunov_flux(m, float(far), float(u[0]))
            faces[-1] = godunov_flux(m, float(u[-1]), u_b)
        else:
            faces[0] = godunov_flux(m, u_b, float(u[0]))
            faces[-1] = m.f(u[-1]) if far is None else godunov_flux(m, float(u[-1]), float(far))
        out.append(replace(g, cells=u - (dt / g.dx) * np.diff(faces)))
    return tuple(out)


def free_end_values(grids: Sequence[FVGrid]) -> tuple:
    return tuple(float(g.cells[0] if g.junction_end == RIGHT else g.cells[-1]) for g in grids)


@dataclass
class FvsTrajectory:
    grids: tuple
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    junction: list = field(default_factory=list)
    value_range: tuple = (np.inf, -np.inf)
    dt: float = 0.0

    @property
    def final(self) -> tuple:
        return self.snapshots[-1]

    def junction_array(self) -> np.ndarray:
        return np.asarray(self.junction, dtype=float).reshape(-1, 3)


def run_fvs(
    initial: Sequence[Callable],
    models: Sequence[FluxModel],
    m: int,
    dt: float,
    t_final: float,
    *,
    output_times: Sequence[float] = (),
    far_field: str | Sequence[float | None] | None = "initial",
    tol: float = 1e-12,
) -> FvsTrajectory:
    """March the finite-volume scheme to ``t_final``.

    ``dt`` is capped at the CFL bound ``dx / (2 L)``.
    """
    grids = fvs_initial(initial, m)
    bound = (2.0 / m) / (2.0 * max(md.lipschitz for md in models))
    steps, dt = step_schedule(min(dt, bound), t_final)
    if far_field == "initial":
        far_field = free_end_values(grids)
    traj = FvsTrajectory(grids=grids, dt=dt)
    wanted = {int(round(t / dt)) for t in output_times if 0 <= t <= t_final}

    def track(gs):
        lo = min(float(g.cells.min()) for g in gs)
        hi = max(float(g.cells.max()) for g in gs)
        traj.value_range = (min(traj.value_range[0], lo), max(traj.value_range[1], hi))

    track(grids)
    if 0 in wanted or steps == 0:
        traj.times.append(0.0)
        traj.snapshots.append(grids)
    for k in range(1, steps + 1):
        try:
            u_b, mismatch, _ = fvs_junction(grids, models, tol)
            grids = fvs_step(grids, models, dt, far_field=far_field, tol=tol)
        except SolverFailure as exc:
            raise SolverFailure(f"FVS step {k} (t={k * dt:.6g}): {exc}") from exc
        traj.junction.append((k * dt, u_b, mismatch))
        track(grids)
        if k in wanted or k == steps:
            traj.times.append(k * dt)
            traj.snapshots.append(grids)
    traj.grids = grids
    return traj


class ReferenceSolution:
    """Point sampler over a finished fine-grid run.

    Values between cell centres are linearly interpolated; outside the
    outermost centres the end cell value is held.
    """

    def __init__(self, grids: Sequence[FVGrid], t: float):
        self.grids = tuple(grids)
        self.t = t
        self._centers = cell_centers(self.grids[0].m)

    def __call__(self, edge: int, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self._centers, self.grids[edge].cells)

    def sample(self, points: Sequence) -> list[np.ndarray]:
        """Values on each edge at that edge's sample points."""
        return [self(h, x) for h, x in enumerate(points)]


def fvs_reference_solution(config: NetworkConfig, m: int = 12000) -> ReferenceSolution:
    if m < 6000:
        raise ValueError(f"reference grids need at least 6000 cells per edge, got {m}")
    traj = run_fvs(config.initial, config.models, m, config.dt, config.t_final, far_field=config.far_field)
    return ReferenceSolution(traj.final, traj.times[-1])
