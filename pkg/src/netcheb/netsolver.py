"""Filtered Chebyshev collocation on the three-edge network.

Incoming edges (1, 2) meet the junction at x = +1, which is node 0 in CGL
ordering. The outgoing edge (3) meets it at x = -1, node N. Free ends can
hold a far-field value, enforced only where characteristics enter the edge.

One time step (explicit midpoint):

1. predictor ``c_half = c + dt/2 * rhs(c)``; junction solve; impose boundary
2. corrector ``c_new = c + dt * rhs(c_half)``; junction solve; impose boundary
3. damp high modes, by the exponential filter or the equivalent SSV step
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from netcheb.cheb_core import (
    CglGrid,
    FilterSpec,
    apply_filter,
    cgl_points,
    derivative_coeffs,
    forward_transform,
    inverse_transform,
    product_coeffs,
)
from netcheb.errors import CflViolation, SolverFailure
from netcheb.flux_models import FluxModel
from netcheb.junction import (
    JunctionTraces,
    edge_boundary_states,
    incoming_boundary_state,
    junction_residual,
    outgoing_boundary_state,
    solve_boundary_value,
)

log = logging.getLogger(__name__)

RIGHT = "right"
LEFT = "left"
CFL_SLACK = 1e-12
# coefficient magnitude treated as a blow-up
BLOWUP = 1e8


@dataclass(frozen=True)
class SpectralEdgeState:
    coeffs: np.ndarray
    junction_end: str = RIGHT

    def values(self, grid: CglGrid) -> np.ndarray:
        return inverse_transform(self.coeffs, grid)

    def junction_value(self) -> float:
        """Interpolant at the junction end: ``sum c_k`` at +1, ``sum (-1)^k c_k`` at -1."""
        return _end_value(self.coeffs, self.junction_end)

    def free_value(self) -> float:
        return _end_value(self.coeffs, LEFT if self.junction_end == RIGHT else RIGHT)


def _end_value(c: np.ndarray, end: str) -> float:
    if end == RIGHT:
        return float(np.sum(c))
    return float(np.sum(c[::2]) - np.sum(c[1::2]))


@dataclass(frozen=True)
class NetworkState:
    edges: tuple
    t: float = 0.0
    u_b: float = float("nan")
    # largest |G_1 + G_2 - G_3| over the junction solves of the last step
    mismatch: float = 0.0

    def __post_init__(self):
        ends = tuple(e.junction_end for e in self.edges)
        if ends != (RIGHT, RIGHT, LEFT):
            raise ValueError(f"expected junction ends (right, right, left), got {ends}")


@dataclass(frozen=True)
class SsvSpec:
    """Super spectral viscosity ``eps (-1)^(s+1) / N^(2s-1) Q^(2s)``."""

    epsilon: float
    s: int = 1

    def __post_init__(self):
        if self.epsilon <= 0 or self.s < 1:
            raise ValueError(f"SSV needs epsilon > 0 and s >= 1, got {self}")


def semi_discrete_rhs(edge, model: FluxModel, grid: CglGrid) -> np.ndarray:
    """Coefficient-space ``-(f'(u) u_x)`` with truncated products.

    ``f'`` is evaluated at the nodes and transformed; the product with the
    derivative series is then formed exactly and truncated to degree N.
    """
    c = edge.coeffs if isinstance(edge, SpectralEdgeState) else np.asarray(edge, dtype=float)
    speed = forward_transform(model.f_prime(inverse_transform(c, grid)), grid)
    return -product_coeffs(speed, derivative_coeffs(c))


def cfl_timestep(grids: Sequence[CglGrid], models: Sequence[FluxModel]) -> float:
    """Largest ``dt`` with ``dt * max_h L_h <= min_j |x_{j+1} - x_j| / 2``."""
    spacing = min(g.spacing() for g in grids)
    return spacing / (2.0 * max(m.lipschitz for m in models))


def ssv_split_step(c, spec: SsvSpec, dt: float, n: int | None = None) -> np.ndarray:
    """Exact solution of ``dc_k/dt = -eps N (k/N)^(2s) c_k`` over one step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = np.asarray(c, dtype=float)
    n = c.size - 1 if n is None else n
    k = np.arange(c.size)
    return c * np.exp(-spec.epsilon * n * dt * (k / n) ** (2 * spec.s))


def ssv_equivalent_filter(spec: SsvSpec, dt: float, n: int) -> FilterSpec:
    return FilterSpec(p=2 * spec.s, beta=spec.epsilon * n * dt)


def junction_traces(edges: Sequence[SpectralEdgeState], u_max: float = 1.0) -> JunctionTraces:
    values = [e.junction_value() for e in edges]
    if not all(np.isfinite(values)):
        raise SolverFailure(f"non-finite junction traces {values}")
    return JunctionTraces.clamped(*values, u_max=u_max)


def _junction_cardinal(grid: CglGrid, end: str) -> np.ndarray:
    """Coefficients of the nodal cardinal function of the junction node."""
    e = np.zeros(grid.size)
    e[0 if end == RIGHT else -1] = 1.0
    return forward_transform(e, grid)


def impose_edge_value(edge: SpectralEdgeState, u_b: float, grid: CglGrid, end: str | None = None) -> SpectralEdgeState:
    """Overwrite one end node value (junction end by default), leaving all other nodal values as they were."""
    end = edge.junction_end if end is None else end
    jump = u_b - _end_value(edge.coeffs, end)
    if jump == 0.0:
        return edge
    return replace(edge, coeffs=edge.coeffs + jump * _junction_cardinal(grid, end))


def impose_far_field(edges, far_field, models, grids):
    """Hold ``far_field[h]`` at the free end of edge h where waves enter the edge."""
    out = []
    for e, far, m, g in zip(edges, far_field, models, grids):
        if far is None:
            out.append(e)
            continue
        raw = e.free_value()
        trace = min(max(raw, 0.0), m.u_max)
        if e.junction_end == RIGHT:
            # free end at x = -1 sees the far field on its left
            target = outgoing_boundary_state(trace, far, m)
            end = LEFT
        else:
            target = incoming_boundary_state(trace, far, m)
            end = RIGHT
        # compare with the raw value so an out-of-range trace is always reset
        out.append(e if target == raw else impose_edge_value(e, target, g, end))
    return tuple(out)


def impose_boundary(
    state: NetworkState,
    u_b: float,
    grids: Sequence[CglGrid],
    edge_values: Sequence[float] | None = None,
) -> NetworkState:
    """Set the junction node of every edge to ``u_b``.

    ``edge_values`` overrides the per-edge target (the time stepper passes
    the admissible states from :func:`edge_boundary_states`).
    """
    targets = (u_b,) * 3 if edge_values is None else tuple(edge_values)
    edges = tuple(impose_edge_value(e, v, g) for e, v, g in zip(state.edges, targets, grids))
    return replace(state, edges=edges, u_b=float(u_b))


def _junction_update(edges, models, grids, tol):
    traces = junction_traces(edges, models[2].u_max)
    u_b = solve_boundary_value(traces, models, tol=tol)
    mismatch = abs(junction_residual(u_b, traces, *models))
    targets = edge_boundary_states(u_b, traces, models)
    edges = tuple(impose_edge_value(e, v, g) for e, v, g in zip(edges, targets, grids))
    return edges, u_b, mismatch, traces


def midpoint_step(
    state: NetworkState,
    dt: float,
    filter: FilterSpec | SsvSpec | None,
    models: Sequence[FluxModel],
    grids: Sequence[CglGrid],
    *,
    tol: float = 1e-12,
    check_cfl: bool = True,
    on_viscosity: Callable | None = None,
    far_field: Sequence[float | None] | None = None,
) -> NetworkState:
    """Advance the network by one filtered explicit-midpoint step.

    ``filter`` may be a :class:`FilterSpec` (applied once after the update)
    or an :class:`SsvSpec` (its exact split step, which is the same filter
    with ``p = 2s``, ``beta = eps N dt``). ``on_viscosity(before, after)`` is
    called with the per-edge coefficients around the damping stage.
    ``far_field`` gives per-edge free-end values (``None`` leaves an end free).
    """
    if check_cfl:
        bound = cfl_timestep(grids, models)
        if dt > bound * (1.0 + CFL_SLACK):
            raise CflViolation(dt, bound)
    c0 = [e.coeffs for e in state.edges]

    half = tuple(
        replace(e, coeffs=c + 0.5 * dt * semi_discrete_rhs(c, m, g))
        for e, c, m, g in zip(state.edges, c0, models, grids)
    )
    if far_field is not None:
        half = impose_far_field(half, far_field, models, grids)
    half, _, mis_half, _ = _junction_update(half, models, grids, tol)

    new = tuple(
        replace(e, coeffs=c + dt * semi_discrete_rhs(h.coeffs, m, g))
        for e, c, h, m, g in zip(state.edges, c0, half, models, grids)
    )
    if far_field is not None:
        new = impose_far_field(new, far_field, models, grids)
    new, u_b, mis_new, _ = _junction_update(new, models, grids, tol)

    if filter is not None:
        before = [e.coeffs for e in new]
        if isinstance(filter, SsvSpec):
            after = [ssv_split_step(c, filter, dt, g.n) for c, g in zip(before, grids)]
        else:
            after = [apply_filter(c, filter) for c in before]
        if on_viscosity is not None:
            on_viscosity(before, after)
        new = tuple(replace(e, coeffs=c) for e, c in zip(new, after))

    return NetworkState(edges=new, t=state.t + dt, u_b=u_b, mismatch=max(mis_half, mis_new))


# --- orchestration -----------------------------------------------------------


@dataclass
class NetworkConfig:
    """Everything a spectral network run needs. ``initial`` holds one callable per edge."""

    n: int
    dt: float
    t_final: float
    initial: Sequence[Callable]
    models: Sequence[FluxModel]
    filter: FilterSpec | SsvSpec | None = field(default_factory=FilterSpec)
    output_times: Sequence[float] = ()
    tol: float = 1e-12
    bounds: tuple[float, float] | None = None
    # "initial": hold u0 at the free ends (inflow only); None: no condition
    far_field: str | Sequence[float | None] | None = "initial"


@dataclass
class Trajectory:
    grids: tuple
    states: list = field(default_factory=list)
    times: list = field(default_factory=list)
    # per accepted step: time, u_b, junction mismatch
    junction: list = field(default_factory=list)
    value_range: tuple = (np.inf, -np.inf)
    dt: float = 0.0

    @property
    def final(self) -> NetworkState:
        return self.states[-1]

    def nodal_values(self, state: NetworkState | None = None) -> list[np.ndarray]:
        state = self.final if state is None else state
        return [e.values(g) for e, g in zip(state.edges, self.grids)]

    def junction_array(self) -> np.ndarray:
        return np.asarray(self.junction, dtype=float).reshape(-1, 3)


def initial_state(n_or_grids, initial: Sequence[Callable]) -> NetworkState:
    grids = _as_grids(n_or_grids)
    ends = (RIGHT, RIGHT, LEFT)
    edges = tuple(
        SpectralEdgeState(forward_transform(np.asarray(u0(g.points), dtype=float) * np.ones(g.size), g), end)
        for u0, g, end in zip(initial, grids, ends)
    )
    return NetworkState(edges=edges, t=0.0)


def _as_grids(n_or_grids):
    if isinstance(n_or_grids, (int, np.integer)):
        g = cgl_points(int(n_or_grids))
        return (g, g, g)
    return tuple(n_or_grids)


def step_schedule(dt: float, t_final: float) -> tuple[int, float]:
    """Number of steps and the (possibly slightly reduced) uniform step reaching ``t_final``."""
    if t_final <= 0:
        return 0, dt
    steps = int(np.ceil(t_final / dt - 1e-9))
    return steps, t_final / steps


def run_network_simulation(config: NetworkConfig, on_viscosity: Callable | None = None) -> Trajectory:
    grids = _as_grids(config.n)
    models = tuple(config.models)
    bound = cfl_timestep(grids, models)
    if config.dt > bound * (1.0 + CFL_SLACK):
        raise CflViolation(config.dt, bound)
    state = initial_state(grids, config.initial)
    far_field = config.far_field
    if far_field == "initial":
        far_field = tuple(e.free_value() for e in state.edges)
    steps, dt = step_schedule(config.dt, config.t_final)
    traj = Trajectory(grids=grids, dt=dt)
    wanted = sorted({int(round(t / dt)) for t in config.output_times if 0 <= t <= config.t_final})
    wanted_set = set(wanted)

    def record(s):
        traj.states.append(s)
        traj.times.append(s.t)

    def track(s, step):
        vals = traj.nodal_values(s)
        lo = min(float(v.min()) for v in vals)
        hi = max(float(v.max()) for v in vals)
        if not (np.isfinite(lo) and np.isfinite(hi)) or max(-lo, hi) > BLOWUP:
            raise SolverFailure(f"solution blew up at step {step} (t={s.t:.6g})")
        traj.value_range = (min(traj.value_range[0], lo), max(traj.value_range[1], hi))
        if config.bounds is not None and (lo < config.bounds[0] or hi > config.bounds[1]):
            raise SolverFailure(
                f"nodal values [{lo:.4f}, {hi:.4f}] left {config.bounds} at step {step} (t={s.t:.6g})"
            )

    track(state, 0)
    if 0 in wanted_set or steps == 0:
        record(state)
    for k in range(1, steps + 1):
        try:
            state = midpoint_step(
                state, dt, config.filter, models, grids,
                tol=config.tol, check_cfl=False, on_viscosity=on_viscosity,
                far_field=far_field,
            )
        except SolverFailure as exc:
            raise SolverFailure(f"step {k} (t={k * dt:.6g}): {exc}") from exc
        state = replace(state, t=k * dt)
        traj.junction.append((state.t, state.u_b, state.mismatch))
        track(state, k)
        if k in wanted_set or k == steps:
            record(state)
    return traj


# --- single edge ---------------------------------------------------------------


@dataclass
class EdgeTrajectory:
    grid: CglGrid
    times: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    value_range: tuple = (np.inf, -np.inf)
    dt: float = 0.0

    def values(self, i: int = -1) -> np.ndarray:
        return inverse_transform(self.coeffs[i], self.grid)


def _impose_free_ends(c, grid, model, far_left, far_right):
    edge = SpectralEdgeState(c, RIGHT)
    if far_left is not None:
        raw = edge.free_value()
        target = outgoing_boundary_state(min(max(raw, 0.0), model.u_max), far_left, model)
        if target != raw:
            edge = impose_edge_value(edge, target, grid, LEFT)
    if far_right is not None:
        raw = edge.junction_value()
        target = incoming_boundary_state(min(max(raw, 0.0), model.u_max), far_right, model)
        if target != raw:
            edge = impose_edge_value(edge, target, grid, RIGHT)
    return edge.coeffs


def run_single_edge(
    u0: Callable,
    model: FluxModel,
    n: int,
    dt: float,
    t_final: float,
    *,
    filter: FilterSpec | SsvSpec | None = FilterSpec(),
    far_left: float | None = None,
    far_right: float | None = None,
    t_start: float = 0.0,
    output_times: Sequence[float] = (),
) -> EdgeTrajectory:
    """Filtered explicit midpoint on one edge ``[-1, 1]`` without a junction.

    ``far_left``/``far_right`` are far-field values held where waves enter;
    ``None`` leaves that end free. ``filter=None`` disables damping. Times
    are absolute, starting at ``t_start``.
    """
    grid = cgl_points(n)
    bound = cfl_timestep([grid], [model])
    if dt > bound * (1.0 + CFL_SLACK):
        raise CflViolation(dt, bound)
    c = forward_transform(np.asarray(u0(grid.points), dtype=float) * np.ones(grid.size), grid)
    steps, dt = step_schedule(dt, t_final - t_start)
    traj = EdgeTrajectory(grid=grid, dt=dt)
    wanted = {int(round((t - t_start) / dt)) for t in output_times if t_start <= t <= t_final}

    def track(c):
        v = inverse_transform(c, grid)
        traj.value_range = (min(traj.value_range[0], float(v.min())), max(traj.value_range[1], float(v.max())))

    track(c)
    if 0 in wanted or steps == 0:
        traj.times.append(t_start)
        traj.coeffs.append(c)
    for k in range(1, steps + 1):
        half = c + 0.5 * dt * semi_discrete_rhs(c, model, grid)
        half = _impose_free_ends(half, grid, model, far_left, far_right)
        new = c + dt * semi_discrete_rhs(half, model, grid)
        new = _impose_free_ends(new, grid, model, far_left, far_right)
        if isinstance(filter, SsvSpec):
            c = ssv_split_step(new, filter, dt, grid.n)
        elif filter is not None:
            c = apply_filter(new, filter)
        else:
            c = new
        if not np.all(np.isfinite(c)) or np.max(np.abs(c)) > BLOWUP:
            raise SolverFailure(f"single-edge run blew up at step {k} (t={t_start + k * dt:.6g})")
        track(c)
        if k in wanted or k == steps:
            traj.times.append(t_start + k * dt)
            traj.coeffs.append(c)
    return traj
