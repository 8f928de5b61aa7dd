"""Space-time Chebyshev collocation on a single edge.

The solution on [-1, 1] x [-1, 1] (space x time, initial data at t = -1) is
one tensor-product series ``u(x, t) = sum_jk c_jk T_j(x) T_k(t)``. All
coefficients are found at once from a square nonlinear system: the
conservation law at interior collocation nodes, the initial profile on the
t = -1 row and Dirichlet data on the inflow boundary column.

Array layout: axis 0 is space (``j``, ``x_n``), axis 1 is time (``k``, ``t_m``).
Time nodes follow CGL ordering, so ``t_0 = 1`` and ``t_{N_t} = -1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from netcheb.cheb_core import (
    CglGrid,
    FilterSpec,
    apply_filter,
    cgl_points,
    derivative_coeffs,
    forward_transform,
    inverse_transform,
)
from netcheb.errors import NonConvergence
from netcheb.flux_models import FluxModel

log = logging.getLogger(__name__)

SPACE, TIME = "space", "time"


@dataclass(frozen=True)
class SpaceTimeCoeffs:
    coeffs: np.ndarray
    grid_x: CglGrid = field(repr=False)
    grid_t: CglGrid = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != (self.grid_x.size, self.grid_t.size):
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grids "
                f"({self.grid_x.size}, {self.grid_t.size})"
            )

    def values(self) -> np.ndarray:
        return cheb2d_inverse(self)

    def at_time(self, t: float) -> np.ndarray:
        """Spatial coefficients of ``u(., t)``."""
        return np.polynomial.chebyshev.chebval(t, self.coeffs.T)

    def with_coeffs(self, coeffs) -> "SpaceTimeCoeffs":
        return SpaceTimeCoeffs(np.asarray(coeffs, dtype=float), self.grid_x, self.grid_t)


def _grids(values_shape, grid_x, grid_t):
    grid_x = grid_x or cgl_points(values_shape[0] - 1)
    grid_t = grid_t or cgl_points(values_shape[1] - 1)
    return grid_x, grid_t


def cheb2d_transform(values, grid_x: CglGrid | None = None, grid_t: CglGrid | None = None,
                     *, method: str = "fast") -> SpaceTimeCoeffs:
    """Nodal values on the tensor CGL grid to coefficients, one axis at a time."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"expected a 2D array of nodal values, got shape {values.shape}")
    grid_x, grid_t = _grids(values.shape, grid_x, grid_t)
    if values.shape != (grid_x.size, grid_t.size):
        raise ValueError(f"values shape {values.shape} does not match grids ({grid_x.size}, {grid_t.size})")
    c = forward_transform(values, grid_x, axis=0, method=method)
    c = forward_transform(c, grid_t, axis=1, method=method)
    return SpaceTimeCoeffs(c, grid_x, grid_t)


def cheb2d_transform_direct(values, grid_x: CglGrid, grid_t: CglGrid) -> np.ndarray:
    """Literal double quadrature sum (reference path, O(N^4))."""
    tx = np.cos(np.pi * np.outer(np.arange(grid_x.size), np.arange(grid_x.size)) / grid_x.n)
    tt = np.cos(np.pi * np.outer(np.arange(grid_t.size), np.arange(grid_t.size)) / grid_t.n)
    out = np.empty((grid_x.size, grid_t.size))
    weighted = np.asarray(values, dtype=float) * np.outer(grid_x.quad_weights, grid_t.quad_weights)
    for j in range(grid_x.size):
        for k in range(grid_t.size):
            out[j, k] = np.sum(weighted * np.outer(tx[:, j], tt[:, k])) / (
                grid_x.norm_factors[j] * grid_t.norm_factors[k]
            )
    return out


def cheb2d_inverse(c: SpaceTimeCoeffs) -> np.ndarray:
    v = inverse_transform(c.coeffs, c.grid_x, axis=0)
    return inverse_transform(v, c.grid_t, axis=1)


def cheb2d_partial(c: SpaceTimeCoeffs, axis: str) -> SpaceTimeCoeffs:
    if axis not in (SPACE, TIME):
        raise ValueError(f"axis must be {SPACE!r} or {TIME!r}, got {axis!r}")
    return c.with_coeffs(derivative_coeffs(c.coeffs, axis=0 if axis == SPACE else 1))


def _padded_values(coeffs: np.ndarray, shape) -> np.ndarray:
    padded = np.zeros(shape)
    padded[: coeffs.shape[0], : coeffs.shape[1]] = coeffs
    gx, gt = cgl_points(shape[0] - 1), cgl_points(shape[1] - 1)
    return inverse_transform(inverse_transform(padded, gx, axis=0), gt, axis=1), gx, gt


def tproduct_2d(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Truncated product of two bivariate Chebyshev series.

    The exact product has degree (2 N_x, 2 N_t); sampling it on a CGL grid of
    that degree and transforming back is therefore exact, after which modes
    above (N_x, N_t) are dropped.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    nx, nt = f.shape[0] - 1, f.shape[1] - 1
    big = (2 * nx + 1, 2 * nt + 1)
    fv, gx, gt = _padded_values(f, big)
    gv, _, _ = _padded_values(g, big)
    prod = forward_transform(forward_transform(fv * gv, gx, axis=0), gt, axis=1)
    return prod[: nx + 1, : nt + 1]


def cheb2d_product(f: SpaceTimeCoeffs, g: SpaceTimeCoeffs) -> SpaceTimeCoeffs:
    return f.with_coeffs(tproduct_2d(f.coeffs, g.coeffs))


def residual(c: SpaceTimeCoeffs, model: FluxModel) -> np.ndarray:
    """Coefficients of ``u_t + f'(u) u_x`` with truncated products."""
    u = cheb2d_inverse(c)
    speed = cheb2d_transform(model.f_prime(u), c.grid_x, c.grid_t).coeffs
    u_t = derivative_coeffs(c.coeffs, axis=1)
    u_x = derivative_coeffs(c.coeffs, axis=0)
    return u_t + tproduct_2d(speed, u_x)


@dataclass
class SpaceTimeProblem:
    """Single-edge Cauchy problem on t in [-1, 1] with Dirichlet inflow data."""

    u0: Callable
    model: FluxModel
    nx: int
    nt: int
    # inflow side "left" (x = -1), "right" (x = +1) or None; chosen from f'(u0) when "auto"
    inflow: str | None = "auto"
    # constant, callable of t, or None for u0 at the inflow end
    inflow_value: float | Callable | None = None


@dataclass
class SpaceTimeResult:
    solution: SpaceTimeCoeffs
    method: str
    iterations: int
    residual_norm: float
    converged: bool
    history: list = field(default_factory=list)

    def profile(self, t: float = 1.0) -> np.ndarray:
        """Nodal values at time ``t`` on the spatial CGL grid."""
        return inverse_transform(self.solution.at_time(t), self.solution.grid_x)


def inflow_side(problem: SpaceTimeProblem) -> tuple[str | None, float | Callable | None]:
    if problem.inflow != "auto":
        side = problem.inflow
    else:
        left, right = float(problem.u0(np.array([-1.0]))[0]), float(problem.u0(np.array([1.0]))[0])
        if problem.model.f_prime(left) > 0:
            side = "left"
        elif problem.model.f_prime(right) < 0:
            side = "right"
        else:
            side = None
    if side is None:
        return None, None
    if side not in ("left", "right"):
        raise ValueError(f"inflow side must be 'left', 'right', 'auto' or None, got {side!r}")
    if callable(problem.inflow_value):
        return side, problem.inflow_value
    if problem.inflow_value is not None:
        return side, float(problem.inflow_value)
    x_end = -1.0 if side == "left" else 1.0
    return side, float(problem.u0(np.array([x_end]))[0])


class _System:
    """Nodal unknowns with the initial row and inflow column eliminated."""

    def __init__(self, problem: SpaceTimeProblem):
        self.problem = problem
        self.gx = cgl_points(problem.nx)
        self.gt = cgl_points(problem.nt)
        shape = (self.gx.size, self.gt.size)
        self.fixed = np.zeros(shape, dtype=bool)
        self.fixed_values = np.zeros(shape)
        self.u0 = np.asarray(problem.u0(self.gx.points), dtype=float) * np.ones(self.gx.size)
        # t = -1 is the last time node
        self.fixed[:, -1] = True
        self.fixed_values[:, -1] = self.u0
        self.side, self.inflow_value = inflow_side(problem)
        if self.side is not None:
            col = -1 if self.side == "left" else 0
            self.fixed[col, :-1] = True
            if callable(self.inflow_value):
                self.fixed_values[col, :-1] = self.inflow_value(self.gt.points[:-1])
            else:
                self.fixed_values[col, :-1] = self.inflow_value
        self.free = ~self.fixed

    def assemble(self, z: np.ndarray) -> np.ndarray:
        u = self.fixed_values.copy()
        u[self.free] = z
        return u

    def coeffs(self, u: np.ndarray) -> SpaceTimeCoeffs:
        return cheb2d_transform(u, self.gx, self.gt)

    def nodal_residual(self, u: np.ndarray) -> np.ndarray:
        c = self.coeffs(u)
        r = residual(c, self.problem.model)
        return inverse_transform(inverse_transform(r, self.gx, axis=0), self.gt, axis=1)

    def equations(self, z: np.ndarray) -> np.ndarray:
        return self.nodal_residual(self.assemble(z))[self.free]

    def initial_guess(self) -> np.ndarray:
        """Initial profile held constant in time."""
        u = np.repeat(self.u0[:, None], self.gt.size, axis=1)
        return u[self.free]


def _fd_jacobian(fun, z, fz, h=1e-7):
    jac = np.empty((fz.size, z.size))
    for i in range(z.size):
        zp = z.copy()
        step = h * max(1.0, abs(z[i]))
        zp[i] += step
        jac[:, i] = (fun(zp) - fz) / step
    return jac


def _newton(system: _System, z, tol, max_iter, filter_spec, history):
    fz = system.equations(z)
    norm = float(np.max(np.abs(fz)))
    history.append(norm)
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return z, norm, it - 1, True
        jac = _fd_jacobian(system.equations, z, fz)
        try:
            step = np.linalg.solve(jac, -fz)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -fz, rcond=None)[0]
        lam = 1.0
        while lam >= 1.0 / 1024:
            trial = z + lam * step
            if filter_spec is not None:
                trial = _filter_space(system, trial, filter_spec)
            f_trial = system.equations(trial)
            n_trial = float(np.max(np.abs(f_trial)))
            if np.isfinite(n_trial) and n_trial < norm:
                break
            lam *= 0.5
        else:
            return z, norm, it, False
        z, fz, norm = trial, f_trial, n_trial
        history.append(norm)
        log.debug("newton iteration %d: |F| = %.3e (lambda %.4g)", it, norm, lam)
    return z, norm, max_iter, norm <= tol


def _filter_space(system: _System, z, spec: FilterSpec):
    u = system.assemble(z)
    c = forward_transform(u, system.gx, axis=0)
    u = inverse_transform(apply_filter(c, spec, axis=0), system.gx, axis=0)
    return u[system.free]


def _pseudo_time(system: _System, z, tol, max_iter, history):
    """Pseudo-time marching ``dz/dtau = -F(z)`` with classical RK4.

    ``F`` is a transport operator on the space-time box (inflow through the
    initial row and the inflow column), so its spectrum has negative real
    parts and imaginary parts of size ``O(N^2)``: forward Euler is unstable,
    RK4 with ``dtau ~ 1/N^2`` is not. The step is halved whenever the
    residual grows.
    """
    dtau = 1.0 / (system.gx.n**2 + system.gt.n**2)
    fz = system.equations(z)
    norm = float(np.max(np.abs(fz)))
    history.append(norm)
    best = (norm, z)
    fun = system.equations
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return z, norm, it - 1, True
        k1 = -fz
        k2 = -fun(z + 0.5 * dtau * k1)
        k3 = -fun(z + 0.5 * dtau * k2)
        k4 = -fun(z + dtau * k3)
        trial = z + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        f_trial = fun(trial)
        n_trial = float(np.max(np.abs(f_trial)))
        # transients may raise the max-norm for a while; runaway growth may not
        if not np.isfinite(n_trial) or n_trial > 1.5 * norm or n_trial > 1e3 * best[0]:
            dtau *= 0.5
            if dtau < 1e-10:
                break
            continue
        z, fz, norm = trial, f_trial, n_trial
        history.append(norm)
        if norm < best[0]:
            best = (norm, z)
    return best[1], best[0], it, best[0] <= tol


def solve_spacetime(
    problem: SpaceTimeProblem,
    *,
    tol: float = 1e-9,
    max_newton: int = 30,
    max_fixed_point: int = 20000,
    filter_spec: FilterSpec | None = None,
    method: str = "newton",
    raise_on_failure: bool = True,
) -> SpaceTimeResult:
    """Solve the space-time collocation system.

    Damped Newton with a finite-difference Jacobian first; if it stalls,
    pseudo-time marching from the best Newton iterate. ``filter_spec``
    damps spatial modes of every accepted Newton trial (for rough data).
    """
    system = _System(problem)
    z0 = system.initial_guess()
    history: list = []
    used = method
    if method == "newton":
        z, norm, its, ok = _newton(system, z0, tol, max_newton, filter_spec, history)
        if not ok:
            log.info("newton stalled at |F| = %.3e; switching to pseudo-time marching", norm)
            used = "newton+fixed_point"
            z, norm, more, ok = _pseudo_time(system, z, tol, max_fixed_point, history)
            its += more
    elif method == "fixed_point":
        z, norm, its, ok = _pseudo_time(system, z0, tol, max_fixed_point, history)
    else:
        raise ValueError(f"unknown method {method!r}")
    solution = system.coeffs(system.assemble(z))
    result = SpaceTimeResult(solution, used, its, norm, ok, history)
    if not ok and raise_on_failure:
        raise NonConvergence(
            f"space-time solve ({used}) stopped at max residual {norm:.3e} > {tol:.1e} after {its} iterations",
            residual_norm=norm,
        )
    return result


def initial_row_error(result: SpaceTimeResult, u0: Callable) -> float:
    """``max_j |sum_k (-1)^k c_jk - (u0)_j|``: the t = -1 identity in coefficient form."""
    c = result.solution.coeffs
    signs = (-1.0) ** np.arange(c.shape[1])
    u0_coeffs = forward_transform(u0(result.solution.grid_x.points), result.solution.grid_x)
    return float(np.max(np.abs(c @ signs - u0_coeffs)))
