"""Junction coupling: find the common boundary value ``u_b`` that balances fluxes.

Two incoming edges feed one outgoing edge. With Godunov fluxes ``G_h`` the
balance reads ``G_1(in1, u_b) + G_2(in2, u_b) = G_3(u_b, out3)``. The
residual is continuous and non-increasing in ``u_b`` but has kinks, so it is
solved with a bracketing method.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from netcheb.errors import MaxIterations, NoSignChange
from netcheb.flux_models import BOUND_TOL, FluxModel, godunov_flux


@dataclass(frozen=True)
class JunctionTraces:
    """Edge values next to the junction: two incoming traces and the outgoing one."""

    in1: float
    in2: float
    out3: float

    @classmethod
    def clamped(cls, in1, in2, out3, u_max: float = 1.0) -> "JunctionTraces":
        """Clip traces into [0, u_max].

        Spectral traces can overshoot through Gibbs ripples; the Godunov flux
        is only defined on the invariant interval.
        """
        return cls(*(float(min(max(v, 0.0), u_max)) for v in (in1, in2, out3)))


def junction_residual(c: float, tr: JunctionTraces, m1: FluxModel, m2: FluxModel, m3: FluxModel) -> float:
    u_max = m3.u_max
    if c < -BOUND_TOL or c > u_max + BOUND_TOL:
        raise ValueError(f"boundary value {c} outside [0, {u_max}]")
    c = min(max(c, 0.0), u_max)
    return (
        godunov_flux(m1, tr.in1, c)
        + godunov_flux(m2, tr.in2, c)
        - godunov_flux(m3, c, tr.out3)
    )


def _illinois(phi, a, b, fa, fb, tol, max_iter):
    """Illinois regula falsi on a bracket with ``fa > 0 > fb``."""
    for _ in range(max_iter):
        c = b - fb * (b - a) / (fb - fa)
        # guard against roundoff pushing the secant point out of the bracket
        if not a < c < b:
            c = 0.5 * (a + b)
        fc = phi(c)
        if fc == 0.0 or (abs(fc) <= tol and (b - a) <= 1e-14 * max(1.0, abs(c))):
            return c, fc
        if fc > 0.0:
            a, fa = c, fc
            fb *= 0.5
        else:
            b, fb = c, fc
            fa *= 0.5
        if b - a <= 4.0 * np.finfo(float).eps * max(1.0, abs(c)):
            if abs(fc) <= tol:
                return c, fc
            break
    raise MaxIterations(f"regula falsi did not reach |phi| <= {tol:g} in {max_iter} iterations")


def solve_boundary_value(
    tr: JunctionTraces,
    models: Sequence[FluxModel],
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Boundary value ``u_b`` with ``|phi(u_b)| <= tol``.

    When the residual vanishes on a whole interval the smallest root is
    returned, so the result does not depend on how the iteration happened
    to approach the flat part.
    """
    m1, m2, m3 = models
    u_max = m3.u_max

    def phi(c):
        return junction_residual(c, tr, m1, m2, m3)

    f0, f1 = phi(0.0), phi(u_max)
    if abs(f0) <= tol:
        return 0.0
    if f0 * f1 > 0.0 and abs(f1) > tol:
        raise NoSignChange(
            f"junction residual has one sign on [0, {u_max}]: phi(0)={f0:.3e}, phi(u_max)={f1:.3e}; "
            f"traces {tr}"
        )
    if abs(f1) <= tol:
        root = u_max
    elif f0 > 0.0:
        root, _ = _illinois(phi, 0.0, u_max, f0, f1, tol, max_iter)
    else:
        # phi is non-increasing in theory; a negative phi(0) with positive phi(u_max)
        # can only come from non-standard fluxes
        root, _ = _illinois(lambda c: -phi(c), 0.0, u_max, -f0, -f1, tol, max_iter)
    return _leftmost_root(phi, root, tol, f0 > 0.0)


def _leftmost_root(phi, root: float, tol: float, decreasing: bool) -> float:
    """Bisect toward 0 for the left end of the set where ``|phi| <= tol``."""
    probe = root - 1e-9 * max(1.0, root)
    if probe <= 0.0 or abs(phi(probe)) > tol:
        return root
    lo, hi = 0.0, root
    sign = 1.0 if decreasing else -1.0
    # tighter than tol so a slowly varying simple root is not shifted
    level = min(tol, 1e-14)
    while hi - lo > 4.0 * np.finfo(float).eps * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if sign * phi(mid) > level:
            lo = mid
        else:
            hi = mid
    return hi


def boundary_flux_mismatch(u_b: float, tr: JunctionTraces, models: Sequence[FluxModel]) -> float:
    """``|G_1 + G_2 - G_3|`` at the accepted boundary value."""
    return abs(junction_residual(u_b, tr, *models))


def incoming_boundary_state(trace: float, u_b: float, m: FluxModel) -> float:
    """State at the right end of an edge whose trace meets boundary data ``u_b``.

    One-sided limit of the Riemann solution between ``trace`` (left) and
    ``u_b`` (right): the edge keeps its trace while it is demand limited,
    otherwise it is congested at ``max(u_b, u_c)``.
    """
    if m.u_c is None:
        return float(u_b)
    if trace <= m.u_c and m.f(trace) <= m.f(max(u_b, m.u_c)):
        return float(trace)
    return float(max(u_b, m.u_c))


def outgoing_boundary_state(trace: float, u_b: float, m: FluxModel) -> float:
    """Mirror of :func:`incoming_boundary_state` for a left edge end."""
    if m.u_c is None:
        return float(u_b)
    if trace >= m.u_c and m.f(trace) <= m.f(min(u_b, m.u_c)):
        return float(trace)
    return float(min(u_b, m.u_c))


def edge_boundary_states(u_b: float, tr: JunctionTraces, models: Sequence[FluxModel]) -> tuple[float, float, float]:
    """State each edge actually takes at the junction once ``u_b`` is known.

    Whenever a wave enters an edge from the junction this equals ``u_b``;
    an edge whose own flow leaves through the junction keeps its trace.
    """
    return (
        incoming_boundary_state(tr.in1, u_b, models[0]),
        incoming_boundary_state(tr.in2, u_b, models[1]),
        outgoing_boundary_state(tr.out3, u_b, models[2]),
    )
