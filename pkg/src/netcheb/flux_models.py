"""Bell-shaped flux functions and the Godunov numerical flux."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

BOUND_TOL = 1e-12


@dataclass(frozen=True)
class FluxModel:
    """A scalar flux with the data the junction and CFL logic need.

    Fluxes are expected to vanish at 0 and ``u_max``, increase below
    ``u_c`` and decrease above it. That ``f'`` is not constant on any
    subinterval is left to the caller; it cannot be checked from samples.

    ``u_c=None`` marks a flux that is not known to be unimodal; the
    Godunov flux then falls back to a grid search.
    """

    name: str
    f: Callable
    f_prime: Callable
    u_max: float = 1.0
    u_c: float | None = 0.5
    lipschitz: float = 1.0

    def __call__(self, u):
        return self.f(u)


def lwr_flux() -> FluxModel:
    """Greenshields/LWR traffic flux ``u (1 - u)``."""
    return FluxModel(
        name="lwr",
        f=lambda u: u * (1.0 - u),
        f_prime=lambda u: 1.0 - 2.0 * u,
        u_max=1.0,
        u_c=0.5,
        lipschitz=1.0,
    )


def lwr_extended_flux(u_max: float = 2.0) -> FluxModel:
    """``u (1 - u)`` on the widened state range ``[0, u_max]``.

    For data that start above the jam density. The flux is still concave, so
    the closed-form Godunov flux stays exact, but it is negative above 1.
    """
    if u_max < 1.0:
        raise ValueError(f"u_max must be at least 1, got {u_max}")
    return FluxModel(
        name="lwr_extended",
        f=lambda u: u * (1.0 - u),
        f_prime=lambda u: 1.0 - 2.0 * u,
        u_max=u_max,
        u_c=0.5,
        lipschitz=2.0 * u_max - 1.0,
    )


def linear_flux(speed: float = 1.0) -> FluxModel:
    """Linear advection ``f(u) = speed * u``; for tests of the collocation operators only."""
    return FluxModel(
        name="linear",
        f=lambda u: speed * np.asarray(u, dtype=float),
        f_prime=lambda u: np.full_like(np.asarray(u, dtype=float), speed),
        u_max=1.0,
        u_c=None,
        lipschitz=abs(speed),
    )


_REGISTRY: dict[str, Callable[[], FluxModel]] = {
    "lwr": lwr_flux,
    "lwr_extended": lwr_extended_flux,
    "linear": linear_flux,
}


def register_flux(name: str, factory: Callable[[], FluxModel]) -> None:
    """Make a user flux selectable by name in experiment configs."""
    _REGISTRY[name] = factory


def get_flux(name: str) -> FluxModel:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown flux {name!r}; registered: {sorted(_REGISTRY)}") from None


def _check_range(model: FluxModel, *args):
    for v in args:
        v = np.asarray(v)
        if np.any(v < -BOUND_TOL) or np.any(v > model.u_max + BOUND_TOL):
            raise ValueError(f"Godunov flux arguments must lie in [0, {model.u_max}]")


def godunov_flux(model: FluxModel, a, b):
    """Godunov flux: min of f over [a, b] if a <= b, max over [b, a] otherwise.

    For a unimodal flux this is ``min(f(min(a, u_c)), f(max(b, u_c)))``
    (demand of the left state against supply of the right state).
    Vectorised over ``a`` and ``b``.
    """
    if isinstance(a, (float, int)) and isinstance(b, (float, int)) and model.u_c is not None:
        if not (-BOUND_TOL <= a <= model.u_max + BOUND_TOL and -BOUND_TOL <= b <= model.u_max + BOUND_TOL):
            raise ValueError(f"Godunov flux arguments must lie in [0, {model.u_max}], got ({a}, {b})")
        a = min(max(a, 0.0), model.u_max)
        b = min(max(b, 0.0), model.u_max)
        return float(min(model.f(min(a, model.u_c)), model.f(max(b, model.u_c))))
    _check_range(model, a, b)
    a = np.clip(a, 0.0, model.u_max)
    b = np.clip(b, 0.0, model.u_max)
    if model.u_c is None:
        return godunov_flux_bruteforce(model, a, b)
    out = np.minimum(model.f(np.minimum(a, model.u_c)), model.f(np.maximum(b, model.u_c)))
    return float(out) if np.ndim(out) == 0 else out


def godunov_flux_bruteforce(model: FluxModel, a, b, samples: int = 100_001):
    """Grid-search min/max over the interval between ``a`` and ``b``."""
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a_arr.shape)
    t = np.linspace(0.0, 1.0, samples)
    for idx in np.ndindex(a_arr.shape):
        lo, hi = a_arr[idx], b_arr[idx]
        vals = model.f(lo + (hi - lo) * t)
        out[idx] = vals.min() if lo <= hi else vals.max()
    return float(out) if out.ndim == 0 else out
