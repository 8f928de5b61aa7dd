"""Filtered Chebyshev collocation for scalar conservation laws on a 2-in/1-out junction."""

from netcheb.cheb_core import (
    CglGrid,
    FilterSpec,
    apply_filter,
    cgl_points,
    derivative_coeffs,
    filter_value,
    forward_transform,
    inverse_transform,
    product_coeffs,
)
from netcheb.errors import (
    CflViolation,
    ConfigError,
    MaxIterations,
    NetchebError,
    NoSignChange,
    NonConvergence,
    NonPositiveError,
    SolverFailure,
    ZeroReference,
)
from netcheb.flux_models import FluxModel, get_flux, godunov_flux, lwr_flux, register_flux

__version__ = "0.1.0"

__all__ = [
    "CglGrid",
    "FilterSpec",
    "FluxModel",
    "apply_filter",
    "cgl_points",
    "derivative_coeffs",
    "filter_value",
    "forward_transform",
    "get_flux",
    "godunov_flux",
    "inverse_transform",
    "lwr_flux",
    "product_coeffs",
    "register_flux",
    "CflViolation",
    "ConfigError",
    "MaxIterations",
    "NetchebError",
    "NoSignChange",
    "NonConvergence",
    "NonPositiveError",
    "SolverFailure",
    "ZeroReference",
]
