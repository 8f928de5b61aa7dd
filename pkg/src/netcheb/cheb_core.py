"""Chebyshev-Gauss-Lobatto grids and coefficient-space operators.

Coefficient vectors hold ``c_k`` for ``u(x) = sum_k c_k T_k(x)``, k = 0..N.
Every operator takes an ``axis`` argument so the same code serves the
space-time solver, where coefficients live in a 2D array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

MACHINE_EPS = float(np.finfo(float).eps)
DEFAULT_BETA = -np.log(MACHINE_EPS)


@dataclass(frozen=True)
class CglGrid:
    """CGL nodes ``x_j = cos(pi j / N)`` with quadrature weights and norms.

    ``quad_weights`` are the Gauss-Lobatto weights ``w_n`` and
    ``norm_factors`` the discrete norms ``gamma_k = sum_n T_k(x_n)^2 w_n``.
    """

    n: int
    points: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    norm_factors: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n + 1

    def spacing(self) -> float:
        """Smallest distance between neighbouring nodes."""
        return float(np.min(np.abs(np.diff(self.points))))


def cgl_points(n: int) -> CglGrid:
    if int(n) != n or n < 2:
        raise ValueError(f"CGL grid needs an integer degree n >= 2, got {n!r}")
    n = int(n)
    j = np.arange(n + 1)
    # sin form is exactly antisymmetric and hits 0 exactly for even n
    points = np.sin(np.pi * (n - 2 * j) / (2 * n))
    w = np.full(n + 1, np.pi / n)
    w[[0, -1]] = np.pi / (2 * n)
    gamma = np.full(n + 1, np.pi / 2)
    gamma[[0, -1]] = np.pi
    for arr in (points, w, gamma):
        arr.flags.writeable = False
    return CglGrid(n, points, w, gamma)


def _check_len(arr: np.ndarray, grid: CglGrid, axis: int, what: str) -> None:
    if arr.shape[axis] != grid.size:
        raise ValueError(
            f"{what} has length {arr.shape[axis]} along axis {axis}, grid expects {grid.size}"
        )


def chebyshev_matrix(grid: CglGrid) -> np.ndarray:
    """``T[j, k] = T_k(x_j)`` evaluated as ``cos(pi j k / N)``."""
    j = np.arange(grid.size)
    return np.cos(np.pi * np.outer(j, j) / grid.n)


def forward_transform(values, grid: CglGrid, *, axis: int = -1, method: str = "fast") -> np.ndarray:
    """Nodal values on ``grid`` to Chebyshev coefficients.

    ``method="direct"`` evaluates the quadrature sum
    ``c_k = (1/gamma_k) sum_n u_n T_k(x_n) w_n`` as a matrix product;
    ``method="fast"`` uses a type-I DCT and agrees with it to roundoff.
    """
    values = np.asarray(values, dtype=float)
    _check_len(values, grid, axis, "values")
    if method == "direct":
        weighted = chebyshev_matrix(grid) * grid.quad_weights[:, None] / grid.norm_factors[None, :]
        return np.moveaxis(np.tensordot(np.moveaxis(values, axis, -1), weighted, axes=(-1, 0)), -1, axis)
    if method != "fast":
        raise ValueError(f"unknown transform method {method!r}")
    y = sfft.dct(values, type=1, axis=axis) / grid.n
    edge = [slice(None)] * y.ndim
    edge[axis] = [0, -1]
    y[tuple(edge)] *= 0.5
    return y


def inverse_transform(coeffs, grid: CglGrid, *, axis: int = -1) -> np.ndarray:
    """Chebyshev coefficients to nodal values ``sum_k c_k T_k(x_j)``."""
    c = np.asarray(coeffs, dtype=float)
    _check_len(c, grid, axis, "coefficients")
    c = c.copy()
    edge = [slice(None)] * c.ndim
    edge[axis] = [0, -1]
    c[tuple(edge)] *= 2.0
    return 0.5 * sfft.dct(c, type=1, axis=axis)


def evaluate(coeffs, x) -> np.ndarray:
    """Evaluate a Chebyshev series at arbitrary points in [-1, 1]."""
    return np.polynomial.chebyshev.chebval(np.asarray(x, dtype=float), np.asarray(coeffs, dtype=float))


def derivative_coeffs(coeffs, *, axis: int = -1) -> np.ndarray:
    """Coefficients of d/dx of a Chebyshev series, same length as the input.

    Closed form of the backward recurrence:
    ``b_k = (2 / cbar_k) sum_{n > k, n + k odd} n a_n`` with ``cbar_0 = 2``.
    """
    a = np.moveaxis(np.asarray(coeffs, dtype=float), axis, -1)
    n = a.shape[-1] - 1
    na = a * np.arange(n + 1)
    b = np.zeros_like(a)
    # s[k] = sum_{m >= k, m = k mod 2} n a_n; b_k = 2 s[k + 1]
    s = np.zeros_like(a)
    for parity in (0, 1):
        sel = na[..., parity::2]
        s[..., parity::2] = np.cumsum(sel[..., ::-1], axis=-1)[..., ::-1]
    b[..., :n] = 2.0 * s[..., 1:]
    b[..., 0] *= 0.5
    return np.moveaxis(b, -1, axis)


def product_coeffs(f, g) -> np.ndarray:
    """Degree-N truncation of the Chebyshev product of two series.

    Uses ``T_n T_m = (T_{n+m} + T_{|n-m|}) / 2``: the ``n + m`` part is a
    convolution, the ``|n - m|`` part a correlation. Modes above N are
    dropped, not aliased.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError(f"product needs equal-length 1D inputs, got {f.shape} and {g.shape}")
    n = f.size - 1
    conv = np.convolve(f, g)[: n + 1]
    # corr[n + d] = sum_i f_i g_{i + d}, d in [-n, n]
    corr = np.correlate(g, f, mode="full")
    diff = corr[n:].copy()
    diff[1:] += corr[n - 1 :: -1]
    return 0.5 * (conv + diff)


def product_tensor(n: int) -> np.ndarray:
    """Dense ``P[k, n, m]`` with ``(fg)_k = sum P[k, n, m] f_n g_m`` (test oracle, O(N^3) memory)."""
    P = np.zeros((n + 1, n + 1, n + 1))
    idx = np.arange(n + 1)
    nn, mm = np.meshgrid(idx, idx, indexing="ij")
    for k in (nn + mm, np.abs(nn - mm)):
        ok = k <= n
        np.add.at(P, (k[ok], nn[ok], mm[ok]), 0.5)
    return P


def derivative_matrix(n: int) -> np.ndarray:
    """Dense ``D[k, m]`` mapping coefficients to derivative coefficients."""
    k = np.arange(n + 1)[:, None]
    m = np.arange(n + 1)[None, :]
    D = np.where((m > k) & ((m + k) % 2 == 1), 2.0 * m, 0.0)
    D[0] *= 0.5
    return D


@dataclass(frozen=True)
class FilterSpec:
    """Exponential filter ``sigma(eta) = exp(-beta eta^p)`` on [0, 1]."""

    p: int = 10
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError(f"filter order must be positive, got {self.p}")
        if self.beta <= 0:
            raise ValueError(f"filter damping must be positive, got {self.beta}")


def filter_value(eta, spec: FilterSpec):
    eta = np.asarray(eta, dtype=float)
    inside = (eta >= 0.0) & (eta <= 1.0)
    out = np.where(inside, np.exp(-spec.beta * np.where(inside, eta, 0.0) ** spec.p), 0.0)
    return float(out) if out.ndim == 0 else out


def filter_factors(n: int, spec: FilterSpec) -> np.ndarray:
    return filter_value(np.arange(n + 1) / n, spec)


def apply_filter(coeffs, spec: FilterSpec, *, axis: int = -1) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    sigma = filter_factors(c.shape[axis] - 1, spec)
    shape = [1] * c.ndim
    shape[axis] = sigma.size
    return c * sigma.reshape(shape)
