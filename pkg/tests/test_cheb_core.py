import numpy as np
import numpy.polynomial.chebyshev as C
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netcheb.cheb_core import (
    DEFAULT_BETA,
    MACHINE_EPS,
    FilterSpec,
    apply_filter,
    cgl_points,
    derivative_coeffs,
    derivative_matrix,
    evaluate,
    filter_value,
    forward_transform,
    inverse_transform,
    product_coeffs,
    product_tensor,
)

degrees = st.integers(min_value=2, max_value=80)


# --- grid -----------------------------------------------------------------------


def test_grid_n2_points_and_weights():
    g = cgl_points(2)
    np.testing.assert_allclose(g.points, [1.0, 0.0, -1.0], atol=0)
    np.testing.assert_allclose(g.quad_weights, [np.pi / 4, np.pi / 2, np.pi / 4])
    np.testing.assert_allclose(g.norm_factors, [np.pi, np.pi / 2, np.pi])


def test_grid_n4_second_point():
    assert cgl_points(4).points[1] == pytest.approx(np.cos(np.pi / 4), abs=1e-15)


@given(degrees)
def test_grid_invariants(n):
    g = cgl_points(n)
    assert g.points[0] == 1.0 and g.points[-1] == -1.0
    assert np.all(np.diff(g.points) < 0)
    np.testing.assert_allclose(g.points, np.cos(np.pi * np.arange(n + 1) / n), atol=1e-15)
    assert g.quad_weights.sum() == pytest.approx(np.pi)


@pytest.mark.parametrize("bad", [0, 1, -3, 2.5])
def test_grid_rejects_small_or_fractional_degree(bad):
    with pytest.raises(ValueError):
        cgl_points(bad)


# --- transforms -----------------------------------------------------------------


def test_forward_constant_and_linear():
    g = cgl_points(9)
    e0 = np.zeros(10)
    e0[0] = 1
    e1 = np.zeros(10)
    e1[1] = 1
    np.testing.assert_allclose(forward_transform(np.ones(10), g), e0, atol=1e-15)
    np.testing.assert_allclose(forward_transform(g.points, g), e1, atol=1e-15)


def test_inverse_unit_vectors():
    n = 7
    g = cgl_points(n)
    eye = np.eye(n + 1)
    np.testing.assert_allclose(inverse_transform(eye[0], g), np.ones(n + 1), atol=1e-15)
    np.testing.assert_allclose(inverse_transform(eye[1], g), g.points, atol=1e-15)
    np.testing.assert_allclose(inverse_transform(eye[n], g), (-1.0) ** np.arange(n + 1), atol=1e-14)


@given(degrees, st.integers(0, 2**32 - 1))
def test_roundtrip_and_fast_equals_direct(n, seed):
    g = cgl_points(n)
    v = np.random.default_rng(seed).normal(size=n + 1)
    fast = forward_transform(v, g)
    direct = forward_transform(v, g, method="direct")
    assert np.max(np.abs(fast - direct)) <= 1e-12
    assert np.max(np.abs(inverse_transform(fast, g) - v)) <= 1e-12


def test_inverse_matches_series_evaluation(rng):
    g = cgl_points(17)
    c = rng.normal(size=18)
    np.testing.assert_allclose(inverse_transform(c, g), evaluate(c, g.points), atol=1e-13)


def test_transform_along_axis(rng):
    g = cgl_points(6)
    v = rng.normal(size=(3, 7, 2))
    out = forward_transform(v, g, axis=1)
    for i in range(3):
        for j in range(2):
            np.testing.assert_allclose(out[i, :, j], forward_transform(v[i, :, j], g), atol=1e-15)


def test_transform_length_mismatch():
    g = cgl_points(4)
    with pytest.raises(ValueError):
        forward_transform(np.ones(4), g)
    with pytest.raises(ValueError):
        inverse_transform(np.ones(6), g)


# --- derivative -----------------------------------------------------------------


def test_derivative_examples():
    eye = np.eye(6)
    np.testing.assert_allclose(derivative_coeffs(eye[1]), eye[0])
    np.testing.assert_allclose(derivative_coeffs(eye[2]), 4 * eye[1])
    np.testing.assert_allclose(derivative_coeffs(eye[3]), 3 * eye[0] + 6 * eye[2])


@pytest.mark.parametrize("n", [2, 5, 16, 33, 64])
def test_derivative_of_monomials(n):
    g = cgl_points(n)
    x = g.points
    for m in range(n + 1):
        d = derivative_coeffs(forward_transform(x**m, g))
        expect = forward_transform(m * x ** max(m - 1, 0), g) if m else np.zeros(n + 1)
        assert np.max(np.abs(d - expect)) <= 1e-10, m


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_derivative_matches_numpy_chebder_and_dense_matrix(n, seed):
    c = np.random.default_rng(seed).normal(size=n + 1)
    expect = np.zeros(n + 1)
    expect[:n] = C.chebder(c)
    np.testing.assert_allclose(derivative_coeffs(c), expect, atol=1e-11 * n * n)
    np.testing.assert_allclose(derivative_matrix(n) @ c, expect, atol=1e-11 * n * n)


def test_derivative_matrix_matches_one_indexed_table():
    # 1-indexed table: first row D_{1,n} = n - 1 for even n; other rows
    # D_{k,n} = 2(n - 1) for k < n with k + n odd.
    n = 9
    size = n + 1
    table = np.zeros((size, size))
    for k in range(1, size + 1):
        for col in range(1, size + 1):
            if col > k and (k + col) % 2 == 1:
                table[k - 1, col - 1] = (col - 1) if k == 1 else 2 * (col - 1)
    np.testing.assert_array_equal(derivative_matrix(n), table)


# --- product --------------------------------------------------------------------


def test_product_examples():
    eye = np.eye(5)
    g = np.arange(1.0, 6.0)
    np.testing.assert_allclose(product_coeffs(eye[0], g), g)
    np.testing.assert_allclose(product_coeffs(eye[1], eye[1]), 0.5 * eye[0] + 0.5 * eye[2])
    np.testing.assert_allclose(product_coeffs(eye[4], eye[1]), 0.5 * eye[3])


def test_product_matches_truncated_exact_expansion(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 30))
        f, g = rng.normal(size=(2, n + 1))
        exact = C.chebmul(f, g)[: n + 1]
        worst = max(worst, np.max(np.abs(product_coeffs(f, g) - exact)))
    assert worst <= 1e-10


@pytest.mark.parametrize("n", [2, 6, 11])
def test_product_matches_dense_tensor(n, rng):
    P = product_tensor(n)
    f, g = rng.normal(size=(2, n + 1))
    np.testing.assert_allclose(product_coeffs(f, g), np.einsum("knm,n,m->k", P, f, g), atol=1e-13)


def test_product_matches_fine_grid_oracle(rng):
    n = 24
    for _ in range(50):
        df, dg = rng.integers(0, n // 2 + 1, size=2)
        f = np.zeros(n + 1)
        g = np.zeros(n + 1)
        f[: df + 1] = rng.normal(size=df + 1)
        g[: dg + 1] = rng.normal(size=dg + 1)
        fine = cgl_points(2 * n)
        vals = evaluate(f, fine.points) * evaluate(g, fine.points)
        expect = forward_transform(vals, fine)[: n + 1]
        assert np.max(np.abs(product_coeffs(f, g) - expect)) <= 1e-10


def test_product_shape_mismatch():
    with pytest.raises(ValueError):
        product_coeffs(np.ones(3), np.ones(4))


# --- filter ---------------------------------------------------------------------


def test_filter_value_examples():
    spec = FilterSpec()
    assert spec.beta == pytest.approx(DEFAULT_BETA)
    assert filter_value(0.0, spec) == 1.0
    assert filter_value(-0.1, spec) == 0.0
    assert filter_value(1.5, spec) == 0.0
    assert filter_value(1.0, spec) == pytest.approx(MACHINE_EPS, rel=1e-12)


def test_apply_filter_examples():
    n = 12
    spec = FilterSpec(p=10)
    eye = np.eye(n + 1)
    np.testing.assert_array_equal(apply_filter(eye[0], spec), eye[0])
    np.testing.assert_allclose(apply_filter(eye[n], spec), MACHINE_EPS * eye[n], rtol=1e-12)


def test_high_order_filter_leaves_low_modes():
    n = 40
    sigma = apply_filter(np.ones(n + 1), FilterSpec(p=64))
    assert np.max(np.abs(sigma[: n // 2 + 1] - 1.0)) < 1e-6


@given(st.integers(2, 64), st.sampled_from([2, 4, 6, 10]), st.floats(0.1, 40.0))
def test_filter_twice_equals_double_beta(n, p, beta):
    c = np.random.default_rng(n).normal(size=n + 1)
    twice = apply_filter(apply_filter(c, FilterSpec(p, beta)), FilterSpec(p, beta))
    once = apply_filter(c, FilterSpec(p, 2 * beta))
    np.testing.assert_allclose(twice, once, rtol=1e-13, atol=1e-300)


def test_filter_monotone_on_unit_interval():
    eta = np.linspace(0, 1, 1001)
    vals = filter_value(eta, FilterSpec(p=6))
    assert np.all(np.diff(vals) <= 0)


@pytest.mark.parametrize("p,beta", [(0, 1.0), (4, 0.0), (4, -1.0)])
def test_filter_spec_validation(p, beta):
    with pytest.raises(ValueError):
        FilterSpec(p=p, beta=beta)
