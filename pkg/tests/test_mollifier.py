import csv

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from colombeau.mollifier import (
    MollifierError, build_mollifier, bump_derivative, moment, scale,
)

mpmath.mp.dps = 30


def mp_kernel(m, deriv=0):
    """The kernel as an mpmath function, built from its coefficients only."""
    r, s = m.support_radius, m.sharpness

    def phi(y):
        z = y / r
        if abs(z) >= 1:
            return mpmath.mpf(0)
        poly = sum(mpmath.mpf(c) * z**j for j, c in enumerate(m.coeffs))
        return poly * mpmath.exp(-s / (1 - z * z)) / r

    if deriv == 0:
        return phi
    return lambda y: mpmath.diff(phi, y, deriv)


def mp_moment(m, k):
    phi = mp_kernel(m)
    r = m.support_radius
    return float(mpmath.quad(lambda y: y**k * phi(y), [-r, 0, r]))


@pytest.mark.parametrize("q", [0, 1, 2, 3, 4])
def test_moments_against_mpmath_oracle(q):
    m = build_mollifier(q)
    assert abs(mp_moment(m, 0) - 1.0) <= 1e-10
    for k in range(1, q + 1):
        assert abs(mp_moment(m, k)) <= 1e-10


@pytest.mark.parametrize("q", range(0, 9))
def test_internal_moments(q):
    m = build_mollifier(q)
    assert abs(moment(m, 0) - 1) <= 1e-10
    for k in range(1, q + 1):
        assert abs(moment(m, k)) <= 1e-10


def test_odd_moment_vanishes_by_symmetry():
    m = build_mollifier(1)
    assert abs(moment(m, 1)) <= 1e-15
    m2 = build_mollifier(2)
    assert abs(moment(m2, 3)) <= 1e-10


def test_even_block_matches_full_moment_system():
    # the full (q+1)x(q+1) Hankel system in all powers has the same solution
    q = 4
    m = build_mollifier(q)
    mu = [mp_moment(build_mollifier(0), j) for j in range(2 * q + 1)]
    base = build_mollifier(0).coeffs[0]
    mu = np.array(mu) / base  # moments of the bare bump
    H = np.array([[mu[i + j] for j in range(q + 1)] for i in range(q + 1)])
    rhs = np.zeros(q + 1)
    rhs[0] = 1.0
    full = np.linalg.solve(H, rhs)
    coeffs = np.zeros(q + 1)
    coeffs[: len(m.coeffs)] = m.coeffs
    np.testing.assert_allclose(coeffs, full, rtol=1e-7, atol=1e-7)


@pytest.mark.parametrize("q", [0, 1, 2, 3])
def test_nesting(q):
    m = build_mollifier(q + 1)
    assert abs(moment(m, 0) - 1) <= 1e-10
    for k in range(1, q + 1):
        assert abs(moment(m, k)) <= 1e-10


def test_support_and_determinism():
    m = build_mollifier(3, support_radius=0.7)
    y = np.linspace(-2, 2, 4001)
    assert np.all(m(y)[np.abs(y) > 0.7] == 0)
    assert build_mollifier(3, support_radius=0.7) == m
    assert np.array_equal(build_mollifier(3, 0.7)(y), m(y))


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_analytic_derivatives_against_mpmath(order, m2):
    d = mp_kernel(m2, order)
    for y in (-0.8, -0.3, 0.05, 0.6, 0.93):
        ref = float(d(mpmath.mpf(y)))
        assert m2(np.array([y]), order)[0] == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_derivatives_vanish_at_support_edge(m2):
    for order in range(6):
        vals = m2(np.array([-1.0, 1.0, 0.9999999, -1.5]), order)
        assert np.all(np.isfinite(vals))
        assert np.all(np.abs(vals) < 1e-100)


def test_cdf(m2):
    phi = mp_kernel(m2)
    for y in (-0.7, -0.1, 0.0, 0.4, 0.95):
        ref = float(mpmath.quad(phi, [-1, y]))
        assert m2.cdf(np.array([y]))[0] == pytest.approx(ref, abs=1e-13)
    assert m2.cdf(np.array([-1.0, -3.0]))[0] == 0.0
    assert np.all(m2.cdf(np.array([1.0, 2.0])) == 1.0)


def test_critical_points_are_extrema(m2):
    for order in (0, 1, 2):
        crit = m2.critical_points(order)
        assert len(crit) >= 1
        assert np.all(np.abs(m2(crit, order + 1)) <= 1e-9 * np.max(np.abs(m2(np.linspace(-1, 1, 2001), order + 1))))
        assert np.all(np.abs(crit) < 1)


def test_errors():
    with pytest.raises(ValueError):
        build_mollifier(-1)
    with pytest.raises(ValueError):
        build_mollifier(2, support_radius=0)
    with pytest.raises(ValueError):
        scale(build_mollifier(0), 0.0)
    with pytest.raises(ValueError):
        moment(build_mollifier(0), -1)
    with pytest.raises(MollifierError):
        build_mollifier(40)


def test_scale_examples():
    m = build_mollifier(2)
    s = scale(m, 0.5)
    assert s.support_radius == 0.5
    assert abs(moment(s, 0) - 1) <= 1e-10
    assert abs(moment(scale(m, 0.1), 2)) <= 1e-12
    y = np.linspace(-1.2, 1.2, 100)
    np.testing.assert_array_equal(scale(m, 1.0)(y), m(y))


@given(eps=st.floats(1e-4, 2.0), k=st.integers(0, 4), q=st.integers(0, 3))
def test_scaling_law(eps, k, q):
    m = build_mollifier(q)
    assert moment(scale(m, eps), k) == pytest.approx(eps**k * moment(m, k), abs=1e-10, rel=1e-9)


@given(eps=st.floats(1e-3, 1.0), x=st.floats(-1.0, 1.0))
def test_scaled_pointwise(eps, x):
    m = build_mollifier(2)
    assert scale(m, eps)(np.array([x]))[0] == pytest.approx(m(np.array([x / eps]))[0] / eps, rel=1e-12, abs=0)


def test_tensor_product(m2):
    s = scale(m2, 0.3)
    x, y = np.array([0.1]), np.array([-0.05])
    assert s.tensor(x, y)[0] == pytest.approx(s(x)[0] * s(y)[0])


def test_sharpness_gives_distinct_kernel():
    a, b = build_mollifier(2), build_mollifier(2, sharpness=2.0)
    assert a != b
    y = np.linspace(-0.9, 0.9, 11)
    assert not np.allclose(a(y), b(y))
    assert abs(moment(b, 2)) <= 1e-10


def test_bump_derivative_polynomial_times_bump():
    z = np.array([0.3])
    val = bump_derivative(z, 0, (1.0, 0.0, 2.0))
    assert val[0] == pytest.approx((1 + 2 * 0.09) * np.exp(-1 / (1 - 0.09)))


def test_to_csv(tmp_path, m2):
    path = tmp_path / "k.csv"
    m2.to_csv(path, samples=11)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["y", "value"]
    assert len(rows) == 12
    assert float(rows[6][0]) == 0.0
    assert float(rows[6][1]) == pytest.approx(m2(np.array([0.0]))[0])
