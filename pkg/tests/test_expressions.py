import numpy as np
import pytest
from hypothesis import given, strategies as st

from colombeau.expressions import ExpressionError, SmoothExpr


def test_values():
    e = SmoothExpr("sin(x) * exp(t) + x**2", ("x", "t"))
    x, t = np.array([0.3, -0.2]), np.array([0.1, 0.5])
    np.testing.assert_allclose(e(x, t), np.sin(x) * np.exp(t) + x**2)


def test_constant_broadcasts():
    e = SmoothExpr("2*pi", ("x",))
    out = e(np.zeros((3, 4)))
    assert out.shape == (3, 4)
    assert np.all(out == 2 * np.pi)


def test_bump_support_and_value():
    e = SmoothExpr("bump(x, 0.2, 0.5)", ("x",))
    assert e(np.array([0.2]))[0] == pytest.approx(np.exp(-1))
    assert np.all(e(np.array([-0.3, 0.7, 1.0])) == 0)


@pytest.mark.parametrize("text", ["sin(x)*tanh(x)", "bump(x, 0.1, 0.6)*(1 + x)", "exp(-x**2)*cos(3*x)"])
def test_derivative_against_finite_differences(text):
    e = SmoothExpr(text, ("x",))
    x = np.linspace(-0.4, 0.5, 7)
    h = 1e-5
    fd = (e(x + h) - e(x - h)) / (2 * h)
    np.testing.assert_allclose(e.derivative((1,), x), fd, rtol=1e-6, atol=1e-8)
    fd2 = (e.derivative((1,), x + h) - e.derivative((1,), x - h)) / (2 * h)
    np.testing.assert_allclose(e.derivative((2,), x), fd2, rtol=1e-6, atol=1e-7)


def test_mixed_partial():
    e = SmoothExpr("sin(x*t)", ("x", "t"))
    x, t = np.array([0.4]), np.array([0.7])
    # d^2/dx dt sin(xt) = cos(xt) - x t sin(xt)
    ref = np.cos(0.28) - 0.28 * np.sin(0.28)
    assert e.derivative((1, 1), x, t)[0] == pytest.approx(ref)


@pytest.mark.parametrize("bad", ["log(x)", "y + 1", "", "x +", "sqrt(x)"])
def test_rejects_off_grammar(bad):
    with pytest.raises(ExpressionError):
        SmoothExpr(bad, ("x",))


def test_rejects_variable_not_declared():
    with pytest.raises(ExpressionError):
        SmoothExpr("t", ("x",))


@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linear_expression(a, b):
    e = SmoothExpr(f"{a!r}*x + {b!r}", ("x",))
    assert e(np.array([1.5]))[0] == pytest.approx(1.5 * a + b, abs=1e-12)
    assert e.derivative((1,), np.array([0.0]))[0] == pytest.approx(a, abs=1e-12)
