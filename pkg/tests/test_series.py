import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from schottky_lab.series import BiSeries, MultiSeries, TaylorSeries, gbinom

coef = st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False), min_size=3, max_size=12)


def test_gbinom():
    assert gbinom(5, 2) == 10
    assert gbinom(-1, 3) == -1
    assert gbinom(-2, 2) == 3
    assert gbinom(2, 3) == 0


def test_power_negative():
    s = TaylorSeries.power(-2, 1.0, 6)
    assert np.allclose(s.c, [(-1) ** j * (j + 1) for j in range(7)])
    with pytest.raises(ZeroDivisionError):
        TaylorSeries.power(-1, 0.0)


def test_inverse_and_evaluation():
    x = TaylorSeries.variable(2.0, 20)
    inv = x.inverse()
    assert inv(2.1) == pytest.approx(1 / 2.1, rel=1e-14)
    assert (x * inv).distance(TaylorSeries.constant(1.0, 2.0, 20)) < 1e-14


def test_exp_log_sqrt():
    x = TaylorSeries.variable(0.0, 20)
    e = x.exp()
    assert e(0.3) == pytest.approx(np.exp(0.3), rel=1e-14)
    assert (e.log() - x).max_abs() < 1e-13
    s = (x + 1.0).sqrt()
    assert (s * s - (x + 1.0)).max_abs() < 1e-13


def test_reversion():
    x = TaylorSeries.variable(0.0, 16)
    f = x + x * x * 0.5
    g = f.reversion()
    assert (f.compose(g) - x).max_abs() < 1e-12


@given(coef, coef)
def test_product_rule(a, b):
    n = min(len(a), len(b))
    f, g = TaylorSeries(0.5, a[:n]), TaylorSeries(0.5, b[:n])
    lhs = (f * g).deriv()
    rhs = f.deriv() * g + f * g.deriv()
    assert lhs.distance(rhs) < 1e-10


@given(coef)
def test_integrate_deriv(a):
    f = TaylorSeries(0.0, a)
    back = f.integrate(a[0]).deriv()
    assert back.distance(f) < 1e-12


def test_known_order_tracks_derivatives():
    f = TaylorSeries.variable(1.0, 10)
    assert f.deriv(3).order == 7
    assert f.integrate().order == 11


def test_basepoint_mismatch():
    with pytest.raises(ValueError):
        TaylorSeries.variable(0.0) + TaylorSeries.variable(1.0)


def test_multiseries():
    x = MultiSeries.from_taylor(TaylorSeries.variable(0.0, 6), 0, (0.0, 0.0), (6, 6))
    y = MultiSeries.from_taylor(TaylorSeries.variable(0.0, 6), 1, (0.0, 0.0), (6, 6))
    f = x * x * y
    assert f(0.2, 0.3) == pytest.approx(0.012)
    assert f.deriv(1, axis=1)(0.2, 0.3) == pytest.approx(0.04)
    assert f.integrate(axis=0).deriv(1, axis=0).distance(f) < 1e-15


def test_biseries():
    c = np.arange(12.0).reshape(3, 4)
    b = BiSeries((0.0, 0.0), c)
    assert isinstance(b.dx(), BiSeries)
    assert b.dy().c.shape == (3, 3)
    with pytest.raises(ValueError):
        BiSeries((0.0,), np.zeros(3))
