import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from schottky_lab.errors import NonUnitLeadingCoefficient, NotMonic, TruncationUnderflow
from schottky_lab.operators import (
    DiffOp,
    PseudoDiffOp,
    b2_closed_form,
    b3_closed_form,
    commutator,
    compose,
    d_op,
    dress,
    identity_like,
    inverse,
    lax_operator,
    mul_op,
    normal_form_order2,
    power_plus_and_residue,
)
from schottky_lab.series import TaylorSeries

X0 = 0.3


def rand_series(rng, order=24, x0=X0):
    return TaylorSeries(x0, rng.normal(size=order + 1) * 0.5 ** np.arange(order + 1))


def is_zero(P, tol=1e-12):
    return all(v.max_abs() < tol for v in P.coeffs.values())


def test_d_after_x():
    x = TaylorSeries.variable(X0, 10)
    out = compose(d_op(1, x), mul_op(x))
    assert out.coeffs[1].distance(x) < 1e-15
    assert out.coeffs[0].distance(TaylorSeries.constant(1.0, X0, 10)) < 1e-15


def test_inverse_d_after_d():
    one = TaylorSeries.constant(1.0, X0, 10)
    out = compose(d_op(-1, one), d_op(1, one), depth=8)
    assert out.coeffs[0].distance(one) == 0
    assert all(v.max_abs() == 0 for k, v in out.coeffs.items() if k != 0)


def test_inverse_d_after_f():
    rng = np.random.default_rng(1)
    f = rand_series(rng)
    out = compose(d_op(-1, f), mul_op(f), depth=6)
    for j in range(1, 7):
        expect = f.deriv(j - 1) * (-1.0) ** (j - 1)
        assert out.coeffs[-j].distance(expect) < 1e-12
    with pytest.raises(TruncationUnderflow):
        out.coeff(-8)


def test_associativity():
    rng = np.random.default_rng(2)
    P = PseudoDiffOp({1: rand_series(rng), 0: rand_series(rng), -1: rand_series(rng)}, depth=8)
    Q = PseudoDiffOp({2: rand_series(rng), -1: rand_series(rng)}, depth=8)
    R = PseudoDiffOp({1: rand_series(rng), -2: rand_series(rng)}, depth=8)
    a = compose(compose(P, Q), R)
    b = compose(P, compose(Q, R))
    assert a.distance(b) <= 1e-10 * max(1.0, a.norm())


def test_commutator_self_and_heisenberg():
    rng = np.random.default_rng(3)
    P = DiffOp([rand_series(rng), rand_series(rng), rand_series(rng)])
    assert is_zero(commutator(P, P))
    x = TaylorSeries.variable(X0, 10)
    c = commutator(d_op(1, x), mul_op(x))
    assert c.coeffs[0].distance(TaylorSeries.constant(1.0, X0, 10)) < 1e-15
    assert all(v.max_abs() == 0 for k, v in c.coeffs.items() if k != 0)


def test_rational_pair_commutes():
    x0 = 1.0
    one = TaylorSeries.constant(1.0, x0, 24)
    L1 = DiffOp({2: one, 0: TaylorSeries.power(-2, x0, 24, -2.0)})
    L2 = DiffOp({3: one, 1: TaylorSeries.power(-2, x0, 24, -3.0), 0: TaylorSeries.power(-3, x0, 24, 3.0)})
    assert is_zero(commutator(L1, L2), 1e-10)


def test_normal_form_canonical():
    rng = np.random.default_rng(4)
    u = rand_series(rng)
    L = DiffOp({2: TaylorSeries.constant(1.0, X0, 24), 0: u})
    out, rec = normal_form_order2(L)
    assert out.coeffs[0].distance(u) < 1e-15
    assert rec.phi.distance(TaylorSeries.constant(1.0, X0, 24)) < 1e-15


@pytest.mark.parametrize("mode", ["divide", "liouville"])
def test_normal_form_constants(mode):
    a, b, c = 2.0, 0.6, 1.5
    k = lambda v: TaylorSeries.constant(v, X0, 16)  # noqa: E731
    out, _ = normal_form_order2(DiffOp({2: k(a), 1: k(b), 0: k(c)}), mode)
    assert out.coeffs[2].distance(k(1.0)) < 1e-14
    assert 1 not in out.coeffs or out.coeffs[1].max_abs() < 1e-14
    expect = c / a - b * b / (4 * a * a) if mode == "divide" else c - b * b / (4 * a)
    assert abs(out.coeffs[0].c[0] - expect) < 1e-12


def test_normal_form_vanishing_leading():
    x = TaylorSeries.variable(0.0, 8)
    with pytest.raises(NonUnitLeadingCoefficient):
        normal_form_order2(DiffOp({2: x, 0: x}))


def test_dress_trivial():
    one = TaylorSeries.constant(1.0, X0, 16)
    _, L = dress(identity_like(one))
    assert L.coeffs[1].distance(one) == 0
    assert all(v.max_abs() == 0 for k, v in L.coeffs.items() if k != 1)


def test_dress_inverse_and_residue():
    rng = np.random.default_rng(5)
    one = TaylorSeries.constant(1.0, X0, 24)
    w1, w2 = rand_series(rng), rand_series(rng)
    W = PseudoDiffOp({0: one, -1: w1, -2: w2})
    Winv, L = dress(W)
    # deep coefficients carry factorially growing derivatives: compare relative to |W^-1|
    defect = (compose(W, Winv) - identity_like(one)).norm()
    assert defect <= 1e-14 * Winv.norm()
    assert 0 not in L.coeffs or L.coeffs[0].max_abs() < 1e-14
    assert L.coeffs[-1].distance(-w1.deriv()) < 1e-12


def test_dress_requires_monic():
    rng = np.random.default_rng(6)
    with pytest.raises(NotMonic):
        dress(PseudoDiffOp({0: rand_series(rng) + 3.0, -1: rand_series(rng)}))


def test_inverse_order0():
    rng = np.random.default_rng(7)
    one = TaylorSeries.constant(1.0, X0, 24)
    W = PseudoDiffOp({0: one, -1: rand_series(rng)})
    Winv = inverse(W, 6)
    prod = compose(W, Winv)
    assert prod.coeffs[0].distance(one) < 1e-12


@given(st.integers(0, 2**31))
def test_sato_closed_forms(seed):
    rng = np.random.default_rng(seed)
    u2, u3 = rand_series(rng), rand_series(rng)
    L = lax_operator([u2, u3, rand_series(rng)])
    B1, F1 = power_plus_and_residue(L, 1)
    assert B1.coeffs[1].max_abs() == 1 and F1.distance(u2) == 0
    B2, _ = power_plus_and_residue(L, 2)
    B3, _ = power_plus_and_residue(L, 3)
    assert B2.distance(b2_closed_form(u2)) < 1e-12
    assert B3.distance(b3_closed_form(u2, u3)) < 1e-12
