import itertools

import numpy as np
import pytest

from schottky_lab.eigen import (
    check_commuting,
    commuting_pair_2_3,
    eigen_defect,
    eigenvalue_series,
    formal_eigenfunction,
    kp_pair_residual,
    laurent_potential_from_w,
    perturb_w,
    rational_pair,
    wave_recursion,
)
from schottky_lab.errors import NoSolution, NotCommuting, ResidueObstruction
from schottky_lab.operators import DiffOp
from schottky_lab.series import BiSeries, MultiSeries, TaylorSeries

X0 = 0.4


def one(x0=X0, order=24):
    return TaylorSeries.constant(1.0, x0, order)


def test_free_operator_eigenfunction():
    for n in (2, 3, 4):
        e = formal_eigenfunction(DiffOp({n: one()}), depth=8)
        assert e.xi[0].distance(one()) == 0
        assert all(x.max_abs() == 0 for x in e.xi[1:])


def test_normalization_and_defect():
    rng = np.random.default_rng(0)
    u0 = TaylorSeries(X0, rng.normal(size=25) * 0.5 ** np.arange(25))
    u1 = TaylorSeries(X0, rng.normal(size=25) * 0.5 ** np.arange(25))
    L = DiffOp({3: one(), 1: u1, 0: u0})
    e = formal_eigenfunction(L, depth=12)
    assert e.depth == 12
    assert all(abs(x.c[0]) == 0 for x in e.xi[1:])
    assert eigen_defect(L, e) < 1e-12


def test_order2_first_coefficient():
    rng = np.random.default_rng(1)
    u = TaylorSeries(X0, rng.normal(size=25) * 0.5 ** np.arange(25))
    e = formal_eigenfunction(DiffOp({2: one(), 0: u}), depth=4)
    assert e.xi[1].distance(u.integrate() * -0.5) < 1e-14


def test_eigenvalue_self():
    L1, _ = rational_pair(1.0)
    A = eigenvalue_series(L1, L1, depth=8).series
    assert A.top == 2
    assert abs(A.a[0] - 1) < 1e-14 and np.max(np.abs(A.a[1:])) < 1e-12


def test_rational_pair_eigenvalue():
    A1 = eigenvalue_series(*rational_pair(1.0)).series
    A2 = eigenvalue_series(*rational_pair(2.0)).series
    assert A1.top == 3 and abs(A1.a[0] - 1) < 1e-14
    assert np.max(np.abs(A1.a[1:])) < 1e-10
    assert np.max(np.abs(A1.a - A2.a)) < 1e-10


def test_non_commuting_rejected():
    rng = np.random.default_rng(2)
    L1 = DiffOp({2: one(), 0: TaylorSeries(X0, rng.normal(size=25) * 0.5 ** np.arange(25))})
    L2 = DiffOp({3: one(), 0: TaylorSeries(X0, rng.normal(size=25) * 0.5 ** np.arange(25))})
    with pytest.raises(NotCommuting):
        check_commuting(L1, L2)


def test_pair_zero_potential():
    L1, L2 = commuting_pair_2_3(TaylorSeries.zero(X0, 24))
    assert L2.coeffs[1].max_abs() == 0 and L2.coeffs[0].max_abs() == 0
    assert check_commuting(L1, L2) == 0


def test_pair_rational_potential():
    x0 = 1.0
    _, L2 = commuting_pair_2_3(TaylorSeries.power(-2, x0, 24, -2.0))
    assert L2.coeffs[1].distance(TaylorSeries.power(-2, x0, 24, -3.0)) < 1e-13
    assert L2.coeffs[0].distance(TaylorSeries.power(-3, x0, 23, 3.0)) < 1e-13


def test_pair_no_solution():
    with pytest.raises(NoSolution):
        commuting_pair_2_3(TaylorSeries.variable(X0, 24))


# --- KP pair ---------------------------------------------------------------


def test_kp_pair_zero():
    z = MultiSeries.zero((0.0, 0.0, 0.0), (6, 6, 6))
    assert kp_pair_residual(z, z, "first").max_abs() == 0
    assert kp_pair_residual(z, z, "second").max_abs() == 0


def test_kp_pair_stationary_first_equation():
    rng = np.random.default_rng(3)
    f = TaylorSeries(0.0, rng.normal(size=13) * 0.5 ** np.arange(13))
    u2 = MultiSeries.from_taylor(f, 0, (0.0, 0.0), (12, 6))
    u3 = MultiSeries.from_taylor(f.deriv(2).integrate() * (-1.0 / 3.0), 0, (0.0, 0.0), (11, 6))
    assert kp_pair_residual(u2, u3, "first").max_abs() < 1e-14


def test_kp_pair_random_fails():
    rng = np.random.default_rng(4)
    u2 = BiSeries((0.0, 0.0), rng.normal(size=(8, 8)))
    u3 = BiSeries((0.0, 0.0), rng.normal(size=(8, 8)))
    assert kp_pair_residual(u2, u3, "first").max_abs() > 1e-2


def _series_of(func, orders, r=0.5, n=32):
    """Taylor coefficients at 0 of an analytic function of several variables (polydisk FFT)."""
    th = np.exp(2j * np.pi * np.arange(n) / n)
    grids = np.meshgrid(*([r * th] * len(orders)), indexing="ij")
    c = np.fft.fftn(func(*grids)) / n ** len(orders)
    idx = np.ix_(*[np.arange(o + 1) for o in orders])
    scale = r ** -np.add.outer(np.add.outer(np.arange(orders[0] + 1), np.arange(orders[1] + 1)), np.arange(orders[2] + 1))
    return MultiSeries((0.0, 0.0, 0.0), c[idx] * scale)


def test_kp_pair_one_soliton():
    # tau = 1 + exp(k x + k^2 t2 + k^3 t3): u2 = k^2 s (1 - s), u3 = k^3 s^2 (1 - s), s the logistic
    k = 0.7
    s = lambda x, y, t: 1.0 / (1.0 + np.exp(-(k * x + k * k * y + k**3 * t)))  # noqa: E731
    orders = (10, 10, 10)
    u2 = _series_of(lambda x, y, t: k**2 * s(x, y, t) * (1 - s(x, y, t)), orders)
    u3 = _series_of(lambda x, y, t: k**3 * s(x, y, t) ** 2 * (1 - s(x, y, t)), orders)
    low = lambda m: m.c[:5, :5, :5]  # noqa: E731
    for mode in ("first", "second"):
        assert np.max(np.abs(low(kp_pair_residual(u2, u3, mode, form="lax")))) < 1e-10
        assert np.max(np.abs(low(kp_pair_residual(u2, u3, mode, form="printed")))) > 1e-2


# --- wave recursion --------------------------------------------------------


def test_wave_zero_potential():
    u = BiSeries((0.0, 0.0), np.zeros((12, 12)))
    res = wave_recursion(u, 0.0, depth=5)
    assert all(x.max_abs() == 0 for x in res.xi[1:])


def test_wave_regular_equation():
    rng = np.random.default_rng(5)
    u = BiSeries((0.0, 0.0), rng.normal(size=(16, 16)) * 0.5 ** np.add.outer(np.arange(16), np.arange(16)))
    res = wave_recursion(u, 0.0, depth=3)
    # xi_{s+1}' is fixed by 2 xi_{s+1,x} = xi_{s,y} - xi_{s,xx} - u xi_s
    for s in range(2):
        a, b = res.xi[s], res.xi[s + 1]
        rhs = a.deriv(1, 1) - a.deriv(2, 0) - u * a
        lhs = b.deriv(1, 0) * 2.0
        n0, n1 = min(lhs.c.shape[0], rhs.c.shape[0]), min(lhs.c.shape[1], rhs.c.shape[1])
        assert np.max(np.abs(lhs.c[:n0, :n1] - rhs.c[:n0, :n1])) < 1e-12


@pytest.fixture(scope="module")
def pot():
    return laurent_potential_from_w(0.1, 0.3, [0.2, -0.1, 0.05], others={0: [0.3, 0.1], 2: [0.05]})


def test_wave_laurent_simple_poles(pot):
    assert pot.eq_d_residual() < 1e-14
    fam = wave_recursion(pot, 0.0, depth=10).family
    assert all(fam.pole_order(s) <= 1 for s in range(1, 11))
    assert max(abs(r) for r in itertools.chain.from_iterable(np.ravel(x) for x in fam.residues)) < 1e-12


def test_wave_laurent_obstruction(pot):
    bad = perturb_w(pot, [1e-2])
    assert bad.eq_d_residual() == pytest.approx(2e-2)
    with pytest.raises(ResidueObstruction) as exc:
        wave_recursion(bad, 0.0, depth=10)
    assert exc.value.s == 1
