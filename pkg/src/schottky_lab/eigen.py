"""Formal eigenfunctions, eigenvalue series, commuting pairs and the wave recursion.

Conventions
-----------
* ``formal_eigenfunction`` solves ``L psi = k^n psi`` with
  ``psi = exp(k (x - x0)) sum_s xi_s(x) k^-s``, ``xi_0 = 1`` and
  ``xi_s(x0) = 0``.
* ``wave_recursion`` solves ``(d_x^2 + u) psi = d_y psi`` with
  ``psi = exp(k x + (k^2 + b) y) (1 + sum_s xi_s k^-s)``, i.e.
  ``2 d_x xi_{s+1} = d_y xi_s - d_x^2 xi_s - (u - b) xi_s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import convolve

from .errors import NoSolution, NotCommuting, ResidueObstruction, TruncationUnderflow
from .operators import DiffOp, PseudoDiffOp, commutator
from .series import BiSeries, MultiSeries, TaylorSeries, gbinom

DEFAULT_EIGEN_DEPTH = 12
COMMUTE_TOL = 1e-9


# ---------------------------------------------------------------------------
# formal eigenfunction of an ordinary differential operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenSeries:
    """``xi_0, ..., xi_S`` of the normalized formal eigenfunction of an order-``n`` operator."""

    xi: tuple
    x0: complex
    n: int

    @property
    def depth(self) -> int:
        return len(self.xi) - 1


def _canonical_parts(L: PseudoDiffOp) -> tuple[int, dict]:
    if not L.is_differential:
        raise ValueError("expected a differential operator")
    n = L.top
    lead = L.coeffs[n]
    if np.max(np.abs(lead.c - np.eye(1, lead.c.size, 0).ravel())) > 1e-12:
        raise ValueError("operator is not canonical: leading coefficient must be 1")
    sub = L.coeffs.get(n - 1)
    if n >= 1 and sub is not None and sub.max_abs() > 1e-12:
        raise ValueError("operator is not canonical: subleading coefficient must vanish")
    return n, {i: u for i, u in L.coeffs.items() if i <= n - 2}


def _d(f: TaylorSeries, k: int) -> TaylorSeries | None:
    if k == 0:
        return f
    if k >= f.c.size:
        return None
    return f.deriv(k)


def _accumulate(acc, term):
    if term is None:
        return acc
    return term if acc is None else acc + term


def formal_eigenfunction(L: PseudoDiffOp, depth: int = DEFAULT_EIGEN_DEPTH) -> EigenSeries:
    """Normalized formal eigenfunction of a canonical ``L = d^n + u_{n-2} d^{n-2} + ... + u_0``.

    The coefficient of ``k^{n-1-m}`` in ``exp(-kx) (L - k^n) psi`` is
    ``n xi_m' + sum_{j>=2} C(n,j) xi_{m+1-j}^(j) + sum_i u_i sum_j C(i,j) xi_{m-(n-1-i)-j}^(j)``;
    setting it to zero determines ``xi_m'`` from lower ``xi``.

    Raises
    ------
    TruncationUnderflow
        The series order is exhausted before depth ``S``.
    """
    n, us = _canonical_parts(L)
    lead = L.coeffs[n]
    x0 = lead.x0
    order = min(u.order for u in L.coeffs.values())
    if n < 1:
        raise ValueError("order must be >= 1")
    xi = [TaylorSeries.constant(1.0, x0, order)]
    for m in range(1, depth + 1):
        acc = None
        for j in range(2, n + 1):
            s = m + 1 - j
            if s >= 0:
                t = _d(xi[s], j)
                acc = _accumulate(acc, None if t is None else t * gbinom(n, j))
        for i, u in us.items():
            for j in range(0, i + 1):
                s = m - (n - 1 - i) - j
                if s >= 0:
                    t = _d(xi[s], j)
                    acc = _accumulate(acc, None if t is None else u * t * gbinom(i, j))
        if acc is None:
            nxt = TaylorSeries.zero(x0, xi[-1].order)
        else:
            if acc.c.size < 1:
                raise TruncationUnderflow(f"series order exhausted at s={m}")
            nxt = (acc * (-1.0 / n)).integrate(0.0)
        xi.append(nxt)
    return EigenSeries(tuple(xi), x0, n)


def eigen_defect(L: PseudoDiffOp, eig: EigenSeries) -> float:
    """Largest coefficient of ``exp(-kx)(L - k^n) psi`` at powers ``k^{n-1}..k^{n-1-S}``.

    Expands ``sum_i u_i (d + k)^i`` applied to ``sum_s xi_s k^-s`` term by term
    (independently of the solver's rearrangement).  Each power is measured
    relative to its largest contributing term (floored at 1).
    """
    n = eig.n
    S = eig.depth
    coeffs: dict[int, TaylorSeries] = {}
    scale: dict[int, float] = {}

    def add(p, term):
        coeffs[p] = coeffs[p] + term if p in coeffs else term
        scale[p] = max(scale.get(p, 1.0), term.max_abs())

    for i, u in L.coeffs.items():
        for j in range(0, i + 1):
            for s, xs in enumerate(eig.xi):
                p = i - j - s
                if p == n:
                    continue  # the k^n terms cancel against k^n psi
                t = _d(xs, j)
                if t is None:
                    continue
                add(p, u * t * gbinom(i, j))
    # subtract k^n psi: contributes k^{n-s} xi_s for s >= 1
    for s in range(1, S + 1):
        add(n - s, -eig.xi[s])
    worst = 0.0
    for p, c in coeffs.items():
        if n - 1 - S <= p <= n - 1:
            worst = max(worst, c.max_abs() / scale[p])
    return worst


# ---------------------------------------------------------------------------
# eigenvalue series A(k)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LaurentK:
    """Laurent series ``sum_r a[r] k^{top - r}`` in ``1/k``."""

    top: int
    a: np.ndarray

    def coefficient(self, power: int) -> complex:
        r = self.top - power
        if r < 0:
            return 0j
        if r >= self.a.size:
            raise TruncationUnderflow(f"k^{power} below the known depth")
        return complex(self.a[r])

    @property
    def lowest(self) -> int:
        return self.top - self.a.size + 1

    def __mul__(self, other: "LaurentK") -> "LaurentK":
        n = min(self.a.size, other.a.size)
        return LaurentK(self.top + other.top, np.convolve(self.a[:n], other.a[:n])[:n])

    def __pow__(self, b: int) -> "LaurentK":
        out = LaurentK(0, np.eye(1, self.a.size, 0, dtype=complex).ravel())
        for _ in range(b):
            out = out * self
        return out


@dataclass(frozen=True, eq=False)
class EigenvalueSeries:
    """``A(k) = psi^-1 L_2 psi`` with its constancy certificate."""

    series: LaurentK
    constancy: float
    x0: complex


def check_commuting(L1: PseudoDiffOp, L2: PseudoDiffOp, tol: float = COMMUTE_TOL) -> float:
    """Relative norm of ``[L1, L2]``; raises :class:`NotCommuting` above ``tol``."""
    C = commutator(L1, L2)
    scale = max(1.0, L1.norm() * L2.norm())
    rel = C.norm() / scale
    if rel > tol:
        raise NotCommuting(f"[L1, L2] has relative norm {rel:.3e}")
    return rel


def eigenvalue_series(
    L1: PseudoDiffOp, L2: PseudoDiffOp, depth: int = DEFAULT_EIGEN_DEPTH, tol: float = COMMUTE_TOL
) -> EigenvalueSeries:
    """Eigenvalue ``A(k)`` of ``L2`` on the formal eigenfunction of ``L1``.

    ``A_r(x) = F_r(x) - sum_{s=1..r} xi_s(x) A_{r-s}(x)`` where ``F_r`` is the
    coefficient of ``k^{m-r}`` in ``exp(-kx) L2 psi``; each ``A_r`` must be
    constant in ``x`` and ``constancy`` records the largest deviation.

    Raises
    ------
    NotCommuting
        ``[L1, L2]`` is not zero to truncation.
    """
    check_commuting(L1, L2, tol)
    eig = formal_eigenfunction(L1, depth)
    m = L2.top
    F = []
    for r in range(depth + 1):
        acc = None
        for j, v in L2.coeffs.items():
            for l in range(0, j + 1):
                s = r - (m - j) - l
                if 0 <= s <= depth:
                    t = _d(eig.xi[s], l)
                    acc = _accumulate(acc, None if t is None else v * t * gbinom(j, l))
        F.append(acc if acc is not None else TaylorSeries.zero(eig.x0, eig.xi[-1].order))
    A: list[TaylorSeries] = []
    for r in range(depth + 1):
        cur = F[r]
        for s in range(1, r + 1):
            cur = cur - eig.xi[s] * A[r - s]
        A.append(cur)
    a = np.array([Ar.c[0] for Ar in A])
    scale = max(1.0, float(np.max(np.abs(a))))
    const = max((float(np.max(np.abs(Ar.c[1:]))) if Ar.c.size > 1 else 0.0) for Ar in A) / scale
    return EigenvalueSeries(LaurentK(m, a), const, eig.x0)


# ---------------------------------------------------------------------------
# explicit n=2, m=3 commuting pairs
# ---------------------------------------------------------------------------


def pair_constraint(u0: TaylorSeries, c1: complex) -> TaylorSeries:
    """``1/4 u0''' + (3/2 u0 + c1/2) u0'``."""
    d1 = u0.deriv()
    return u0.deriv(3) * 0.25 + (u0 * 1.5 + c1 * 0.5) * d1


def commuting_pair_2_3(u0: TaylorSeries, c1: complex = 0.0, tol: float = 1e-9) -> tuple[DiffOp, DiffOp]:
    """``(d^2 + u0, d^3 + v1 d + v0)`` with ``v1 = 3/2 u0 + c1/2`` and ``v0 = 3/4 u0'``.

    Raises
    ------
    NoSolution
        ``u0`` violates the third-order constraint for this ``c1``.
    """
    d1 = u0.deriv()
    t3 = u0.deriv(3) * 0.25
    t1 = (u0 * 1.5 + c1 * 0.5) * d1
    res = (t3 + t1).max_abs()
    scale = max(t3.max_abs(), t1.max_abs())
    if res > tol * max(scale, 1.0):
        raise NoSolution(f"constraint residual {res:.3e} (scale {scale:.3e})")
    one = TaylorSeries.constant(1.0, u0.x0, u0.order)
    v1 = u0 * 1.5 + c1 * 0.5
    v0 = d1 * 0.75
    L1 = DiffOp({0: u0, 2: one})
    L2 = DiffOp({0: v0, 1: v1, 3: one})
    return L1, L2


def rational_pair(x0, order: int = 24) -> tuple[DiffOp, DiffOp]:
    """``(d^2 - 2/x^2, d^3 - 3/x^2 d + 3/x^3)`` expanded at ``x0``."""
    one = TaylorSeries.constant(1.0, x0, order)
    L1 = DiffOp({0: TaylorSeries.power(-2, x0, order, -2.0), 2: one})
    L2 = DiffOp({0: TaylorSeries.power(-3, x0, order, 3.0), 1: TaylorSeries.power(-2, x0, order, -3.0), 3: one})
    return L1, L2


# ---------------------------------------------------------------------------
# KP pair from the Lax calculus
# ---------------------------------------------------------------------------

KP_FORMS = {
    # (coefficient of u3_x in the first equation,
    #  signs (a, b, c) in 2 u2_t3 = 3 (u2_x + u3)_t2 - (a u2_xx + b u3_x + c u2^2)_x)
    "printed": (3.0, (1.0, -3.0, 3.0)),
    "lax": (2.0, (1.0, 3.0, -3.0)),
}


def kp_pair_residual(u2: MultiSeries, u3: MultiSeries, mode: str = "first", form: str = "printed") -> MultiSeries:
    """Series residual of the two-equation KP system.

    Axes: ``x`` is 0, ``t2`` is 1 and (mode ``second``) ``t3`` is 2.
    ``form="printed"`` uses ``u2_t2 = u2_xx + 3 u3_x`` and
    ``2 u2_t3 = 3 (u2_x + u3)_t2 - (u2_xx - 3 u3_x + 3 u2^2)_x``;
    ``form="lax"`` uses the coefficients obtained from ``[B_n, L]``:
    ``u2_t2 = u2_xx + 2 u3_x`` and
    ``2 u2_t3 = 3 (u2_x + u3)_t2 - (u2_xx + 3 u3_x - 3 u2^2)_x``.

    Raises
    ------
    TruncationUnderflow
        A required axis is missing or too short.
    """
    k3, (a, b, c) = KP_FORMS[form]
    need = 2 if mode == "first" else 3
    if u2.ndim < need or u3.ndim < need:
        raise TruncationUnderflow(f"mode {mode!r} needs {need} series axes")
    if min(u2.orders[:need]) < 1 or u2.orders[0] < 3:
        raise TruncationUnderflow("series too short for the required derivatives")
    if mode == "first":
        return u2.deriv(1, 1) - u2.deriv(2, 0) - u3.deriv(1, 0) * k3
    if mode == "second":
        lhs = u2.deriv(1, 2) * 2.0
        inner = (u2.deriv(1, 0) + u3).deriv(1, 1) * 3.0
        flux = (u2.deriv(2, 0) * a + u3.deriv(1, 0) * b + (u2 * u2) * c).deriv(1, 0)
        return lhs - inner + flux
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# wave recursion with Laurent certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Laurent:
    """``X^-m P(X, y)`` with ``P`` a coefficient array ``[X power, y power]``."""

    m: int
    P: np.ndarray

    def coeff_row(self, k: int) -> np.ndarray:
        """y-coefficients of ``X^k``."""
        i = k + self.m
        if i < 0:
            return np.zeros(self.P.shape[1], complex)
        if i >= self.P.shape[0]:
            raise TruncationUnderflow("Laurent coefficient beyond the known X-order")
        return self.P[i]

    def shift_to(self, m: int) -> "_Laurent":
        if m < self.m:
            raise ValueError("can only lower the leading power")
        pad = np.zeros((m - self.m, self.P.shape[1]), complex)
        return _Laurent(m, np.concatenate([pad, self.P]))

    def known_top(self) -> int:
        return self.P.shape[0] - 1 - self.m

    def __add__(self, other: "_Laurent") -> "_Laurent":
        m = max(self.m, other.m)
        a, b = self.shift_to(m), other.shift_to(m)
        nx = min(a.P.shape[0], b.P.shape[0])
        ny = min(a.P.shape[1], b.P.shape[1])
        return _Laurent(m, a.P[:nx, :ny] + b.P[:nx, :ny])

    def __neg__(self):
        return _Laurent(self.m, -self.P)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a) -> "_Laurent":
        return _Laurent(self.m, self.P * a)

    def __mul__(self, other: "_Laurent") -> "_Laurent":
        nx = min(self.P.shape[0], other.P.shape[0])
        ny = min(self.P.shape[1], other.P.shape[1])
        full = convolve(self.P[:nx, :ny], other.P[:nx, :ny], method="direct")
        return _Laurent(self.m + other.m, full[:nx, :ny])

    def dX(self) -> "_Laurent":
        # d/dX (X^-m P) = X^-(m+1) (X P' - m P)
        P = self.P
        Pp = P[1:] * np.arange(1, P.shape[0])[:, None]
        XPp = np.concatenate([np.zeros((1, P.shape[1]), complex), Pp])
        return _Laurent(self.m + 1, XPp - self.m * P)

    def dy(self) -> "_Laurent":
        P = self.P
        return _Laurent(self.m, P[:, 1:] * np.arange(1, P.shape[1])[None, :])

    def times_y(self, s: np.ndarray) -> "_Laurent":
        """Multiply by a function of ``y`` alone (coefficient array ``s``)."""
        ny = min(self.P.shape[1], s.size)
        out = np.array([np.convolve(row[:ny], s[:ny])[:ny] for row in self.P])
        return _Laurent(self.m, out)


@dataclass(frozen=True, eq=False)
class LaurentPotential:
    """``u = -2/X^2 + sum_{k>=0} u_k(y) X^k`` with ``X = x - path(y)``.

    ``regular[k, j]`` is the ``y^j`` coefficient of ``u_k`` (so ``u_0 = v``
    and ``u_1 = w``), all expanded at ``y0 = path.x0``.
    """

    path: TaylorSeries
    regular: np.ndarray

    @property
    def y0(self) -> complex:
        return self.path.x0

    def v(self) -> TaylorSeries:
        return TaylorSeries(self.y0, self.regular[0])

    def w(self) -> TaylorSeries:
        return TaylorSeries(self.y0, self.regular[1])

    def eq_d_residual(self) -> float:
        """``max |x''(y) + 2 w(y)|`` over the known y-coefficients."""
        return (self.path.deriv(2) + self.w() * 2.0).max_abs()

    def as_laurent(self) -> _Laurent:
        ny = self.regular.shape[1]
        P = np.zeros((self.regular.shape[0] + 2, ny), complex)
        P[0, 0] = -2.0
        P[2:] = self.regular
        return _Laurent(2, P)


def laurent_potential_from_w(
    x0: complex,
    x1: complex,
    w_poly: Sequence[complex],
    others: dict[int, Sequence[complex]] | None = None,
    x_order: int = 24,
    y_order: int = 24,
    y0: complex = 0.0,
    path_degree: int = 8,
) -> LaurentPotential:
    """Potential whose pole path satisfies ``x'' = -2 w`` by construction.

    ``w_poly`` lists polynomial coefficients of ``w(y)`` (degree at most
    ``path_degree - 2``); the path is ``x0 + x1 (y - y0)`` plus the double
    integral of ``-2 w``.  ``others`` gives y-polynomials for the remaining
    coefficients ``u_k`` (``k != 1``), zero when absent.
    """
    if len(w_poly) > path_degree - 1:
        raise ValueError(f"w has degree above {path_degree - 2}")
    w = np.zeros(y_order + 1, complex)
    w[: len(w_poly)] = w_poly
    wser = TaylorSeries(y0, w)
    path = (wser * -2.0).integrate(x1).integrate(x0)
    path = TaylorSeries(y0, np.concatenate([path.c[: path_degree + 1], np.zeros(y_order - path_degree)]))
    reg = np.zeros((x_order + 1, y_order + 1), complex)
    reg[1] = w
    for k, coeffs in (others or {}).items():
        if k == 1:
            raise ValueError("u_1 = w is fixed by the path")
        reg[k, : len(coeffs)] = coeffs
    return LaurentPotential(path, reg)


def perturb_w(pot: LaurentPotential, delta: Sequence[complex]) -> LaurentPotential:
    """Same path, ``w`` shifted by the y-polynomial ``delta`` (breaks ``x'' = -2w``)."""
    reg = pot.regular.copy()
    reg[1, : len(delta)] += np.asarray(delta, dtype=complex)
    return LaurentPotential(pot.path, reg)


@dataclass(frozen=True, eq=False)
class LaurentFamily:
    """Laurent coefficients ``r[s][k + 1]`` (``k >= -1``) of each ``xi_s`` about the pole path."""

    path: TaylorSeries
    r: tuple
    third_order: tuple
    residues: tuple
    propagation: tuple

    def coefficient(self, s: int, k: int) -> TaylorSeries:
        return TaylorSeries(self.path.x0, self.r[s][k + 1])

    def pole_order(self, s: int, tol: float = 1e-10) -> int:
        """1 when ``r_{s,-1}`` is nonzero, else 0 (higher poles are never stored)."""
        return int(np.max(np.abs(self.r[s][0])) > tol)


@dataclass(frozen=True, eq=False)
class WaveResult:
    """Output of :func:`wave_recursion`: ``xi`` (regular case) or ``family`` (Laurent case)."""

    xi: tuple = ()
    family: LaurentFamily | None = None
    b: complex = 0.0


def _residue_expr(xi: _Laurent, pot: LaurentPotential, b: complex) -> np.ndarray:
    """``r_{-1}' - (v - b) r_{-1} + 2 r_1`` as y-coefficients."""
    r_m1 = xi.coeff_row(-1)
    r_1 = xi.coeff_row(1)
    ny = min(r_m1.size - 1, pot.regular.shape[1], r_1.size)
    dr = r_m1[1:] * np.arange(1, r_m1.size)
    vb = pot.regular[0].copy()
    vb[0] -= b
    prod = np.convolve(vb[:ny], r_m1[:ny])[:ny]
    return dr[:ny] - prod + 2 * r_1[:ny]


def wave_recursion(
    u: BiSeries | LaurentPotential,
    b: complex = 0.0,
    depth: int = 10,
    tol: float = 1e-9,
) -> WaveResult:
    """Coefficients ``xi_1..xi_S`` of the formal wave solution of ``(d_x^2 + u) psi = d_y psi``.

    Regular case (``u`` a :class:`BiSeries` in ``(x, y)``): each ``xi_{s+1}``
    is the ``x``-antiderivative vanishing at ``x = x0``.

    Laurent case (``u`` a :class:`LaurentPotential`): ``xi_s`` is expanded
    in ``X = x - path(y)``; ``d_y`` at fixed ``x`` acts as ``d_y - path' d_X``.
    The integration constant ``r_{s+1,0}`` is zero.  At each step the
    ``X^-3`` coefficient of the right-hand side (third-order pole) and its
    ``X^-1`` coefficient (log-term obstruction) are recorded.

    Raises
    ------
    ResidueObstruction
        The right-hand side built from ``xi_{s+1}`` has a residue above
        ``tol`` (relative), i.e. the induction step from ``s`` to ``s + 1``
        fails; ``.s`` is that ``s``.
    """
    if isinstance(u, LaurentPotential):
        return _wave_laurent(u, complex(b), depth, tol)
    return _wave_regular(u, complex(b), depth)


def _wave_regular(u: MultiSeries, b: complex, depth: int) -> WaveResult:
    xi = [u.like(MultiSeries.constant(1.0, u.base, u.orders).c)]
    ub = u - b
    for s in range(depth):
        cur = xi[-1]
        rhs = cur.deriv(1, 1) - cur.deriv(2, 0) - ub * cur
        xi.append((rhs * 0.5).integrate(0))
    return WaveResult(xi=tuple(xi), b=b)


def _wave_laurent(pot: LaurentPotential, b: complex, depth: int, tol: float) -> WaveResult:
    uL = pot.as_laurent()
    bconst = np.zeros((uL.P.shape[0], uL.P.shape[1]), complex)
    bconst[0, 0] = -b
    ub = uL + _Laurent(0, bconst)
    pdot = pot.path.deriv().c
    nx, ny = pot.regular.shape[0], pot.regular.shape[1]
    P0 = np.zeros((nx, ny), complex)
    P0[0, 0] = 1.0
    cur = _Laurent(0, P0)  # xi_0 = 1
    rs = [cur.shift_to(1).P]
    thirds, residues, props = [], [], []
    for s in range(depth):
        dy_fixed_x = cur.dy() - cur.dX().times_y(pdot)
        rhs = dy_fixed_x - cur.dX().dX() - ub * cur
        rhs = rhs.shift_to(max(rhs.m, 3))
        third = np.max(np.abs(rhs.coeff_row(-3)))
        res = rhs.coeff_row(-1)
        scale = max(1.0, float(np.max(np.abs(rhs.P[: rhs.m + 2]))))
        thirds.append(third)
        residues.append(float(np.max(np.abs(res))))
        if np.max(np.abs(res)) > tol * scale:
            raise ResidueObstruction(s - 1 if s >= 1 else 0, float(np.max(np.abs(res))))
        # 2 d_X xi_{s+1} = rhs:  r_{s+1,k+1} = rhs_k / (2 (k+1)), r_{s+1,0} = 0
        top = rhs.known_top()
        rows = []
        for k in range(-1, top + 2):
            if k == 0:
                rows.append(np.zeros(rhs.P.shape[1], complex))
            else:
                rows.append(rhs.coeff_row(k - 1) / (2.0 * k))
        nxt = _Laurent(1, np.array(rows))
        props.append(float(np.max(np.abs(_residue_expr(nxt, pot, b)))) if s + 1 < depth else float("nan"))
        rs.append(nxt.P)
        cur = nxt
    fam = LaurentFamily(pot.path, tuple(rs), tuple(thirds), tuple(residues), tuple(props))
    return WaveResult(family=fam, b=b)
