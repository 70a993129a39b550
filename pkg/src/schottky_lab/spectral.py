"""Spectral curves of commuting differential operators.

Given commuting ``L1`` (order ``n``) and ``L2`` (order ``m``) with the
eigenvalue series ``A(k)`` of ``L2`` on the formal eigenfunction of ``L1``,
the polynomial relation ``Q(alpha, beta) = 0`` is found by requiring
``Q(k^n, A(k))`` to vanish through the known depth.  ``alpha`` carries
weight ``n`` and ``beta`` weight ``m``; ``Q`` is monic in ``beta^n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import ellipk

from .eigen import DEFAULT_EIGEN_DEPTH, LaurentK, eigenvalue_series
from .errors import NoRelationAtDepth
from .operators import PseudoDiffOp, compose, identity_like
from .series import TaylorSeries

RESIDUAL_TOL = 1e-8
ROUND_TOL = 1e-9
MAX_DENOMINATOR = 10_000


def _round_part(x: float) -> float | Fraction:
    f = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    return f if abs(float(f) - x) <= ROUND_TOL else x


def round_coefficient(z: complex) -> complex:
    """Snap real and imaginary parts to nearby small rationals (``|error| <= 1e-9``)."""
    re, im = _round_part(z.real), _round_part(z.imag)
    return complex(float(re), float(im))


def _fmt_part(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def format_coefficient(z: complex) -> str:
    re, im = _round_part(z.real), _round_part(z.imag)
    if float(im) == 0.0:
        return _fmt_part(re)
    if float(re) == 0.0:
        return f"{_fmt_part(im)}i"
    return f"({_fmt_part(re)}{'+' if float(im) > 0 else '-'}{_fmt_part(abs(im) if isinstance(im, Fraction) else abs(float(im)))}i)"


@dataclass(frozen=True, eq=False)
class BivariatePoly:
    """``Q(alpha, beta) = sum c[(a, b)] alpha^a beta^b`` with weights ``(n, m)``."""

    coeffs: dict
    n: int
    m: int
    residual: float = 0.0
    depth: int = 0

    def weighted_degree(self) -> int:
        return max(self.n * a + self.m * b for (a, b), c in self.coeffs.items() if c != 0)

    def __call__(self, alpha, beta) -> complex:
        return sum(c * alpha**a * beta**b for (a, b), c in self.coeffs.items())

    def on_series(self, A: LaurentK) -> LaurentK:
        """``Q(k^n, A(k))`` as a Laurent series in ``1/k``."""
        top = self.n * self.m
        size = A.a.size
        out = np.zeros(size, complex)
        for (a, b), c in self.coeffs.items():
            t = A**b
            shift = top - (self.n * a + t.top)
            if shift < size:
                out[shift:] += c * t.a[: size - shift]
        return LaurentK(top, out)

    def terms(self) -> list:
        """``(a, b, c)`` sorted by descending weighted degree, then descending ``b``."""
        items = [(a, b, c) for (a, b), c in self.coeffs.items() if abs(c) > 0]
        return sorted(items, key=lambda t: (-(self.n * t[0] + self.m * t[1]), -t[1], -t[0]))

    def __str__(self) -> str:
        parts = []
        for a, b, c in self.terms():
            mono = "*".join(
                s for s in (
                    "" if a == 0 else ("alpha" if a == 1 else f"alpha^{a}"),
                    "" if b == 0 else ("beta" if b == 1 else f"beta^{b}"),
                ) if s
            )
            coef = format_coefficient(c)
            if mono and coef in ("1", "-1"):
                parts.append(("-" if coef == "-1" else "") + mono)
            elif mono:
                parts.append(f"{coef}*{mono}")
            else:
                parts.append(coef)
        text = " + ".join(parts) if parts else "0"
        return text.replace("+ -", "- ")


def monomials(n: int, m: int) -> list[tuple[int, int]]:
    """Unknown monomials ``alpha^a beta^b`` with ``b < n`` and ``n a + m b <= n m``."""
    out = []
    for b in range(n):
        for a in range((n * m - m * b) // n + 1):
            out.append((a, b))
    return out


def burchnall_chaundy(
    L1: PseudoDiffOp, L2: PseudoDiffOp, depth: int = DEFAULT_EIGEN_DEPTH, tol: float = RESIDUAL_TOL
) -> BivariatePoly:
    """Relation ``Q(L1, L2) = 0`` from the eigenvalue series.

    Unknown coefficients are fitted (least squares) to the ``k``-powers
    ``nm`` down to ``nm - S``; coefficients within ``1e-9`` of a rational with
    denominator at most ``10^4`` are snapped to it.

    Raises
    ------
    NotCommuting
        From :func:`eigenvalue_series`.
    NoRelationAtDepth
        The fit residual exceeds ``tol`` or the system is underdetermined.
    """
    n, m = L1.top, L2.top
    ev = eigenvalue_series(L1, L2, depth)
    A = ev.series
    top = n * m
    mons = monomials(n, m)
    rows = depth + 1
    powers = {b: A**b for b in range(n + 1)}

    def column(a: int, b: int) -> np.ndarray:
        t = powers[b]
        col = np.zeros(rows, complex)
        shift = top - (n * a + t.top)
        if shift < rows:
            col[shift:] = t.a[: rows - shift]
        return col

    M = np.stack([column(a, b) for a, b in mons], axis=1)
    rhs = -column(0, n)
    rank = np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.max(np.abs(M))))
    if rank < len(mons):
        raise NoRelationAtDepth(f"depth {depth} determines {rank} of {len(mons)} coefficients")
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    resid = float(np.max(np.abs(M @ sol - rhs))) / scale
    if resid > tol:
        raise NoRelationAtDepth(f"fit residual {resid:.3e} at depth {depth}")
    coeffs = {(0, n): 1.0 + 0j}
    for (a, b), c in zip(mons, sol):
        c = round_coefficient(complex(c))
        if c != 0:
            coeffs[(a, b)] = c
    return BivariatePoly(coeffs, n, m, resid, depth)


def verify_annihilation(L1: PseudoDiffOp, L2: PseudoDiffOp, Q: BivariatePoly) -> float:
    """Norm of ``sum c_ab L1^a L2^b`` relative to its largest term.

    Norms are the max coefficient over powers and series orders; the
    normalizer is the largest ``|c_ab| ||L1^a L2^b||``, floored at 1.
    """
    amax = max(a for a, _ in Q.coeffs)
    bmax = max(b for _, b in Q.coeffs)
    one = identity_like(L1.coeffs[L1.top])
    p1 = [one]
    for _ in range(amax):
        p1.append(compose(p1[-1], L1))
    p2 = [one]
    for _ in range(bmax):
        p2.append(compose(p2[-1], L2))
    total = None
    scale = 1.0
    for (a, b), c in Q.coeffs.items():
        term = compose(p1[a], p2[b]).scale(c)
        scale = max(scale, term.norm())
        total = term if total is None else total + term
    return total.norm() / scale


# ---------------------------------------------------------------------------
# Weierstrass p as a Taylor series (for Lame potentials)
# ---------------------------------------------------------------------------


def weierstrass_laurent(g2: complex, g3: complex, terms: int = 40) -> np.ndarray:
    """``c_k`` with ``p(z) = z^-2 + sum_{k>=2} c_k z^{2k-2}``."""
    c = np.zeros(terms + 1, complex)
    if terms >= 2:
        c[2] = g2 / 20
    if terms >= 3:
        c[3] = g3 / 28
    for k in range(4, terms + 1):
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[j] * c[k - j] for j in range(2, k - 1))
    return c


def weierstrass_p_series(x0: complex, g2: complex, g3: complex, order: int = 24, terms: int = 60) -> TaylorSeries:
    """Taylor series of ``p(x; g2, g3)`` at ``x0`` (``0 < |x0|`` inside the Laurent disc).

    Initial value and slope come from the Laurent sum at the origin; higher
    coefficients follow from ``p'' = 6 p^2 - g2/2``.
    """
    c = weierstrass_laurent(g2, g3, terms)
    z = complex(x0)
    ks = np.arange(2, terms + 1)
    p = z**-2 + np.sum(c[2:] * z ** (2 * ks - 2))
    dp = -2 * z**-3 + np.sum(c[2:] * (2 * ks - 2) * z ** (2 * ks - 3))
    a = np.zeros(order + 1, complex)
    a[0], a[1] = p, dp
    for j in range(order - 1):
        conv = np.dot(a[: j + 1], a[j::-1])
        a[j + 2] = (6 * conv - (g2 / 2 if j == 0 else 0)) / ((j + 2) * (j + 1))
    return TaylorSeries(z, a)


# real half-period of the lattice with g2 = 4, g3 = 0 (p = 1 there)
LEMNISCATIC_HALF_PERIOD = float(ellipk(0.5) / np.sqrt(2.0))


def lame_pair(x0: complex = LEMNISCATIC_HALF_PERIOD, g2: complex = 4.0, g3: complex = 0.0, order: int = 24):
    """``(d^2 - 2 p, d^3 - 3 p d - 3/2 p')``: the ``u0 = -2 p`` commuting pair.

    The default basepoint is the real half-period for ``g2 = 4, g3 = 0``,
    farthest from the poles, which keeps the Taylor coefficients of order one.
    """
    from .eigen import commuting_pair_2_3

    p = weierstrass_p_series(x0, g2, g3, order)
    return commuting_pair_2_3(p * -2.0, 0.0)
