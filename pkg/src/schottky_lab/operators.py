"""Differential and pseudo-differential operators with truncated-series coefficients.

An operator ``P = sum_i p_i d^i`` stores its coefficients in a dict keyed by
the power of ``d``.  Coefficients are any series type with ``deriv``, ``+``
and ``*`` (``TaylorSeries`` or ``MultiSeries`` with ``x`` on axis 0).

``depth`` records how far down the ``d``-expansion is known: ``None`` means
the stored terms are the exact operator (differential operators, or finite
pseudo-differential symbols such as ``d^-1``), an integer ``K`` means powers
below ``d^-K`` are unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import NonUnitLeadingCoefficient, NotMonic, TruncationUnderflow
from .series import DEFAULT_ORDER, MultiSeries, TaylorSeries, gbinom

DEFAULT_DEPTH = 12


def _d(f, k: int):
    if k == 0:
        return f
    if isinstance(f, MultiSeries):
        return f.deriv(k, axis=0)
    return f.deriv(k)


def _nbase(f):
    return f.base[0] if isinstance(f, MultiSeries) else f.x0


def _known(f) -> int:
    """Number of known x-coefficients of a series."""
    return f.c.shape[0]


@dataclass(frozen=True, eq=False)
class PseudoDiffOp:
    """``sum_i coeffs[i] d^i`` with ``i`` ranging over the keys (any integers)."""

    coeffs: dict = field(default_factory=dict)
    depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {int(k): v for k, v in self.coeffs.items()})
        if self.depth is not None:
            kept = {k: v for k, v in self.coeffs.items() if k >= -self.depth}
            object.__setattr__(self, "coeffs", kept)

    # --- constructors -----------------------------------------------------

    @classmethod
    def monomial(cls, power: int, coeff) -> "PseudoDiffOp":
        return cls({power: coeff})

    @classmethod
    def d(cls, power: int, like) -> "PseudoDiffOp":
        """``d^power`` with unit coefficient shaped like ``like``."""
        return cls({power: _one(like)})

    # --- structure --------------------------------------------------------

    @property
    def top(self) -> int:
        """Highest power carried (``-inf`` stand-in for the zero operator)."""
        return max(self.coeffs) if self.coeffs else -(10**9)

    @property
    def bottom(self) -> int:
        return min(self.coeffs) if self.coeffs else 10**9

    @property
    def is_differential(self) -> bool:
        return self.depth is None and all(k >= 0 for k in self.coeffs)

    @property
    def order(self) -> int:
        return self.top

    def coeff(self, power: int):
        """Coefficient of ``d^power``; raises if that power is below the known depth."""
        if self.depth is not None and power < -self.depth:
            raise TruncationUnderflow(f"d^{power} lies below the known depth {self.depth}")
        return self.coeffs.get(power)

    def _template(self):
        return next(iter(self.coeffs.values()))

    def plus(self) -> "PseudoDiffOp":
        """Differential part ``(P)_+`` (powers ``>= 0``), exact."""
        return PseudoDiffOp({k: v for k, v in self.coeffs.items() if k >= 0})

    def minus(self) -> "PseudoDiffOp":
        return PseudoDiffOp({k: v for k, v in self.coeffs.items() if k < 0}, self.depth)

    def residue(self):
        """Coefficient of ``d^-1``."""
        return self.coeff(-1)

    def truncated(self, depth: int) -> "PseudoDiffOp":
        if self.depth is not None and depth > self.depth:
            raise TruncationUnderflow(f"requested depth {depth} exceeds known depth {self.depth}")
        return PseudoDiffOp(self.coeffs, depth)

    # --- arithmetic -------------------------------------------------------

    def __add__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        if not isinstance(other, PseudoDiffOp):
            return self + scalar_op(other, self._template())
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return PseudoDiffOp(out, _min_depth(self.depth, other.depth))

    __radd__ = __add__

    def __neg__(self) -> "PseudoDiffOp":
        return PseudoDiffOp({k: -v for k, v in self.coeffs.items()}, self.depth)

    def __sub__(self, other) -> "PseudoDiffOp":
        return self + (-other)

    def __rsub__(self, other) -> "PseudoDiffOp":
        return (-self) + other

    def scale(self, a) -> "PseudoDiffOp":
        return PseudoDiffOp({k: v * a for k, v in self.coeffs.items()}, self.depth)

    def __mul__(self, other):
        if isinstance(other, PseudoDiffOp):
            return compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __matmul__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        return compose(self, other)

    def __pow__(self, n: int) -> "PseudoDiffOp":
        if n < 0:
            raise ValueError("negative powers: use inverse()")
        out = identity_like(self._template())
        for _ in range(n):
            out = compose(out, self)
        return out

    # --- application and norms ------------------------------------------

    def apply(self, f):
        """``P f`` for a differential operator acting on a series."""
        if not self.is_differential:
            raise ValueError("only differential operators act on functions")
        out = None
        for k, v in self.coeffs.items():
            term = v * _d(f, k)
            out = term if out is None else out + term
        return out

    def norm(self) -> float:
        """Max coefficient magnitude over all powers and known series orders."""
        vals = [v.max_abs() for v in self.coeffs.values()]
        return max(vals) if vals else 0.0

    def distance(self, other: "PseudoDiffOp") -> float:
        return (self - other).norm()

    def min_known(self) -> int:
        return min((_known(v) for v in self.coeffs.values()), default=0)

    def __repr__(self) -> str:
        keys = sorted(self.coeffs, reverse=True)
        return f"PseudoDiffOp(powers={keys}, depth={self.depth})"


class DiffOp(PseudoDiffOp):
    """Differential operator ``u_n d^n + ... + u_0`` built from ``[u_0, ..., u_n]``."""

    def __init__(self, coeffs: Sequence | dict):
        if not isinstance(coeffs, dict):
            coeffs = {i: u for i, u in enumerate(coeffs) if u is not None}
        if any(k < 0 for k in coeffs):
            raise ValueError("differential operators have non-negative powers only")
        super().__init__(coeffs, None)

    @classmethod
    def from_op(cls, P: PseudoDiffOp) -> "DiffOp":
        if not P.is_differential:
            raise ValueError("operator has negative powers or truncated depth")
        return cls(dict(P.coeffs))

    def u(self, i: int):
        return self.coeffs.get(i)


def _one(like):
    if isinstance(like, MultiSeries):
        return like.like(MultiSeries.constant(1.0, like.base, like.orders).c)
    return TaylorSeries.constant(1.0, like.x0, like.order)


def _min_depth(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def identity_like(like) -> PseudoDiffOp:
    return PseudoDiffOp({0: _one(like)})


def scalar_op(a, like) -> PseudoDiffOp:
    return PseudoDiffOp({0: _one(like) * a})


def d_op(power: int, like) -> PseudoDiffOp:
    return PseudoDiffOp({power: _one(like)})


def mul_op(f) -> PseudoDiffOp:
    """Multiplication by the function ``f``."""
    return PseudoDiffOp({0: f})


def _available_depth(P: PseudoDiffOp, Q: PseudoDiffOp) -> float:
    dp = math.inf if P.depth is None else P.depth
    dq = math.inf if Q.depth is None else Q.depth
    return min(dp - Q.top, dq - P.top)


def compose(P: PseudoDiffOp, Q: PseudoDiffOp, depth: int | None = None) -> PseudoDiffOp:
    """Product ``P o Q`` by the generalized Leibniz rule
    ``d^m o f = sum_j binom(m, j) f^(j) d^(m-j)``.

    Parameters
    ----------
    depth
        Keep powers down to ``d^-depth``.  Defaults to everything the operands
        determine, capped at ``DEFAULT_DEPTH`` when the expansion is infinite.

    Raises
    ------
    TruncationUnderflow
        ``depth`` asks for powers the truncated operands do not determine.
    """
    if not P.coeffs or not Q.coeffs:
        return PseudoDiffOp({}, _min_depth(P.depth, Q.depth))
    avail = _available_depth(P, Q)
    finite = P.is_differential and Q.depth is None
    if depth is None:
        if finite:
            K = None
        elif avail == math.inf:
            K = DEFAULT_DEPTH
        else:
            K = int(avail)
    else:
        if depth > avail:
            raise TruncationUnderflow(f"requested depth {depth} exceeds the operands' determined depth {avail}")
        K = depth
    out: dict[int, Any] = {}
    for i, p in P.coeffs.items():
        for j, q in Q.coeffs.items():
            lmax = i if i >= 0 else i + j + K
            if K is not None:
                lmax = min(lmax, i + j + K)
            lmax = min(lmax, _known(q) - 1)
            dq = q
            for l in range(0, lmax + 1):
                if l:
                    dq = _d(dq, 1)
                b = gbinom(i, l)
                if b == 0:
                    continue
                term = p * dq * b
                k = i + j - l
                out[k] = out[k] + term if k in out else term
    return PseudoDiffOp(out, K)


def commutator(P: PseudoDiffOp, Q: PseudoDiffOp, depth: int | None = None) -> PseudoDiffOp:
    """``[P, Q] = P o Q - Q o P``."""
    return compose(P, Q, depth) - compose(Q, P, depth)


def inverse(W: PseudoDiffOp, depth: int = DEFAULT_DEPTH) -> PseudoDiffOp:
    """Inverse of a monic order-0 operator ``1 + w_1 d^-1 + ...`` to ``d^-depth``.

    Raises
    ------
    NotMonic
        ``W`` is not of that form.
    """
    _check_monic(W)
    if W.depth is not None and depth > W.depth:
        raise TruncationUnderflow("inverse requested deeper than W is known")
    one = W.coeffs[0]
    # solve (W o V)_{-n} = 0 order by order: v_n = -sum binom(-i, l) w_i v_j^(l), i + j + l = n
    v = {0: one}
    for n in range(1, depth + 1):
        acc = None
        for i in range(1, n + 1):
            w = W.coeffs.get(-i)
            if w is None:
                continue
            for j in range(0, n - i + 1):
                l = n - i - j
                if l > _known(v[j]) - 1:
                    continue
                term = w * _d(v[j], l) * gbinom(-i, l)
                acc = term if acc is None else acc + term
        v[n] = -acc if acc is not None else one * 0.0
    return PseudoDiffOp({-k: c for k, c in v.items()}, depth)


def _check_monic(W: PseudoDiffOp):
    if W.top > 0 or 0 not in W.coeffs:
        raise NotMonic("W must be 1 + w_1 d^-1 + ...")
    c0 = W.coeffs[0]
    one = _one(c0)
    if (c0 - one).max_abs() > 1e-12:
        raise NotMonic("leading coefficient of W must be identically 1")


# ---------------------------------------------------------------------------
# normal form, dressing, Lax powers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalFormRecord:
    """How ``L`` was brought to ``d_t^2 + u``.

    ``L = left * phi o (d_t^2 + u) o phi^-1`` with ``d_t = t'(x)^-1 d_x``;
    ``t`` is the variable change (``t(x) = x`` in ``divide`` mode), ``phi``
    the conjugating factor ``exp(-1/2 int p dt)`` expressed in ``t``, and
    ``left`` the left multiplier (``u_2`` in ``divide`` mode, ``1`` otherwise).
    """

    mode: str
    t: TaylorSeries
    phi: TaylorSeries
    left: TaylorSeries
    p: TaylorSeries


def normal_form_order2(L: PseudoDiffOp, mode: str = "divide") -> tuple[DiffOp, NormalFormRecord]:
    """Bring ``u_2 d^2 + u_1 d + u_0`` to ``d^2 + u``.

    ``mode="divide"`` keeps the variable, divides by ``u_2`` and conjugates
    the first-order term away: ``u = u_0/u_2 - p^2/4 - p'/2`` with
    ``p = u_1/u_2``.  ``mode="liouville"`` changes variable to
    ``t = int u_2^(-1/2) dx`` instead, so that ``L`` itself (no left factor)
    is conjugate to ``d_t^2 + u(t)`` with ``p = (u_1 - u_2'/2) u_2^(-1/2)``
    and ``u = u_0 - p^2/4 - p_t/2``; the result is expanded in ``t``.

    Raises
    ------
    NonUnitLeadingCoefficient
        ``u_2`` vanishes at the basepoint.
    """
    if L.top != 2 or L.bottom < 0:
        raise ValueError("expected an order-2 differential operator")
    u2 = L.coeffs[2]
    x0 = u2.x0
    zero = TaylorSeries.zero(x0, u2.order)
    u1 = L.coeffs.get(1, zero)
    u0 = L.coeffs.get(0, zero)
    if abs(u2.c[0]) < 1e-14:
        raise NonUnitLeadingCoefficient("leading coefficient vanishes at the basepoint")
    if mode == "divide":
        inv = u2.inverse()
        p = u1 * inv
        q = u0 * inv
        u = q - p * p * 0.25 - p.deriv() * 0.5
        phi = (p.integrate() * -0.5).exp()
        t = TaylorSeries.variable(x0, u2.order)
        rec = NormalFormRecord("divide", t, phi, u2, p)
        return DiffOp({0: u, 2: _one(u)}), rec
    if mode == "liouville":
        s = u2.sqrt()
        sinv = s.inverse()
        t = sinv.integrate(x0)  # t(x0) = x0 keeps the basepoint
        p_x = (u1 - u2.deriv() * 0.5) * sinv
        xt = t.reversion()
        p_t = p_x.compose(xt)
        u_t = u0.compose(xt) - p_t * p_t * 0.25 - p_t.deriv() * 0.5
        phi = (p_t.integrate() * -0.5).exp()
        rec = NormalFormRecord("liouville", t, phi, TaylorSeries.constant(1.0, x0, u2.order), p_t)
        return DiffOp({0: u_t, 2: _one(u_t)}), rec
    raise ValueError(f"unknown mode {mode!r}")


def dress(W: PseudoDiffOp, depth: int = DEFAULT_DEPTH) -> tuple[PseudoDiffOp, PseudoDiffOp]:
    """``(W^-1, L = W o d o W^-1)`` for monic order-0 ``W``."""
    _check_monic(W)
    exact = W.depth is None
    Winv = inverse(W, depth + 1 if exact else min(depth + 1, W.depth))
    one = W.coeffs[0]
    WD = compose(W, d_op(1, one), depth + 1 if exact else None)
    L = compose(WD, Winv, depth if exact else None)
    return Winv.truncated(min(depth, Winv.depth)), L


def lax_operator(us: Sequence, like=None) -> PseudoDiffOp:
    """``L = d + u_2 d^-1 + u_3 d^-2 + ...`` from ``[u_2, u_3, ...]``.

    The tail beyond the supplied coefficients is taken as zero, so the
    operator is exact (``depth=None``).
    """
    like = us[0] if us else like
    out = {1: _one(like)}
    for i, u in enumerate(us):
        out[-1 - i] = u
    return PseudoDiffOp(out)


def power_plus_and_residue(L: PseudoDiffOp, n: int, depth: int = DEFAULT_DEPTH) -> tuple[PseudoDiffOp, Any]:
    """``B_n = (L^n)_+`` and ``F_n = Res_d L^n`` (coefficient of ``d^-1``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    P = L
    for _ in range(n - 1):
        P = compose(P, L, depth if P.depth is None else None)
    if P.depth is not None and P.depth < 1:
        raise TruncationUnderflow("L^n not known down to d^-1")
    res = P.coeffs.get(-1)
    if res is None:
        res = _one(L._template()) * 0.0
    return P.plus(), res


def b3_closed_form(u2, u3) -> PseudoDiffOp:
    """``d^3 + 3 u_2 d + 3 (u_2' + u_3)``."""
    return PseudoDiffOp({3: _one(u2), 1: u2 * 3.0, 0: (_d(u2, 1) + u3) * 3.0})


def b2_closed_form(u2) -> PseudoDiffOp:
    """``d^2 + 2 u_2``."""
    return PseudoDiffOp({2: _one(u2), 0: u2 * 2.0})


def max_abs_array(arrs) -> float:
    return max((float(np.max(np.abs(a))) for a in arrs), default=0.0)


__all__ = [
    "DEFAULT_DEPTH",
    "DEFAULT_ORDER",
    "DiffOp",
    "NormalFormRecord",
    "PseudoDiffOp",
    "b2_closed_form",
    "b3_closed_form",
    "commutator",
    "compose",
    "d_op",
    "dress",
    "identity_like",
    "inverse",
    "lax_operator",
    "mul_op",
    "normal_form_order2",
    "power_plus_and_residue",
    "scalar_op",
]
