"""Truncated formal power series in one and several variables.

Every series carries the highest order it knows: a :class:`TaylorSeries`
of length ``N + 1`` represents ``sum_{j<=N} c_j (x - x0)^j + O((x - x0)^{N+1})``.
Operations propagate this honestly: differentiation shortens a series by
one, integration lengthens it by one, and binary operations truncate to the
shorter operand.  Comparisons therefore never look at unknown coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import convolve

DEFAULT_ORDER = 24


def gbinom(m: int, j: int) -> int:
    """Generalized binomial ``m (m-1) ... (m-j+1) / j!`` for integer ``m``."""
    if j < 0:
        return 0
    num = 1
    for r in range(j):
        num *= m - r
    return num // math.factorial(j)


def _scalar(x) -> bool:
    return isinstance(x, (int, float, complex, np.number))


@dataclass(frozen=True, eq=False)
class TaylorSeries:
    """Truncated Taylor series ``sum_j c[j] (x - x0)^j`` known through order ``len(c) - 1``."""

    x0: complex
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a series needs at least one known coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "x0", complex(self.x0))

    # --- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, x0=0.0, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        c = np.zeros(order + 1, complex)
        c[0] = value
        return cls(x0, c)

    @classmethod
    def zero(cls, x0=0.0, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        return cls(x0, np.zeros(order + 1, complex))

    @classmethod
    def variable(cls, x0=0.0, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        """The function ``x`` expanded at ``x0``."""
        c = np.zeros(order + 1, complex)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(x0, c)

    @classmethod
    def power(cls, p: int, x0, order: int = DEFAULT_ORDER, scale=1.0) -> "TaylorSeries":
        """``scale * x^p`` at ``x0`` (``x0 != 0`` when ``p < 0``)."""
        x0 = complex(x0)
        if p < 0 and x0 == 0:
            raise ZeroDivisionError("negative power expanded at 0")
        c = np.zeros(order + 1, complex)
        for j in range(order + 1):
            b = gbinom(p, j)
            if b:
                c[j] = b * x0 ** (p - j)
        return cls(x0, scale * c)

    @classmethod
    def from_polynomial(cls, coeffs: Sequence, x0=0.0, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        """Polynomial ``sum_k coeffs[k] x^k`` re-expanded at ``x0``."""
        out = cls.zero(x0, order)
        for k, a in enumerate(coeffs):
            if a:
                out = out + cls.power(k, x0, order, scale=a)
        return out

    # --- basic protocol ---------------------------------------------------

    @property
    def order(self) -> int:
        return self.c.size - 1

    def __len__(self) -> int:
        return self.c.size

    def _check(self, other: "TaylorSeries"):
        if other.x0 != self.x0:
            raise ValueError(f"basepoint mismatch: {self.x0} vs {other.x0}")

    def truncate(self, order: int) -> "TaylorSeries":
        return TaylorSeries(self.x0, self.c[: order + 1])

    def like(self, c) -> "TaylorSeries":
        return TaylorSeries(self.x0, c)

    def __add__(self, other):
        if _scalar(other):
            c = self.c.copy()
            c[0] += other
            return self.like(c)
        self._check(other)
        n = min(self.c.size, other.c.size)
        return self.like(self.c[:n] + other.c[:n])

    __radd__ = __add__

    def __neg__(self):
        return self.like(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _scalar(other):
            return self.like(self.c * other)
        if not isinstance(other, TaylorSeries):
            return NotImplemented
        self._check(other)
        n = min(self.c.size, other.c.size)
        return self.like(np.convolve(self.c[:n], other.c[:n])[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _scalar(other):
            return self.like(self.c / other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = TaylorSeries.constant(1.0, self.x0, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # --- calculus ---------------------------------------------------------

    def deriv(self, k: int = 1) -> "TaylorSeries":
        c = self.c
        for _ in range(k):
            if c.size == 1:
                raise ValueError("derivative of an order-0 series carries no information")
            c = c[1:] * np.arange(1, c.size)
        return self.like(c)

    def integrate(self, const=0.0) -> "TaylorSeries":
        """Antiderivative vanishing (up to ``const``) at ``x0``; one order longer."""
        c = np.empty(self.c.size + 1, complex)
        c[0] = const
        c[1:] = self.c / np.arange(1, self.c.size + 1)
        return self.like(c)

    def inverse(self) -> "TaylorSeries":
        """Multiplicative inverse of a unit (``c[0] != 0``)."""
        a = self.c
        if a[0] == 0:
            raise ZeroDivisionError("series is not a unit at its basepoint")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, a.size):
            b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1][:n]) / a[0]
        return self.like(b)

    def exp(self) -> "TaylorSeries":
        a = self.c
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        k = np.arange(a.size)
        for n in range(1, a.size):
            b[n] = np.dot(k[1 : n + 1] * a[1 : n + 1], b[n - 1 :: -1][:n]) / n
        return self.like(b)

    def log(self) -> "TaylorSeries":
        if self.c[0] == 0:
            raise ZeroDivisionError("log of a non-unit")
        return (self.deriv() / self.truncate(self.order - 1)).integrate(np.log(self.c[0]))

    def sqrt(self) -> "TaylorSeries":
        """Principal square root of a unit."""
        a = self.c
        if a[0] == 0:
            raise ZeroDivisionError("sqrt of a non-unit")
        b = np.zeros_like(a)
        b[0] = np.sqrt(a[0])
        for n in range(1, a.size):
            b[n] = (a[n] - np.dot(b[1:n], b[n - 1 : 0 : -1])) / (2 * b[0])
        return self.like(b)

    def compose(self, inner: "TaylorSeries") -> "TaylorSeries":
        """``self(inner(t))`` expanded at ``inner.x0``; requires ``inner(t0) = self.x0``."""
        if abs(inner.c[0] - self.x0) > 1e-12 * max(1.0, abs(self.x0)):
            raise ValueError("inner series must start at the outer basepoint")
        n = min(self.c.size, inner.c.size)
        h = TaylorSeries(inner.x0, np.concatenate([[0.0], inner.c[1:n]]))
        out = TaylorSeries.constant(self.c[n - 1], inner.x0, n - 1)
        for j in range(n - 2, -1, -1):
            out = out * h + self.c[j]
        return out

    def reversion(self) -> "TaylorSeries":
        """Compositional inverse: ``x(t)`` at ``t0 = self(x0)`` with ``x(t(x)) = x``."""
        a = self.c
        if a.size < 2 or a[1] == 0:
            raise ZeroDivisionError("reversion needs a nonzero linear coefficient")
        n = a.size
        t0 = a[0]
        # Newton-free fixed point: x = x0 + (h - sum_{j>=2} a_j (x-x0)^j) / a_1
        h = TaylorSeries(t0, np.eye(1, n, 1, dtype=complex).ravel())
        d = h / a[1]
        for _ in range(n):
            acc = TaylorSeries.zero(t0, n - 1)
            p = d * d
            for j in range(2, n):
                acc = acc + p * a[j]
                p = p * d
            d = (h - acc) / a[1]
        return TaylorSeries(t0, d.c + np.eye(1, n, 0, dtype=complex).ravel() * self.x0)

    # --- evaluation and comparison ---------------------------------------

    def __call__(self, x) -> complex:
        h = complex(x) - self.x0
        return complex(np.polyval(self.c[::-1], h))

    def value(self) -> complex:
        return complex(self.c[0])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.c)))

    def distance(self, other: "TaylorSeries", upto: int | None = None) -> float:
        """Max coefficient difference over the common known orders."""
        self._check(other)
        n = min(self.c.size, other.c.size)
        if upto is not None:
            n = min(n, upto + 1)
        return float(np.max(np.abs(self.c[:n] - other.c[:n])))

    def __repr__(self) -> str:
        return f"TaylorSeries(x0={self.x0}, order={self.order}, c[:4]={self.c[:4].tolist()})"


@dataclass(frozen=True, eq=False)
class MultiSeries:
    """Truncated series in several variables, ``c[a, b, ...]`` multiplying
    ``(x - x0)^a (y - y0)^b ...``; known through ``c.shape - 1`` per axis."""

    base: tuple
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex)
        base = tuple(complex(b) for b in self.base)
        if c.ndim != len(base):
            raise ValueError("one basepoint per axis required")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "base", base)

    @classmethod
    def zero(cls, base, orders) -> "MultiSeries":
        return cls(base, np.zeros(tuple(o + 1 for o in orders), complex))

    @classmethod
    def constant(cls, value, base, orders) -> "MultiSeries":
        z = np.zeros(tuple(o + 1 for o in orders), complex)
        z[(0,) * z.ndim] = value
        return cls(base, z)

    @classmethod
    def from_taylor(cls, s: TaylorSeries, axis: int, base, orders) -> "MultiSeries":
        """Embed a one-variable series along ``axis`` (constant in the others)."""
        out = np.zeros(tuple(o + 1 for o in orders), complex)
        n = min(s.c.size, out.shape[axis])
        idx = [0] * out.ndim
        idx[axis] = slice(0, n)
        out[tuple(idx)] = s.c[:n]
        if complex(base[axis]) != s.x0:
            raise ValueError("basepoint mismatch")
        return cls(base, out)

    @property
    def orders(self) -> tuple:
        return tuple(n - 1 for n in self.c.shape)

    @property
    def ndim(self) -> int:
        return self.c.ndim

    def like(self, c) -> "MultiSeries":
        return type(self)(self.base, c)

    def _common(self, other: "MultiSeries"):
        if other.base != self.base:
            raise ValueError("basepoint mismatch")
        shape = tuple(min(a, b) for a, b in zip(self.c.shape, other.c.shape))
        sl = tuple(slice(0, n) for n in shape)
        return self.c[sl], other.c[sl], shape

    def __add__(self, other):
        if _scalar(other):
            c = self.c.copy()
            c[(0,) * c.ndim] += other
            return self.like(c)
        a, b, _ = self._common(other)
        return self.like(a + b)

    __radd__ = __add__

    def __neg__(self):
        return self.like(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _scalar(other):
            return self.like(self.c * other)
        if not isinstance(other, MultiSeries):
            return NotImplemented
        a, b, shape = self._common(other)
        full = convolve(a, b, method="direct")
        return self.like(full[tuple(slice(0, n) for n in shape)])

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = MultiSeries.constant(1.0, self.base, self.orders)
        out = self.like(out.c)
        for _ in range(k):
            out = out * self
        return out

    def deriv(self, k: int = 1, axis: int = 0) -> "MultiSeries":
        c = self.c
        for _ in range(k):
            n = c.shape[axis]
            if n == 1:
                raise ValueError("derivative of an order-0 axis carries no information")
            shape = [1] * c.ndim
            shape[axis] = n - 1
            c = np.take(c, range(1, n), axis=axis) * np.arange(1, n).reshape(shape)
        return self.like(c)

    def integrate(self, axis: int = 0) -> "MultiSeries":
        """Antiderivative along ``axis`` vanishing on the slice ``axis = base``."""
        c = self.c
        n = c.shape[axis]
        shape = [1] * c.ndim
        shape[axis] = n
        body = c / np.arange(1, n + 1).reshape(shape)
        zshape = list(c.shape)
        zshape[axis] = 1
        return self.like(np.concatenate([np.zeros(zshape, complex), body], axis=axis))

    def restrict(self, axis: int) -> "MultiSeries | TaylorSeries":
        """Slice at ``axis = base[axis]`` (drops that axis)."""
        c = np.take(self.c, 0, axis=axis)
        base = self.base[:axis] + self.base[axis + 1 :]
        if c.ndim == 1:
            return TaylorSeries(base[0], c)
        return MultiSeries(base, c)

    def truncate(self, orders) -> "MultiSeries":
        return self.like(self.c[tuple(slice(0, o + 1) for o in orders)])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.c)))

    def distance(self, other: "MultiSeries") -> float:
        a, b, _ = self._common(other)
        return float(np.max(np.abs(a - b)))

    def __call__(self, *point) -> complex:
        out = self.c
        for p, b in zip(point, self.base):
            out = np.tensordot((complex(p) - b) ** np.arange(out.shape[0]), out, axes=(0, 0))
        return complex(out)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(base={self.base}, orders={self.orders})"


class BiSeries(MultiSeries):
    """Two-variable series in ``(x - x0)^a (y - y0)^b``."""

    def __post_init__(self):
        super().__post_init__()
        if self.c.ndim != 2:
            raise ValueError("BiSeries needs a 2-d coefficient array")

    def like(self, c) -> "MultiSeries":
        return BiSeries(self.base, c) if np.ndim(c) == 2 else MultiSeries(self.base, c)

    def dx(self, k: int = 1) -> "BiSeries":
        return self.deriv(k, axis=0)

    def dy(self, k: int = 1) -> "BiSeries":
        return self.deriv(k, axis=1)
