"""Riemann theta functions with certified lattice truncation.

The theta function of a period matrix ``tau`` is the lattice sum

    theta(tau, z) = sum_n exp(pi i n^T tau n + 2 pi i n^T z),

and the characteristic version shifts the lattice to ``Z^g + eps`` and the
argument by ``delta``.  Every evaluation is recentred at the real saddle
``c = -(Im tau)^{-1} Im z`` of the exponent, so that

    theta = exp(pi y^T Y^{-1} y) * S,    S = sum of terms of modulus <= 1,

and the tail of ``S`` outside the ellipsoid ``||m - c||_Y <= R`` is bounded
rigorously (see :func:`tail_bound`).  Tolerances in :class:`TruncationPolicy`
refer to the rescaled sum ``S``; for ``Im z = 0`` this is the plain absolute
error.

Characteristic ordering
-----------------------
Half-integer vectors in ``{0, 1/2}^g`` are enumerated by binary counting with
``eps_1`` the least significant bit: index ``k`` maps to
``eps_j = ((k >> (j - 1)) & 1) / 2``.  The Kummer vector and all consumers
rely on this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AsymmetricInput,
    NoConvergence,
    NotPositiveDefinite,
    RadiusCapExceeded,
)

TWO_PI_I = 2j * np.pi
MAX_JET_ORDER = 6


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PeriodMatrix:
    """Symmetric complex matrix with positive-definite imaginary part.

    Build instances with :func:`validate_period_matrix`; the constructor
    symmetrizes but does not check definiteness.
    """

    entries: np.ndarray

    def __post_init__(self):
        t = np.array(self.entries, dtype=complex)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("period matrix must be square")
        t = 0.5 * (t + t.T)
        t.setflags(write=False)
        object.__setattr__(self, "entries", t)
        Y = np.ascontiguousarray(t.imag)
        object.__setattr__(self, "_Y", Y)
        object.__setattr__(self, "_X", np.ascontiguousarray(t.real))
        evals = np.linalg.eigvalsh(Y)
        object.__setattr__(self, "_lam_min", float(evals[0]))
        if evals[0] > 0:
            object.__setattr__(self, "_Yinv", np.linalg.inv(Y))

    @property
    def genus(self) -> int:
        return self.entries.shape[0]

    @property
    def Y(self) -> np.ndarray:
        return self._Y

    @property
    def X(self) -> np.ndarray:
        return self._X

    @property
    def Yinv(self) -> np.ndarray:
        return self._Yinv

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue of ``Im tau``."""
        return self._lam_min

    def scaled(self, factor: float) -> "PeriodMatrix":
        return PeriodMatrix(self.entries * factor)

    def lattice_vector(self, m1, m2) -> np.ndarray:
        """Return ``m1 + tau m2``."""
        return np.asarray(m1, dtype=float) + self.entries @ np.asarray(m2, dtype=float)

    def __repr__(self) -> str:
        return f"PeriodMatrix(genus={self.genus}, entries={self.entries.tolist()})"


@dataclass(frozen=True)
class HalfCharacteristic:
    """Theta characteristic ``[eps; delta]`` with entries in ``{0, 1/2}``."""

    eps: tuple
    delta: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        delta = tuple(float(d) for d in self.delta)
        if len(eps) != len(delta):
            raise ValueError("eps and delta must have equal length")
        for v in eps + delta:
            if v not in (0.0, 0.5):
                raise ValueError(f"characteristic entries must be 0 or 1/2, got {v}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)

    @property
    def genus(self) -> int:
        return len(self.eps)

    @property
    def parity(self) -> int:
        """``4 eps.delta mod 2``; 1 marks an odd characteristic."""
        return int(round(4 * sum(e * d for e, d in zip(self.eps, self.delta)))) % 2

    @property
    def is_odd(self) -> bool:
        return self.parity == 1


def half_vector(index: int, g: int) -> tuple:
    """Half-integer vector number ``index`` in binary order (eps_1 lowest bit)."""
    return tuple(0.5 * ((index >> j) & 1) for j in range(g))


def half_vectors(g: int) -> list[tuple]:
    return [half_vector(k, g) for k in range(2**g)]


def characteristics(g: int, parity: int | None = None) -> list[HalfCharacteristic]:
    """All ``4^g`` characteristics, eps outer and delta inner, binary order."""
    out = []
    for e in half_vectors(g):
        for d in half_vectors(g):
            ch = HalfCharacteristic(e, d)
            if parity is None or ch.parity == parity:
                out.append(ch)
    return out


@dataclass(frozen=True, eq=False)
class DirectionalJet:
    """Product of directional derivatives ``prod_k d_{v_k}^{o_k}``.

    An empty jet means the plain function value.
    """

    pairs: tuple = ()

    def __post_init__(self):
        cleaned = []
        for direction, order in self.pairs:
            order = int(order)
            if order < 0:
                raise ValueError("derivative orders must be non-negative")
            if order == 0:
                continue
            d = np.asarray(direction, dtype=complex).reshape(-1)
            cleaned.append((d, order))
        if sum(o for _, o in cleaned) > MAX_JET_ORDER:
            raise ValueError(f"total jet order exceeds {MAX_JET_ORDER}")
        object.__setattr__(self, "pairs", tuple(cleaned))

    @classmethod
    def of(cls, *pairs) -> "DirectionalJet":
        return cls(tuple(pairs))

    @property
    def order(self) -> int:
        return sum(o for _, o in self.pairs)


NO_JET = DirectionalJet()


@dataclass(frozen=True)
class TruncationPolicy:
    """Error target for the rescaled lattice sum and a cap on the radius."""

    target_abs_error: float = 1e-12
    max_radius: int = 40

    def __post_init__(self):
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be positive")
        if self.max_radius < 1:
            raise ValueError("max_radius must be a positive integer")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class ThetaValue:
    """Value together with the certified bound on the rescaled tail.

    ``roundoff`` bounds the floating-point error of the rescaled sum.
    """

    value: complex
    log_scale: float
    bound: float
    radius: int
    roundoff: float = 0.0

    @property
    def abs_error(self) -> float:
        """Tail and round-off bounds translated back to the unscaled value."""
        return (self.bound + self.roundoff) * math.exp(self.log_scale)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_period_matrix(raw) -> PeriodMatrix:
    """Check and symmetrize a raw period matrix.

    Raises
    ------
    AsymmetricInput
        If ``max |tau_ij - tau_ji| > 1e-9``.
    NotPositiveDefinite
        If the smallest eigenvalue of ``Im tau`` is not positive.
    """
    if isinstance(raw, PeriodMatrix):
        raw = raw.entries
    t = np.atleast_2d(np.asarray(raw, dtype=complex))
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError("period matrix must be square")
    if not np.all(np.isfinite(t)):
        raise ValueError("period matrix has non-finite entries")
    asym = float(np.max(np.abs(t - t.T))) if t.size else 0.0
    if asym > 1e-9:
        raise AsymmetricInput(f"asymmetry {asym:.3e} exceeds 1e-9")
    pm = PeriodMatrix(t)
    if not pm.lambda_min > 0:
        raise NotPositiveDefinite(f"min eigenvalue of Im tau is {pm.lambda_min:.3e}")
    return pm


def _as_tau(tau) -> PeriodMatrix:
    return tau if isinstance(tau, PeriodMatrix) else validate_period_matrix(tau)


def _as_vec(z, g: int) -> np.ndarray:
    v = np.asarray(z, dtype=complex).reshape(-1)
    if v.size == 1 and g > 1 and np.ndim(z) == 0:
        v = np.full(g, v[0])
    if v.size != g:
        raise ValueError(f"expected a vector of length {g}, got {v.size}")
    return v


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

_ETA_GRID = np.linspace(0.005, 0.995, 199)


def tail_bound(
    lam_min: float,
    g: int,
    R: float,
    prefactors: Sequence[tuple[float, float, int]] = (),
) -> float:
    """Upper bound for the rescaled tail outside radius ``R``.

    Terms satisfy ``|term| <= exp(-pi r^2) P(r)`` with ``r = ||m - c||_Y`` and
    ``P(r) = prod (2 pi (A r + B))^k`` over ``prefactors = [(A, B, k), ...]``.
    Splitting ``exp(-pi r^2)`` as ``exp(-pi(1-eta) r^2) exp(-pi eta r^2)``
    and comparing the second factor with a Gaussian integral per coordinate
    (``r^2 >= lam_min |m - c|^2``) gives

        tail <= sup_{r>R} exp(-pi(1-eta) r^2) P(r) * (1 + (eta lam_min)^{-1/2})^g,

    minimised over a grid of ``eta``.
    """
    k_tot = sum(k for _, _, k in prefactors)
    a = math.pi * (1.0 - _ETA_GRID)
    # log P is increasing; the Gaussian dominates beyond r_crit
    r_eval = np.maximum(R, np.sqrt(k_tot / (2 * a))) if k_tot else np.full_like(a, float(R))
    logs = -a * R * R + g * np.log1p(1.0 / np.sqrt(_ETA_GRID * lam_min))
    for A, B, k in prefactors:
        logs = logs + k * np.log(2 * math.pi * (A * r_eval + B) + 1e-300)
    best = float(np.min(logs))
    return math.exp(best) if best > -700 else 0.0


def _jet_prefactors(tau: PeriodMatrix, c: np.ndarray, jet: DirectionalJet):
    out = []
    for d, k in jet.pairs:
        A = math.sqrt(max(float(np.real(np.conj(d) @ tau.Yinv @ d)), 0.0))
        B = float(abs(c @ d))
        out.append((A, B, k))
    return out


def _radius(tau: PeriodMatrix, c: np.ndarray, jets: Iterable[DirectionalJet], policy: TruncationPolicy) -> tuple[int, float]:
    g = tau.genus
    R = 1
    bound = 0.0
    for jet in jets:
        pre = _jet_prefactors(tau, c, jet)
        r = 1
        while tail_bound(tau.lambda_min, g, r, pre) > policy.target_abs_error:
            r += 1
            if r > policy.max_radius:
                raise RadiusCapExceeded(
                    f"radius above cap {policy.max_radius} for tolerance {policy.target_abs_error:g}"
                )
        if jet.order:
            r0 = _base_radius(tau, policy)
            r = max(r, r0 + math.ceil(jet.order / 2) + 1)
            if r > policy.max_radius:
                raise RadiusCapExceeded(f"radius {r} above cap {policy.max_radius}")
        R = max(R, r)
    for jet in jets:
        bound = max(bound, tail_bound(tau.lambda_min, g, R, _jet_prefactors(tau, c, jet)))
    return R, bound


def _base_radius(tau: PeriodMatrix, policy: TruncationPolicy) -> int:
    return _base_radius_cached(tau.lambda_min, tau.genus, policy.target_abs_error, policy.max_radius)


@lru_cache(maxsize=256)
def _base_radius_cached(lam: float, g: int, tol: float, cap: int) -> int:
    r = 1
    while tail_bound(lam, g, r) > tol:
        r += 1
        if r > cap:
            raise RadiusCapExceeded(f"radius above cap {cap} for tolerance {tol:g}")
    return r


def truncation_radius(tau, z, policy: TruncationPolicy = DEFAULT_POLICY) -> int:
    """Smallest integer radius whose certified tail bound meets the policy.

    The radius is measured in the ``Im tau`` metric around the real saddle of
    the exponent; it does not depend on ``z`` for the plain theta function
    because the rescaled terms depend on ``z`` only through the saddle.
    """
    tau = _as_tau(tau)
    _as_vec(z, tau.genus)
    return _base_radius(tau, policy)


# ---------------------------------------------------------------------------
# lattice enumeration and the core sum
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _box_offsets(key: bytes, g: int, R: int) -> np.ndarray:
    Yinv = np.frombuffer(key, dtype=float).reshape(g, g)
    half = [int(math.ceil(R * math.sqrt(Yinv[j, j]))) + 1 for j in range(g)]
    axes = [np.arange(-h, h + 1) for h in half]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g)
    return grid.astype(float)


def _ellipsoid(tau: PeriodMatrix, centre: np.ndarray, R: int) -> np.ndarray:
    """Points ``m`` of ``Z^g + frac`` offsets within ``||m - centre||_Y <= R``.

    ``centre`` is expressed relative to the shifted lattice, i.e. returns
    integer ``n`` with ``||n - centre||_Y <= R``.
    """
    g = tau.genus
    n0 = np.round(centre)
    offs = _box_offsets(tau.Yinv.tobytes(), g, R)
    pts = offs + n0
    d = pts - centre
    q = np.einsum("ij,jk,ik->i", d, tau.Y, d)
    return pts[q <= R * R + 1e-12]


def _theta_sum(
    tau: PeriodMatrix,
    z: np.ndarray,
    eps: np.ndarray,
    delta: np.ndarray,
    jets: Sequence[DirectionalJet],
    policy: TruncationPolicy,
    radius: int | None = None,
) -> list[ThetaValue]:
    y = z.imag
    c = -tau.Yinv @ y
    log_scale = float(np.pi * y @ tau.Yinv @ y)
    if radius is None:
        R, bound = _radius(tau, c, jets, policy)
    else:
        R = int(radius)
        bound = max(tail_bound(tau.lambda_min, tau.genus, R, _jet_prefactors(tau, c, j)) for j in jets)
    n = _ellipsoid(tau, c - eps, R)
    m = n + eps
    d = m - c
    re = -np.pi * np.einsum("ij,jk,ik->i", d, tau.Y, d)
    im = np.pi * np.einsum("ij,jk,ik->i", m, tau.X, m) + 2 * np.pi * (m @ (z.real + delta))
    base = np.exp(re + 1j * im)
    # per-term error grows with the exponent size; pairwise summation adds log2(N)
    ulp = np.finfo(float).eps * (np.abs(re) + np.abs(im) + 4 + np.log2(max(len(n), 2)))
    out = []
    for jet in jets:
        w = base
        for direction, k in jet.pairs:
            w = w * (TWO_PI_I * (m @ direction)) ** k
        roundoff = float(np.sum(np.abs(w) * (ulp + 4 * np.finfo(float).eps * jet.order)))
        out.append(ThetaValue(complex(np.sum(w)) * math.exp(log_scale), log_scale, bound, R, roundoff))
    return out


def theta_char_many(
    tau,
    z,
    chi: HalfCharacteristic | None,
    jets: Sequence[DirectionalJet],
    policy: TruncationPolicy = DEFAULT_POLICY,
    radius: int | None = None,
) -> list[ThetaValue]:
    """Several jets of one characteristic theta at one point, sharing the sum."""
    tau = _as_tau(tau)
    g = tau.genus
    zv = _as_vec(z, g)
    if chi is None:
        eps = np.zeros(g)
        delta = np.zeros(g)
    else:
        if chi.genus != g:
            raise ValueError("characteristic genus does not match tau")
        eps = np.array(chi.eps)
        delta = np.array(chi.delta)
    jets = [j if isinstance(j, DirectionalJet) else DirectionalJet(tuple(j)) for j in jets]
    for j in jets:
        for d, _ in j.pairs:
            if d.size != g:
                raise ValueError("jet direction has wrong length")
    return _theta_sum(tau, zv, eps, delta, jets, policy, radius)


def theta_eval(tau, z, jet: DirectionalJet = NO_JET, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Riemann theta function or one of its directional derivatives.

    Each derivative along ``v`` multiplies a lattice term by
    ``2 pi i (n . v)``.

    Examples
    --------
    >>> round(theta_eval([[1j]], [0]).real, 12)
    1.086434811213
    """
    return theta_char_many(tau, z, None, [jet], policy)[0].value


def theta_eval_certified(tau, z, jet: DirectionalJet = NO_JET, policy: TruncationPolicy = DEFAULT_POLICY, radius: int | None = None) -> ThetaValue:
    return theta_char_many(tau, z, None, [jet], policy, radius)[0]


def theta_char(tau, z, chi: HalfCharacteristic, jet: DirectionalJet = NO_JET, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Theta function with characteristic ``[eps; delta]``."""
    return theta_char_many(tau, z, chi, [jet], policy)[0].value


def theta_second_order(tau, z, eps, jet: DirectionalJet = NO_JET, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Second-order theta ``Theta[eps](tau, z) = theta[eps; 0](2 tau, 2 z)``.

    Derivatives are taken in the argument ``z`` of ``Theta``; the chain rule
    contributes a factor ``2`` per derivative order.
    """
    tau = _as_tau(tau)
    g = tau.genus
    chi = HalfCharacteristic(tuple(eps), (0.0,) * g)
    zv = _as_vec(z, g)
    val = theta_char_many(tau.scaled(2.0), 2 * zv, chi, [jet], policy)[0].value
    return val * 2.0**jet.order


def kummer_many(tau, z, jets: Sequence[DirectionalJet], policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Array of shape ``(len(jets), 2^g)`` of Kummer-vector jets."""
    tau = _as_tau(tau)
    g = tau.genus
    zv = _as_vec(z, g)
    tau2 = tau.scaled(2.0)
    zero = (0.0,) * g
    out = np.empty((len(jets), 2**g), dtype=complex)
    for k, e in enumerate(half_vectors(g)):
        vals = theta_char_many(tau2, 2 * zv, HalfCharacteristic(e, zero), jets, policy)
        for i, (jet, v) in enumerate(zip(jets, vals)):
            out[i, k] = v.value * 2.0**jet.order
    return out


def kummer_vector(tau, z, jet: DirectionalJet = NO_JET, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Kummer map ``z -> (Theta[eps](tau, z))_eps`` in binary eps order."""
    return kummer_many(tau, z, [jet], policy)[0]


# ---------------------------------------------------------------------------
# theta divisor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivisorPoint:
    """Zero of theta on a complex line with its certificate."""

    z: np.ndarray
    t: complex
    residual: float
    scale: float
    derivative: float

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale


NEWTON_STARTS = 16
NEWTON_STEPS = 64


def newton_starts() -> list[complex]:
    """Sixteen starting parameters: a 4 x 4 grid of the unit parameter square."""
    return [complex((a + 0.5) / 4, (b + 0.5) / 4) for b in range(4) for a in range(4)]


def theta_divisor_point(
    tau,
    base,
    direction,
    policy: TruncationPolicy = DEFAULT_POLICY,
    rel_tol: float = 1e-10,
) -> DivisorPoint:
    """Find a zero of ``t -> theta(base + t direction)`` by Newton's method.

    Starting parameters form a 4 x 4 grid in the unit square of the complex
    parameter (a real segment alone cannot leave the real axis when theta is
    real there).  The first start reaching ``|theta| < rel_tol * scale``
    wins, where ``scale`` is the largest ``|theta|`` over the starts.  The
    residual must also be below ``rel_tol`` times the natural size
    ``exp(pi y Y^-1 y)`` at the root, so roots far from the cell are not
    accepted on a loose absolute criterion.

    Raises
    ------
    NoConvergence
        If none of the 16 starts converges within 64 steps.
    """
    tau = _as_tau(tau)
    g = tau.genus
    b = _as_vec(base, g)
    d = _as_vec(direction, g)
    if not np.any(d):
        raise ValueError("direction must be non-zero")
    jets = [NO_JET, DirectionalJet.of((d, 1))]

    def f(t):
        v = theta_char_many(tau, b + t * d, None, jets, policy)
        return v[0].value, v[1].value, math.exp(v[0].log_scale)

    starts = newton_starts()
    scale = max(abs(f(t)[0]) for t in starts)
    scale = max(scale, 1e-300)
    for t in starts:
        for _ in range(NEWTON_STEPS):
            val, der, nat = f(t)
            if abs(val) < 1e-3 * rel_tol * min(scale, nat):
                break
            if der == 0:
                break
            step = val / der
            if abs(step) > 0.5:
                step *= 0.5 / abs(step)
            t = t - step
            if abs(step) < 1e-15 * max(1.0, abs(t)):
                break
        val, der, nat = f(t)
        # both the segment scale and the natural size at the root must be met
        if abs(val) < rel_tol * min(scale, nat):
            return DivisorPoint(b + t * d, complex(t), abs(val), scale, abs(der))
    raise NoConvergence(f"no theta zero after {NEWTON_STARTS} starts x {NEWTON_STEPS} steps")


def reduce_to_cell(tau, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Write ``z = z0 + m1 + tau m2`` with ``z0`` in the fundamental cell.

    Returns ``(z0, m1, m2)`` with integer vectors ``m1, m2``.
    """
    tau = _as_tau(tau)
    zv = _as_vec(z, tau.genus)
    m2 = np.floor(tau.Yinv @ zv.imag + 1e-12)
    w = zv - tau.entries @ m2
    m1 = np.floor(w.real + 1e-12)
    return w - m1, m1, m2
