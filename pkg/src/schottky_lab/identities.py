"""Numerical certification of theta-function identities.

Every check returns a :class:`~schottky_lab.report.ResidualReport` whose
residual is relative to the largest term participating in the identity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    DegenerateQuery,
    DegreeMismatch,
    NotOnDivisor,
    SingularSystem,
    WrongGenus,
)
from .report import ResidualReport
from .sampling import random_cell_point, rng_from_seed
from .theta import (
    DEFAULT_POLICY,
    NO_JET,
    DirectionalJet,
    HalfCharacteristic,
    PeriodMatrix,
    TruncationPolicy,
    _as_tau,
    _as_vec,
    characteristics,
    kummer_many,
    theta_char,
    theta_char_many,
)

J = DirectionalJet.of


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class KpDirections:
    """Directions of the x, y, t flows and the Hirota constant.

    Vectors are in theta-argument units: the KP potential is
    ``u = 2 d_x^2 ln theta(U x + V y + W t + Z)``.
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    c: complex | None = None

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=complex).reshape(-1)
        g = self.U.size
        self.V = np.asarray(self.V, dtype=complex).reshape(-1)
        self.W = np.asarray(self.W, dtype=complex).reshape(-1)
        if self.V.size != g or self.W.size != g:
            raise ValueError("U, V, W must have equal length")
        if self.c is not None:
            self.c = complex(self.c)

    @property
    def genus(self) -> int:
        return self.U.size

    def for_kummer_variant(self) -> "KpDirections":
        """Directions that make the Kummer-variant operator equal the Hirota one.

        ``(d_U^4 - d_U d_W' + 3/4 d_V'^2 + c')`` with ``V' = 2V``, ``W' = 4W``
        and ``c' = 16 c`` coincides with
        ``d_U^4 - 4 d_U d_W + 3 d_V^2 + 16 c``.
        """
        c = None if self.c is None else 16 * self.c
        return KpDirections(self.U, 2 * self.V, 4 * self.W, c)


@dataclass(eq=False)
class SecancyQuery:
    """Points and directions for the trisecant-type wedge conditions.

    ``full``: three Kummer arguments ``a, b, c`` (already the half-combinations
    of curve points).  ``tangent``: two arguments ``a`` (tangency point) and
    ``b``.  ``flex``: one point ``q``; rows are evaluated at ``q / 2``.
    """

    mode: str
    points: Sequence
    U: np.ndarray | None = None
    V: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("full", "tangent", "flex"):
            raise ValueError(f"unknown secancy mode {self.mode!r}")
        self.points = [np.asarray(p, dtype=complex).reshape(-1) for p in self.points]
        need = {"full": 3, "tangent": 2, "flex": 1}[self.mode]
        if len(self.points) != need:
            raise ValueError(f"{self.mode} mode needs {need} points")
        if self.U is not None:
            self.U = np.asarray(self.U, dtype=complex).reshape(-1)
        if self.V is not None:
            self.V = np.asarray(self.V, dtype=complex).reshape(-1)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def lattice_coordinates(tau: PeriodMatrix, z: np.ndarray) -> np.ndarray:
    """Real coordinates ``(p, q)`` with ``z = p + tau q``."""
    q = tau.Yinv @ z.imag
    p = z.real - tau.X @ q
    return np.concatenate([p, q])


def distance_to_lattice(tau: PeriodMatrix, z: np.ndarray) -> float:
    coords = lattice_coordinates(tau, z)
    return float(np.max(np.abs(coords - np.round(coords))))


def _max_abs(*vals) -> float:
    return max(abs(v) for v in vals)


# ---------------------------------------------------------------------------
# universal identities
# ---------------------------------------------------------------------------


def quasiperiodicity_residual(tau, z, m1, m2, policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Residual of ``theta(z + m1 + tau m2) = exp(-pi i (2 m2.z + m2.tau.m2)) theta(z)``.

    Normalized by the largest of both sides and the natural scale of the
    shifted lattice sum.
    """
    tau = _as_tau(tau)
    zv = _as_vec(z, tau.genus)
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    shifted = theta_char_many(tau, zv + m1 + tau.entries @ m2, None, [NO_JET], policy)[0]
    base = theta_char_many(tau, zv, None, [NO_JET], policy)[0]
    factor = np.exp(-1j * np.pi * (2 * m2 @ zv + m2 @ tau.entries @ m2))
    rhs = factor * base.value
    norm = max(abs(shifted.value), abs(rhs), math.exp(shifted.log_scale), 1e-300)
    return ResidualReport(
        "quasiperiodicity",
        abs(shifted.value - rhs) / norm,
        norm,
        params={"m1": m1.tolist(), "m2": m2.tolist()},
    )


def addition_residual(tau, x, y, policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Residual of ``theta(x+y) theta(x-y) = sum_eps Theta[eps](x) Theta[eps](y)``."""
    tau = _as_tau(tau)
    g = tau.genus
    xv = _as_vec(x, g)
    yv = _as_vec(y, g)
    a = theta_char_many(tau, xv + yv, None, [NO_JET], policy)[0]
    b = theta_char_many(tau, xv - yv, None, [NO_JET], policy)[0]
    lhs = a.value * b.value
    terms = kummer_many(tau, xv, [NO_JET], policy)[0] * kummer_many(tau, yv, [NO_JET], policy)[0]
    rhs = complex(np.sum(terms))
    natural = math.exp(a.log_scale + b.log_scale)
    norm = max(abs(lhs), float(np.max(np.abs(terms))), natural)
    return ResidualReport("addition", abs(lhs - rhs) / norm, norm)


def schottky_igusa(tau, policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Schottky-Igusa modular form in genus 4.

    ``S = 2^4 sum theta^16[e;d](0) - (sum theta^8[e;d](0))^2`` over even
    characteristics; the report carries ``S`` in ``extras["S"]`` and is
    normalized by ``|sum theta^8|^2``.
    """
    tau = _as_tau(tau)
    if tau.genus != 4:
        raise WrongGenus(f"Schottky-Igusa form needs genus 4, got {tau.genus}")
    zero = np.zeros(4)
    s8 = 0j
    s16 = 0j
    for ch in characteristics(4, parity=0):
        th = theta_char(tau, zero, ch, NO_JET, policy)
        t8 = th**8
        s8 += t8
        s16 += t8 * t8
    S = 16 * s16 - s8 * s8
    norm = abs(s8) ** 2
    return ResidualReport("schottky-igusa", abs(S) / norm, norm, tolerance=1e-8, extras={"S": S})


def genus1_schottky_sums(tau, policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[complex, complex]:
    """``(sum theta^8, sum theta^16)`` over even genus-1 characteristics."""
    tau = _as_tau(tau)
    s8 = s16 = 0j
    for ch in characteristics(1, parity=0):
        t8 = theta_char(tau, [0.0], ch, NO_JET, policy) ** 8
        s8 += t8
        s16 += t8 * t8
    return s8, s16


# ---------------------------------------------------------------------------
# secancy
# ---------------------------------------------------------------------------


def _minor_residual(M: np.ndarray) -> float:
    n = M.shape[1]
    if n < 3:
        return 0.0
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        return 0.0
    Mn = M / norms[:, None]
    idx = np.array(list(itertools.combinations(range(n), 3)))
    blocks = Mn[:, idx].transpose(1, 0, 2)
    return float(np.max(np.abs(np.linalg.det(blocks))))


def secancy_matrix(tau, query: SecancyQuery, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    tau = _as_tau(tau)
    g = tau.genus
    pts = [_as_vec(p, g) for p in query.points]
    if query.mode == "full":
        for i, j in itertools.combinations(range(3), 2):
            if distance_to_lattice(tau, pts[i] - pts[j]) < 1e-6:
                raise DegenerateQuery("coincident points modulo the lattice")
        for p in pts:
            if distance_to_lattice(tau, 2 * p) < 1e-6:
                raise DegenerateQuery("point within 1e-6 of a two-torsion point")
        return np.vstack([kummer_many(tau, p, [NO_JET], policy)[0] for p in pts])
    U = query.U
    if U is None or not np.any(U):
        raise DegenerateQuery("direction U must be non-zero")
    U = _as_vec(U, g)
    if query.mode == "tangent":
        a, b = pts
        rows = kummer_many(tau, a, [NO_JET, J((U, 1))], policy)
        return np.vstack([rows[0], rows[1], kummer_many(tau, b, [NO_JET], policy)[0]])
    V = np.zeros(g, complex) if query.V is None else _as_vec(query.V, g)
    q = pts[0] / 2
    rows = kummer_many(tau, q, [NO_JET, J((U, 1)), J((U, 2)), J((V, 1))], policy)
    return np.vstack([rows[0], rows[1], rows[2] + rows[3]])


def secancy_residual(tau, query: SecancyQuery, policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Largest normalized 3 x 3 minor of the three Kummer-derived rows.

    Each row is scaled to unit norm first, so the value is scale-free.
    """
    M = secancy_matrix(tau, query, policy)
    res = _minor_residual(M)
    return ResidualReport(f"secancy-{query.mode}", res, 1.0, tolerance=1e-6)


# ---------------------------------------------------------------------------
# KP on the Kummer variety and the Hirota form
# ---------------------------------------------------------------------------

_VARIANTS = {"kummer": (1.0, -1.0, 0.75), "second-order": (1.0, -4.0, 3.0)}


def kummer_kp_residual(tau, dirs: KpDirections, variant: str = "kummer", policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Misfit of ``(a d_U^4 + b d_U d_W + e d_V^2 + c) Kum(0) = 0``.

    ``variant="kummer"`` uses coefficients ``(1, -1, 3/4)``, ``"second-order"``
    uses ``(1, -4, 3)``; both exactly as printed.  When ``dirs.c`` is None the
    constant is fitted by least squares over the ``2^g`` components and
    returned in ``extras["c"]``.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {sorted(_VARIANTS)}")
    tau = _as_tau(tau)
    g = tau.genus
    a4, a_uw, a_vv = _VARIANTS[variant]
    zero = np.zeros(g)
    rows = kummer_many(tau, zero, [NO_JET, J((dirs.U, 4)), J((dirs.U, 1), (dirs.W, 1)), J((dirs.V, 2))], policy)
    K = rows[0]
    parts = [a4 * rows[1], a_uw * rows[2], a_vv * rows[3]]
    r0 = parts[0] + parts[1] + parts[2]
    if dirs.c is None:
        c = -complex(np.vdot(K, r0) / np.vdot(K, K))
    else:
        c = dirs.c
    resid = r0 + c * K
    norm = max(float(np.max(np.abs(p))) for p in parts + [c * K])
    if norm == 0.0:
        return ResidualReport(f"kummer-kp-{variant}", 0.0, 1.0, tolerance=1e-8, extras={"c": c})
    return ResidualReport(
        f"kummer-kp-{variant}",
        float(np.max(np.abs(resid))) / norm,
        norm,
        tolerance=1e-8,
        extras={"c": c},
    )


def hirota_jets(dirs: KpDirections) -> list[DirectionalJet]:
    U, V, W = dirs.U, dirs.V, dirs.W
    return [
        NO_JET,
        J((U, 1)),
        J((U, 2)),
        J((U, 3)),
        J((U, 4)),
        J((W, 1)),
        J((U, 1), (W, 1)),
        J((V, 1)),
        J((V, 2)),
    ]


def hirota_terms(values: Sequence[complex], c: complex) -> list[complex]:
    t, tx, txx, txxx, txxxx, tt, txt, ty, tyy = values
    return [
        txxxx * t,
        -4 * txxx * tx,
        3 * txx * txx,
        4 * tx * tt,
        -4 * txt * t,
        3 * tyy * t,
        -3 * ty * ty,
        8 * c * t * t,
    ]


def hirota_residual(tau, z, dirs: KpDirections, policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualReport:
    """Residual of the bilinear KP equation for theta at ``z``.

    ``theta_xxxx theta - 4 theta_xxx theta_x + 3 theta_xx^2 + 4 theta_x theta_t
    - 4 theta_xt theta + 3 theta_yy theta - 3 theta_y^2 + 8 c theta^2``, with
    x, y, t the directional derivatives along U, V, W; normalized by the
    largest monomial.
    """
    if dirs.c is None:
        raise ValueError("hirota_residual needs the constant c")
    tau = _as_tau(tau)
    vals = [v.value for v in theta_char_many(tau, z, None, hirota_jets(dirs), policy)]
    terms = hirota_terms(vals, dirs.c)
    norm = max(abs(t) for t in terms)
    if norm == 0.0:
        return ResidualReport("hirota", 0.0, 1.0, tolerance=1e-8)
    return ResidualReport("hirota", abs(sum(terms)) / norm, norm, tolerance=1e-8)


@dataclass
class _LogThetaData:
    P: complex  # (theta_UUUU theta - 4 theta_UUU theta_U + 3 theta_UU^2) / theta^2
    H: np.ndarray  # Hessian of ln theta
    gU: np.ndarray  # gradient of d_U ln theta
    scale: float


def _log_theta_data(tau: PeriodMatrix, z: np.ndarray, U: np.ndarray, policy) -> _LogThetaData:
    g = tau.genus
    E = np.eye(g)
    jets = [NO_JET, J((U, 1)), J((U, 2)), J((U, 3)), J((U, 4))]
    jets += [J((E[i], 1)) for i in range(g)]
    jets += [J((U, 1), (E[i], 1)) for i in range(g)]
    pairs = [(i, j) for i in range(g) for j in range(i, g)]
    jets += [J((E[i], 1), (E[j], 1)) if i != j else J((E[i], 2)) for i, j in pairs]
    vals = np.array([v.value for v in theta_char_many(tau, z, None, jets, policy)])
    t, tu, tuu, tuuu, tuuuu = vals[:5]
    grad = vals[5 : 5 + g]
    grad_u = vals[5 + g : 5 + 2 * g]
    hess = np.empty((g, g), complex)
    for (i, j), v in zip(pairs, vals[5 + 2 * g :]):
        hess[i, j] = hess[j, i] = v
    P = (tuuuu * t - 4 * tuuu * tu + 3 * tuu * tuu) / (t * t)
    H = hess / t - np.outer(grad, grad) / (t * t)
    gU = grad_u / t - tu * grad / (t * t)
    scale = max(abs(tuuuu * t), abs(tuuu * tu), abs(tuu * tuu)) / abs(t * t)
    return _LogThetaData(P, H, gU, max(scale, 1e-300))


@dataclass
class KpFit:
    """Result of :func:`fit_kp_parameters`."""

    V: np.ndarray
    W: np.ndarray
    c: complex
    residual: float
    train_residual: float
    report: ResidualReport
    starts: int = 0
    history: list = field(default_factory=list)

    @property
    def directions(self) -> tuple[np.ndarray, np.ndarray, complex]:
        return self.V, self.W, self.c


def _perp_basis(U: np.ndarray) -> np.ndarray:
    g = U.size
    u = U / np.linalg.norm(U)
    # columns orthonormal to u in the Hermitian inner product
    M = np.eye(g, dtype=complex) - np.outer(u, u.conj())
    q, r = np.linalg.qr(M)
    keep = np.abs(np.diag(r)) > 1e-10
    return q[:, keep][:, : g - 1]


def fit_kp_parameters(
    tau,
    U,
    z_samples: Sequence,
    *,
    gauge_V=None,
    init_V=None,
    holdout: Sequence | None = None,
    starts: int = 8,
    seed: int = 0,
    tolerance: float = 1e-8,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> KpFit:
    """Fit ``(V, W, c)`` so that the bilinear KP equation holds at the samples.

    Dividing the bilinear form by ``theta^2`` gives, per sample,

        P + 3 V^T H V - 4 (grad d_U ln theta) . W + 8 c = 0,

    linear in ``(W, c)`` for fixed ``V``.  ``(W, c)`` are eliminated by
    linear least squares and ``V`` is optimized by Levenberg-Marquardt from
    ``starts`` seeded starting points.

    The equation is invariant under ``V -> V + 2 mu U``,
    ``W -> W + 3 mu V + 3 mu^2 U``.  The fit fixes this freedom by pinning the
    Hermitian projection of ``V`` on ``U`` to that of ``gauge_V`` (zero when
    omitted).  In genus 1 this pins ``V`` completely.

    The reported residual is the largest :func:`hirota_residual` over the
    held-out samples (fresh seeded cell samples when ``holdout`` is None).
    """
    tau = _as_tau(tau)
    g = tau.genus
    U = _as_vec(U, g)
    if not np.any(U):
        raise ValueError("U must be non-zero")
    if len(z_samples) < 4 * g + 4:
        raise ValueError(f"need at least {4 * g + 4} samples, got {len(z_samples)}")
    data = [_log_theta_data(tau, _as_vec(z, g), U, policy) for z in z_samples]
    w = np.array([1.0 / d.scale for d in data])
    A = np.array([np.concatenate([-4 * d.gU, [8.0]]) for d in data]) * w[:, None]
    P = np.array([d.P for d in data])
    Hs = np.array([d.H for d in data])

    u_hat = U / np.linalg.norm(U)
    v_par = np.zeros(g, complex) if gauge_V is None else np.vdot(u_hat, _as_vec(gauge_V, g)) * u_hat
    B = _perp_basis(U) if g > 1 else np.zeros((1, 0), complex)
    k = B.shape[1]

    def build_V(p):
        return v_par + B @ (p[:k] + 1j * p[k:]) if k else v_par

    def solve_linear(V):
        rhs = -(P + 3 * np.einsum("i,sij,j->s", V, Hs, V)) * w
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        return sol, A @ sol - rhs

    def fun(p):
        _, r = solve_linear(build_V(p))
        return np.concatenate([r.real, r.imag])

    rng = rng_from_seed(seed)
    inits = []
    if init_V is not None:
        v0 = _as_vec(init_V, g) - v_par
        coef = B.conj().T @ v0 if k else np.zeros(0)
        inits.append(np.concatenate([coef.real, coef.imag]))
    while len(inits) < max(starts, 1):
        inits.append(rng.normal(scale=1.0, size=2 * k))
    best = None
    history = []
    for p0 in inits[: max(starts, 1)]:
        if k:
            out = least_squares(fun, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400 * (2 * k + 1))
            p, cost = out.x, float(np.linalg.norm(out.fun))
        else:
            p, cost = p0, float(np.linalg.norm(fun(p0)))
        history.append(cost)
        if best is None or cost < best[1]:
            best = (p, cost)
    V = build_V(best[0])
    sol, r = solve_linear(V)
    W, c = sol[:g], complex(sol[g])
    train = float(np.max(np.abs(r))) if r.size else 0.0

    if holdout is None:
        hrng = rng_from_seed(seed + 1_000_003)
        holdout = [random_cell_point(tau, hrng) for _ in range(max(8, 2 * g + 2))]
    dirs = KpDirections(U, V, W, c)
    held = max(hirota_residual(tau, z, dirs, policy).residual for z in holdout)
    rep = ResidualReport("kp-fit", held, 1.0, tolerance=tolerance, extras={"V": V, "W": W, "c": c})
    return KpFit(V, W, c, held, train, rep, starts=len(history), history=history)


# ---------------------------------------------------------------------------
# Weil reducibility
# ---------------------------------------------------------------------------


def _weil_row(tau, z, p, q, r, s, policy):
    f = lambda w: theta_char_many(tau, w, None, [NO_JET], policy)[0].value  # noqa: E731
    f1 = f(z + p + s - r - q) * f(z)
    f2 = f(z + s - r) * f(z + p - q)
    f3 = f(z + p - r) * f(z + s - q)
    return f1, f2, f3


def weil_residual(tau, aj: Sequence, z_samples: Sequence, policy: TruncationPolicy = DEFAULT_POLICY, tolerance: float = 1e-7) -> ResidualReport:
    """Fit ``A, B`` in ``A f1 + B f2 = f3`` on two samples and test the rest.

    ``f1 = theta(z+p+s-r-q) theta(z)``, ``f2 = theta(z+s-r) theta(z+p-q)``,
    ``f3 = theta(z+p-r) theta(z+s-q)``.  The 2 x 2 solve is retried on the
    next pair of samples (up to 8 tries) when ill-conditioned.
    """
    tau = _as_tau(tau)
    g = tau.genus
    p, q, r, s = (_as_vec(v, g) for v in aj)
    if distance_to_lattice(tau, p - q) < 1e-9:
        raise DegenerateQuery("p - q is a lattice vector")
    rows = [_weil_row(tau, _as_vec(z, g), p, q, r, s, policy) for z in z_samples]
    if len(rows) < 3:
        raise ValueError("need at least three samples")
    sol = None
    used = None
    for attempt in range(8):
        i, j = 2 * attempt, 2 * attempt + 1
        if j >= len(rows):
            break
        M = np.array([[rows[i][0], rows[i][1]], [rows[j][0], rows[j][1]]])
        rhs = np.array([rows[i][2], rows[j][2]])
        scale = np.max(np.abs(M))
        if scale == 0 or np.linalg.cond(M / scale) > 1e10:
            continue
        sol = np.linalg.solve(M, rhs)
        used = {i, j}
        break
    if sol is None:
        raise SingularSystem("rank-deficient 2x2 system after 8 sample pairs")
    A, B = sol
    worst = 0.0
    norm_used = 1.0
    for k, (f1, f2, f3) in enumerate(rows):
        if k in used:
            continue
        norm = max(abs(A * f1), abs(B * f2), abs(f3), 1e-300)
        res = abs(A * f1 + B * f2 - f3) / norm
        if res >= worst:
            worst, norm_used = res, norm
    return ResidualReport("weil", worst, norm_used, tolerance=tolerance, extras={"A": complex(A), "B": complex(B)})


# ---------------------------------------------------------------------------
# theta divisor identities
# ---------------------------------------------------------------------------


def divisor_jets(U, V) -> list[DirectionalJet]:
    return [
        NO_JET,
        J((U, 1)),
        J((U, 2)),
        J((U, 3)),
        J((U, 4)),
        J((V, 1)),
        J((U, 1), (V, 1)),
        J((V, 2)),
    ]


def eq_t_monomials(vals, form: str = "corrected") -> list[complex]:
    """Monomials of the quartic identity on the theta divisor.

    ``form="corrected"`` (default) is ``x_ddot + 2 w = 0`` multiplied by
    ``(D1)^3`` with the zero-track acceleration

        x_ddot = (-D11 D2^2 + 2 D1 D2 D12 - D1^2 D22) / D1^3

    and the gauge-invariant Laurent coefficient of ``u = 2 d_x^2 ln theta``

        w = (D1^2 D1111 - 2 D1 D11 D111 + D11^3) / (2 D1^3).

    ``form="printed"`` reproduces the literal expression
    ``((D2)^2 - 2(D11)^2) D11 - 2(D11 D111 + D2 D12) D1 + (D22 - 2 D1111) D1^2``,
    which is not invariant under ``theta -> exp(linear) theta`` and fails
    already in genus 1.
    """
    _, d1, d11, d111, d1111, d2, d12, d22 = vals
    if form == "corrected":
        return [
            -d11 * d2 * d2,
            2 * d1 * d2 * d12,
            -d1 * d1 * d22,
            d1 * d1 * d1111,
            -2 * d1 * d11 * d111,
            d11**3,
        ]
    if form == "printed":
        return [
            d2 * d2 * d11,
            -2 * d11**3,
            -2 * d11 * d111 * d1,
            -2 * d2 * d12 * d1,
            d22 * d1 * d1,
            -2 * d1111 * d1 * d1,
        ]
    raise ValueError("form must be 'corrected' or 'printed'")


def w_coefficient(vals, form: str = "corrected") -> complex:
    """Coefficient ``w`` of ``(x - x_tilde)`` in ``u`` at a simple zero."""
    _, d1, d11, d111, d1111 = vals[:5]
    if form == "corrected":
        return (d1 * d1 * d1111 - 2 * d1 * d11 * d111 + d11**3) / (2 * d1**3)
    return (d1 * d1 * d1111 + d1 * d11 * d111 + d11**3) / d1**3


def track_acceleration(vals) -> complex:
    _, d1, d11, _, _, d2, d12, d22 = vals
    return (-d11 * d2 * d2 + 2 * d1 * d2 * d12 - d1 * d1 * d22) / d1**3


def theta_surface_residual(
    tau,
    U,
    V,
    z0,
    policy: TruncationPolicy = DEFAULT_POLICY,
    scale: float | None = None,
    form: str = "corrected",
) -> ResidualReport:
    """Residual of the quartic theta-divisor identity with ``D1 = d_U``, ``D2 = d_V``.

    See :func:`eq_t_monomials` for the two available forms.  ``z0`` must be
    a zero of theta: ``|theta(z0)| < 1e-10 * scale`` where ``scale``
    defaults to the natural size ``exp(pi y Y^-1 y)`` of theta near ``z0``.
    The residual is normalized by the largest monomial.
    """
    tau = _as_tau(tau)
    g = tau.genus
    U = _as_vec(U, g)
    V = _as_vec(V, g)
    tv = theta_char_many(tau, z0, None, divisor_jets(U, V), policy)
    vals = [v.value for v in tv]
    ref = math.exp(tv[0].log_scale) if scale is None else scale
    if abs(vals[0]) >= 1e-10 * ref:
        raise NotOnDivisor(f"|theta(z0)| = {abs(vals[0]):.3e} exceeds 1e-10 * scale")
    mon = eq_t_monomials(vals, form)
    norm = max(abs(m) for m in mon)
    if norm == 0:
        return ResidualReport("theta-surface", 0.0, 1.0, tolerance=1e-8)
    return ResidualReport("theta-surface", abs(sum(mon)) / norm, norm, tolerance=1e-8)


# ---------------------------------------------------------------------------
# elliptic functions from divisors
# ---------------------------------------------------------------------------

ODD_G1 = HalfCharacteristic((0.5,), (0.5,))


@dataclass
class EllipticFunction:
    """``f(z) = prod theta[1/2;1/2](tau, x_i - z)^{m_i}``."""

    tau: PeriodMatrix
    divisor: tuple
    policy: TruncationPolicy = DEFAULT_POLICY

    def __call__(self, z) -> complex:
        val = 1.0 + 0j
        for x, m in self.divisor:
            val *= theta_char(self.tau, [x - z], ODD_G1, NO_JET, self.policy) ** m
        return complex(val)


def elliptic_function_from_divisor(
    tau,
    divisor: Sequence[tuple[complex, int]],
    samples: int = 16,
    seed: int = 0,
    tolerance: float = 1e-9,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> tuple[EllipticFunction, ResidualReport]:
    """Genus-1 meromorphic function with prescribed divisor and its periodicity report.

    The report's residual is the largest of ``|f(z+1)/f(z) - 1|`` and
    ``|f(z+tau)/f(z) - 1|`` over seeded cell samples.
    """
    tau = _as_tau(tau)
    if tau.genus != 1:
        raise WrongGenus("elliptic functions need genus 1")
    div = tuple((complex(x), int(m)) for x, m in divisor)
    if sum(m for _, m in div) != 0:
        raise DegreeMismatch("multiplicities must sum to zero")
    f = EllipticFunction(tau, div, policy)
    rng = rng_from_seed(seed)
    t = complex(tau.entries[0, 0])
    worst = 0.0
    for _ in range(samples):
        z = complex(random_cell_point(tau, rng)[0])
        fz = f(z)
        for shift in (1.0, t):
            worst = max(worst, abs(f(z + shift) / fz - 1.0))
    return f, ResidualReport("elliptic-function", worst, 1.0, tolerance=tolerance)
