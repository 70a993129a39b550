"""Baker-Akhiezer functions, finite-gap KP fields and theta-divisor tracking.

All directions are theta-argument directions (``U^(n) / (2 pi i)``), so the
potential is ``u = 2 d_x^2 ln theta(U x + V y + W t + Z)`` and the flows are

    psi_y = psi_xx + u psi,      3/4 u_yy = (u_t - 3/2 u u_x - 1/4 u_xxx)_x.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import least_squares

from .errors import DivisorCollision, GridTooCoarse, NoConvergence, SeedNotFound, TrackLost
from .fixtures import CurveFixture
from .identities import divisor_jets, theta_surface_residual, w_coefficient
from .report import ResidualReport
from .theta import DEFAULT_POLICY, NO_JET, DirectionalJet, TruncationPolicy, _as_tau, _as_vec, theta_char_many, theta_divisor_point

J = DirectionalJet.of

COLLISION_TOL = 1e-4
MASK_TOL = 1e-6

# centred finite-difference weights, fourth order in h
D1_5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
D2_5 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
D4_7 = np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0


def _theta_jets(tau, z, jets, policy):
    vals = theta_char_many(tau, z, None, jets, policy)
    return [v.value for v in vals], math.exp(vals[0].log_scale)


def log_theta_second(tau, z, U, policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[complex, float]:
    """``d_U^2 ln theta`` at ``z`` and ``|theta| / natural size``."""
    (t0, t1, t2), nat = _theta_jets(tau, z, [NO_JET, J((U, 1)), J((U, 2))], policy)
    if t0 == 0:
        return complex("nan"), 0.0
    return (t2 * t0 - t1 * t1) / (t0 * t0), abs(t0) / nat


# ---------------------------------------------------------------------------
# Baker-Akhiezer consistency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    """Box ``[x0, x0 + wx] x [y0, y0 + wy]`` of sample points."""

    x0: float
    y0: float
    wx: float = 0.4
    wy: float = 0.4

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.column_stack([self.x0 + self.wx * rng.random(n), self.y0 + self.wy * rng.random(n)])

    def shifted(self, dx: float, dy: float = 0.0) -> "Window":
        return Window(self.x0 + dx, self.y0 + dy, self.wx, self.wy)


@dataclass
class _BaSampler:
    tau: object
    A: np.ndarray
    U: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    h: float
    policy: TruncationPolicy

    def _theta(self, shift, x, y):
        vals = theta_char_many(self.tau, shift + self.U * x + self.V * y + self.Z, None, [NO_JET], self.policy)
        return vals[0].value, abs(vals[0].value) / math.exp(vals[0].log_scale)

    def phi_stencil(self, x, y):
        """``phi = theta(A + .)/theta(.)`` on the 5 x-points and 5 y-points, plus the
        smallest relative size of either theta met."""
        h = self.h
        worst = math.inf
        xs, ys = [], []
        for k in range(-2, 3):
            for acc, (dx, dy) in ((xs, (k * h, 0.0)), (ys, (0.0, k * h))):
                num, rn = self._theta(self.A, x + dx, y + dy)
                den, rd = self._theta(np.zeros_like(self.A), x + dx, y + dy)
                worst = min(worst, rn, rd)
                acc.append(num / den)
        return np.array(xs), np.array(ys), worst

    def window_minimum(self, window: "Window") -> float:
        """Smallest ``|theta| / natural size`` of either theta over the window
        (inflated by the stencil reach), by bounded least squares from a 3 x 3 grid."""
        r = 2 * self.h
        lo = np.array([window.x0 - r, window.y0 - r])
        hi = np.array([window.x0 + window.wx + r, window.y0 + window.wy + r])
        best = math.inf
        for shift in (self.A, np.zeros_like(self.A)):

            def fun(p, shift=shift):
                vals = theta_char_many(self.tau, shift + self.U * p[0] + self.V * p[1] + self.Z, None, [NO_JET], self.policy)
                v = vals[0].value / math.exp(vals[0].log_scale)
                return [v.real, v.imag]

            for fx in (0.1, 0.5, 0.9):
                for fy in (0.1, 0.5, 0.9):
                    p0 = lo + (hi - lo) * np.array([fx, fy])
                    out = least_squares(fun, p0, bounds=(lo, hi), xtol=1e-12, ftol=1e-14, gtol=1e-14, max_nfev=60)
                    best = min(best, float(np.hypot(*out.fun)))
        return best

    def u(self, x, y):
        val, _ = log_theta_second(self.tau, self.U * x + self.V * y + self.Z, self.U, self.policy)
        return 2 * val


def ba_consistency(
    fixture: CurveFixture,
    p: str,
    window: Window,
    Z=None,
    fit_points: int = 8,
    holdout: int = 32,
    h: float = 2e-3,
    seed: int = 0,
    tolerance: float = 1e-6,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> ResidualReport:
    """Fit ``(kappa1, kappa2)`` so that ``psi = theta(A(p) + Ux + Vy + Z)/theta(Ux + Vy + Z) e^{kappa1 x + kappa2 y}``
    satisfies ``(d_x^2 + u) psi = d_y psi`` under 5-point differences.

    Writing ``psi = phi e^{kappa1 x + kappa2 y}`` the equation is linear in
    ``(kappa1, E = kappa1^2 - kappa2)``:
    ``2 kappa1 phi_x + E phi = phi_y - phi_xx - u phi``.  The fit uses
    ``fit_points`` random window points; the residual is evaluated on
    ``holdout`` further points and normalized by ``max |psi_y|``.
    ``A(p)`` is taken relative to the fixture's marked point when it has one.

    Raises
    ------
    DivisorCollision
        Either theta drops below ``1e-4`` of its natural size on the window
        (searched by bounded least squares, and at every stencil point).
    """
    tau = fixture.tau
    g = tau.genus
    U, V, _ = fixture.theta_directions()
    A = _as_vec(fixture.points[p], g)
    if fixture.marked_point is not None:
        A = A - _as_vec(fixture.points[fixture.marked_point], g)
    Zv = fixture.Z if Z is None else _as_vec(Z, g)
    sampler = _BaSampler(tau, A, U, V, Zv, h, policy)
    rng = np.random.default_rng(seed)
    pts = window.sample(fit_points + holdout, rng)
    low = sampler.window_minimum(window)
    if low < COLLISION_TOL:
        raise DivisorCollision(f"theta reaches {low:.2e} of its natural size inside the window")

    rows, rhs, data = [], [], []
    for x, y in pts:
        xs, ys, rel = sampler.phi_stencil(x, y)
        if rel < COLLISION_TOL:
            raise DivisorCollision(f"theta is {rel:.2e} of its natural size near ({x:.4f}, {y:.4f})")
        phi = xs[2]
        px = D1_5 @ xs / h
        pxx = D2_5 @ xs / h**2
        py = D1_5 @ ys / h
        u = sampler.u(x, y)
        data.append((x, y, phi, px, pxx, py, u))
    for x, y, phi, px, pxx, py, u in data[:fit_points]:
        rows.append([2 * px, phi])
        rhs.append(py - pxx - u * phi)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    k1, E = sol
    k2 = k1 * k1 - E
    resid, norm = 0.0, 0.0
    for x, y, phi, px, pxx, py, u in data[fit_points:]:
        ex = np.exp(k1 * x + k2 * y)
        lhs = (pxx + 2 * k1 * px + k1 * k1 * phi + u * phi) * ex
        dy = (py + k2 * phi) * ex
        resid = max(resid, abs(lhs - dy))
        norm = max(norm, abs(dy))
    norm = max(norm, 1e-300)
    return ResidualReport(
        "ba",
        resid / norm,
        norm,
        tolerance=tolerance,
        params={"point": p},
        extras={"kappa1": complex(k1), "kappa2": complex(k2)},
    )


def u_fd_check(tau, z, U, h: float = 1e-2, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """``|2 d_U^2 ln theta|`` analytic versus a 5-point difference of ``2 ln theta``, relative."""
    tau = _as_tau(tau)
    U = _as_vec(U, tau.genus)
    z = _as_vec(z, tau.genus)
    exact, _ = log_theta_second(tau, z, U, policy)
    lt = []
    for k in range(-2, 3):
        v = theta_char_many(tau, z + k * h * U, None, [NO_JET], policy)[0].value
        lt.append(np.log(v))
    lt = np.unwrap(np.imag(lt)) * 1j + np.real(lt)
    fd = D2_5 @ lt / h**2
    return abs(2 * fd - 2 * exact) / max(abs(2 * exact), 1e-300)


# ---------------------------------------------------------------------------
# KP fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """``n[i]`` samples with spacing ``h[i]`` from ``origin[i]`` along x, y, t."""

    origin: tuple = (0.1, 0.0, 0.0)
    n: tuple = (9, 9, 9)
    h: tuple = (0.01, 0.01, 0.01)

    def axes(self) -> tuple:
        return tuple(o + hh * np.arange(nn) for o, nn, hh in zip(self.origin, self.n, self.h))

    @classmethod
    def for_fixture(cls, fixture: CurveFixture, h: float = 0.01, n: int = 9, centre=(0.0, 0.0, 0.0)) -> "GridSpec":
        """Grid centred at ``centre`` whose steps move the theta argument by at most ``h |U|``.

        Axis ``i`` uses ``h * min(1, |U| / |D_i|)`` where ``D_i`` is the flow
        direction, so fast flows (typically ``t``) are resolved like ``x``.
        """
        dirs = _field_directions(fixture)
        nu = float(np.linalg.norm(dirs[0]))
        hs = tuple(h * min(1.0, nu / float(np.linalg.norm(d))) if np.any(d) else h for d in dirs)
        origin = tuple(c - hh * (n - 1) / 2 for c, hh in zip(centre, hs))
        return cls(origin, (n, n, n), hs)


@dataclass(eq=False)
class FieldGrid:
    """Samples ``u[i, j, k]`` at ``(x[i], y[j], t[k])`` with a divisor mask."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    u: np.ndarray
    mask: np.ndarray
    provenance: str = ""

    @property
    def spacing(self) -> tuple:
        return tuple(float(a[1] - a[0]) if a.size > 1 else 0.0 for a in (self.x, self.y, self.t))

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __post_init__(self):
        for a in (self.x, self.y, self.t):
            if a.size > 2 and np.max(np.abs(np.diff(a, 2))) > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
                raise ValueError("grid axes must be uniformly spaced")


def _threads() -> int:
    raw = os.environ.get("SCHOTTKY_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _field_directions(fixture: CurveFixture) -> tuple:
    if fixture.W is not None and fixture.c is not None:
        d = fixture.kp_directions()
        return d.U, d.V, d.W
    return fixture.theta_directions()


def kp_field(
    fixture: CurveFixture,
    grid: GridSpec = GridSpec(),
    Z=None,
    policy: TruncationPolicy = DEFAULT_POLICY,
    threads: int | None = None,
) -> FieldGrid:
    """Sample ``u = 2 d_U^2 ln theta(U x + V y + W t + Z)`` on a grid.

    Uses :meth:`CurveFixture.kp_directions` when the fixture records a
    t-direction, otherwise its theta-argument ``U1, U2, U3``.  Points where
    ``|theta|`` is below ``1e-6`` of its natural size are masked (``u = nan``).
    """
    tau = fixture.tau
    g = tau.genus
    U, V, W = _field_directions(fixture)
    Zv = fixture.Z if Z is None else _as_vec(Z, g)
    x, y, t = grid.axes()
    pts = [(i, j, k) for i in range(x.size) for j in range(y.size) for k in range(t.size)]

    def one(idx):
        i, j, k = idx
        val, rel = log_theta_second(tau, U * x[i] + V * y[j] + W * t[k] + Zv, U, policy)
        return 2 * val, rel

    n = threads if threads is not None else _threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            out = list(ex.map(one, pts))
    else:
        out = [one(p) for p in pts]
    u = np.empty((x.size, y.size, t.size), complex)
    mask = np.zeros(u.shape, bool)
    for (i, j, k), (val, rel) in zip(pts, out):
        if rel < MASK_TOL or not np.isfinite(val):
            mask[i, j, k] = True
            u[i, j, k] = complex("nan")
        else:
            u[i, j, k] = val
    return FieldGrid(x, y, t, u, mask, fixture.provenance)


def _stencil(a: np.ndarray, w: np.ndarray, axis: int) -> np.ndarray:
    """Apply centred weights ``w`` along ``axis`` (valid part only)."""
    r = w.size // 2
    n = a.shape[axis]
    out = 0
    for s, c in enumerate(w):
        if c == 0:
            continue
        out = out + c * np.take(a, range(s, n - 2 * r + s), axis=axis)
    return out


def _crop(a: np.ndarray, pads: Sequence[int]) -> np.ndarray:
    sl = tuple(slice(p, a.shape[i] - p) for i, p in enumerate(pads))
    return a[sl]


def kp_fd_residual(field: FieldGrid, tolerance: float = 1e-4) -> ResidualReport:
    """Centred fourth-order residual of ``3/4 u_yy - (u_t - 3/2 u u_x - 1/4 u_xxx)_x``.

    Evaluated on interior points (3 in from the x-edges, 2 from the y and t
    edges); normalized by ``max |3/4 u_yy|`` (by the largest term when
    ``u_yy`` vanishes).  Masked points are excluded together with every
    interior point whose stencil touches them.

    Raises
    ------
    GridTooCoarse
        Fewer than 7 samples on an axis, or the spacing exceeds 1/20 of
        the wavelength ``2 pi max|u| / max|d_i u|`` on some axis.
    """
    u = field.u
    hx, hy, ht = field.spacing
    if min(u.shape) < 7:
        raise GridTooCoarse("need at least 7 samples per axis")
    filled = np.where(field.mask, 0.0, u)
    amp = float(np.max(np.abs(filled)))
    for axis, hh in enumerate((hx, hy, ht)):
        der = np.max(np.abs(_stencil(filled, D1_5, axis))) / hh
        if der > 0 and amp > 0:
            wavelength = 2 * np.pi * amp / der
            if hh > wavelength / 20:
                raise GridTooCoarse(f"spacing {hh} exceeds 1/20 of the wavelength {wavelength:.3e} on axis {axis}")
    # derivatives, each cropped to the common interior (3, 2, 2)
    u_yy = _crop(_stencil(filled, D2_5, 1), (3, 0, 2)) / hy**2
    u_xt = _crop(_stencil(_stencil(filled, D1_5, 0), D1_5, 2), (1, 2, 0)) / (hx * ht)
    half_sq_xx = _crop(_stencil(0.5 * filled * filled, D2_5, 0), (1, 2, 2)) / hx**2
    u_xxxx = _crop(_stencil(filled, D4_7, 0), (0, 2, 2)) / hx**4
    terms = [0.75 * u_yy, -u_xt, 1.5 * half_sq_xx, 0.25 * u_xxxx]
    res = terms[0] + terms[1] + terms[2] + terms[3]
    bad = np.zeros(res.shape, bool)
    if field.mask.any():
        m = field.mask.astype(float)
        near = _crop(_stencil(_stencil(_stencil(m, np.ones(7), 0), np.ones(5), 1), np.ones(5), 2), (0, 0, 0))
        bad = near > 0
    good = ~bad
    if not good.any():
        raise GridTooCoarse("every interior stencil touches a masked point")
    norm = float(np.max(np.abs(terms[0][good])))
    if norm == 0.0:
        norm = max(float(np.max(np.abs(t[good]))) for t in terms)
    r = float(np.max(np.abs(res[good])))
    if norm == 0.0:
        return ResidualReport("kp-residual", 0.0, 1.0, tolerance=tolerance)
    return ResidualReport("kp-residual", r / norm, norm, tolerance=tolerance, extras={"interior": int(good.sum())})


def export_csv(field: FieldGrid, out: TextIO | str | os.PathLike | None = None) -> str:
    """Write ``x,y,t,re_u,im_u`` rows (masked samples as ``nan``); returns the text."""
    buf = io.StringIO()
    buf.write("x,y,t,re_u,im_u\n")
    for i, xv in enumerate(field.x):
        for j, yv in enumerate(field.y):
            for k, tv in enumerate(field.t):
                v = field.u[i, j, k]
                buf.write(f"{float(xv)!r},{float(yv)!r},{float(tv)!r},{float(v.real)!r},{float(v.imag)!r}\n")
    text = buf.getvalue()
    if isinstance(out, (str, os.PathLike)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif out is not None:
        out.write(text)
    return text


# ---------------------------------------------------------------------------
# tracking the theta divisor along the y-flow
# ---------------------------------------------------------------------------

NEWTON_TRACK_STEPS = 30


@dataclass(eq=False)
class Track:
    """Zeros ``x(y_k)`` of ``theta(U x + V y_k + Z)`` with per-step data."""

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray
    theta_rel: np.ndarray
    eq_theta: np.ndarray


def _newton_on_line(tau, U, base, x, policy, rel_tol=1e-12):
    jets = [NO_JET, J((U, 1))]
    for _ in range(NEWTON_TRACK_STEPS):
        vals = theta_char_many(tau, base + U * x, None, jets, policy)
        f, df = vals[0].value, vals[1].value
        nat = math.exp(vals[0].log_scale)
        if abs(f) < rel_tol * nat:
            return x, abs(f) / nat
        if df == 0 or abs(df) < 1e-8 * nat:
            raise TrackLost(f"D1 theta vanishes near x = {x}")
        x = x - f / df
    vals = theta_char_many(tau, base + U * x, None, [NO_JET], policy)
    rel = abs(vals[0].value) / math.exp(vals[0].log_scale)
    if rel < 1e-10:
        return x, rel
    raise TrackLost(f"Newton did not converge (|theta| = {rel:.2e} of its natural size)")


def flex_track(
    tau,
    U,
    V,
    Z,
    y_range: tuple = (0.0, 0.5),
    steps: int = 50,
    policy: TruncationPolicy = DEFAULT_POLICY,
    eq_d_tolerance: float = 1e-5,
    eq_theta_tolerance: float = 1e-8,
    form: str = "corrected",
) -> tuple[ResidualReport, ResidualReport, Track]:
    """Follow a zero ``x(y)`` of ``theta(U x + V y + Z)`` and test ``x'' = -2 w``.

    The seed comes from :func:`theta_divisor_point` on the U-line through
    ``V y0 + Z``; each step predicts by cubic extrapolation and corrects by
    Newton.  ``x''`` uses the 5-point stencil in ``y`` on interior steps and
    ``w`` the analytic Laurent coefficient; the second report is the largest
    normalized misfit of the quartic theta-divisor identity along the track.

    Raises
    ------
    SeedNotFound
        No zero on the initial U-line.
    TrackLost
        Newton fails along the track (near ``D1 theta = 0``).
    """
    tau = _as_tau(tau)
    g = tau.genus
    U = _as_vec(U, g)
    V = _as_vec(V, g)
    Zv = _as_vec(Z, g)
    y0, y1 = y_range
    ys = y0 + (y1 - y0) * np.arange(steps + 1) / steps
    hy = (y1 - y0) / steps
    try:
        seed = theta_divisor_point(tau, V * ys[0] + Zv, U, policy)
    except NoConvergence as exc:
        raise SeedNotFound(str(exc)) from None
    xs = [seed.t]
    rels = []
    x_cur, rel = _newton_on_line(tau, U, V * ys[0] + Zv, seed.t, policy)
    xs[0] = x_cur
    rels.append(rel)
    for k in range(1, ys.size):
        if k >= 4:
            pred = 4 * xs[-1] - 6 * xs[-2] + 4 * xs[-3] - xs[-4]
        elif k >= 2:
            pred = 2 * xs[-1] - xs[-2]
        else:
            pred = xs[-1]
        x_cur, rel = _newton_on_line(tau, U, V * ys[k] + Zv, pred, policy)
        xs.append(x_cur)
        rels.append(rel)
    xs = np.array(xs, complex)
    ws, eqt = [], []
    jets = divisor_jets(U, V)
    for k, y in enumerate(ys):
        z = U * xs[k] + V * y + Zv
        vals = [v.value for v in theta_char_many(tau, z, None, jets, policy)]
        ws.append(w_coefficient(vals, form))
        eqt.append(theta_surface_residual(tau, U, V, z, policy, form=form).residual)
    ws = np.array(ws)
    acc = np.array([D2_5 @ xs[k - 2 : k + 3] for k in range(2, ys.size - 2)]) / hy**2
    miss = np.abs(acc + 2 * ws[2:-2])
    rep_d = ResidualReport(
        "flex-track",
        float(np.max(miss)) if miss.size else 0.0,
        1.0,
        tolerance=eq_d_tolerance,
        case_id="eqD",
        extras={"max_w": float(np.max(np.abs(ws))), "max_acc": float(np.max(np.abs(acc))) if acc.size else 0.0},
    )
    rep_t = ResidualReport("flex-track", float(np.max(eqt)), 1.0, tolerance=eq_theta_tolerance, case_id="eqTheta")
    return rep_d, rep_t, Track(ys, xs, ws, np.array(rels), np.array(eqt))
