"""Command-line interface: ``schottky-lab`` / ``python3 -m schottky_lab``.

Subcommands
-----------
``theta eval``      evaluate theta (or a characteristic / derivative) at a point
``check NAME``      run one identity check and emit one report line per case
``spectral bc``     spectral curve of a built-in commuting pair
``ops selftest``    quick operator-algebra consistency checks

Every check draws all random inputs from ``--seed`` before any case runs;
cases then run on a pool of ``SCHOTTKY_LAB_THREADS`` workers and the report
is sorted by ``(check, case_id)``, so output bytes do not depend on the
thread count.  The exit status is 0 iff every line passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import __version__
from .bakp import GridSpec, Window, ba_consistency, flex_track, kp_fd_residual, kp_field, _threads
from .errors import InvariantViolation, SchemaError, SchottkyLabError, UnknownCheck
from .fixtures import CurveFixture, data_path, load_fixture
from .identities import (
    KpDirections,
    SecancyQuery,
    addition_residual,
    elliptic_function_from_divisor,
    hirota_residual,
    kummer_kp_residual,
    quasiperiodicity_residual,
    schottky_igusa,
    secancy_residual,
    theta_surface_residual,
    weil_residual,
)
from .report import ResidualReport, render_csv, render_jsonl
from .sampling import random_cell_point, random_tau, rng_from_seed
from .theta import DirectionalJet, HalfCharacteristic, PeriodMatrix, theta_char_many, theta_divisor_point, validate_period_matrix

Case = Callable[[], list]

CHECK_HELP = {
    "quasiperiodicity": "theta(z + m1 + tau m2) = exp(-pi i (2 m2.z + m2.tau.m2)) theta(z) on random (tau, z, m)",
    "addition": "theta(x + y) theta(x - y) = sum_eps Theta[eps](x) Theta[eps](y) on random (tau, x, y)",
    "schottky-igusa": "2^4 sum theta^16[m](0) - (sum theta^8[m](0))^2 = 0 on Jacobians of genus 4 (default fixture diag4.json)",
    "secancy": "flex condition: Kum(q/2), d_U Kum(q/2), (d_U^2 + d_V) Kum(q/2) linearly dependent (default genus-2 fixture)",
    "kummer-kp": "(d_U^4 - d_U d_W + 3/4 d_V^2 + c) Kum(0) = 0 and its second-order-theta variant (default g1_jet.json)",
    "hirota": "(D_x^4 - 4 D_x D_t + 3 D_y^2 + 8c) theta . theta = 0 at random z (default g1_jet.json)",
    "weil": "A theta(z+p+s-r-q) theta(z) + B theta(z+s-r) theta(z+p-q) = theta(z+p-r) theta(z+s-q) (default genus-2 fixture)",
    "theta-surface": "quartic identity in D_U, D_V theta on the theta divisor (x'' + 2w = 0) at Newton-found zeros",
    "elliptic-function": "prod theta[1/2;1/2](x_i - z)^m_i is doubly periodic when sum m_i = 0 and sum m_i x_i = 0",
    "ba": "psi = theta(A(p) + Ux + Vy + Z)/theta(Ux + Vy + Z) e^(k1 x + k2 y) solves psi_y = psi_xx + u psi",
    "kp-field": "u = 2 d_x^2 ln theta(Ux + Vy + Wt + Z) is unchanged under Z -> Z + lattice vector",
    "kp-residual": "3/4 u_yy = (u_t - 3/2 u u_x - 1/4 u_xxx)_x by fourth-order finite differences",
    "flex-track": "zero x(y) of theta(Ux + Vy + Z) satisfies x'' = -2w and the quartic divisor identity",
}
CHECKS = tuple(CHECK_HELP)


def _parse_complex_vector(text: str) -> np.ndarray:
    """``[[re, im], ...]`` JSON or comma-separated Python complex literals."""
    text = text.strip()
    if text.startswith("["):
        data = json.loads(text)
        return np.array([complex(a, b) for a, b in data], dtype=complex)
    return np.array([complex(s.replace(" ", "")) for s in text.split(",")], dtype=complex)


def _load(path: str | None, default: str) -> CurveFixture | PeriodMatrix:
    return load_fixture(path if path is not None else data_path(default))


def _tau_of(obj) -> PeriodMatrix:
    return obj if isinstance(obj, PeriodMatrix) else obj.tau


def _curve(obj, what: str) -> CurveFixture:
    if not isinstance(obj, CurveFixture):
        raise InvariantViolation(f"{what} needs a fixture with curve data")
    return obj


# ---------------------------------------------------------------------------
# sample plans: every random draw happens here, before any case runs
# ---------------------------------------------------------------------------


def plan(args) -> list[tuple[str, Case]]:
    name = args.name
    rng = rng_from_seed(args.seed)
    g = args.genus
    n = args.samples
    cases: list[tuple[str, Case]] = []

    if name == "quasiperiodicity":
        for i in range(n or 100):
            tau = random_tau(g, rng)
            z = random_cell_point(tau, rng)
            m1 = rng.integers(-2, 3, size=g)
            m2 = rng.integers(-2, 3, size=g)
            cases.append((str(i), lambda tau=tau, z=z, m1=m1, m2=m2: [quasiperiodicity_residual(tau, z, m1, m2)]))
    elif name == "addition":
        for i in range(n or 100):
            tau = random_tau(g, rng)
            x = random_cell_point(tau, rng)
            y = random_cell_point(tau, rng)
            cases.append((str(i), lambda tau=tau, x=x, y=y: [addition_residual(tau, x, y)]))
    elif name == "schottky-igusa":
        tau = _tau_of(_load(args.fixture, "diag4.json"))
        cases.append(("0", lambda: [schottky_igusa(tau)]))
    elif name == "secancy":
        fx = _curve(_load(args.fixture, "genus2_hyperelliptic.json"), "secancy")
        if fx.marked_point is None:
            raise InvariantViolation("secancy needs a marked point")
        # flex condition with the Abel-Jacobi derivatives U = AJ', V = AJ''
        Uaj, Vaj, _ = fx.aj_derivatives()
        base = fx.points[fx.marked_point]
        for name_p in sorted(k for k in fx.points if k != fx.marked_point):
            q = fx.points[name_p] - base
            cases.append((name_p, lambda q=q: [secancy_residual(fx.tau, SecancyQuery("flex", [q], Uaj, Vaj))]))
    elif name == "kummer-kp":
        fx = _curve(_load(args.fixture, "g1_jet.json"), "kummer-kp")
        d = fx.kp_directions()
        cases.append(("kummer", lambda: [kummer_kp_residual(fx.tau, d.for_kummer_variant(), "kummer")]))
        d2 = KpDirections(d.U, d.V, d.W, 16 * d.c)
        cases.append(("second-order", lambda: [kummer_kp_residual(fx.tau, d2, "second-order")]))
    elif name == "hirota":
        fx = _curve(_load(args.fixture, "g1_jet.json"), "hirota")
        d = fx.kp_directions()
        for i in range(n or 50):
            z = random_cell_point(fx.tau, rng)
            cases.append((str(i), lambda z=z: [hirota_residual(fx.tau, z, d)]))
    elif name == "weil":
        fx = _curve(_load(args.fixture, "genus2_hyperelliptic.json"), "weil")
        names = [k for k in ("p", "q", "r", "s") if k in fx.points]
        if len(names) < 4:
            names = sorted(fx.points)[:4]
        aj = [fx.points[k] for k in names]
        zs = [random_cell_point(fx.tau, rng) for _ in range(n or 16)]
        cases.append(("0", lambda: [weil_residual(fx.tau, aj, zs)]))
    elif name == "theta-surface":
        obj = _load(args.fixture, "g1_jet.json")
        fx = _curve(obj, "theta-surface")
        U, V, _ = fx.theta_directions()
        for i in range(n or 10):
            b = random_cell_point(fx.tau, rng)

            def case(b=b):
                zp = theta_divisor_point(fx.tau, b, U)
                return [theta_surface_residual(fx.tau, U, V, zp.z)]

            cases.append((str(i), case))
    elif name == "elliptic-function":
        for i in range(n or 20):
            tau = random_tau(1, rng)
            a, b, c = (complex(random_cell_point(tau, rng)[0]) for _ in range(3))
            div = [(a, 1), (b, 1), (c, -1), (a + b - c, -1)]
            seed = int(rng.integers(0, 2**31))
            cases.append((str(i), lambda tau=tau, div=div, seed=seed: [elliptic_function_from_divisor(tau, div, seed=seed)[1]]))
    elif name == "ba":
        fx = _curve(_load(args.fixture, "g1_jet.json"), "ba")
        pts = sorted(k for k in fx.points if k != fx.marked_point)
        for i in range(n or 4):
            x0, y0 = rng.uniform(-0.5, 0.5, size=2)
            seed = int(rng.integers(0, 2**31))
            for p in pts:
                cases.append((f"{p}-{i}", lambda p=p, x0=x0, y0=y0, seed=seed: [ba_consistency(fx, p, Window(x0, y0), seed=seed)]))
    elif name in ("kp-field", "kp-residual"):
        fx = _curve(_load(args.fixture, "g1_jet.json"), name)
        grid = GridSpec.for_fixture(fx, n=9)
        if name == "kp-field":
            g_ = fx.genus
            m1 = rng.integers(-1, 2, size=g_)
            m2 = rng.integers(-1, 2, size=g_)

            def case():
                a = kp_field(fx, grid, threads=1)
                b = kp_field(fx, grid, Z=fx.Z + m1 + fx.tau.entries @ m2, threads=1)
                ok = ~(a.mask | b.mask)
                norm = float(np.max(np.abs(a.u[ok])))
                res = float(np.max(np.abs(a.u[ok] - b.u[ok]))) / max(norm, 1e-300)
                return [ResidualReport("kp-field", res, norm, tolerance=1e-9, extras={"masked": a.masked_count})]

            cases.append(("0", case))
        else:
            cases.append(("0", lambda: [kp_fd_residual(kp_field(fx, grid, threads=1))]))
    elif name == "flex-track":
        fx = _curve(_load(args.fixture, "g1_jet.json"), "flex-track")
        d = fx.kp_directions() if fx.W is not None and fx.c is not None else None
        U, V, _ = fx.theta_directions() if d is None else (d.U, d.V, d.W)
        Z = fx.Z if np.any(fx.Z) else np.full(fx.genus, 0.17 + 0.23j)

        def case():
            a, b, _ = flex_track(fx.tau, U, V, Z, (0.0, 0.5), 50)
            return [a, b]

        cases.append(("track", case))
    else:
        raise UnknownCheck(name)
    return cases


def run_suite(args) -> tuple[list[ResidualReport], int]:
    """Execute a check; returns the sorted reports and the exit status."""
    cases = plan(args)
    threads = _threads()

    def run(item):
        cid, fn = item
        reps = fn()
        out = []
        for j, r in enumerate(reps):
            r.check = args.name
            r.case_id = cid if len(reps) == 1 else (r.case_id if r.case_id not in ("", "0") else f"{cid}-{j}")
            if args.tolerance is not None:
                r.tolerance = args.tolerance
            out.append(r)
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, cases))
    else:
        results = [run(c) for c in cases]
    reps = [r for rs in results for r in rs]
    status = 0 if all(r.passed for r in reps) else 1
    return reps, status


# ---------------------------------------------------------------------------
# other subcommands
# ---------------------------------------------------------------------------


def cmd_theta_eval(args) -> int:
    if args.fixture:
        tau = _tau_of(load_fixture(args.fixture))
    else:
        rows = json.loads(args.tau)
        tau = validate_period_matrix(np.array([[complex(a, b) for a, b in row] for row in rows]))
    z = _parse_complex_vector(args.z)
    chi = None
    if args.char:
        e, d = json.loads(args.char)
        chi = HalfCharacteristic(tuple(e), tuple(d))
    jet = DirectionalJet()
    if args.direction:
        jet = DirectionalJet.of((_parse_complex_vector(args.direction), args.order))
    v = theta_char_many(tau, z, chi, [jet])[0]
    row = {"re": float(v.value.real), "im": float(v.value.imag), "abs_error": v.abs_error, "radius": v.radius}
    if args.json:
        print(json.dumps(row, separators=(",", ":")))
    else:
        print("re,im,abs_error,radius")
        print(f"{row['re']!r},{row['im']!r},{row['abs_error']!r},{row['radius']}")
    return 0


def cmd_spectral_bc(args) -> int:
    from .eigen import rational_pair
    from .spectral import burchnall_chaundy, lame_pair, verify_annihilation

    if args.pair == "rational":
        L1, L2 = rational_pair(args.x0 if args.x0 is not None else 1.0)
        tol = 1e-9
    else:
        L1, L2 = lame_pair() if args.x0 is None else lame_pair(args.x0)
        tol = 1e-8
    Q = burchnall_chaundy(L1, L2, args.depth)
    res = verify_annihilation(L1, L2, Q)
    rep = ResidualReport("spectral-bc", res, 1.0, tolerance=tol, case_id=args.pair)
    if args.json:
        sys.stdout.write(render_jsonl([rep]))
    else:
        print(f"Q = {Q}")
        sys.stdout.write(render_csv([rep], header=False))
    return 0 if rep.passed else 1


def ops_selftest_reports() -> list[ResidualReport]:
    from .eigen import eigen_defect, eigenvalue_series, formal_eigenfunction, rational_pair
    from .operators import (
        PseudoDiffOp,
        b2_closed_form,
        b3_closed_form,
        compose,
        dress,
        lax_operator,
        power_plus_and_residue,
    )
    from .series import TaylorSeries

    rng = np.random.default_rng(0)
    x0 = 0.3
    rs = lambda: TaylorSeries(x0, rng.normal(size=25) * 0.5 ** np.arange(25))  # noqa: E731
    reps = []
    P = PseudoDiffOp({1: rs(), 0: rs(), -1: rs()}, depth=8)
    Q = PseudoDiffOp({2: rs(), -1: rs()}, depth=8)
    R = PseudoDiffOp({1: rs(), -2: rs()}, depth=8)
    a = compose(compose(P, Q), R)
    b = compose(P, compose(Q, R))
    reps.append(ResidualReport("ops", a.distance(b) / max(1.0, a.norm()), 1.0, tolerance=1e-10, case_id="associativity"))
    u2, u3 = rs(), rs()
    L = lax_operator([u2, u3, rs()])
    B2, _ = power_plus_and_residue(L, 2)
    B3, _ = power_plus_and_residue(L, 3)
    reps.append(ResidualReport("ops", B2.distance(b2_closed_form(u2)), 1.0, tolerance=1e-12, case_id="b2"))
    reps.append(ResidualReport("ops", B3.distance(b3_closed_form(u2, u3)), 1.0, tolerance=1e-12, case_id="b3"))
    one = TaylorSeries.constant(1.0, x0, 24)
    W = PseudoDiffOp({0: one, -1: rs(), -2: rs()})
    _, Ld = dress(W)
    zero = Ld.coeffs.get(0)
    reps.append(ResidualReport("ops", 0.0 if zero is None else zero.max_abs(), 1.0, tolerance=1e-12, case_id="dress"))
    L1, L2 = rational_pair(1.0)
    e = formal_eigenfunction(L1)
    reps.append(ResidualReport("ops", eigen_defect(L1, e), 1.0, tolerance=1e-12, case_id="eigen-defect"))
    A1 = eigenvalue_series(*rational_pair(1.0)).series.a
    A2 = eigenvalue_series(*rational_pair(2.0)).series.a
    reps.append(ResidualReport("ops", float(np.max(np.abs(A1 - A2))), 1.0, tolerance=1e-10, case_id="basepoint"))
    return reps


def cmd_ops_selftest(args) -> int:
    reps = ops_selftest_reports()
    sys.stdout.write(render_jsonl(reps) if args.json else render_csv(reps, header=False))
    return 0 if all(r.passed for r in reps) else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schottky-lab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"schottky-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theta", help="theta function evaluation")
    thsub = th.add_subparsers(dest="theta_command", required=True)
    ev = thsub.add_parser(
        "eval",
        help="evaluate theta[e;d](tau, z) = sum_n exp(pi i (n+e).tau.(n+e) + 2 pi i (n+e).(z+d)) or a directional derivative",
        description="Evaluate theta[e;d](tau, z) = sum_n exp(pi i (n+e).tau.(n+e) + 2 pi i (n+e).(z+d)), "
        "optionally differentiated `--order` times along `--direction`.",
    )
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixture", help="fixture JSON supplying tau")
    src.add_argument("--tau", help="tau as JSON rows of [re, im] pairs, e.g. '[[[0,1]]]'")
    ev.add_argument("--z", required=True, help="point: JSON list of [re, im] pairs or comma-separated complex literals")
    ev.add_argument("--char", help="characteristic as JSON [[eps...], [delta...]] with entries 0 or 0.5")
    ev.add_argument("--direction", help="derivative direction (same format as --z)")
    ev.add_argument("--order", type=int, default=1, help="derivative order along --direction")
    ev.add_argument("--json", action="store_true", help="emit one JSON object")
    ev.set_defaults(func=cmd_theta_eval)

    ck = sub.add_parser(
        "check",
        help="run an identity check",
        description="Run one identity check and print `check,case_id,residual,normalizer,tolerance,pass` per case.\n\n"
        + "\n".join(f"  {k:18s} {v}" for k, v in CHECK_HELP.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ck.add_argument("name", help="one of: " + ", ".join(CHECKS))
    ck.add_argument("--genus", type=int, default=2, help="genus for randomly generated tau (default 2)")
    ck.add_argument("--samples", type=int, default=0, help="number of random cases (check-specific default)")
    ck.add_argument("--seed", type=lambda s: int(s) % 2**64, default=0, help="64-bit seed determining all sampling")
    ck.add_argument("--fixture", help="fixture JSON (check-specific packaged default)")
    ck.add_argument("--tolerance", type=float, help="override the tolerance of every line")
    ck.add_argument("--json", action="store_true", help="one JSON object per line instead of CSV")
    ck.add_argument("--header", action="store_true", help="print a CSV header row")
    ck.set_defaults(func=None)

    sp = sub.add_parser("spectral", help="spectral curves of commuting operators")
    spsub = sp.add_subparsers(dest="spectral_command", required=True)
    bc = spsub.add_parser(
        "bc",
        help="relation Q(L1, L2) = 0 for a commuting pair, certified by annihilation",
        description="Compute Q with Q(k^n, A(k)) = O(k^-depth) for the eigenvalue A(k) of L2 on the formal "
        "eigenfunction of L1, then report the norm of Q(L1, L2).",
    )
    bc.add_argument("--pair", choices=("rational", "lame"), default="rational", help="rational: (d^2 - 2/x^2, d^3 - 3/x^2 d + 3/x^3); lame: u0 = -2 p(x; 4, 0)")
    bc.add_argument("--x0", type=float, help="expansion basepoint")
    bc.add_argument("--depth", type=int, default=12, help="eigen-depth S")
    bc.add_argument("--json", action="store_true")
    bc.set_defaults(func=cmd_spectral_bc)

    op = sub.add_parser("ops", help="operator algebra")
    opsub = op.add_subparsers(dest="ops_command", required=True)
    st = opsub.add_parser(
        "selftest",
        help="associativity, (L^n)_+ closed forms, dressing, eigenfunction defect, basepoint independence",
        description="Associativity of composition, B2 = d^2 + 2u2 and B3 = d^3 + 3u2 d + 3(u2' + u3), "
        "zero d^0 coefficient of W d W^-1, formal eigenfunction defect and basepoint independence of A(k).",
    )
    st.add_argument("--json", action="store_true")
    st.set_defaults(func=cmd_ops_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "check":
            if args.name not in CHECKS:
                raise UnknownCheck(args.name)
            reps, status = run_suite(args)
            out = render_jsonl(reps) if args.json else render_csv(reps, header=args.header)
            sys.stdout.write(out)
            sys.stdout.flush()
            return status
        return args.func(args)
    except UnknownCheck as exc:
        print(f"error: unknown check {exc.args[0]!r}; choose from {', '.join(CHECKS)}", file=sys.stderr)
        return 2
    except (SchemaError, InvariantViolation) as exc:
        print(f"error: fixture: {exc}", file=sys.stderr)
        return 3
    except (SchottkyLabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
