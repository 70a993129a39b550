#!/usr/bin/env python3
"""Quadrature oracle for the genus-2 curve y^2 = x(x-1)(x-2)(x-3)(x-4).

Computes, with mpmath at 30 digits:

* the period matrix of the normalized differentials built from
  ``dx/y`` and ``x dx/y``;
* Abel-Jacobi images of a few points in the upper half plane, integrated
  from the Weierstrass point (0, 0) along straight segments;
* the first three derivatives of the Abel-Jacobi map at the marked point
  ``p`` in the local coordinate ``x - x(p)``.

Branch: ``y(x) = prod_e sqrt(x - e)`` with principal square roots, analytic
on the upper half plane.  Its cuts on the real axis are (-inf, 0], [1, 2]
and [3, 4].  Cycles:

* ``a1`` encircles [1, 2], ``a2`` encircles [3, 4]: twice the integral
  over the cut of the boundary value from above;
* ``b1`` runs from (-inf, 0] to [1, 2] on one sheet and back on the other,
  giving twice the integral over [0, 1]; ``b2`` runs from (-inf, 0] to
  [3, 4] through the cut [1, 2], giving twice the integrals over [0, 1]
  and [2, 3].

Orientation signs are fixed so that ``tau`` is symmetric with positive
definite imaginary part; the script asserts both.

Usage: ``python scripts/genus2_periods.py [output.json]``
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
ROOTS = [0, 1, 2, 3, 4]

POINTS = {
    "p": mp.mpc("1.4", "0.6"),
    "q": mp.mpc("0.5", "0.8"),
    "r": mp.mpc("2.6", "0.5"),
    "s": mp.mpc("3.3", "0.9"),
    "t": mp.mpc("2.1", "1.3"),
}
MARKED = "p"
Z_SHIFT = [mp.mpc("0.137", "0.211"), mp.mpc("-0.284", "0.093")]


def y_upper(x):
    """Boundary value from above (or the analytic value for Im x > 0)."""
    x = mp.mpc(x)
    if x.imag == 0:
        x = mp.mpc(x.real, mp.mpf(0))
        prod = mp.mpc(1)
        for e in ROOTS:
            d = x.real - e
            prod *= mp.sqrt(d) if d >= 0 else 1j * mp.sqrt(-d)
        return prod
    prod = mp.mpc(1)
    for e in ROOTS:
        prod *= mp.sqrt(x - e)
    return prod


def omega(x):
    y = y_upper(x)
    return [1 / y, x / y]


def segment(a, b):
    """Integral of both raw differentials along the straight segment a -> b."""
    out = []
    for j in range(2):
        f = lambda t, j=j: omega(a + (b - a) * t)[j] * (b - a)  # noqa: E731
        out.append(mp.quad(f, [0, 1]))
    return out


def real_interval(a, b):
    out = []
    for j in range(2):
        f = lambda x, j=j: omega(mp.mpf(x))[j]  # noqa: E731
        out.append(mp.quad(f, [a, b]))
    return out


def main(path: Path) -> None:
    I = {k: real_interval(k, k + 1) for k in range(4)}
    a_cyc = [[2 * I[1][i], 2 * I[3][i]] for i in range(2)]
    b_cyc = [[2 * I[0][i], 2 * (I[0][i] + I[2][i])] for i in range(2)]
    A = mp.matrix(a_cyc)
    B = mp.matrix(b_cyc)
    Ainv = A**-1
    tau = Ainv * B
    if mp.im(tau[0, 0]) < 0:
        tau = -tau
        sign_b = -1
    else:
        sign_b = 1
    asym = abs(tau[0, 1] - tau[1, 0])
    assert asym < mp.mpf(10) ** -15, f"tau not symmetric: {asym}"
    im = mp.matrix([[mp.im(tau[i, j]) for j in range(2)] for i in range(2)])
    assert im[0, 0] > 0 and mp.det(im) > 0, "Im tau not positive definite"

    def normalize(v):
        w = Ainv * mp.matrix(v)
        return [w[0], w[1]]

    aj = {name: normalize(segment(mp.mpc(0), x)) for name, x in POINTS.items()}
    xp = POINTS[MARKED]
    f = lambda x, i: normalize(omega(x))[i]  # noqa: E731
    d1 = [f(xp, i) for i in range(2)]
    d2 = [mp.diff(lambda x: f(x, i), xp, 1) for i in range(2)]
    d3 = [mp.diff(lambda x: f(x, i), xp, 2) for i in range(2)]
    two_pi_i = 2j * mp.pi
    U1 = [-two_pi_i * v for v in d1]
    U2 = [-two_pi_i * v for v in d2]
    U3 = [-two_pi_i / 2 * v for v in d3]

    def c2(v):
        return [float(mp.re(v)), float(mp.im(v))]

    doc = {
        "genus": 2,
        "tau": [[c2(tau[i, j]) for j in range(2)] for i in range(2)],
        "points": {k: [c2(x) for x in v] for k, v in aj.items()},
        "vectors": {
            "U1": [c2(x) for x in U1],
            "U2": [c2(x) for x in U2],
            "U3": [c2(x) for x in U3],
            "V": [c2(-x) for x in d2],
            "Z": [c2(x) for x in Z_SHIFT],
        },
        "marked_point": MARKED,
        "provenance": (
            "scripts/genus2_periods.py: mpmath tanh-sinh quadrature (30 digits) of dx/y and x dx/y "
            "on y^2 = x(x-1)(x-2)(x-3)(x-4); a-cycles around [1,2],[3,4]; b-cycles from (-inf,0]; "
            f"b-orientation sign {sign_b}; AJ base point (0,0); marked point x={mp.nstr(xp, 6)}; "
            "U_n = -2 pi i/(n-1)! d^n AJ/dx^n, V = -d^2 AJ/dx^2 (theta-argument y-direction)"
        ),
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}; |tau - tau^T| = {mp.nstr(asym, 3)}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "schottky_lab" / "data" / "genus2_hyperelliptic.json"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
