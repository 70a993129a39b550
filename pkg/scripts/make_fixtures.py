"""Generate the pinned fixture files shipped in ``src/schottky_lab/data``.

Each non-Jacobian probe is evaluated once here and the value is recorded
under ``pinned`` so tests compare against a frozen number.

Usage: python3 scripts/make_fixtures.py [--out DIR]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from schottky_lab.bakp import flex_track
from schottky_lab.fixtures import CoordinateJet, CurveFixture, genus1_fixture
from schottky_lab.identities import SecancyQuery, fit_kp_parameters, schottky_igusa, secancy_residual
from schottky_lab.io import fixture_to_json
from schottky_lab.sampling import random_cell_point, random_direction, random_tau, rng_from_seed, seed42_genus4_tau
from schottky_lab.theta import validate_period_matrix

DIAG4_BLOCKS = (1j, 0.2 + 1.1j, -0.1 + 0.9j, 0.3 + 1.3j)
G1_TAU = 0.13 + 1.1j
G1_JET = (0.3, -0.1)
G1_POINT = 0.31 + 0.27j
G3_SEED = 7


def _pair_list(v):
    return [[float(complex(e).real), float(complex(e).imag)] for e in np.ravel(v)]


def diag4() -> str:
    tau = validate_period_matrix(np.diag(DIAG4_BLOCKS))
    rep = schottky_igusa(tau)
    fx = CurveFixture(genus=4, tau=tau, provenance="block-diagonal genus-4 period matrix (product of four elliptic curves)")
    return fixture_to_json(fx.tau, provenance=fx.provenance, pinned={"schottky_ratio": rep.residual})


def g1_jet() -> str:
    fx = genus1_fixture(
        [[G1_TAU]],
        CoordinateJet(*G1_JET),
        Z=[0.0],
        points={"o": [0.0], "p": [G1_POINT]},
        provenance=f"genus1_fixture(tau={G1_TAU}, jet a={G1_JET[0]}, b={G1_JET[1]})",
    )
    fx.marked_point = "o"
    return fixture_to_json(fx)


def random_g4() -> str:
    tau = seed42_genus4_tau()
    rng = rng_from_seed(42)
    s = schottky_igusa(tau)
    # full secancy on three random cell points
    pts = [random_cell_point(tau, rng) for _ in range(3)]
    sec = secancy_residual(tau, SecancyQuery("full", pts))
    U = random_direction(4, rng)
    zs = [random_cell_point(tau, rng) for _ in range(24)]
    t0 = time.time()
    fit = fit_kp_parameters(tau, U, zs, starts=8, seed=42)
    pinned = {
        "schottky_ratio": s.residual,
        "secancy_full_points": [_pair_list(p) for p in pts],
        "secancy_full": sec.residual,
        "kp_U": _pair_list(U),
        "kp_samples": [_pair_list(z) for z in zs],
        "kp_multistart_floor": fit.residual,
        "kp_starts": 8,
        "kp_seed": 42,
    }
    print(f"  multistart fit: {time.time() - t0:.1f}s")
    return fixture_to_json(tau, provenance="random_tau(4, seed 42)", pinned=pinned)


def random_g3() -> str:
    rng = rng_from_seed(G3_SEED)
    tau = random_tau(3, rng)
    U = random_direction(3, rng)
    V = random_direction(3, rng)
    Z = random_cell_point(tau, rng)
    _, rep_t, track = flex_track(tau, U, V, Z, (0.0, 0.05), 5)
    pinned = {"U": _pair_list(U), "V": _pair_list(V), "Z": _pair_list(Z), "eq_theta": rep_t.residual, "y_range": [0.0, 0.05], "steps": 5}
    return fixture_to_json(tau, provenance=f"random_tau(3, seed {G3_SEED}) with random U, V, Z", pinned=pinned)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src" / "schottky_lab" / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in (("diag4.json", diag4), ("g1_jet.json", g1_jet), ("random_g4_seed42.json", random_g4), ("random_g3_eqT.json", random_g3)):
        print(f"writing {name}")
        (out / name).write_text(fn(), encoding="utf-8")


if __name__ == "__main__":
    main()
