"""Curve fixtures: period matrices with Abel-Jacobi data and flow directions.

Two conventions for direction vectors appear:

* ``U1, U2, U3`` are B-periods of the normalized second-kind differentials,
  ``U^(n) = -2 pi i / (n-1)! f^(n-1)(0)`` where ``f`` is the normalized
  holomorphic differential in the local coordinate.
* Theta-argument directions ``U^(n) / (2 pi i)`` are what must be added to
  the argument of theta; the KP potential ``2 d_x^2 ln theta(Ux + Vy + Wt + Z)``
  uses these, with ``W`` shifted along ``U`` to absorb the additive constant
  of the potential.  :meth:`CurveFixture.kp_directions` returns them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, WrongGenus
from .identities import KpDirections
from .theta import (
    DEFAULT_POLICY,
    DirectionalJet,
    HalfCharacteristic,
    PeriodMatrix,
    TruncationPolicy,
    _as_tau,
    reduce_to_cell,
    theta_char,
)

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class CoordinateJet:
    """Local coordinate ``z(zeta) = zeta + a zeta^2 + b zeta^3`` at the marked point."""

    a: complex = 0.0
    b: complex = 0.0

    def inverse_coefficients(self) -> tuple[complex, complex, complex]:
        """Taylor coefficients ``(alpha_0, alpha_1, alpha_2)`` of ``d zeta / dz``.

        ``zeta(z) = z - a z^2 + (2a^2 - b) z^3 + O(z^4)``.
        """
        a, b = complex(self.a), complex(self.b)
        return 1.0 + 0j, -2 * a, 3 * (2 * a * a - b)


@dataclass(eq=False)
class CurveFixture:
    """Everything a theta-identity check consumes about one curve."""

    genus: int
    tau: PeriodMatrix
    points: dict = field(default_factory=dict)
    U1: np.ndarray | None = None
    U2: np.ndarray | None = None
    U3: np.ndarray | None = None
    Z: np.ndarray | None = None
    provenance: str = ""
    V: np.ndarray | None = None
    W: np.ndarray | None = None
    c: complex | None = None
    marked_point: str | None = None
    jet: CoordinateJet | None = None

    def __post_init__(self):
        g = self.genus
        if self.tau.genus != g:
            raise InvariantViolation("tau genus does not match fixture genus")
        vec = lambda v: None if v is None else np.asarray(v, dtype=complex).reshape(g)  # noqa: E731
        self.U1, self.U2, self.U3 = vec(self.U1), vec(self.U2), vec(self.U3)
        self.V, self.W = vec(self.V), vec(self.W)
        self.Z = np.zeros(g, complex) if self.Z is None else vec(self.Z)
        self.points = {k: vec(v) for k, v in self.points.items()}
        if self.U1 is not None and not np.any(self.U1):
            raise InvariantViolation("U1 must be non-zero")
        if self.c is not None:
            self.c = complex(self.c)

    # --- directions -------------------------------------------------------

    def theta_directions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``U^(n) / (2 pi i)`` for ``n = 1, 2, 3`` (zeros where absent)."""
        z = np.zeros(self.genus, complex)
        return tuple(z if u is None else u / TWO_PI_I for u in (self.U1, self.U2, self.U3))

    def aj_derivatives(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """First three derivatives of the Abel-Jacobi map at the marked point."""
        U, V, W = self.theta_directions()
        return -U, -V, -2 * W

    def kp_directions(self) -> KpDirections:
        """Theta-argument KP directions with the Hirota constant.

        Raises
        ------
        InvariantViolation
            If the fixture does not record the t-direction and constant.
        """
        U, Vt, _ = self.theta_directions()
        if self.W is None or self.c is None:
            raise InvariantViolation("fixture carries no KP t-direction / constant")
        V = Vt if self.V is None else self.V
        return KpDirections(U, V, self.W, self.c)

    def reduced_points(self) -> dict:
        return {k: reduce_to_cell(self.tau, v)[0] for k, v in self.points.items()}


# ---------------------------------------------------------------------------
# genus-1 analytic data
# ---------------------------------------------------------------------------

_ODD = HalfCharacteristic((0.5,), (0.5,))


def weierstrass_data(tau, policy: TruncationPolicy = DEFAULT_POLICY) -> dict:
    """Invariants of the lattice ``Z + tau Z`` from theta constants.

    Returns ``eta`` (``zeta_W(z + 1) = zeta_W(z) + eta``), ``g2``, ``g3`` and
    ``e1, e2, e3``.
    """
    tau = _as_tau(tau)
    if tau.genus != 1:
        raise WrongGenus("Weierstrass data needs genus 1")
    one = np.array([1.0])
    d1 = theta_char(tau, [0.0], _ODD, DirectionalJet.of((one, 1)), policy)
    d3 = theta_char(tau, [0.0], _ODD, DirectionalJet.of((one, 3)), policy)
    eta = -d3 / (3 * d1)
    t2 = theta_char(tau, [0.0], HalfCharacteristic((0.5,), (0.0,)))
    t3 = theta_char(tau, [0.0], HalfCharacteristic((0.0,), (0.0,)))
    t4 = theta_char(tau, [0.0], HalfCharacteristic((0.0,), (0.5,)))
    k = np.pi**2 / 3
    e1 = k * (t3**4 + t4**4)
    e2 = k * (t2**4 - t4**4)
    e3 = -k * (t2**4 + t3**4)
    g2 = 2 * (e1 * e1 + e2 * e2 + e3 * e3)
    g3 = 4 * e1 * e2 * e3
    return {"eta": complex(eta), "g2": complex(g2), "g3": complex(g3), "e": (complex(e1), complex(e2), complex(e3))}


def genus1_fixture(tau, jet: CoordinateJet, Z=None, points: dict | None = None, provenance: str | None = None) -> CurveFixture:
    """Genus-1 fixture from the local-coordinate jet at the marked point.

    With flat coordinate ``zeta`` and ``omega = d zeta``, inverting the jet
    gives ``alpha = (1, -2a, 3(2a^2 - b))`` and

        U1 = -2 pi i,  U2 = 4 pi i a,  U3 = -6 pi i (2a^2 - b).

    KP data in theta-argument units: ``U = -1``, ``V = 2a``,
    ``W = -3a^2 + 3 eta`` and ``c = (6 eta^2 - g2/2) / 8``.
    """
    tau = _as_tau(tau)
    if tau.genus != 1:
        raise WrongGenus("genus1_fixture needs a genus-1 period matrix")
    a = complex(jet.a)
    al0, al1, al2 = jet.inverse_coefficients()
    U1 = np.array([-TWO_PI_I * al0])
    U2 = np.array([-TWO_PI_I * al1])
    U3 = np.array([-TWO_PI_I * al2])
    wd = weierstrass_data(tau)
    eta, g2 = wd["eta"], wd["g2"]
    V = np.array([2 * a])
    W = np.array([-3 * a * a + 3 * eta])
    c = (6 * eta * eta - g2 / 2) / 8
    return CurveFixture(
        genus=1,
        tau=tau,
        points=points or {},
        U1=U1,
        U2=U2,
        U3=U3,
        Z=np.zeros(1) if Z is None else Z,
        provenance=provenance or f"genus1_fixture(jet a={a}, b={complex(jet.b)})",
        V=V,
        W=W,
        c=c,
        jet=jet,
    )


# ---------------------------------------------------------------------------
# pinned data files
# ---------------------------------------------------------------------------


def data_path(name: str) -> Path:
    return Path(str(resources.files("schottky_lab") / "data" / name))


def load_fixture(path) -> CurveFixture | PeriodMatrix:
    from .io import parse_fixture

    return parse_fixture(Path(path).read_text(encoding="utf-8"))


def load_genus2_fixture(path=None) -> CurveFixture:
    """Load the pinned genus-2 quadrature fixture (or another file of that schema)."""
    from .io import parse_fixture

    p = data_path("genus2_hyperelliptic.json") if path is None else Path(path)
    fx = parse_fixture(p.read_text(encoding="utf-8"))
    if not isinstance(fx, CurveFixture):
        raise InvariantViolation("genus-2 fixture must carry direction vectors")
    if fx.genus != 2:
        raise WrongGenus("expected a genus-2 fixture")
    return fx


def load_pinned(name: str) -> dict:
    """The ``pinned`` block (one-time evaluated values) of a shipped data file."""
    return json.loads(data_path(name).read_text(encoding="utf-8")).get("pinned", {})
