import io

import numpy as np
import pytest

from schottky_lab.bakp import (
    FieldGrid,
    GridSpec,
    Window,
    ba_consistency,
    export_csv,
    flex_track,
    kp_fd_residual,
    kp_field,
    u_fd_check,
)
from schottky_lab.errors import DivisorCollision, GridTooCoarse
from schottky_lab.fixtures import CurveFixture, data_path, load_fixture, load_pinned
from schottky_lab.sampling import random_cell_point, rng_from_seed
from schottky_lab.theta import validate_period_matrix


@pytest.fixture(scope="module")
def g1():
    return load_fixture(data_path("g1_jet.json"))


def _vec(pairs):
    return np.array([complex(a, b) for a, b in pairs])


def test_ba_generic_point(g1):
    rep = ba_consistency(g1, "p", Window(0.1, -0.2))
    assert rep.residual < 1e-6


def test_ba_window_independent_kappa(g1):
    a = ba_consistency(g1, "p", Window(0.1, -0.2), seed=1)
    b = ba_consistency(g1, "p", Window(-0.3, 0.15), seed=2)
    for k in ("kappa1", "kappa2"):
        assert abs(a.extras[k] - b.extras[k]) < 1e-5


def test_ba_collision(g1):
    t = g1.tau.entries[0, 0]
    with pytest.raises(DivisorCollision):
        ba_consistency(g1, "p", Window(0.0, 0.0), Z=[(1 + t) / 2 + 0.2])


def test_u_fd_check(g1):
    rng = rng_from_seed(3)
    U = g1.theta_directions()[0]
    for _ in range(5):
        assert u_fd_check(g1.tau, random_cell_point(g1.tau, rng), U) < 1e-6


def test_field_stationary():
    fx = CurveFixture(genus=1, tau=validate_period_matrix([[0.1 + 1.2j]]), U1=[-2j * np.pi], provenance="stationary")
    f = kp_field(fx, GridSpec((0.1, 0.0, 0.0), (5, 4, 3), (0.05, 0.3, 0.7)), threads=1)
    assert np.max(np.abs(f.u - f.u[:, :1, :1])) < 1e-12


def test_field_lattice_periodic(g1):
    # theta-argument U = -1, so x -> x + 1 moves the argument by a lattice vector
    spec = GridSpec((0.05, 0.0, 0.0), (4, 3, 3), (0.1, 0.1, 0.05))
    a = kp_field(g1, spec, threads=1)
    b = kp_field(g1, GridSpec((1.05, 0.0, 0.0), spec.n, spec.h), threads=1)
    assert np.max(np.abs(a.u - b.u)) < 1e-9 * np.max(np.abs(a.u))


def test_field_mask_count(g1):
    t = g1.tau.entries[0, 0]
    # the zero (1 + tau)/2 sits on the grid point x = 0.1, y = t = 0
    Z = [(1 + t) / 2 + 0.1 * 1.0]
    spec = GridSpec((0.0, 0.0, 0.0), (3, 1, 1), (0.1, 0.1, 0.1))
    f = kp_field(g1, spec, Z=Z, threads=1)
    assert f.masked_count == 1 and f.mask[1, 0, 0]


def test_field_thread_invariant(g1):
    spec = GridSpec.for_fixture(g1, n=7)
    a = kp_field(g1, spec, threads=1)
    b = kp_field(g1, spec, threads=4)
    assert np.array_equal(a.u, b.u)


def test_fd_residual_jacobian(g1):
    rep = kp_fd_residual(kp_field(g1, GridSpec.for_fixture(g1, h=0.01, n=9), threads=1))
    assert rep.residual < 1e-4


def _grid(u, h=0.01):
    n = u.shape
    ax = [h * np.arange(k) for k in n]
    return FieldGrid(ax[0], ax[1], ax[2], u.astype(complex), np.zeros(n, bool))


def test_fd_residual_zero():
    assert kp_fd_residual(_grid(np.zeros((9, 9, 9)))).residual == 0.0


def test_fd_residual_bump():
    x, y, t = np.meshgrid(*(0.01 * np.arange(9),) * 3, indexing="ij")
    u = np.exp(-((x - 0.04) ** 2 + (y - 0.04) ** 2 + (t - 0.04) ** 2) / 0.05**2)
    assert kp_fd_residual(_grid(u)).residual > 0.1


def test_fd_too_few_samples():
    with pytest.raises(GridTooCoarse):
        kp_fd_residual(_grid(np.ones((5, 9, 9))))


def test_fd_coarse_grid(g1):
    with pytest.raises(GridTooCoarse):
        kp_fd_residual(kp_field(g1, GridSpec.for_fixture(g1, h=0.2, n=9), threads=1))


def test_export_csv(g1):
    f = kp_field(g1, GridSpec((0.1, 0.0, 0.0), (2, 2, 2), (0.1, 0.1, 0.1)), threads=1)
    buf = io.StringIO()
    text = export_csv(f, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,y,t,re_u,im_u"
    assert len(lines) == 9 and text == buf.getvalue()


def test_flex_track_jacobian(g1):
    d = g1.kp_directions()
    eq_d, eq_t, track = flex_track(g1.tau, d.U, d.V, [0.17 + 0.23j], (0.0, 0.5), 50)
    assert eq_d.residual < 1e-5 and eq_t.residual < 1e-8
    assert track.y.size == 51


def test_flex_track_stationary(g1):
    U = g1.theta_directions()[0]
    eq_d, eq_t, track = flex_track(g1.tau, U, [0.0], [0.17 + 0.23j], (0.0, 0.5), 20)
    assert eq_d.residual < 1e-8 and eq_t.residual < 1e-8
    assert np.max(np.abs(track.x - track.x[0])) < 1e-10


def test_flex_track_random_g3_pinned():
    pinned = load_pinned("random_g3_eqT.json")
    tau = load_fixture(data_path("random_g3_eqT.json"))
    _, eq_t, _ = flex_track(tau, _vec(pinned["U"]), _vec(pinned["V"]), _vec(pinned["Z"]), tuple(pinned["y_range"]), pinned["steps"])
    assert eq_t.residual > 1e-3
    assert eq_t.residual == pytest.approx(pinned["eq_theta"], rel=1e-6)
