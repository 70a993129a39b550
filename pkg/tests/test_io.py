import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from schottky_lab.errors import InvariantViolation, SchemaError
from schottky_lab.fixtures import CoordinateJet, data_path, genus1_fixture, load_fixture, load_genus2_fixture
from schottky_lab.io import fixture_to_json, parse_document, parse_fixture
from schottky_lab.report import ResidualReport, render_csv, render_jsonl
from schottky_lab.sampling import random_tau, rng_from_seed, seed42_genus4_tau
from schottky_lab.theta import PeriodMatrix

MINIMAL = '{"genus":1,"tau":[[[0,1]]],"provenance":"unit"}'


def test_minimal_document():
    tau = parse_fixture(MINIMAL)
    assert isinstance(tau, PeriodMatrix)
    assert tau.genus == 1 and tau.entries[0, 0] == 1j


def test_missing_provenance():
    with pytest.raises(SchemaError):
        parse_fixture('{"genus":1,"tau":[[[0,1]]]}')


def test_row_length_mismatch():
    with pytest.raises(SchemaError) as exc:
        parse_fixture('{"genus":2,"tau":[[[0,1],[0,0]],[[0,1]]],"provenance":"x"}')
    assert "$.tau[1]" in str(exc.value)


def test_unknown_key_rejected():
    with pytest.raises(SchemaError):
        parse_fixture('{"genus":1,"tau":[[[0,1]]],"provenance":"u","extra":1}')


def test_invalid_json():
    with pytest.raises(SchemaError):
        parse_fixture("{genus")


def test_not_positive_definite():
    with pytest.raises(InvariantViolation):
        parse_fixture('{"genus":1,"tau":[[[0,-1]]],"provenance":"u"}')


def test_marked_point_must_exist():
    with pytest.raises(SchemaError):
        parse_fixture('{"genus":1,"tau":[[[0,1]]],"provenance":"u","marked_point":"o"}')


def test_provenance_echoed():
    doc = parse_document(MINIMAL)
    assert doc.provenance == "unit"


def test_round_trip_genus1():
    fx = genus1_fixture([[0.1 + 1.2j]], CoordinateJet(0.3, -0.1), points={"o": [0.0], "p": [0.2 + 0.1j]})
    back = parse_fixture(fixture_to_json(fx))
    assert np.allclose(back.U1, fx.U1) and np.allclose(back.W, fx.W)
    assert back.c == pytest.approx(fx.c)
    assert np.allclose(back.points["p"], fx.points["p"])


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_round_trip_tau(seed, g):
    tau = random_tau(g, rng_from_seed(seed))
    back = parse_fixture(fixture_to_json(tau, provenance="h"))
    assert np.array_equal(back.entries, tau.entries)


def test_genus1_fixture_zero_jet():
    fx = genus1_fixture([[1j]], CoordinateJet(0.0, 0.0))
    assert fx.U1[0] == pytest.approx(-2j * np.pi)
    assert abs(fx.U2[0]) < 1e-15 and abs(fx.U3[0]) < 1e-15


def test_genus1_fixture_jet_values():
    fx = genus1_fixture([[1j]], CoordinateJet(0.3, -0.1))
    assert fx.U2[0] == pytest.approx(1.2j * np.pi)
    assert fx.U3[0] == pytest.approx(-6j * np.pi * 0.28)
    assert fx.U1[0] == pytest.approx(genus1_fixture([[1j]], CoordinateJet(-0.7, 0.4)).U1[0])


def test_genus2_fixture_valid():
    fx = load_genus2_fixture()
    assert fx.genus == 2 and len(fx.points) >= 4
    assert np.all(np.linalg.eigvalsh(fx.tau.Y) > 0)


def test_genus2_fixture_bad_tau(tmp_path):
    doc = json.loads(data_path("genus2_hyperelliptic.json").read_text())
    doc["tau"][0][0] = [0.0, -1.0]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InvariantViolation):
        load_genus2_fixture(p)


def test_shipped_fixtures_parse():
    for name in ("diag4.json", "g1_jet.json", "random_g4_seed42.json", "random_g3_eqT.json"):
        obj = load_fixture(data_path(name))
        assert getattr(obj, "tau", obj).genus in (1, 3, 4)


def test_seed42_generator_matches_fixture():
    tau = load_fixture(data_path("random_g4_seed42.json"))
    assert np.allclose(seed42_genus4_tau().entries, tau.entries, rtol=0, atol=1e-15)


def test_random_tau_shape():
    tau = random_tau(3, rng_from_seed(0))
    assert np.all(np.abs(tau.X) <= 0.5)
    assert np.min(np.linalg.eigvalsh(tau.Y)) >= 0.5 - 1e-12


def test_report_rendering():
    reps = [ResidualReport("c", 1e-3, 2.0, tolerance=1e-2, case_id="10"), ResidualReport("c", 0.1, case_id="2")]
    csv = render_csv(reps)
    lines = csv.splitlines()
    assert lines[0] == "check,case_id,residual,normalizer,tolerance,pass"
    assert lines[1] == "c,2,0.1,1.0,1e-09,false"
    assert lines[2] == "c,10,0.001,2.0,0.01,true"
    rows = [json.loads(s) for s in render_jsonl(reps).splitlines()]
    assert [r["case_id"] for r in rows] == ["2", "10"]
    assert rows[1]["pass"] is True


def test_report_expect_above():
    assert ResidualReport("x", 0.5, tolerance=1e-3, expect="above").passed
    assert not ResidualReport("x", float("nan")).passed
