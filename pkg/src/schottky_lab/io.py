"""Fixture documents: JSON parsing with path-tagged schema errors, and writing.

A fixture document is a UTF-8 JSON object::

    {
      "genus": 2,
      "tau": [[[re, im], [re, im]], [[re, im], [re, im]]],
      "points": {"p": [[re, im], [re, im]], ...},          # optional
      "vectors": {"U1": [...], "U2": [...], "U3": [...],
                  "V": [...], "W": [...], "Z": [...]},     # optional
      "provenance": "free text"                            # required
    }

Optional extension keys: ``marked_point`` (name of a point), ``jet``
(``{"a": [re, im], "b": [re, im]}``), ``c`` (``[re, im]``) and ``pinned``
(an object of recorded one-time evaluations, kept verbatim).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import AsymmetricInput, InvariantViolation, NotPositiveDefinite, SchemaError
from .fixtures import CoordinateJet, CurveFixture
from .theta import PeriodMatrix, validate_period_matrix

TOP_KEYS = {"genus", "tau", "points", "vectors", "provenance", "marked_point", "jet", "c", "pinned"}
VECTOR_KEYS = ("U1", "U2", "U3", "Z", "V", "W")


@dataclass
class FixtureDocument:
    """Parsed document: the validated period matrix plus everything else."""

    genus: int
    tau: PeriodMatrix
    provenance: str
    points: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    marked_point: str | None = None
    jet: CoordinateJet | None = None
    c: complex | None = None
    pinned: dict = field(default_factory=dict)

    @property
    def has_curve_data(self) -> bool:
        return bool(self.points or self.vectors or self.jet is not None or self.c is not None)

    def to_fixture(self) -> CurveFixture:
        return CurveFixture(
            genus=self.genus,
            tau=self.tau,
            points=dict(self.points),
            provenance=self.provenance,
            marked_point=self.marked_point,
            jet=self.jet,
            c=self.c,
            **self.vectors,
        )


def _complex(x: Any, path: str) -> complex:
    if (
        not isinstance(x, list)
        or len(x) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    ):
        raise SchemaError(path, "expected a [re, im] pair of numbers")
    if not all(math.isfinite(v) for v in x):
        raise SchemaError(path, "non-finite number")
    return complex(x[0], x[1])


def _vector(x: Any, g: int, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != g:
        raise SchemaError(path, f"expected a vector of {g} [re, im] pairs")
    return np.array([_complex(v, f"{path}[{i}]") for i, v in enumerate(x)], dtype=complex)


def parse_document(text: str) -> FixtureDocument:
    """Parse and validate a fixture document.

    Raises
    ------
    SchemaError
        Malformed JSON or a shape/type violation; ``.path`` locates it.
    InvariantViolation
        Well-formed data violating a domain invariant (e.g. ``Im tau`` not PD).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    for k in doc:
        if k not in TOP_KEYS:
            raise SchemaError(f"$.{k}", "unknown key")
    for k in ("genus", "tau", "provenance"):
        if k not in doc:
            raise SchemaError(f"$.{k}", "required key missing")

    g = doc["genus"]
    if not isinstance(g, int) or isinstance(g, bool) or g < 1:
        raise SchemaError("$.genus", "expected a positive integer")
    prov = doc["provenance"]
    if not isinstance(prov, str):
        raise SchemaError("$.provenance", "expected a string")

    rows = doc["tau"]
    if not isinstance(rows, list) or len(rows) != g:
        raise SchemaError("$.tau", f"expected {g} rows")
    mat = np.empty((g, g), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != g:
            raise SchemaError(f"$.tau[{i}]", f"expected a row of {g} entries")
        for j, e in enumerate(row):
            mat[i, j] = _complex(e, f"$.tau[{i}][{j}]")
    try:
        tau = validate_period_matrix(mat)
    except (AsymmetricInput, NotPositiveDefinite) as exc:
        raise InvariantViolation(f"$.tau: {exc}") from None

    points = {}
    if "points" in doc:
        if not isinstance(doc["points"], dict):
            raise SchemaError("$.points", "expected an object")
        for name, v in doc["points"].items():
            points[name] = _vector(v, g, f"$.points.{name}")

    vectors = {}
    if "vectors" in doc:
        if not isinstance(doc["vectors"], dict):
            raise SchemaError("$.vectors", "expected an object")
        for name, v in doc["vectors"].items():
            if name not in VECTOR_KEYS:
                raise SchemaError(f"$.vectors.{name}", "unknown vector")
            vectors[name] = _vector(v, g, f"$.vectors.{name}")
        if "U1" in vectors and not np.any(vectors["U1"]):
            raise InvariantViolation("$.vectors.U1: U1 must be non-zero")

    marked = doc.get("marked_point")
    if marked is not None:
        if not isinstance(marked, str):
            raise SchemaError("$.marked_point", "expected a string")
        if marked not in points:
            raise SchemaError("$.marked_point", f"names no entry of points: {marked!r}")

    jet = None
    if "jet" in doc:
        j = doc["jet"]
        if not isinstance(j, dict) or set(j) - {"a", "b"}:
            raise SchemaError("$.jet", "expected an object with keys a, b")
        jet = CoordinateJet(*(_complex(j.get(k, [0, 0]), f"$.jet.{k}") for k in ("a", "b")))

    c = _complex(doc["c"], "$.c") if "c" in doc else None
    pinned = doc.get("pinned", {})
    if not isinstance(pinned, dict):
        raise SchemaError("$.pinned", "expected an object")

    return FixtureDocument(g, tau, prov, points, vectors, marked, jet, c, pinned)


def parse_fixture(text: str) -> CurveFixture | PeriodMatrix:
    """Validated domain object: a bare :class:`PeriodMatrix` when the document
    carries no curve data, otherwise a :class:`CurveFixture`."""
    doc = parse_document(text)
    return doc.to_fixture() if doc.has_curve_data else doc.tau


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def fixture_to_json(
    fixture: CurveFixture | PeriodMatrix, provenance: str | None = None, pinned: dict | None = None
) -> str:
    """Serialize a fixture to the document format (round-trips through :func:`parse_fixture`)."""
    if isinstance(fixture, PeriodMatrix):
        tau, fx = fixture, None
    else:
        tau, fx = fixture.tau, fixture
    doc: dict[str, Any] = {
        "genus": tau.genus,
        "tau": [[_pair(e) for e in row] for row in tau.entries],
    }
    if fx is not None:
        if fx.points:
            doc["points"] = {k: [_pair(e) for e in v] for k, v in fx.points.items()}
        vec = {k: getattr(fx, k) for k in VECTOR_KEYS if getattr(fx, k) is not None}
        if vec:
            doc["vectors"] = {k: [_pair(e) for e in v] for k, v in vec.items()}
        if fx.marked_point is not None:
            doc["marked_point"] = fx.marked_point
        if fx.jet is not None:
            doc["jet"] = {"a": _pair(fx.jet.a), "b": _pair(fx.jet.b)}
        if fx.c is not None:
            doc["c"] = _pair(fx.c)
    prov = provenance if provenance is not None else (fx.provenance if fx is not None else "")
    doc["provenance"] = prov
    if pinned:
        doc["pinned"] = pinned
    return json.dumps(doc, indent=2) + "\n"
