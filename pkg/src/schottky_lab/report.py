"""Residual reports and their CSV / JSON-lines rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

FIELDS = ("check", "case_id", "residual", "normalizer", "tolerance", "pass")


@dataclass
class ResidualReport:
    """Outcome of one identity check on one case.

    ``residual`` is already divided by ``normalizer``; ``passed`` compares it
    with ``tolerance`` in the direction given by ``expect`` ("below" for
    identities that should hold, "above" for discrimination probes).
    """

    check: str
    residual: float
    normalizer: float = 1.0
    tolerance: float = 1e-9
    case_id: str = "0"
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    expect: str = "below"

    def __post_init__(self):
        self.residual = float(self.residual)
        self.normalizer = float(self.normalizer)
        if self.expect not in ("below", "above"):
            raise ValueError("expect must be 'below' or 'above'")

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.residual):
            return False
        if self.expect == "below":
            return self.residual < self.tolerance
        return self.residual > self.tolerance

    def with_case(self, case_id: str, tolerance: float | None = None, expect: str | None = None) -> "ResidualReport":
        self.case_id = case_id
        if tolerance is not None:
            self.tolerance = tolerance
        if expect is not None:
            self.expect = expect
        return self

    def row(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "case_id": self.case_id,
            "residual": self.residual,
            "normalizer": self.normalizer,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def sort_reports(reports: Iterable[ResidualReport]) -> list[ResidualReport]:
    return sorted(reports, key=lambda r: (r.check, _case_key(r.case_id)))


def _case_key(case_id: str):
    # numeric ids sort numerically, others lexicographically after them
    try:
        return (0, int(case_id), "")
    except ValueError:
        return (1, 0, case_id)


def render_csv(reports: Iterable[ResidualReport], header: bool = True) -> str:
    lines = [",".join(FIELDS)] if header else []
    for r in sort_reports(reports):
        row = r.row()
        lines.append(",".join(_fmt(row[k]) for k in FIELDS))
    return "\n".join(lines) + "\n"


def render_jsonl(reports: Iterable[ResidualReport]) -> str:
    lines = []
    for r in sort_reports(reports):
        row = r.row()
        for k in ("residual", "normalizer", "tolerance"):
            if not math.isfinite(row[k]):
                row[k] = repr(row[k])
        lines.append(json.dumps(row, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")
