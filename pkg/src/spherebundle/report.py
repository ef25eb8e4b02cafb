"""Verification reports and their serializations (JSON lines, CSV, table)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional


@dataclass
class VerificationReport:
    """One named identity check: pass iff abs or relative error is within tol."""

    identity: str
    model: str
    lhs: float
    rhs: float
    tol: float
    point: Optional[list] = None
    note: str = ""
    runtime_ms: float = 0.0
    abs_error: float = field(init=False)
    rel_error: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        lhs, rhs = float(self.lhs), float(self.rhs)
        if math.isfinite(lhs) and math.isfinite(rhs):
            self.abs_error = abs(lhs - rhs)
            denom = max(abs(lhs), abs(rhs))
            self.rel_error = self.abs_error / denom if denom > 0 else 0.0
            self.passed = self.abs_error <= self.tol or self.rel_error <= self.tol
        else:
            self.abs_error = math.inf
            self.rel_error = math.inf
            self.passed = False
        if self.point is not None:
            self.point = [float(c) for c in self.point]

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "identity": self.identity,
            "model": self.model,
            "point": self.point,
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "abs_error": num(self.abs_error),
            "rel_error": num(self.rel_error),
            "tol": float(self.tol),
            "pass": bool(self.passed),
            "runtime_ms": float(self.runtime_ms),
            "note": self.note,
        }


def failed_report(identity: str, model: str, tol: float, note: str,
                  point=None) -> VerificationReport:
    """Report for a check that errored out before producing values."""
    return VerificationReport(identity=identity, model=model, lhs=math.nan,
                              rhs=math.nan, tol=tol, point=point, note=note)


CSV_COLUMNS = ["identity", "model", "point", "lhs", "rhs", "abs_error",
               "rel_error", "tol", "pass", "runtime_ms", "note"]


def to_json_lines(reports: Iterable[VerificationReport]) -> str:
    return "\n".join(json.dumps(r.to_dict(), sort_keys=False) for r in reports) + "\n"


def to_csv(reports: Iterable[VerificationReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        row = r.to_dict()
        row["point"] = "" if row["point"] is None else ";".join(f"{c:.17g}" for c in row["point"])
        writer.writerow({k: row[k] for k in CSV_COLUMNS})
    return buf.getvalue()


def to_table(reports: Iterable[VerificationReport]) -> str:
    rows = [("identity", "model", "lhs", "rhs", "abs_err", "tol", "pass", "ms", "note")]
    for r in reports:
        note = r.note if len(r.note) <= 64 else r.note[:61] + "..."
        rows.append((r.identity, r.model,
                     _fmt(r.lhs), _fmt(r.rhs), _fmt(r.abs_error), _fmt(r.tol),
                     "ok" if r.passed else "FAIL", f"{r.runtime_ms:.1f}", note))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "nan"
    return f"{x:.6g}"
