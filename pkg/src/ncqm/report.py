"""Machine-readable verification reports (JSON and CSV, written atomically)."""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field

import numpy as np
import scipy


@dataclass(frozen=True)
class CheckRow:
    """One verified identity: residual against its tolerance.

    ``anchor`` names the closed-form identity the row certifies ("plumbing"
    for infrastructure checks with no such identity behind them).
    """

    check_id: str
    anchor: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def as_dict(self):
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }


@dataclass
class VerificationReport:
    rows: list = field(default_factory=list)
    seed: int = 0

    def add(self, check_id, anchor, residual, tolerance):
        row = CheckRow(check_id, anchor, float(residual), float(tolerance))
        self.rows.append(row)
        return row

    def extend(self, rows):
        self.rows.extend(rows)

    @property
    def n_failed(self):
        return sum(1 for r in self.rows if not r.passed)

    @property
    def all_passed(self):
        return self.n_failed == 0

    def environment(self):
        return {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "machine": platform.machine(),
        }

    def to_json_dict(self):
        return {
            "seed": int(self.seed),
            "summary": {
                "total": len(self.rows),
                "passed": len(self.rows) - self.n_failed,
                "failed": self.n_failed,
            },
            "environment": self.environment(),
            "checks": [r.as_dict() for r in self.rows],
        }

    def to_csv_text(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check_id", "anchor", "residual", "tolerance", "passed"])
        for r in self.rows:
            writer.writerow(
                [r.check_id, r.anchor, repr(float(r.residual)), repr(float(r.tolerance)), int(r.passed)]
            )
        return buf.getvalue()

    def write(self, json_path, csv_path):
        write_text_atomic(
            json_path, json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"
        )
        write_text_atomic(csv_path, self.to_csv_text())


def write_text_atomic(path, text):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
