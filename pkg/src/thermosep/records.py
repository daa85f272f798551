"""Scan rows and their CSV / plot-data serialisation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

# Fixed column order per task; documented in docs/formats.md.
COLUMNS: dict[str, list[str]] = {
    "gibbs_scan": [
        "index", "model", "n_sites", "beta", "region1", "region2", "distance",
        "min_pt_eig", "negativity", "verdict", "error",
    ],
    "order_classify": [
        "index", "model", "n_sites", "beta", "level", "region1", "region2", "distance",
        "min_pt_eig", "negativity", "verdict", "error",
    ],
    "hightemp_report": [
        "index", "model", "n_sites", "region1", "region2", "beta_star_numeric",
        "beta_star_analytic", "consistent", "verdict", "error",
    ],
    "quasifree_scan": [
        "index", "statistics", "n_modes", "beta", "region1", "region2",
        "min_block_eig", "verdict", "error",
    ],
    "continuum_scaling": [
        "index", "family", "beta", "variant", "a11", "a12_re", "a12_im", "a22",
        "max_deviation", "min_block_eig", "verdict", "error",
    ],
    "fluctuation_sweep": [
        "index", "c", "lambda", "alpha", "beta", "s_z", "a_eff", "nu1", "nu2",
        "a1b1_a2b2", "ineq23_lhs", "ineq23_rhs", "ineq23_holds",
        "ineq23_literal_lhs", "ineq23_literal_holds", "uncertainty_ok",
        "gaussian_pt_min_eig", "verdict", "error",
    ],
}


@dataclass
class ScanRecord:
    """One grid point of a sweep: parameter key, computed values, verdict or error."""

    task: str
    key: dict
    values: dict = field(default_factory=dict)
    verdict: str | None = None
    error: str | None = None

    def row(self) -> dict:
        out = dict(self.key)
        out.update(self.values)
        out["verdict"] = self.verdict
        out["error"] = self.error
        return out


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def to_csv(records: Sequence[ScanRecord], task: str) -> str:
    cols = COLUMNS[task]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, r in enumerate(records):
        row = r.row()
        row.setdefault("index", i)
        extra = set(row) - set(cols)
        if extra:
            raise KeyError(f"record has columns {sorted(extra)} not in the {task} schema")
        w.writerow([fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def verdict_counts(records: Iterable[ScanRecord]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for r in records:
        k = "error" if r.error else str(r.verdict)
        counts[k] = counts.get(k, 0) + 1
    return dict(sorted(counts.items()))


def emit_plotdata(records: Sequence[ScanRecord], x: str, y: str, series: Sequence[str] = ()) -> list[dict]:
    """Long-format ``(x, y, series)`` rows; rows lacking ``x`` or ``y`` are skipped."""
    out = []
    for r in records:
        row = r.row()
        xv, yv = row.get(x), row.get(y)
        if xv is None or yv is None:
            continue
        label = ",".join(f"{s}={fmt(row.get(s))}" for s in series) if series else y
        out.append({"x": xv, "y": yv, "series": label})
    return out


def plotdata_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "series"])
    for r in rows:
        w.writerow([fmt(r["x"]), fmt(r["y"]), r["series"]])
    return buf.getvalue()
