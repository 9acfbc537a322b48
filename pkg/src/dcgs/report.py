"""Per-iteration telemetry shared by all solvers, and its CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, field, fields

import numpy as np

CSV_COLUMNS = ("k", "loss", "gap", "consensus", "comm_rounds", "messages", "scalars",
               "lo_total", "lo_max_agent", "seconds")


@dataclass
class ReportRow:
    k: int
    loss: float
    gap: float
    consensus: float
    comm_rounds: int
    messages: int
    scalars: int
    lo_total: int
    lo_max_agent: int
    seconds: float


@dataclass
class RunReport:
    algorithm: str
    rows: list[ReportRow] = field(default_factory=list)
    x_bar: np.ndarray | None = None
    f_ref: float | None = None
    lo_per_agent: np.ndarray | None = None
    # optional full trajectories, filled when a run is asked to keep history
    x_history: list[np.ndarray] | None = None
    y_history: list[np.ndarray] | None = None
    theta: list[float] | None = None

    @property
    def final(self) -> ReportRow:
        return self.rows[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def first_below(self, threshold: float, column: str = "comm_rounds"):
        """Value of ``column`` at the first row whose loss is at most ``threshold`` (None if never)."""
        for r in self.rows:
            if r.loss <= threshold:
                return getattr(r, column)
        return None

    def to_csv(self, timing: bool = False) -> str:
        """CSV text with the fixed header. Without ``timing`` the seconds column is 0 so
        repeated runs are byte-identical."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            vals = list(astuple(r))
            if not timing:
                vals[-1] = 0.0
            w.writerow([_fmt(v) for v in vals])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {tuple(rows[0].keys())}")
    types = {f.name: f.type for f in fields(ReportRow)}
    out = []
    for r in rows:
        out.append({k: (int(v) if types[k] in (int, "int") else float(v)) for k, v in r.items()})
    return out
