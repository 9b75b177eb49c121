"""Per-checkpoint solver traces with a fixed, deterministic CSV schema.

Columns: epoch, effective_passes, simulated_parallel_cost, primal, dual,
gap, lambda_x, theta, potential. Undefined cells are empty. Wall-clock
timing is nondeterministic and therefore lives in the .meta.json sidecar,
never in the CSV, so (config, seed) fully determines every trace byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

COLUMNS = (
    "epoch",
    "effective_passes",
    "simulated_parallel_cost",
    "primal",
    "dual",
    "gap",
    "lambda_x",
    "theta",
    "potential",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


@dataclass
class Trace:
    """Checkpoint rows plus run metadata."""

    meta: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    wall_seconds: list[float] = field(default_factory=list)

    def append(self, *, epoch, effective_passes, simulated_parallel_cost=None,
               primal=None, dual=None, gap=None, lambda_x=None, theta=None,
               potential=None, wall=0.0) -> None:
        row = {
            "epoch": epoch,
            "effective_passes": effective_passes,
            "simulated_parallel_cost": simulated_parallel_cost,
            "primal": primal,
            "dual": dual,
            "gap": gap,
            "lambda_x": lambda_x,
            "theta": theta,
            "potential": potential,
        }
        if gap is not None and not math.isfinite(gap) and gap < 0:
            raise ValueError("non-finite negative gap")
        self.rows.append(row)
        self.wall_seconds.append(float(wall))

    def column(self, name: str) -> np.ndarray:
        vals = [r[name] for r in self.rows]
        return np.array(
            [np.nan if v is None else float(v) for v in vals], dtype=float
        )

    @property
    def final_gap(self) -> Optional[float]:
        for r in reversed(self.rows):
            if r["gap"] is not None:
                return float(r["gap"])
        return None

    def crossing(self, target: float, x: str = "effective_passes",
                 y: str = "gap") -> Optional[float]:
        """x-value where the y column first drops to `target`.

        Log-linear interpolation between checkpoints; None if the run
        never reaches the target (censored).
        """
        xs = self.column(x)
        ys = self.column(y)
        ok = np.isfinite(xs) & np.isfinite(ys)
        xs, ys = xs[ok], ys[ok]
        below = np.flatnonzero(ys <= target)
        if len(below) == 0:
            return None
        k = below[0]
        if k == 0 or ys[k] <= 0 or ys[k - 1] <= 0:
            return float(xs[k])
        lo, hi = math.log(ys[k]), math.log(ys[k - 1])
        t = (math.log(target) - hi) / (lo - hi)
        return float(xs[k - 1] + t * (xs[k] - xs[k - 1]))

    # -- persistence ---------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
        return buf.getvalue()

    def write(self, path: str) -> None:
        """Atomic write of the CSV plus its .meta.json sidecar."""
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            f.write(self.to_csv_text())
        os.replace(tmp, path)
        sidecar = {
            **self.meta,
            "wall_seconds": self.wall_seconds,
            "rows": len(self.rows),
        }
        tmp = path + ".meta.json.tmp"
        with open(tmp, "w") as f:
            json.dump(sidecar, f, indent=1, sort_keys=True)
        os.replace(tmp, os.path.splitext(path)[0] + ".meta.json")

    @classmethod
    def read(cls, path: str) -> "Trace":
        trace = cls()
        with open(path) as f:
            reader = csv.reader(f)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(
                    f"{path}: unexpected trace header {header!r}"
                )
            for line in reader:
                row = {
                    c: (None if s == "" else float(s)) for c, s in zip(COLUMNS, line)
                }
                trace.rows.append(row)
        meta_path = os.path.splitext(path)[0] + ".meta.json"
        if os.path.exists(meta_path):
            with open(meta_path) as f:
                trace.meta = json.load(f)
        return trace
