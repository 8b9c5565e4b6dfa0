"""Per-iteration traces and their CSV form.

A trace file starts with ``#``-prefixed ``key=value`` header lines (solver,
parameters, seed, termination reason), followed by a CSV header row and one
row per record. Floats are written with 17 significant digits so that a
trace read back from disk is bit-identical to the in-memory one. Absent
values are empty fields.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

COLUMNS = (
    "k",
    "epochs",
    "oracle_calls_B",
    "calls_C",
    "E_k",
    "phi",
    "h",
    "wall_time_s",
    "w_updated",
    "dist_sq",
    "E_abs",
)
_INT_COLUMNS = {"k", "oracle_calls_B", "calls_C", "w_updated", "E_abs"}


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


@dataclass
class IterationTrace:
    """Records of ``(k, epochs, calls, E_k, phi, h, wall time, ...)``.

    Row ``k`` describes the state after ``k`` iterations; its ``E_k`` entry is
    the relative change ``||z^k - z^{k-1}|| / ||z^{k-1}||`` of the step that
    produced it (empty on row 0).
    """

    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def append(self, **values) -> None:
        self.rows.append(tuple(values.get(c) for c in COLUMNS))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        j = COLUMNS.index(name)
        return np.array([np.nan if r[j] is None else r[j] for r in self.rows], dtype=np.float64)

    def last(self, name: str):
        return self.rows[-1][COLUMNS.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.meta.items():
            buf.write(f"# {key}={format_value(value) if not isinstance(value, str) else value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "IterationTrace":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line:
                body.append(line)
        reader = csv.reader(body)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected trace columns {header}")
        rows = []
        for raw in reader:
            row = []
            for name, cell in zip(COLUMNS, raw):
                if cell == "":
                    row.append(None)
                elif name in _INT_COLUMNS:
                    row.append(int(cell))
                else:
                    row.append(float(cell))
            rows.append(tuple(row))
        return cls(meta=meta, rows=rows)

    @classmethod
    def read(cls, path) -> "IterationTrace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())
