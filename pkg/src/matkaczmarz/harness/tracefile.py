"""Trace CSV files: ``k,row,rse,res_fro,wall_s``."""

from __future__ import annotations

import csv
import math

import numpy as np

from ..solvers import SolveReport, Trace

HEADER = ("k", "row", "rse", "res_fro", "wall_s")


def _num(v):
    return "" if math.isnan(v) else f"{v:.17g}"


def format_trace(trace, timings=True):
    """CSV text of `trace`; missing values become empty fields.

    With ``timings=False`` the wall-clock column is left empty so output
    depends only on the problem, method and seed.
    """
    lines = [",".join(HEADER)]
    for k, row, rse, res, wall in trace.records():
        lines.append(",".join((
            str(k), "" if row < 0 else str(row), _num(rse), _num(res),
            _num(wall) if timings else "")))
    return "\n".join(lines) + "\n"


def write_trace_csv(report, path, timings=True):
    """Write the trace of a `SolveReport` (or a bare `Trace`) to `path`."""
    trace = report.trace if isinstance(report, SolveReport) else report
    if len(trace) == 0:
        raise ValueError("trace is empty")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_trace(trace, timings))


def read_trace_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)

    def col(j, cast, missing):
        return [cast(r[j]) if r[j] != "" else missing for r in rows]

    return Trace(
        np.array(col(0, int, -1), dtype=np.int64),
        np.array(col(1, int, -1), dtype=np.int64),
        np.array(col(2, float, np.nan)),
        np.array(col(3, float, np.nan)),
        np.array(col(4, float, np.nan)),
    )


__all__ = ["HEADER", "format_trace", "write_trace_csv", "read_trace_csv"]
