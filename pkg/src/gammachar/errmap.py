"""Relative-error maps of the closed forms against realizable filters.

For every ``(a_p, b_u)`` cell (``b_p = 1``) the realizable response is
sampled, its characteristics are measured numerically and compared to the
sharp-filter closed forms with ``eps = 1 - numeric / analytic``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .characteristics import (ExtractionError, closed_form, field_key,
                              numeric_characteristics, relative_error)
from .response import FilterClass, FilterConstants, WindowTooShortError

__all__ = ["DEFAULT_CHARACTERISTICS", "ErrorGrid", "default_axes", "sweep",
           "to_long_rows", "write_csv"]

DEFAULT_CHARACTERISTICS = ("q_erb", "q_3", "q_10", "s_beta", "n_beta", "beta_peak")
AP_LIMITS = (0.01, 0.3)
BU_LIMITS = (1.5, 12.0)


def default_axes(n_ap: int = 24, n_bu: int = 24):
    """24 x 24 cells: ``a_p`` on [0.02, 0.25], ``b_u`` on [1.5, 12]."""
    return np.linspace(0.02, 0.25, n_ap), np.linspace(1.5, 12.0, n_bu)


@dataclass(frozen=True)
class ErrorGrid:
    """``cells[name][i, j]`` is the error at ``ap_axis[i]``, ``bu_axis[j]``.

    Failed extractions hold NaN with the reason in ``status[name][i][j]``.
    """

    filter_class: FilterClass
    ap_axis: np.ndarray
    bu_axis: np.ndarray
    characteristics: tuple
    cells: dict
    status: dict
    b_p: float = 1.0

    def failure_fraction(self) -> float:
        total = sum(m.size for m in self.cells.values())
        bad = sum(int(np.isnan(m).sum()) for m in self.cells.values())
        return bad / total if total else 0.0


def _cell(args):
    cls, a_p, b_u, names, levels = args
    c = FilterConstants(a_p, 1.0, b_u)
    try:
        analytic = closed_form(c, levels)
        numeric = numeric_characteristics(cls, c, levels)
    except (ExtractionError, WindowTooShortError, ArithmeticError, ValueError) as exc:
        return {n: (math.nan, f"failed: {exc}") for n in names}
    out = {}
    for n in names:
        if n in numeric.failures:
            out[n] = (math.nan, f"failed: {numeric.failures[n]}")
            continue
        try:
            out[n] = (relative_error(analytic, numeric, n), "ok")
        except ValueError as exc:
            out[n] = (math.nan, f"failed: {exc}")
    return out


def sweep(filter_class, ap_axis=None, bu_axis=None,
          characteristics=DEFAULT_CHARACTERISTICS, workers: int | None = None,
          allow_sharp: bool = False) -> ErrorGrid:
    """Error map of ``filter_class`` over the ``(a_p, b_u)`` plane.

    ``allow_sharp`` permits the sharp class itself, which calibrates the
    extractor (all errors should be near zero). ``workers > 1`` evaluates
    cells in a process pool; results are assembled in grid order.
    """
    cls = FilterClass.parse(filter_class)
    if cls is FilterClass.SHARP and not allow_sharp:
        raise ValueError("sweeping the sharp class needs allow_sharp=True (calibration only)")
    d_ap, d_bu = default_axes()
    ap = np.asarray(d_ap if ap_axis is None else ap_axis, dtype=float)
    bu = np.asarray(d_bu if bu_axis is None else bu_axis, dtype=float)
    if ap.min() < AP_LIMITS[0] or ap.max() > AP_LIMITS[1]:
        raise ValueError(f"a_p axis must lie within {AP_LIMITS}")
    if bu.min() < BU_LIMITS[0] or bu.max() > BU_LIMITS[1]:
        raise ValueError(f"b_u axis must lie within {BU_LIMITS}")
    names = tuple(field_key(n) for n in characteristics)
    levels = tuple(sorted({float(n[2:]) for n in names
                           if n.startswith("q_") and n != "q_erb"} or {3.0}))

    jobs = [(cls, float(a), float(b), names, levels) for a in ap for b in bu]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs, chunksize=8))
    else:
        results = [_cell(j) for j in jobs]

    cells = {n: np.full((len(ap), len(bu)), np.nan) for n in names}
    status = {n: [[""] * len(bu) for _ in ap] for n in names}
    for idx, res in enumerate(results):
        i, j = divmod(idx, len(bu))
        for n in names:
            cells[n][i, j], status[n][i][j] = res[n]
    return ErrorGrid(cls, ap, bu, names, cells, status)


def to_long_rows(grid: ErrorGrid):
    """Long-format rows ``(class, characteristic, A_p, B_u, epsilon, status)``."""
    for n in grid.characteristics:
        for i, a in enumerate(grid.ap_axis):
            for j, b in enumerate(grid.bu_axis):
                yield (grid.filter_class.value, n, float(a), float(b),
                       float(grid.cells[n][i, j]), grid.status[n][i][j])


def write_csv(grid: ErrorGrid, fh=None) -> str | None:
    """Write the long-format CSV to ``fh`` (or return it as a string)."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "characteristic", "A_p", "B_u", "epsilon", "status"])
    for row in to_long_rows(grid):
        w.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4]), row[5]])
    return None if fh is not None else buf.getvalue()
