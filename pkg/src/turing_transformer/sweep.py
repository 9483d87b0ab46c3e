"""Quantization sweeps: how long does a compiled machine stay correct at Q levels?"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .compiler import compile_machine, simulate
from .layer import QuantizationConfig

DEFAULT_LEVELS = tuple(2 ** e for e in range(4, 17, 2))


@dataclass(frozen=True)
class SweepRow:
    levels: int
    s_max: int
    censored: bool  # no disagreement within the horizon
    first_saturation: int | None
    max_deviation: float
    max_bound: float
    bound_holds: bool  # deviation <= bound at every pre-saturation step


def agreement_horizon(trace, steps):
    """First disagreeing step, or ``steps + 1`` when every step agreed."""
    first = trace.first_disagreement
    return steps + 1 if first is None else first


def _row(q, trace, steps):
    sat = trace.first_saturation
    pre = [r for r in trace.records[1:] if sat is None or r.step < sat]
    holds = all(r.layer_deviation <= r.layer_bound for r in pre)
    return SweepRow(
        levels=q,
        s_max=agreement_horizon(trace, steps),
        censored=trace.first_disagreement is None,
        first_saturation=sat,
        max_deviation=max((r.layer_deviation for r in pre), default=0.0),
        max_bound=max((r.layer_bound for r in pre), default=0.0),
        bound_holds=holds,
    )


def sweep_quantization(spec, input_symbols, k=3, steps=100, levels=DEFAULT_LEVELS,
                       dynamic_range=QuantizationConfig.dynamic_range):
    rows = []
    for q in sorted(levels):
        program = compile_machine(spec, k, QuantizationConfig(int(q), dynamic_range))
        rows.append(_row(int(q), simulate(program, input_symbols, steps), steps))
    return rows


def is_monotone(rows):
    return all(a.s_max <= b.s_max for a, b in zip(rows, rows[1:]))


@dataclass(frozen=True)
class GrowthFit:
    model: str
    slope: float
    intercept: float
    r2: float


def fit_growth(rows):
    """Least-squares fits of ``S_max`` against ``log2 Q`` and against ``Q``.

    Censored rows are left out.  Both fits are returned; neither is preferred.
    """
    pts = [(r.levels, r.s_max) for r in rows if not r.censored]
    if len(pts) < 2:
        return []
    q, s = np.array(pts, dtype=float).T
    fits = []
    for model, x in (("log", np.log2(q)), ("linear", q)):
        slope, intercept = np.polyfit(x, s, 1)
        resid = s - (slope * x + intercept)
        total = np.sum((s - s.mean()) ** 2)
        r2 = 1.0 - np.sum(resid ** 2) / total if total > 0 else math.nan
        fits.append(GrowthFit(model, float(slope), float(intercept), float(r2)))
    return fits


def sweep_csv(rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["Q", "first_disagreement_step", "censored", "first_saturation",
                 "max_deviation", "max_bound", "bound_holds"])
    for r in rows:
        wr.writerow([r.levels, r.s_max, int(r.censored),
                     "" if r.first_saturation is None else r.first_saturation,
                     "%.17g" % r.max_deviation, "%.17g" % r.max_bound, int(r.bound_holds)])
    return buf.getvalue()
