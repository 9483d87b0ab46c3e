"""Split a long simulation into rounds that hand off only decoded configurations.

Each round starts a fresh simulator from the configuration decoded at the end
of the previous round, so no hidden activations cross a round boundary.  Round
``r`` gets a cumulative error budget of ``r * eps / R``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .compiler import simulate
from .encoding import encode, hamming
from .errors import InvalidBudget
from .tm import TapeConfiguration, initial_configuration, run, window


@dataclass(frozen=True)
class RoundPlan:
    total_steps: int
    steps_per_round: int
    eps: float

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.steps_per_round < 1:
            raise ValueError("steps_per_round must be >= 1")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise InvalidBudget(f"eps must be a positive finite number, got {self.eps!r}")

    @property
    def rounds(self):
        return -(-self.total_steps // self.steps_per_round)

    @property
    def budget_per_round(self):
        return self.eps / self.rounds

    def steps_in_round(self, r):
        """Steps executed in round ``r`` (1-based); the last round may be short."""
        if not 1 <= r <= self.rounds:
            raise IndexError(f"round {r} outside 1..{self.rounds}")
        return min(self.steps_per_round, self.total_steps - (r - 1) * self.steps_per_round)

    def budget(self, r):
        return r * self.eps / self.rounds


def plan_rounds(T, s, eps):
    return RoundPlan(int(T), int(s), float(eps))


@dataclass
class RoundRecord:
    round: int
    decoded: TapeConfiguration | None
    reference: TapeConfiguration
    distance_coord: float
    distance_hamming: int
    budget: float

    @property
    def within_budget(self):
        return self.distance_coord <= self.budget


@dataclass
class RoundTrace:
    records: list
    plan: RoundPlan
    halted: bool = False
    diverged: bool = False

    @property
    def final(self):
        return self.records[-1].decoded

    @property
    def distances(self):
        return [r.distance_coord for r in self.records]

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["round", "distance_coord", "distance_hamming", "budget", "within_budget"])
        for r in self.records:
            wr.writerow([r.round, "%.17g" % r.distance_coord, r.distance_hamming,
                         "%.17g" % r.budget, int(r.within_budget)])
        return buf.getvalue()


def run_rounds(program, input_symbols, plan):
    """Execute ``plan`` with a fresh simulator per round.

    Distances are measured against the reference interpreter at step
    ``r * s``, or at its halting configuration if it stops earlier.
    """
    spec, lay = program.spec, program.layout
    start = (input_symbols if isinstance(input_symbols, TapeConfiguration)
             else initial_configuration(spec, input_symbols))
    ref = run(spec, start, plan.total_steps)
    records = [RoundRecord(0, start, start, 0.0, 0, 0.0)]
    config, done, halted, diverged = start, 0, False, False
    for r in range(1, plan.rounds + 1):
        target = ref[min(done + plan.steps_in_round(r), len(ref) - 1)]
        budget = plan.budget(r)
        if config.state == spec.accept_state:
            halted = True
            trace = None
        else:
            trace = simulate(program, config, plan.steps_in_round(r))
            done += len(trace.records) - 1
        ref_view = window(target, lay.k, spec.blank)
        if trace is None:
            view = window(config, lay.k, spec.blank)
            dist = float(np.max(np.abs(encode(view, lay) - encode(ref_view, lay))))
            records.append(RoundRecord(r, config, target, dist, hamming(view, ref_view), budget))
            continue
        last = trace.records[-1]
        if trace.diverged:
            records.append(RoundRecord(r, None, target, math.inf, lay.k + 1, budget))
            diverged = True
            break
        dist = float(np.max(np.abs(trace.hidden - encode(ref_view, lay))))
        records.append(RoundRecord(r, trace.final, target, dist,
                                   hamming(last.decoded, ref_view), budget))
        config = trace.final
        halted = trace.halted
    return RoundTrace(records, plan, halted, diverged)


@dataclass(frozen=True)
class AuditReport:
    increments: tuple
    per_round_budget: float
    first_violation: int | None
    final_distance: float
    eps: float

    @property
    def passed(self):
        return self.first_violation is None and self.final_distance <= self.eps


def induction_audit(trace, plan):
    """Check ``d_r <= d_{r-1} + eps/R`` round by round.

    ``trace`` is a :class:`RoundTrace` or a plain sequence of distances
    ``d_0, d_1, ...``.  Reports the first round whose increment exceeds the
    per-round budget.
    """
    distances = trace.distances if isinstance(trace, RoundTrace) else list(trace)
    if not distances or distances[0] != 0:
        raise ValueError("distance sequence must start at round 0 with distance 0")
    inc = tuple(b - a for a, b in zip(distances, distances[1:]))
    first = next((r for r in range(1, len(distances))
                  if not distances[r] <= distances[r - 1] + plan.budget_per_round), None)
    return AuditReport(inc, plan.budget_per_round, first, distances[-1], plan.eps)
