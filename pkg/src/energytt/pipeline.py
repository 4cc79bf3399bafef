"""End-to-end run: pair, sample, fit, build, solve, report."""
from __future__ import annotations

from dataclasses import dataclass

from .fitting import FitBundle, fit_pipeline
from .lp import LinearProgram, build_lp, extract_timetable, timetable_point
from .network import Instance, Timetable, audit_timetable
from .pairing import build_sync_events
from .reporting import ComparisonReport, compare
from .solver import Solution, solve


@dataclass
class RunResult:
    instance: Instance
    baseline: Timetable
    events: tuple
    fits: FitBundle
    lp: LinearProgram
    solution: Solution
    optimized: Timetable | None
    report: ComparisonReport | None

    @property
    def all_events(self) -> tuple:
        return tuple(self.events[0]) + tuple(self.events[1])


def optimize(instance: Instance, baseline: Timetable, warm_start: bool = True,
             simulate: bool = False, method: str = "ipm", **solve_kw) -> RunResult:
    events = build_sync_events(instance, baseline)
    flat = events[0] + events[1]
    fits = fit_pipeline(instance, baseline, flat)
    lp = build_lp(instance, fits, events)
    x0 = timetable_point(lp, instance, baseline, fits) if warm_start else None
    sol = solve(lp, warm_start=x0, method=method, **solve_kw)
    if not sol.optimal:
        return RunResult(instance, baseline, events, fits, lp, sol, None, None)
    tt = extract_timetable(lp, sol.values)
    stats = {**sol.summary(), "n_vars": lp.n_vars, "n_constraints": lp.n_constraints,
             "feasible": audit_timetable(instance, tt).feasible}
    rep = compare(baseline, tt, instance, fits, flat, stats, simulate=simulate)
    return RunResult(instance, baseline, events, fits, lp, sol, tt, rep)
