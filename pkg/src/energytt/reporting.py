"""Predicted effective energy, oracle cross-validation and baseline comparisons."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

from .errors import MissingFit
from .fitting import FitBundle, crossover_track
from .kinematics import exact_overlap_regen, simulate_trip, trip_sample
from .lp import effective_windows, evaluate_sigma, _roles
from .network import Instance, Timetable
from .pairing import SyncEvent


def event_label(ev: SyncEvent) -> str:
    return "|".join(ev.key + (ev.direction,))


def parse_event_label(label: str) -> SyncEvent:
    i, j, t, p, d = label.split("|")
    return SyncEvent(i, j, t, p, d)


@dataclass
class EnergyReport:
    consumption_kwh: float
    regen_transferred_kwh: float
    effective_kwh: float
    per_event_regen: dict = field(default_factory=dict)     # SyncEvent -> kWh
    clamped_event_count: int = 0

    def to_dict(self) -> dict:
        return {
            "consumption_kwh": self.consumption_kwh,
            "regen_transferred_kwh": self.regen_transferred_kwh,
            "effective_kwh": self.effective_kwh,
            "per_event_regen": {event_label(e): v for e, v in sorted(self.per_event_regen.items())},
            "clamped_event_count": self.clamped_event_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyReport":
        return cls(d["consumption_kwh"], d["regen_transferred_kwh"], d["effective_kwh"],
                   {parse_event_label(k): v for k, v in d["per_event_regen"].items()},
                   d["clamped_event_count"])


def _arc_time(tt: Timetable, train: str, i: str, j: str) -> float:
    return tt.a(train, j) - tt.d(train, i)


def _cross_time(tt: Timetable, key) -> float:
    i, j, t, tp = key
    return tt.a(tp, j) - tt.d(t, i)


def consumption_surrogate(tt: Timetable, instance: Instance, fits: FitBundle) -> float:
    total = 0.0
    for t in instance.trains:
        for i, j in t.path_tracks:
            f = fits.consumption_track.get((t.id, i, j))
            if f is None:
                raise MissingFit(f"no consumption fit for {(t.id, i, j)}", key=(t.id, i, j))
            total += f(_arc_time(tt, t.id, i, j))
    for c, t, tp in instance.crossover_pairs():
        key = (c.from_, c.to, t, tp)
        f = fits.consumption_crossover.get(key)
        if f is None:
            raise MissingFit(f"no crossover consumption fit for {key}", key=key)
        total += f(_cross_time(tt, key))
    return total


def predict_energy(tt: Timetable, instance: Instance, fits: FitBundle, events=()) -> EnergyReport:
    """Affine consumption minus regeneration clamped at zero per event."""
    consumption = consumption_surrogate(tt, instance, fits)
    per_event, clamped = {}, 0
    for ev in events:
        f = fits.regen.get(ev)
        if f is None:
            raise MissingFit(f"no regeneration fit for {ev}", key=ev)
        raw = f(evaluate_sigma(instance, tt, fits, ev))
        if raw < 0:
            clamped += 1
        per_event[ev] = max(raw, 0.0)
    regen = sum(per_event.values())
    return EnergyReport(consumption, regen, consumption - regen, per_event, clamped)


# -- oracle side ------------------------------------------------------------------

def _q(x: float) -> float:
    return round(float(x), 6)     # share oracle cache entries across float noise


def oracle_event_regen(tt: Timetable, instance: Instance, ev: SyncEvent) -> float:
    """Energy moved in one event, integrating the exact oracle power curves."""
    r = _roles(instance, ev)
    ph = instance.physics
    ta = _q(_arc_time(tt, r.accel_train, *r.accel_track))
    tb = _q(_arc_time(tt, r.brake_train, *r.brake_track))
    acc = simulate_trip(instance.track_map[r.accel_track], ta, ph).segment("accelerate")
    brk = simulate_trip(instance.track_map[r.brake_track], tb, ph).segment("brake")
    # accel trip starts at d, brake trip starts at a - tb; express accel on the brake axis
    shift = tt.d(r.accel_train, r.accel_platform) - (tt.a(r.brake_train, r.brake_platform) - tb)
    return exact_overlap_regen(brk, acc, shift)


def oracle_energy(tt: Timetable, instance: Instance, events=()) -> EnergyReport:
    """Effective energy of ``tt`` as the kinematics oracle sees it."""
    ph = instance.physics
    consumption = 0.0
    for t in instance.trains:
        for i, j in t.path_tracks:
            consumption += trip_sample(instance.track_map[(i, j)], _q(_arc_time(tt, t.id, i, j)), ph).consumed_kwh
    for c, t, tp in instance.crossover_pairs():
        key = (c.from_, c.to, t, tp)
        consumption += trip_sample(crossover_track(instance, c.from_, c.to), _q(_cross_time(tt, key)), ph).consumed_kwh
    per_event = {ev: oracle_event_regen(tt, instance, ev) for ev in events}
    regen = sum(per_event.values())
    return EnergyReport(consumption, regen, consumption - regen, per_event, 0)


@dataclass
class CrossValidation:
    surrogate: EnergyReport
    simulator: EnergyReport
    per_event_gap: dict          # SyncEvent -> surrogate minus simulator kWh

    @property
    def regen_gap_kwh(self) -> float:
        return self.surrogate.regen_transferred_kwh - self.simulator.regen_transferred_kwh

    def to_dict(self) -> dict:
        return {
            "surrogate": self.surrogate.to_dict(),
            "simulator": self.simulator.to_dict(),
            "per_event_gap": {event_label(e): v for e, v in sorted(self.per_event_gap.items())},
        }


def crossvalidate(tt: Timetable, instance: Instance, fits: FitBundle, events=()) -> CrossValidation:
    """Surrogate prediction next to the oracle's exact-overlap computation."""
    sur = predict_energy(tt, instance, fits, events)
    sim = oracle_energy(tt, instance, events)
    gap = {ev: sur.per_event_regen[ev] - sim.per_event_regen[ev] for ev in events}
    return CrossValidation(sur, sim, gap)


# -- comparisons -----------------------------------------------------------------

def reduction_pct(baseline_kwh: float, optimized_kwh: float) -> float:
    return 100.0 * (baseline_kwh - optimized_kwh) / baseline_kwh


@dataclass
class ComparisonReport:
    baseline: EnergyReport
    optimized: EnergyReport
    reduction_pct: float
    simulator_reduction_pct: float | None = None
    solve_stats: dict = field(default_factory=dict)
    simulator_baseline: EnergyReport | None = None
    simulator_optimized: EnergyReport | None = None

    def to_dict(self) -> dict:
        d = {
            "baseline": self.baseline.to_dict(),
            "optimized": self.optimized.to_dict(),
            "reduction_pct": self.reduction_pct,
            "simulator_reduction_pct": self.simulator_reduction_pct,
            "solve_stats": dict(self.solve_stats),
        }
        for name in ("simulator_baseline", "simulator_optimized"):
            rep = getattr(self, name)
            d[name] = rep.to_dict() if rep is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        opt = {k: EnergyReport.from_dict(d[k]) if d.get(k) else None
               for k in ("simulator_baseline", "simulator_optimized")}
        return cls(EnergyReport.from_dict(d["baseline"]), EnergyReport.from_dict(d["optimized"]),
                   d["reduction_pct"], d.get("simulator_reduction_pct"), dict(d.get("solve_stats", {})), **opt)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ComparisonReport":
        return cls.from_dict(json.loads(text))


def compare(baseline: Timetable, optimized: Timetable, instance: Instance, fits: FitBundle,
            events=(), solve_stats: dict | None = None, simulate: bool = False) -> ComparisonReport:
    base = predict_energy(baseline, instance, fits, events)
    opt = predict_energy(optimized, instance, fits, events)
    rep = ComparisonReport(base, opt, reduction_pct(base.effective_kwh, opt.effective_kwh),
                           solve_stats=dict(solve_stats or {}))
    if simulate:
        sb = oracle_energy(baseline, instance, events)
        so = oracle_energy(optimized, instance, events)
        rep.simulator_baseline, rep.simulator_optimized = sb, so
        rep.simulator_reduction_pct = reduction_pct(sb.effective_kwh, so.effective_kwh)
    return rep


# -- table output -----------------------------------------------------------------

TABLE_COLUMNS = ("trains", "variables", "constraints", "solve_time_s", "baseline_kwh",
                 "optimized_kwh", "reduction_pct", "simulator_reduction_pct")


def table_row(rep: ComparisonReport, n_trains: int, n_vars: int, n_constraints: int) -> dict:
    return {
        "trains": n_trains,
        "variables": n_vars,
        "constraints": n_constraints,
        "solve_time_s": rep.solve_stats.get("wall_time_s"),
        "baseline_kwh": rep.baseline.effective_kwh,
        "optimized_kwh": rep.optimized.effective_kwh,
        "reduction_pct": rep.reduction_pct,
        "simulator_reduction_pct": rep.simulator_reduction_pct,
    }


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k) for k in TABLE_COLUMNS})
    return buf.getvalue()


def format_table(rows) -> str:
    def cell(v):
        if v is None:
            return "-"
        return f"{v:.3f}" if isinstance(v, float) else str(v)
    body = [[cell(r.get(k)) for k in TABLE_COLUMNS] for r in rows]
    widths = [max(len(k), *(len(b[n]) for b in body)) if body else len(k) for n, k in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(k.rjust(w) for k, w in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


__all__ = [
    "EnergyReport", "ComparisonReport", "CrossValidation", "predict_energy", "oracle_energy",
    "oracle_event_regen", "crossvalidate", "compare", "reduction_pct", "table_row", "table_csv",
    "format_table", "event_label", "parse_event_label", "effective_windows",
]
