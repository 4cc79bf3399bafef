"""Affine surrogates fitted by least squares to oracle data."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateSamples, InfeasibleTripTime, MissingSamples
from .kinematics import (exact_overlap_regen, minimum_trip_time, simulate_trip,
                         trip_sample, energy_vs_triptime_samples)
from .network import Instance, PhysicsParams, Timetable, Track, robustify
from .pairing import SyncEvent, event_roles

DEFAULT_TRIP_SAMPLES = 9
DEFAULT_OVERLAP_SAMPLES = 17


@dataclass(frozen=True)
class AffineFit:
    slope: float
    intercept: float
    residual_rms: float = 0.0
    n_samples: int = 0

    def __call__(self, x):
        return self.slope * x + self.intercept


def _as_arrays(samples):
    pts = list(samples)
    if len(pts) < 2:
        raise DegenerateSamples(f"need at least 2 samples, got {len(pts)}")
    x = np.array([float(p[0]) for p in pts])
    y = np.array([float(p[1]) for p in pts])
    if np.all(x == x[0]):
        raise DegenerateSamples("all abscissae are equal")
    return x, y


def _rms(x, y, slope, intercept) -> float:
    r = y - (slope * x + intercept)
    return float(np.sqrt(np.mean(r * r)))


def fit_affine(samples) -> AffineFit:
    """Ordinary least-squares line through ``(x, y)`` samples.

    The normal equations are solved in centred form, which is algebraically
    identical and avoids cancellation when ``x`` sits far from zero.
    """
    x, y = _as_arrays(samples)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(dx @ (y - ym) / (dx @ dx))
    intercept = float(ym - slope * xm)
    return AffineFit(slope, intercept, _rms(x, y, slope, intercept), x.size)


def fit_affine_nonneg(samples) -> AffineFit:
    """Least-squares line with ``slope >= 0`` and ``intercept >= 0``.

    Enumerates the four active sets and keeps the feasible candidate with the
    smallest residual.
    """
    x, y = _as_arrays(samples)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    candidates = [(0.0, 0.0)]
    s = float(dx @ (y - ym) / (dx @ dx))
    candidates.append((s, float(ym - s * xm)))
    candidates.append((0.0, float(ym)))
    xx = float(x @ x)
    if xx > 0:
        candidates.append((float(x @ y) / xx, 0.0))
    best, best_sse = None, np.inf
    for slope, intercept in candidates:
        if slope < 0 or intercept < 0:
            continue
        r = y - (slope * x + intercept)
        sse = float(r @ r)
        if sse < best_sse:
            best, best_sse = (slope, intercept), sse
    slope, intercept = best
    return AffineFit(slope, intercept, _rms(x, y, slope, intercept), x.size)


@dataclass(frozen=True)
class PhaseFits:
    """Effective-phase offsets as affine functions of the trip time of one track."""

    alpha_start: AffineFit   # accel window starts this long after departure
    alpha_end: AffineFit
    beta_start: AffineFit    # brake window starts this long before arrival
    beta_end: AffineFit


@dataclass
class FitBundle:
    consumption_track: dict = field(default_factory=dict)      # (train, i, j) -> AffineFit
    consumption_crossover: dict = field(default_factory=dict)  # (i, j, t, t') -> AffineFit
    regen: dict = field(default_factory=dict)                  # SyncEvent -> AffineFit
    phase: dict = field(default_factory=dict)                  # (train, i, j) -> PhaseFits


# -- oracle data ----------------------------------------------------------------

@dataclass
class OracleSamples:
    track: dict = field(default_factory=dict)       # (train, i, j) -> tuple[TripSample]
    crossover: dict = field(default_factory=dict)   # (i, j, t, t') -> tuple[(trip_time, kWh)]
    regen: dict = field(default_factory=dict)       # SyncEvent -> tuple[(overlap_s, kWh)]


def _sweep(lo: float, hi: float, t_min: float, n: int) -> tuple[float, ...]:
    lo = max(lo, t_min)
    if hi < lo:
        raise InfeasibleTripTime(f"window upper bound {hi} below minimum trip time {t_min}")
    if hi - lo < 1e-9:
        hi = lo + 1.0   # degenerate window: widen so the line is identifiable
    return tuple(float(v) for v in np.linspace(lo, hi, n))


@lru_cache(maxsize=4096)
def _track_sweep(track: Track, lo: float, hi: float, physics: PhysicsParams, n: int):
    times = _sweep(lo, hi, minimum_trip_time(track, physics), n)
    return tuple(energy_vs_triptime_samples(track, physics, times))


def crossover_track(instance: Instance, i: str, j: str) -> Track:
    c = instance.crossover_map[(i, j)]
    return Track(i, j, c.length, 0.0)


@lru_cache(maxsize=4096)
def _crossover_sweep(track: Track, lo: float, hi: float, physics: PhysicsParams, n: int):
    times = _sweep(lo, hi, minimum_trip_time(track, physics), n)
    return tuple((T, trip_sample(track, T, physics).consumed_kwh) for T in times)


@lru_cache(maxsize=65536)
def regen_overlap_samples(accel_track: Track, accel_time: float, brake_track: Track,
                          brake_time: float, physics: PhysicsParams, radius: float,
                          n: int = DEFAULT_OVERLAP_SAMPLES) -> tuple[tuple[float, float], ...]:
    """(overlap time, transferred kWh) pairs from sliding one train's acceleration past the other's braking.

    Overlap times sweep ``[-radius, min(widths)]``; each target overlap is
    realized with the accelerating window trailing and leading the braking one.
    """
    acc_pp = simulate_trip(accel_track, accel_time, physics)
    brk_pp = simulate_trip(brake_track, brake_time, physics)
    sa = trip_sample(accel_track, accel_time, physics)
    sb = trip_sample(brake_track, brake_time, physics)
    acc_seg = acc_pp.segment("accelerate")
    brk_seg = brk_pp.segment("brake")
    Tb = brake_time
    b_lo, b_hi = Tb - sb.beta_start, Tb - sb.beta_end        # brake window on the brake time axis
    a_lo, a_hi = sa.alpha_start, sa.alpha_end
    top = min(a_hi - a_lo, b_hi - b_lo)
    out = []
    for sigma in np.linspace(-radius, top, n):
        for shift in (b_hi - sigma - a_lo, b_lo + sigma - a_hi):
            out.append((float(sigma), exact_overlap_regen(brk_seg, acc_seg, shift)))
    return tuple(out)


def trip_time(tt: Timetable, train: str, arc: tuple[str, str]) -> float:
    return tt.a(train, arc[1]) - tt.d(train, arc[0])


def generate_oracle_samples(instance: Instance, baseline: Timetable, events=(),
                            n_trip: int = DEFAULT_TRIP_SAMPLES,
                            n_overlap: int = DEFAULT_OVERLAP_SAMPLES) -> OracleSamples:
    """Run the kinematics oracle over every window and event of ``instance``."""
    ph = instance.physics
    out = OracleSamples()
    for t in instance.trains:
        for i, j in t.path_tracks:
            w = robustify(instance.trip_windows[(t.id, i, j)])
            out.track[(t.id, i, j)] = _track_sweep(instance.track_map[(i, j)], w.lb, w.ub, ph, n_trip)
    for c, t, tp in instance.crossover_pairs():
        key = (c.from_, c.to, t, tp)
        w = robustify(instance.crossover_windows[key])
        out.crossover[key] = _crossover_sweep(crossover_track(instance, c.from_, c.to),
                                              w.lb, w.ub, ph, n_trip)
    for ev in events:
        roles = event_roles(instance, ev)
        if roles is None:
            continue
        ta = max(trip_time(baseline, roles.accel_train, roles.accel_track),
                 minimum_trip_time(instance.track_map[roles.accel_track], ph))
        tb = max(trip_time(baseline, roles.brake_train, roles.brake_track),
                 minimum_trip_time(instance.track_map[roles.brake_track], ph))
        out.regen[ev] = regen_overlap_samples(
            instance.track_map[roles.accel_track], round(ta, 6),
            instance.track_map[roles.brake_track], round(tb, 6),
            ph, float(instance.closeness_radius), n_overlap)
    return out


def fit_instance(instance: Instance, samples: OracleSamples, events=()) -> FitBundle:
    """Fit every surrogate the optimization model needs."""
    bundle = FitBundle()
    memo: dict = {}

    def cached(obj, fn):
        k = id(obj)
        if k not in memo:
            memo[k] = (obj, fn(obj))
        return memo[k][1]

    def phase_fits(rows):
        return PhaseFits(
            fit_affine([(s.trip_time, s.alpha_start) for s in rows]),
            fit_affine([(s.trip_time, s.alpha_end) for s in rows]),
            fit_affine([(s.trip_time, s.beta_start) for s in rows]),
            fit_affine([(s.trip_time, s.beta_end) for s in rows]),
        )

    for t in instance.trains:
        for i, j in t.path_tracks:
            key = (t.id, i, j)
            rows = samples.track.get(key)
            if not rows:
                raise MissingSamples(f"no trip samples for {key}", key=key)
            bundle.consumption_track[key] = cached(
                rows, lambda r: fit_affine([(s.trip_time, s.consumed_kwh) for s in r]))
            pk = ("phase", id(rows))
            if pk not in memo:
                memo[pk] = (rows, phase_fits(rows))
            bundle.phase[key] = memo[pk][1]
    for c, t, tp in instance.crossover_pairs():
        key = (c.from_, c.to, t, tp)
        rows = samples.crossover.get(key)
        if not rows:
            raise MissingSamples(f"no crossover samples for {key}", key=key)
        bundle.consumption_crossover[key] = cached(rows, fit_affine)
    for ev in events:
        if event_roles(instance, ev) is None:
            continue
        rows = samples.regen.get(ev)
        if not rows:
            raise MissingSamples(f"no overlap samples for {ev}", key=ev)
        bundle.regen[ev] = cached(rows, fit_affine_nonneg)
    return bundle


def fit_pipeline(instance: Instance, baseline: Timetable, events=(), **kw) -> FitBundle:
    """Oracle sampling followed by fitting."""
    return fit_instance(instance, generate_oracle_samples(instance, baseline, events, **kw), events)
