"""Point-mass train kinematics used as the reference simulator.

Speed profiles follow the accelerate / hold / coast / brake pattern. Power is
sampled on a fixed grid (plus both one-sided limits at every phase boundary,
so trapezoidal integration is exact for piecewise-linear power).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleTripTime
from .network import PhysicsParams, Track

G = 9.81
J_PER_KWH = 3.6e6
SAMPLE_STEP = 0.1
PHASES = ("accelerate", "hold", "coast", "brake")


@dataclass(frozen=True)
class Phase:
    kind: str
    start_s: float
    end_s: float
    start_speed: float
    end_speed: float

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class SpeedProfile:
    phases: tuple[Phase, ...]
    trip_time: float
    distance: float
    accel: float
    decel: float
    # coast trajectory on its own fine grid (time since coast start, speed); empty when no coast
    coast_t: tuple[float, ...] = ()
    coast_v: tuple[float, ...] = ()

    def phase(self, kind: str) -> Phase:
        return next(p for p in self.phases if p.kind == kind)

    def speed_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        v = np.zeros_like(t)
        acc, hold, coast, brake = (self.phase(k) for k in PHASES)
        m = (t >= 0) & (t <= acc.end_s)
        v[m] = self.accel * t[m]
        m = (t > hold.start_s) & (t <= hold.end_s)
        v[m] = hold.start_speed
        m = (t > coast.start_s) & (t <= coast.end_s)
        if m.any():
            v[m] = np.interp(t[m] - coast.start_s, self.coast_t, self.coast_v)
        m = (t > brake.start_s) & (t <= brake.end_s)
        v[m] = np.maximum(brake.start_speed - self.decel * (t[m] - brake.start_s), 0.0)
        return v

    def acceleration_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        acc, hold, coast, brake = (self.phase(k) for k in PHASES)
        out = np.zeros_like(t)
        out[(t >= 0) & (t < acc.end_s)] = self.accel
        out[(t >= brake.start_s) & (t < brake.end_s)] = -self.decel
        m = (t >= coast.start_s) & (t < coast.end_s)
        if m.any():
            slope = np.gradient(np.asarray(self.coast_v), np.asarray(self.coast_t))
            out[m] = np.interp(t[m] - coast.start_s, self.coast_t, slope)
        return out


def resistance(v, physics: PhysicsParams):
    A, B, C = physics.davis_coeffs
    v = np.asarray(v, dtype=float)
    return A + B * v + C * v * v


def minimum_trip_time(track: Track, physics: PhysicsParams) -> float:
    """Bang-bang time: full acceleration, cruise at the speed limit if reached, full braking."""
    a, b, D = physics.accel_max, -physics.decel_max, track.length
    v_peak = math.sqrt(2.0 * D / (1.0 / a + 1.0 / b))
    if v_peak <= physics.speed_limit:
        return v_peak / a + v_peak / b
    v = physics.speed_limit
    return D / v + v / (2.0 * a) + v / (2.0 * b)


def _coast(v0: float, duration: float, track: Track, physics: PhysicsParams, n: int = 400):
    """Integrate free running (resistance and grade only) with RK4."""
    if duration <= 0:
        return np.array([0.0]), np.array([v0]), 0.0
    m = physics.train_mass
    grade_force = m * G * math.sin(math.radians(track.grade))

    def f(v):
        return -(float(resistance(v, physics)) + grade_force) / m if v > 0 else 0.0

    h = duration / n
    ts = np.linspace(0.0, duration, n + 1)
    vs = np.empty(n + 1)
    vs[0] = v0
    for k in range(n):
        v = vs[k]
        k1 = f(v)
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        vs[k + 1] = max(v + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, 0.0)
    dist = float(np.trapezoid(vs, ts))
    return ts, vs, dist


def build_speed_profile(track: Track, trip_time: float, physics: PhysicsParams,
                        coast_fraction: float = 0.0, max_trip_time: float | None = None,
                        tol: float = 1e-9) -> SpeedProfile:
    """Four-phase profile covering ``track.length`` in exactly ``trip_time`` seconds.

    The cruise speed is found by bisection. ``coast_fraction`` of the slack
    beyond the minimum time is spent coasting before braking.
    """
    a, b, D = physics.accel_max, -physics.decel_max, track.length
    T = float(trip_time)
    t_min = minimum_trip_time(track, physics)
    if max_trip_time is None:
        max_trip_time = 5.0 * t_min
    if T < t_min - tol:
        raise InfeasibleTripTime(f"trip time {T:.6f}s below minimum {t_min:.6f}s on {track.key}",
                                 key=track.key)
    if T > max_trip_time:
        raise InfeasibleTripTime(f"trip time {T:.3f}s above configured maximum {max_trip_time:.3f}s",
                                 key=track.key)
    t_coast = coast_fraction * max(T - t_min, 0.0)
    v_lim = physics.speed_limit

    def layout(v):
        ct, cv, cd = _coast(v, t_coast, track, physics)
        ve = float(cv[-1])
        t_a, t_b = v / a, ve / b
        t_h = T - t_a - t_coast - t_b
        dist = v * v / (2 * a) + v * t_h + cd + ve * ve / (2 * b)
        return t_a, t_h, ct, cv, ve, t_b, dist

    if T - t_min <= tol:
        v_c = min(math.sqrt(2.0 * D / (1.0 / a + 1.0 / b)), v_lim)
        t_a, t_b = v_c / a, v_c / b
        t_h = max(T - t_a - t_b, 0.0)
        ct, cv, ve = np.array([0.0]), np.array([v_c]), v_c
    else:
        # largest cruise speed keeping a non-negative hold phase
        lo, hi = 0.0, v_lim
        if layout(hi)[1] < 0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if layout(mid)[1] >= 0 else (lo, mid)
            v_hi = lo
        else:
            v_hi = hi
        if layout(v_hi)[-1] < D * (1 - 1e-12):
            raise InfeasibleTripTime(f"trip time {T:.3f}s needs cruise above speed limit",
                                     key=track.key)
        lo, hi = 0.0, v_hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if layout(mid)[-1] < D:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(hi, 1.0):
                break
        v_c = 0.5 * (lo + hi)
        t_a, t_h, ct, cv, ve, t_b, _ = layout(v_c)
        if ve > v_lim + 1e-9 or np.max(cv) > v_lim + 1e-9:
            raise InfeasibleTripTime("coasting accelerates above the speed limit", key=track.key)
        # absorb the bisection residue into the hold phase so the total is exact
        t_h = T - t_a - t_coast - t_b
    t0, t1 = 0.0, t_a
    t2 = t1 + t_h
    t3 = t2 + t_coast
    phases = (
        Phase("accelerate", t0, t1, 0.0, v_c),
        Phase("hold", t1, t2, v_c, v_c),
        Phase("coast", t2, t3, v_c, ve),
        Phase("brake", t3, T, ve, 0.0),
    )
    return SpeedProfile(phases, T, D, a, b,
                        tuple(ct.tolist()) if t_coast > 0 else (),
                        tuple(cv.tolist()) if t_coast > 0 else ())


def profile_distance(sp: SpeedProfile) -> float:
    """Closed-form distance of the profile (coast part by trapezoid on its fine grid)."""
    acc, hold, coast, brake = (sp.phase(k) for k in PHASES)
    d = 0.5 * acc.end_speed * acc.duration + hold.start_speed * hold.duration
    if coast.duration > 0:
        d += float(np.trapezoid(sp.coast_v, sp.coast_t))
    d += 0.5 * brake.start_speed * brake.duration
    return d


# -- power ------------------------------------------------------------------

@dataclass(frozen=True)
class PowerSegment:
    """Sampled power signal; times may repeat at discontinuities."""

    times: np.ndarray
    power: np.ndarray

    @property
    def energy_j(self) -> float:
        return float(np.trapezoid(self.power, self.times))


@dataclass(frozen=True)
class PowerProfile:
    samples: np.ndarray            # shape (n, 2): time_s, power_W
    traction_energy: float         # J
    regen_energy: float            # J, already net of conversion and transmission losses
    phase_of_sample: np.ndarray    # index into PHASES per sample
    speed_profile: SpeedProfile

    @property
    def times(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def power(self) -> np.ndarray:
        return self.samples[:, 1]

    def segment(self, kind: str) -> PowerSegment:
        """Samples of one phase, traction for accelerate/hold/coast, |regen| for brake."""
        idx = PHASES.index(kind)
        m = self.phase_of_sample == idx
        p = self.power[m]
        p = np.maximum(-p, 0.0) if kind == "brake" else np.maximum(p, 0.0)
        return PowerSegment(self.times[m].copy(), p)

    def phase_energy(self, kind: str) -> float:
        return self.segment(kind).energy_j


def _power_in_phase(kind: str, t, sp: SpeedProfile, track: Track, physics: PhysicsParams):
    m = physics.train_mass
    sin_g = math.sin(math.radians(track.grade))
    ph = sp.phase(kind)
    # evaluate with the phase's own law so boundary limits are one-sided
    if kind == "accelerate":
        v = np.clip(sp.accel * (np.asarray(t) - ph.start_s), 0.0, ph.end_speed)
        acc = sp.accel
    elif kind == "hold":
        v = np.full_like(np.asarray(t, dtype=float), ph.start_speed)
        acc = 0.0
    elif kind == "coast":
        v = np.interp(np.asarray(t) - ph.start_s, sp.coast_t, sp.coast_v) if sp.coast_t else \
            np.full_like(np.asarray(t, dtype=float), ph.start_speed)
        acc = None
    else:
        v = np.clip(ph.start_speed - sp.decel * (np.asarray(t) - ph.start_s), 0.0, ph.start_speed)
        acc = None
    R = resistance(v, physics)
    if kind == "brake":
        mech = (m * sp.decel - R - m * G * sin_g) * v
        return -physics.eta_kin_to_regen * (1 - physics.transmission_loss) * np.maximum(mech, 0.0)
    if acc is None:
        return np.zeros_like(v)          # coasting: no traction
    return np.maximum((m * acc + R + m * G * sin_g) * v / physics.eta_elec_to_kin, 0.0)


def power_profile(sp: SpeedProfile, track: Track, physics: PhysicsParams,
                  step: float = SAMPLE_STEP) -> PowerProfile:
    """Electrical power drawn (positive) or fed back (negative) along the profile."""
    times, powers, labels = [], [], []
    grid = np.arange(0.0, sp.trip_time, step)
    for idx, kind in enumerate(PHASES):
        ph = sp.phase(kind)
        if ph.duration <= 0:
            continue
        inner = grid[(grid > ph.start_s) & (grid < ph.end_s)]
        t = np.concatenate([[ph.start_s], inner, [ph.end_s]])
        times.append(t)
        powers.append(_power_in_phase(kind, t, sp, track, physics))
        labels.append(np.full(t.size, idx))
    t = np.concatenate(times)
    p = np.concatenate(powers)
    lab = np.concatenate(labels)
    samples = np.column_stack([t, p])
    return PowerProfile(
        samples=samples,
        traction_energy=float(np.trapezoid(np.maximum(p, 0.0), t)),
        regen_energy=float(np.trapezoid(np.maximum(-p, 0.0), t)),
        phase_of_sample=lab,
        speed_profile=sp,
    )


# -- FWHM ---------------------------------------------------------------------

@dataclass(frozen=True)
class FwhmRect:
    start_offset_s: float
    end_offset_s: float
    height_W: float

    @property
    def width(self) -> float:
        return self.end_offset_s - self.start_offset_s

    @property
    def energy_j(self) -> float:
        return self.height_W * self.width


def fwhm(times, power) -> FwhmRect:
    """Rectangle of peak height spanning the half-maximum crossings of ``power``.

    Crossings are located by linear interpolation between samples.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(power, dtype=float)
    k = int(np.argmax(p))
    peak = float(p[k])
    if peak <= 0:
        raise ValueError("signal has no positive peak")
    half = 0.5 * peak
    above = np.nonzero(p >= half)[0]
    i0, i1 = int(above[0]), int(above[-1])
    if i0 > 0 and p[i0 - 1] < half and t[i0] > t[i0 - 1]:
        start = t[i0 - 1] + (half - p[i0 - 1]) * (t[i0] - t[i0 - 1]) / (p[i0] - p[i0 - 1])
    else:
        start = t[i0]
    if i1 + 1 < p.size and p[i1 + 1] < half and t[i1 + 1] > t[i1]:
        end = t[i1] + (p[i1] - half) * (t[i1 + 1] - t[i1]) / (p[i1] - p[i1 + 1])
    else:
        end = t[i1]
    return FwhmRect(float(start), float(end), peak)


def superlevel_measure(times, power, level: float) -> float:
    """Length of ``{t : power(t) >= level}`` for the piecewise-linear interpolant."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(power, dtype=float) - level
    dt = np.diff(t)
    p0, p1 = p[:-1], p[1:]
    both = (p0 >= 0) & (p1 >= 0)
    total = float(dt[both].sum())
    cross = (p0 >= 0) != (p1 >= 0)
    frac = np.where(p0[cross] >= 0, p0[cross], p1[cross]) / np.abs(p0[cross] - p1[cross])
    return total + float((dt[cross] * frac).sum())


# -- trip-time sweeps -----------------------------------------------------------

@dataclass(frozen=True)
class TripSample:
    trip_time: float
    consumed_kwh: float        # traction energy of the acceleration phase
    regen_kwh: float           # regenerated energy of the braking phase
    hold_kwh: float            # traction during hold, reported separately
    fwhm_accel: FwhmRect       # offsets after departure
    fwhm_brake: FwhmRect       # offsets before arrival: start > end >= 0

    @property
    def alpha_start(self) -> float:
        return self.fwhm_accel.start_offset_s

    @property
    def alpha_end(self) -> float:
        return self.fwhm_accel.end_offset_s

    @property
    def beta_start(self) -> float:
        return self.fwhm_brake.start_offset_s

    @property
    def beta_end(self) -> float:
        return self.fwhm_brake.end_offset_s


@lru_cache(maxsize=8192)
def simulate_trip(track: Track, trip_time: float, physics: PhysicsParams,
                  coast_fraction: float = 0.0) -> PowerProfile:
    sp = build_speed_profile(track, trip_time, physics, coast_fraction=coast_fraction)
    return power_profile(sp, track, physics)


def trip_sample(track: Track, trip_time: float, physics: PhysicsParams,
                coast_fraction: float = 0.0) -> TripSample:
    pp = simulate_trip(track, float(trip_time), physics, coast_fraction)
    acc = pp.segment("accelerate")
    brk = pp.segment("brake")
    ra = fwhm(acc.times, acc.power)
    rb = fwhm(brk.times, brk.power)
    T = pp.speed_profile.trip_time
    return TripSample(
        trip_time=float(trip_time),
        consumed_kwh=acc.energy_j / J_PER_KWH,
        regen_kwh=brk.energy_j / J_PER_KWH,
        hold_kwh=pp.phase_energy("hold") / J_PER_KWH,
        fwhm_accel=ra,
        fwhm_brake=FwhmRect(T - rb.start_offset_s, T - rb.end_offset_s, rb.height_W),
    )


def energy_vs_triptime_samples(track: Track, physics: PhysicsParams, trip_times,
                               coast_fraction: float = 0.0) -> list[TripSample]:
    return [trip_sample(track, float(T), physics, coast_fraction) for T in trip_times]


# -- exact overlap -----------------------------------------------------------------

def _eval_pl(times: np.ndarray, values: np.ndarray, x: np.ndarray, side: str) -> np.ndarray:
    """Piecewise-linear evaluation taking the one-sided limit at repeated knots."""
    n = times.size
    if side == "right":
        k = np.searchsorted(times, x, side="right") - 1
    else:
        k = np.searchsorted(times, x, side="left") - 1
    k = np.clip(k, 0, n - 2)
    t0, t1 = times[k], times[k + 1]
    v0, v1 = values[k], values[k + 1]
    w = np.where(t1 > t0, (x - t0) / np.where(t1 > t0, t1 - t0, 1.0), 0.0)
    return v0 + w * (v1 - v0)


def exact_overlap_regen(brake: PowerSegment, accel: PowerSegment, time_shift: float) -> float:
    """Energy (kWh) passed from a braking to an accelerating train.

    ``accel`` is moved by ``time_shift`` onto the time axis of ``brake``; the
    transferred power is the pointwise minimum of regenerated supply and
    traction demand, integrated exactly for the piecewise-linear interpolants.
    """
    tb, pb = np.asarray(brake.times, float), np.abs(np.asarray(brake.power, float))
    ta, pa = np.asarray(accel.times, float) + time_shift, np.maximum(np.asarray(accel.power, float), 0.0)
    if tb.size < 2 or ta.size < 2:
        return 0.0
    lo, hi = max(tb[0], ta[0]), min(tb[-1], ta[-1])
    if hi <= lo:
        return 0.0
    knots = np.unique(np.concatenate([[lo, hi], tb[(tb > lo) & (tb < hi)], ta[(ta > lo) & (ta < hi)]]))
    u, w = knots[:-1], knots[1:]
    f0, f1 = _eval_pl(tb, pb, u, "right"), _eval_pl(tb, pb, w, "left")
    g0, g1 = _eval_pl(ta, pa, u, "right"), _eval_pl(ta, pa, w, "left")
    h = w - u
    d0, d1 = f0 - g0, f1 - g1
    m0, m1 = np.minimum(f0, g0), np.minimum(f1, g1)
    area = 0.5 * h * (m0 + m1)
    cross = d0 * d1 < 0
    if cross.any():
        # min of two lines meeting inside the interval: split at the crossing
        s = d0[cross] / (d0[cross] - d1[cross])
        fx = f0[cross] + s * (f1[cross] - f0[cross])
        hc = h[cross]
        area[cross] = 0.5 * s * hc * (m0[cross] + fx) + 0.5 * (1 - s) * hc * (fx + m1[cross])
    return float(area.sum()) / J_PER_KWH
