"""Railway network, trains, time windows and timetables.

All times are seconds measured from the first event of the service period.
Values are immutable once constructed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyRobustWindow, MissingEvent

FAMILIES = ("TRACK", "CROSS", "DWELL", "CONNECT", "HEADWAY", "TRAVEL", "DOMAIN")
DEFAULT_GRADE_RANGE = (-2.00453, 2.00453)


@dataclass(frozen=True)
class Platform:
    id: str
    station_id: str
    line_id: str


@dataclass(frozen=True)
class Track:
    from_: str
    to: str
    length: float
    grade: float = 0.0

    @property
    def key(self) -> tuple[str, str]:
        return (self.from_, self.to)


@dataclass(frozen=True)
class CrossOver:
    from_: str
    to: str
    turnaround_pairs: tuple[tuple[str, str], ...]
    # physical length of the turnaround move, used only by the kinematics oracle
    length: float = 150.0

    @property
    def key(self) -> tuple[str, str]:
        return (self.from_, self.to)


@dataclass(frozen=True)
class TimeWindow:
    lb: float
    ub: float

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lb - tol <= value <= self.ub + tol

    def slack(self, value: float) -> float:
        return min(value - self.lb, self.ub - value)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lb + self.ub)


@dataclass(frozen=True)
class UncertainWindow:
    """Window ``l <= x - y <= u`` with ``l`` in ``lb_interval``, ``u`` in ``ub_interval``."""

    lb_interval: tuple[float, float]
    ub_interval: tuple[float, float]

    @classmethod
    def certain(cls, lb: float, ub: float) -> "UncertainWindow":
        return cls((lb, lb), (ub, ub))

    @property
    def is_empty(self) -> bool:
        return self.lb_interval[1] > self.ub_interval[0]


def robustify(w: UncertainWindow) -> TimeWindow:
    """Tightest window valid for every realization of the uncertain bounds."""
    lo, hi = w.lb_interval[1], w.ub_interval[0]
    if lo > hi:
        raise EmptyRobustWindow(f"robust window [{lo}, {hi}] is empty", key=w)
    return TimeWindow(lo, hi)


@dataclass(frozen=True)
class Train:
    id: str
    path_platforms: tuple[str, ...]
    path_tracks: tuple[tuple[str, str], ...]
    travel_window: TimeWindow

    @classmethod
    def along(cls, id: str, platforms, travel_window: TimeWindow) -> "Train":
        platforms = tuple(platforms)
        return cls(id, platforms, tuple(zip(platforms[:-1], platforms[1:])), travel_window)

    @cached_property
    def _position(self) -> dict[str, int]:
        return {p: k for k, p in enumerate(self.path_platforms)}

    def outgoing(self, platform: str) -> tuple[str, str] | None:
        k = self._position.get(platform)
        if k is None or k >= len(self.path_tracks):
            return None
        return self.path_tracks[k]

    def incoming(self, platform: str) -> tuple[str, str] | None:
        k = self._position.get(platform)
        if k is None or k == 0:
            return None
        return self.path_tracks[k - 1]

    def visits(self, platform: str) -> bool:
        return platform in self._position


@dataclass(frozen=True)
class Headway:
    """Consecutive departures ``train`` then ``next_train`` along a track."""

    from_: str
    to: str
    train: str
    next_train: str
    h_from: float
    h_to: float


@dataclass(frozen=True)
class PhysicsParams:
    accel_max: float = 1.04
    decel_max: float = -0.8
    eta_elec_to_kin: float = 0.9
    eta_kin_to_regen: float = 0.76
    transmission_loss: float = 0.1
    train_mass: float = 2.0e5
    davis_coeffs: tuple[float, float, float] = (2500.0, 40.0, 6.0)
    speed_limit: float = 22.0


@dataclass(frozen=True)
class Instance:
    platforms: tuple[Platform, ...]
    tracks: tuple[Track, ...]
    crossovers: tuple[CrossOver, ...]
    trains: tuple[Train, ...]
    dwell_windows: dict          # (train, platform) -> UncertainWindow
    trip_windows: dict           # (train, from, to) -> UncertainWindow
    crossover_windows: dict      # (from, to, train, partner) -> UncertainWindow
    connections: dict            # (from, to, train, partner) -> UncertainWindow
    headways: tuple[Headway, ...]
    regen_pairs: tuple[tuple[str, str], ...]
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    closeness_radius: float = 60.0
    horizon: float | None = None
    grade_range: tuple[float, float] = DEFAULT_GRADE_RANGE

    @cached_property
    def platform_map(self) -> dict[str, Platform]:
        return {p.id: p for p in self.platforms}

    @cached_property
    def track_map(self) -> dict[tuple[str, str], Track]:
        return {t.key: t for t in self.tracks}

    @cached_property
    def crossover_map(self) -> dict[tuple[str, str], CrossOver]:
        return {c.key: c for c in self.crossovers}

    @cached_property
    def train_map(self) -> dict[str, Train]:
        return {t.id: t for t in self.trains}

    @cached_property
    def trains_at(self) -> dict[str, tuple[str, ...]]:
        """Trains dwelling at each platform, in instance order."""
        out: dict[str, list[str]] = {p.id: [] for p in self.platforms}
        for t in self.trains:
            for p in t.path_platforms:
                out.setdefault(p, []).append(t.id)
        return {p: tuple(v) for p, v in out.items()}

    def crossover_pairs(self):
        for c in self.crossovers:
            for t, tp in c.turnaround_pairs:
                yield c, t, tp

    @cached_property
    def computed_horizon(self) -> float:
        return compute_horizon(self)

    @property
    def m(self) -> float:
        """Upper end of the DOMAIN bounds."""
        return self.horizon if self.horizon is not None else self.computed_horizon


def compute_horizon(instance: Instance) -> float:
    """Serial upper bound on the last event: every trip, dwell and turnaround at its maximum."""
    total = 0.0
    for t in instance.trains:
        for p in t.path_platforms:
            w = instance.dwell_windows.get((t.id, p))
            if w is not None:
                total += max(w.ub_interval)
        for i, j in t.path_tracks:
            w = instance.trip_windows.get((t.id, i, j))
            if w is not None:
                total += max(w.ub_interval)
    for c, t, tp in instance.crossover_pairs():
        w = instance.crossover_windows.get((c.from_, c.to, t, tp))
        if w is not None:
            total += max(w.ub_interval)
    return float(math.ceil(total))


@dataclass(frozen=True)
class Timetable:
    arrival: dict        # (train, platform) -> seconds
    departure: dict      # (train, platform) -> seconds

    def a(self, train: str, platform: str) -> float:
        try:
            return self.arrival[(train, platform)]
        except KeyError:
            raise MissingEvent(f"no arrival for train {train!r} at {platform!r}",
                               key=(train, platform)) from None

    def d(self, train: str, platform: str) -> float:
        try:
            return self.departure[(train, platform)]
        except KeyError:
            raise MissingEvent(f"no departure for train {train!r} at {platform!r}",
                               key=(train, platform)) from None

    def midpoint(self, train: str, platform: str) -> float:
        return 0.5 * (self.a(train, platform) + self.d(train, platform))

    def records(self, instance: Instance):
        """(train, platform, arrival, departure) sorted by train then path order."""
        for t in sorted(instance.trains, key=lambda t: t.id):
            for p in t.path_platforms:
                yield t.id, p, self.a(t.id, p), self.d(t.id, p)


# -- validation ----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    key: object = None


def validate_instance(instance: Instance) -> list[Violation]:
    """Return every structural problem found in ``instance``; empty when valid."""
    out: list[Violation] = []

    def bad(code, msg, key=None):
        out.append(Violation(code, msg, key))

    seen = set()
    for p in instance.platforms:
        if p.id in seen:
            bad("DUPLICATE_PLATFORM", f"platform {p.id!r} declared twice", p.id)
        seen.add(p.id)
    pmap = instance.platform_map

    glo, ghi = instance.grade_range
    tkeys = set()
    for tr in instance.tracks:
        for end in (tr.from_, tr.to):
            if end not in pmap:
                bad("UNKNOWN_PLATFORM", f"track {tr.key} references {end!r}", tr.key)
        if tr.from_ == tr.to:
            bad("SELF_LOOP_TRACK", f"track {tr.key} starts and ends at the same platform", tr.key)
        if tr.key in tkeys:
            bad("DUPLICATE_TRACK", f"track {tr.key} declared twice", tr.key)
        tkeys.add(tr.key)
        if not tr.length > 0:
            bad("NONPOSITIVE_LENGTH", f"track {tr.key} has length {tr.length}", tr.key)
        if not glo <= tr.grade <= ghi:
            bad("GRADE_OUT_OF_RANGE", f"track {tr.key} grade {tr.grade} outside [{glo}, {ghi}]", tr.key)

    tmap = {}
    for t in instance.trains:
        if t.id in tmap:
            bad("DUPLICATE_TRAIN", f"train {t.id!r} declared twice", t.id)
        tmap[t.id] = t
        if len(t.path_platforms) < 2 or len(t.path_platforms) != len(t.path_tracks) + 1:
            bad("PATH_TOO_SHORT" if len(t.path_platforms) < 2 else "NONCONTIGUOUS_PATH",
                f"train {t.id!r} path has {len(t.path_platforms)} platforms and "
                f"{len(t.path_tracks)} tracks", t.id)
        for p in t.path_platforms:
            if p not in pmap:
                bad("UNKNOWN_PLATFORM", f"train {t.id!r} visits unknown platform {p!r}", (t.id, p))
        for k, arc in enumerate(t.path_tracks):
            if k + 1 < len(t.path_platforms) and tuple(arc) != t.path_platforms[k:k + 2]:
                bad("NONCONTIGUOUS_PATH", f"train {t.id!r} track {k} is {arc}, expected "
                    f"{t.path_platforms[k:k + 2]}", (t.id, k))
            if tuple(arc) not in tkeys:
                bad("UNKNOWN_TRACK", f"train {t.id!r} uses undeclared track {arc}", (t.id, tuple(arc)))
        tw = t.travel_window
        if not (0 <= tw.lb <= tw.ub and math.isfinite(tw.ub)):
            bad("BAD_TRAVEL_WINDOW", f"train {t.id!r} travel window [{tw.lb}, {tw.ub}]", t.id)

    for c in instance.crossovers:
        for end in (c.from_, c.to):
            if end not in pmap:
                bad("UNKNOWN_PLATFORM", f"crossover {c.key} references {end!r}", c.key)
        if c.from_ in pmap and c.to in pmap and pmap[c.from_].line_id == pmap[c.to].line_id:
            bad("CROSSOVER_SAME_LINE", f"crossover {c.key} joins platforms of one line", c.key)
        for t, tp in c.turnaround_pairs:
            if t == tp or t not in tmap or tp not in tmap:
                bad("CROSSOVER_BAD_PAIR", f"crossover {c.key} pair ({t!r}, {tp!r})", (c.key, t, tp))
                continue
            if tmap[t].path_platforms[-1] != c.from_ or tmap[tp].path_platforms[0] != c.to:
                bad("CROSSOVER_BAD_PAIR", f"crossover {c.key}: {t!r} must end at {c.from_!r} and "
                    f"{tp!r} start at {c.to!r}", (c.key, t, tp))
            key = (c.from_, c.to, t, tp)
            if key not in instance.crossover_windows:
                bad("MISSING_WINDOW", f"no crossover window for {key}", key)

    def check_window(kind, key, w):
        (l0, l1), (u0, u1) = w.lb_interval, w.ub_interval
        if not all(math.isfinite(v) for v in (l0, l1, u0, u1)):
            bad("NONFINITE_WINDOW", f"{kind} window {key} has non-finite bounds", key)
        elif l0 > l1 or u0 > u1:
            bad("INVERTED_INTERVAL", f"{kind} window {key} has an inverted interval", key)
        elif l1 > u0:
            bad("EMPTY_ROBUST_WINDOW", f"{kind} window {key}: robust lb {l1} > ub {u0}", key)
        elif kind in ("dwell", "trip", "crossover") and l0 < 0:
            bad("NEGATIVE_WINDOW", f"{kind} window {key} allows negative durations", key)

    for t in instance.trains:
        for p in t.path_platforms:
            if (t.id, p) not in instance.dwell_windows:
                bad("MISSING_WINDOW", f"no dwell window for ({t.id!r}, {p!r})", (t.id, p))
        for i, j in t.path_tracks:
            if (t.id, i, j) not in instance.trip_windows:
                bad("MISSING_WINDOW", f"no trip window for ({t.id!r}, {i!r}, {j!r})", (t.id, i, j))
    for key, w in instance.dwell_windows.items():
        if key[0] not in tmap or not tmap[key[0]].visits(key[1]):
            bad("UNKNOWN_EVENT", f"dwell window {key} does not match a train path", key)
        check_window("dwell", key, w)
    for key, w in instance.trip_windows.items():
        if key[0] not in tmap or (key[1], key[2]) not in tmap[key[0]].path_tracks:
            bad("UNKNOWN_EVENT", f"trip window {key} does not match a train path", key)
        check_window("trip", key, w)
    for key, w in instance.crossover_windows.items():
        check_window("crossover", key, w)
    for key, w in instance.connections.items():
        i, j, t, tp = key
        if i not in pmap or j not in pmap:
            bad("UNKNOWN_PLATFORM", f"connection {key} references unknown platforms", key)
        elif pmap[i].station_id != pmap[j].station_id:
            bad("CONNECTION_NOT_INTERCHANGE", f"connection {key} spans two stations", key)
        if t not in tmap or tp not in tmap or not tmap[t].visits(i) or not tmap[tp].visits(j):
            bad("UNKNOWN_EVENT", f"connection {key} does not match train paths", key)
        check_window("connection", key, w)

    for h in instance.headways:
        arc = (h.from_, h.to)
        for tid in (h.train, h.next_train):
            if tid not in tmap:
                bad("UNKNOWN_TRAIN", f"headway on {arc} names unknown train {tid!r}", (arc, tid))
            elif arc not in tmap[tid].path_tracks:
                bad("HEADWAY_DIRECTION", f"train {tid!r} does not traverse {arc}", (arc, tid))
        if h.train == h.next_train:
            bad("HEADWAY_SELF_PAIR", f"headway on {arc} pairs {h.train!r} with itself", arc)
        if h.h_from < 0 or h.h_to < 0:
            bad("NEGATIVE_HEADWAY", f"headway on {arc} for ({h.train!r}, {h.next_train!r})", arc)

    seen_pairs = set()
    for pair in instance.regen_pairs:
        i, j = pair
        if i not in pmap or j not in pmap:
            bad("UNKNOWN_PLATFORM", f"regen pair {pair} references unknown platforms", pair)
        if not i < j:
            bad("OMEGA_NOT_LEX", f"regen pair {pair} is not ordered with i < j", pair)
        if (i, j) in seen_pairs:
            bad("OMEGA_DUPLICATE", f"regen pair {pair} listed twice", pair)
        seen_pairs.add((i, j))

    if not instance.closeness_radius > 0:
        bad("BAD_RADIUS", f"closeness radius {instance.closeness_radius} must be positive")
    if instance.horizon is not None and instance.horizon < instance.computed_horizon:
        bad("HORIZON_TOO_SMALL", f"horizon {instance.horizon} below computed bound "
            f"{instance.computed_horizon}")

    ph = instance.physics
    checks = (
        ("accel_max", ph.accel_max > 0),
        ("decel_max", ph.decel_max < 0),
        ("eta_elec_to_kin", 0 < ph.eta_elec_to_kin <= 1),
        ("eta_kin_to_regen", 0 < ph.eta_kin_to_regen <= 1),
        ("transmission_loss", 0 <= ph.transmission_loss < 1),
        ("train_mass", ph.train_mass > 0),
        ("davis_coeffs", len(ph.davis_coeffs) == 3 and min(ph.davis_coeffs) >= 0),
        ("speed_limit", ph.speed_limit > 0),
    )
    for name, ok in checks:
        if not ok:
            bad("BAD_PHYSICS", f"physics parameter {name} out of range", name)
    return out


# -- auditing -------------------------------------------------------------

@dataclass(frozen=True)
class AuditEntry:
    family: str
    key: tuple
    value: float
    slack: float


@dataclass
class AuditReport:
    violations: dict = field(default_factory=lambda: {f: [] for f in FAMILIES})
    checked: dict = field(default_factory=lambda: {f: 0 for f in FAMILIES})

    @property
    def feasible(self) -> bool:
        return not any(self.violations.values())

    def worst_slack(self) -> float:
        vals = [v.slack for vs in self.violations.values() for v in vs]
        return min(vals) if vals else 0.0

    def summary(self) -> str:
        return ", ".join(f"{f}: {len(self.violations[f])}/{self.checked[f]}" for f in FAMILIES)


def audit_timetable(instance: Instance, tt: Timetable, tol: float = 1e-6) -> AuditReport:
    """Check ``tt`` against every robustified constraint family.

    A constraint counts as violated when its slack is below ``-tol`` seconds.
    """
    rep = AuditReport()
    a, d = tt.a, tt.d

    def check(family, key, value, lo, hi):
        rep.checked[family] += 1
        slack = min(value - lo, hi - value)
        if slack < -tol:
            rep.violations[family].append(AuditEntry(family, key, value, slack))

    m = instance.m
    for t in instance.trains:
        for p in t.path_platforms:
            for kind, v in (("a", a(t.id, p)), ("d", d(t.id, p))):
                check("DOMAIN", (kind, t.id, p), v, 0.0, m)
            w = robustify(instance.dwell_windows[(t.id, p)])
            check("DWELL", (t.id, p), d(t.id, p) - a(t.id, p), w.lb, w.ub)
        for i, j in t.path_tracks:
            w = robustify(instance.trip_windows[(t.id, i, j)])
            check("TRACK", (t.id, i, j), a(t.id, j) - d(t.id, i), w.lb, w.ub)
        first, last = t.path_platforms[0], t.path_platforms[-1]
        check("TRAVEL", (t.id,), a(t.id, last) - d(t.id, first),
              t.travel_window.lb, t.travel_window.ub)
    for c, t, tp in instance.crossover_pairs():
        key = (c.from_, c.to, t, tp)
        w = robustify(instance.crossover_windows[key])
        check("CROSS", key, a(tp, c.to) - d(t, c.from_), w.lb, w.ub)
    for key, uw in instance.connections.items():
        i, j, t, tp = key
        w = robustify(uw)
        check("CONNECT", key, d(tp, j) - a(t, i), w.lb, w.ub)
    for h in instance.headways:
        check("HEADWAY", (h.from_, h.to, h.train, h.next_train, "from"),
              d(h.next_train, h.from_) - d(h.train, h.from_), h.h_from, math.inf)
        check("HEADWAY", (h.from_, h.to, h.train, h.next_train, "to"),
              d(h.next_train, h.to) - d(h.train, h.to), h.h_to, math.inf)
    return rep


def snap_to_milliseconds(tt: Timetable) -> Timetable:
    """Round every event to whole milliseconds without breaking difference constraints.

    All constraint families bound differences of two event times. When the
    window data are whole milliseconds, ``floor(x + theta)`` applied with one
    common ``theta`` keeps every such difference inside its window; ``theta``
    is placed in the widest gap of the fractional parts so values sitting a
    hair below a bound (solver noise) round the right way.
    """
    keys_a = list(tt.arrival)
    keys_d = list(tt.departure)
    x = np.array([tt.arrival[k] for k in keys_a] + [tt.departure[k] for k in keys_d]) * 1000.0
    # fractional part clustering near integers is the tolerance noise we are steering around
    frac = np.sort(np.mod(x, 1.0))
    gaps = np.diff(np.concatenate([frac, [frac[0] + 1.0]])) if frac.size else np.array([1.0])
    k = int(np.argmax(gaps))
    mid = frac[k] + 0.5 * gaps[k] if frac.size else 0.5
    theta = np.mod(1.0 - mid, 1.0)
    snapped = np.floor(x + theta) / 1000.0
    snapped = np.maximum(snapped, 0.0)
    n = len(keys_a)
    return Timetable(
        arrival={k: float(v) for k, v in zip(keys_a, snapped[:n])},
        departure={k: float(v) for k, v in zip(keys_d, snapped[n:])},
    )
