"""Synthetic two-line metro scenarios with a feasible baseline timetable."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import minimum_trip_time
from .network import (DEFAULT_GRADE_RANGE, CrossOver, Headway, Instance, PhysicsParams, Platform,
                      Timetable, TimeWindow, Track, Train, UncertainWindow)

LENGTH_RANGE = (738.0, 2600.0)
LENGTH_MEAN = 1400.0


@dataclass(frozen=True)
class ScenarioParams:
    headway_target: float = 130.0        # baseline spacing of consecutive runs
    min_headway: float = 90.0
    dwell_nominal: tuple[float, float] = (34.0, 40.0)
    dwell_halfwidth: tuple[float, float] = (5.0, 7.5)
    trip_slack: tuple[float, float] = (6.0, 14.0)     # nominal trip time above the minimum
    trip_halfwidth: tuple[float, float] = (3.0, 5.0)
    uncertainty: float = 1.0                          # half-width of every bound interval
    crossover_nominal: float = 90.0
    crossover_halfwidth: float = 10.0
    crossover_length: float = 150.0
    start_jitter: float = 4.0         # absorbed by the turnaround windows
    travel_halfwidth: float = 20.0
    connection_every: int = 10
    connection_walk: float = 60.0
    connection_halfwidth: float = 20.0
    closeness_radius: float = 60.0
    length_range: tuple[float, float] = LENGTH_RANGE
    length_mean: float = LENGTH_MEAN
    grade_range: tuple[float, float] = DEFAULT_GRADE_RANGE
    physics: PhysicsParams = field(default_factory=PhysicsParams)


def platform_id(station: int, line: int) -> str:
    return f"S{station:02d}_{line}"


def sample_lengths(rng: np.random.Generator, n: int, lo: float, hi: float, mean: float) -> np.ndarray:
    """Beta-distributed lengths in ``[lo, hi]`` shifted to the target mean.

    With three or more tracks the extremes are pinned to ``lo`` and ``hi``.
    """
    p = (mean - lo) / (hi - lo)
    x = lo + (hi - lo) * rng.beta(2.0, 2.0 * (1.0 - p) / p, size=n)
    if n >= 3:
        order = np.argsort(x)
        x[order[0]], x[order[-1]] = lo, hi
        inner = order[1:-1]
        for _ in range(50):
            x[inner] = np.clip(x[inner] + (mean * n - x.sum()) / inner.size, lo, hi)
    else:
        for _ in range(50):
            x = np.clip(x + mean - x.mean(), lo, hi)
    return np.round(x, 1)


def _uncertain(lb: float, ub: float, u: float) -> UncertainWindow:
    return UncertainWindow((lb - u, lb + u), (ub - u, ub + u))


def generate_scenario(seed: int = 1, n_trains: int = 1000, n_stations: int = 14,
                      params: ScenarioParams | None = None) -> tuple[Instance, Timetable]:
    """Two opposite lines over ``n_stations`` stations, operated as a shuttle fleet.

    Line 1 runs ``S00 -> S{n-1}`` and line 2 runs back. A run ending at a
    terminus turns around over a crossing-over and starts the next run under a
    new train label. The baseline places every duration at its window midpoint.
    """
    if n_trains < 2 or n_stations < 2:
        raise ValueError("need at least 2 trains and 2 stations")
    P = params or ScenarioParams()
    rng = np.random.default_rng(seed)
    N = n_stations
    ph = P.physics

    platforms = tuple(Platform(platform_id(s, ln), f"S{s:02d}", f"L{ln}")
                      for s in range(N) for ln in (1, 2))
    lengths = sample_lengths(rng, N - 1, *P.length_range, P.length_mean)
    g_lo, g_hi = P.grade_range
    grades = np.round(rng.uniform(g_lo, g_hi, size=N - 1), 5)
    tracks = []
    for s in range(N - 1):
        tracks.append(Track(platform_id(s, 1), platform_id(s + 1, 1), float(lengths[s]), float(grades[s])))
    for s in range(N - 1):
        tracks.append(Track(platform_id(s + 1, 2), platform_id(s, 2), float(lengths[s]), float(-grades[s])))
    track_map = {t.key: t for t in tracks}

    path1 = tuple(platform_id(s, 1) for s in range(N))
    path2 = tuple(platform_id(s, 2) for s in reversed(range(N)))
    paths = {1: path1, 2: path2}
    dwell_nom = {p.id: float(np.round(rng.uniform(*P.dwell_nominal), 1)) for p in platforms}
    trip_nom = {}
    for key, tr in track_map.items():
        trip_nom[key] = float(math.ceil(minimum_trip_time(tr, ph)) + np.round(rng.uniform(*P.trip_slack), 1))

    def run_duration(path):
        return sum(dwell_nom[p] for p in path) + sum(trip_nom[(a, b)] for a, b in zip(path, path[1:]))

    D = {1: run_duration(path1), 2: run_duration(path2)}
    kappa = P.crossover_nominal
    cycle = D[1] + D[2] + 2 * kappa
    fleet = max(1, round(cycle / P.headway_target))
    H = cycle / fleet
    n1, n2 = (n_trains + 1) // 2, n_trains // 2

    # run starts (arrival at the first platform), then labels in start order
    jit = min(P.start_jitter, 0.5 * (P.crossover_halfwidth - P.uncertainty))
    starts = {(1, k): k * H + float(np.round(rng.uniform(-jit, jit), 1)) for k in range(n1)}
    starts.update({(2, k): k * H + D[1] + kappa + float(np.round(rng.uniform(-jit, jit), 1))
                   for k in range(n2)})
    runs = sorted(starts, key=lambda r: (starts[r], r))
    label = {r: f"T{n:04d}" for n, r in enumerate(runs)}

    trains, dwell_w, trip_w = [], {}, {}
    arr, dep = {}, {}
    for r in runs:
        line, _ = r
        path = paths[line]
        tid = label[r]
        t = starts[r]
        for n, p in enumerate(path):
            arr[(tid, p)] = t
            hw = float(np.round(rng.uniform(*P.dwell_halfwidth), 1))
            dwell_w[(tid, p)] = _uncertain(dwell_nom[p] - hw, dwell_nom[p] + hw, P.uncertainty)
            t += dwell_nom[p]
            dep[(tid, p)] = t
            if n + 1 < len(path):
                arc = (p, path[n + 1])
                hw = float(np.round(rng.uniform(*P.trip_halfwidth), 1))
                trip_w[(tid,) + arc] = _uncertain(trip_nom[arc] - hw, trip_nom[arc] + hw, P.uncertainty)
                t += trip_nom[arc]
        span = arr[(tid, path[-1])] - dep[(tid, path[0])]
        trains.append(Train.along(tid, path, TimeWindow(span - P.travel_halfwidth, span + P.travel_halfwidth)))

    # turnarounds: line-1 run k -> line-2 run k, line-2 run k -> line-1 run k + fleet
    kw = (kappa - P.crossover_halfwidth, kappa + P.crossover_halfwidth)
    east = [(label[(1, k)], label[(2, k)]) for k in range(n2)]
    west = [(label[(2, k)], label[(1, k + fleet)]) for k in range(n2) if k + fleet < n1]
    crossovers, cross_w = [], {}
    for (i, j), pairs in (((path1[-1], path2[0]), east), ((path2[-1], path1[0]), west)):
        crossovers.append(CrossOver(i, j, tuple(pairs), P.crossover_length))
        for t, tp in pairs:
            cross_w[(i, j, t, tp)] = _uncertain(*kw, P.uncertainty)

    headways = []
    for key in track_map:
        users = sorted((dep[(tr.id, key[0])], tr.id) for tr in trains if key in tr.path_tracks)
        for (_, t), (_, tn) in zip(users, users[1:]):
            headways.append(Headway(key[0], key[1], t, tn, P.min_headway, P.min_headway))

    # transfers at the middle station from line 1 to the next reachable line-2 departure
    connections = {}
    c = N // 2
    i, j = platform_id(c, 1), platform_id(c, 2)
    line2 = sorted((dep[(label[(2, k)], j)], label[(2, k)]) for k in range(n2))
    dep_times = [d for d, _ in line2]
    for k in range(0, n1, max(1, P.connection_every)):
        t = label[(1, k)]
        target = arr[(t, i)] + P.connection_walk
        pos = int(np.searchsorted(dep_times, target))
        if pos >= len(line2):
            continue
        tp = line2[pos][1]
        base = dep[(tp, j)] - arr[(t, i)]
        connections[(i, j, t, tp)] = _uncertain(base - P.connection_halfwidth,
                                                base + P.connection_halfwidth, P.uncertainty)

    regen_pairs = tuple((platform_id(s, 1), platform_id(s, 2)) for s in range(N))
    inst = Instance(
        platforms=platforms, tracks=tuple(tracks), crossovers=tuple(crossovers),
        trains=tuple(trains), dwell_windows=dwell_w, trip_windows=trip_w,
        crossover_windows=cross_w, connections=connections, headways=tuple(headways),
        regen_pairs=regen_pairs, physics=ph, closeness_radius=P.closeness_radius,
        grade_range=P.grade_range,
    )
    return inst, Timetable(arr, dep)


def with_physics(params: ScenarioParams, **physics) -> ScenarioParams:
    return replace(params, physics=replace(params.physics, **physics))
