"""Shared fixtures-by-construction: Allen interval cases and hand-built instances."""
from fractions import Fraction as F

from energytt.fitting import AffineFit, FitBundle, PhaseFits
from energytt.network import (Instance, Platform, Timetable, TimeWindow, Track, Train,
                              UncertainWindow)
from energytt.pairing import SyncEvent
from energytt.scenario import generate_scenario

# accel block X = [x0, x1], brake block Y = [y0, y1]; expected value written per relation,
# not through the min/max formula: intersection length, 0 when touching, minus the gap when apart
ALLEN_CASES = {
    "before":        ((F(0), F(4)), (F(7), F(10)), -(F(7) - F(4))),
    "after":         ((F(7), F(10)), (F(0), F(4)), -(F(7) - F(4))),
    "meets":         ((F(0), F(5)), (F(5), F(9)), F(0)),
    "met_by":        ((F(5), F(9)), (F(0), F(5)), F(0)),
    "overlaps":      ((F(1), F(6)), (F(4), F(9)), F(6) - F(4)),
    "overlapped_by": ((F(4), F(9)), (F(1), F(6)), F(6) - F(4)),
    "starts":        ((F(2), F(5)), (F(2), F(9)), F(5) - F(2)),
    "started_by":    ((F(2), F(9)), (F(2), F(5)), F(5) - F(2)),
    "during":        ((F(3), F(5)), (F(1), F(9)), F(5) - F(3)),
    "contains":      ((F(1), F(9)), (F(3), F(5)), F(5) - F(3)),
    "finishes":      ((F(6), F(9)), (F(2), F(9)), F(9) - F(6)),
    "finished_by":   ((F(2), F(9)), (F(6), F(9)), F(9) - F(6)),
    "equal":         ((F(3, 2), F(17, 3)), (F(3, 2), F(17, 3)), F(17, 3) - F(3, 2)),
}

ALLEN_EVENTS = {
    "right": SyncEvent("S01_1", "S01_2", "T0000", "T0001", "right"),
    "left": SyncEvent("S01_1", "S01_2", "T0000", "T0001", "left"),
}
# (accel train, accel track, brake train, brake track) per direction
_ROLES = {
    "right": ("T0000", ("S01_1", "S02_1"), "T0001", ("S02_2", "S01_2")),
    "left": ("T0001", ("S01_2", "S00_2"), "T0000", ("S00_1", "S01_1")),
}
_TAU_A, _TAU_B, _SLOPE = F(95), F(101), F(1, 10)


def allen_setup(accel, brake, direction="right", d=F(1000), a=F(1003)):
    """Timetable and phase fits on the 2-train, 3-station scenario realizing the given blocks.

    The accelerating train departs its platform at ``d``, the braking train
    arrives at ``a``. Phase fits have nonzero slopes so the folding of trip
    times into the windows is exercised.
    """
    inst, base = generate_scenario(1, 2, 3)
    at, (ai, aj), bt, (bi, bj) = _ROLES[direction]

    def fit(value, tau):
        return AffineFit(_SLOPE, value - _SLOPE * tau)

    arr = {k: F(v).limit_denominator(10**6) for k, v in base.arrival.items()}
    dep = {k: F(v).limit_denominator(10**6) for k, v in base.departure.items()}
    dep[(at, ai)] = d
    arr[(at, aj)] = d + _TAU_A
    arr[(bt, bj)] = a
    dep[(bt, bi)] = a - _TAU_B
    fits = FitBundle()
    fits.phase[(at, ai, aj)] = PhaseFits(
        fit(accel[0] - d, _TAU_A), fit(accel[1] - d, _TAU_A), fit(F(0), _TAU_A), fit(F(0), _TAU_A))
    fits.phase[(bt, bi, bj)] = PhaseFits(
        fit(F(0), _TAU_B), fit(F(0), _TAU_B), fit(a - brake[0], _TAU_B), fit(a - brake[1], _TAU_B))
    return inst, Timetable(arr, dep), fits


def single_train_instance():
    """One train over one track between two platforms, windows chosen by hand."""
    platforms = (Platform("P1", "S1", "L"), Platform("P2", "S2", "L"))
    tracks = (Track("P1", "P2", 1000.0, 0.0),)
    train = Train.along("T", ["P1", "P2"], TimeWindow(50.0, 200.0))
    dwell = UncertainWindow((20.0, 22.0), (40.0, 42.0))       # robust (22, 40)
    trip = UncertainWindow((60.0, 62.0), (90.0, 95.0))        # robust (62, 90)
    inst = Instance(platforms, tracks, (), (train,),
                    dwell_windows={("T", "P1"): dwell, ("T", "P2"): dwell},
                    trip_windows={("T", "P1", "P2"): trip},
                    crossover_windows={}, connections={}, headways=(), regen_pairs=())
    fits = FitBundle(consumption_track={("T", "P1", "P2"): AffineFit(-0.5, 100.0)})
    return inst, fits


def grid_best_sse(x, y, step=1e-3):
    """Least SSE of ``y ~ s x + b`` over the grid ``s, b in {0, step, 2 step, ...}``.

    The box is sized from the closed-form candidates of the nonnegative problem
    (unconstrained, slope clipped, intercept clipped) so it always holds the optimum.
    """
    import numpy as np
    n, sx, sy, sxx, sxy, syy = x.size, x.sum(), y.sum(), x @ x, x @ y, y @ y
    ols = np.polyfit(x, y, 1)
    bound = max(1.0, *np.abs(ols), abs(sy / n), abs(sxy / sxx)) + 0.05
    s = np.arange(0, bound + step / 2, step)
    best = np.inf
    for chunk in np.array_split(s, max(1, s.size // 500)):
        S, B = np.meshgrid(chunk, s, indexing="ij")
        sse = syy - 2 * S * sxy - 2 * B * sy + S * S * sxx + 2 * S * B * sx + n * B * B
        best = min(best, float(sse.min()))
    return best
