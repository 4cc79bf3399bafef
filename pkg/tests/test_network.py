import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energytt.errors import EmptyRobustWindow, MissingEvent
from energytt.network import (Headway, Timetable, TimeWindow, UncertainWindow, audit_timetable,
                              compute_horizon, robustify, snap_to_milliseconds, validate_instance)


def test_robustify_examples():
    assert robustify(UncertainWindow((28, 30), (34, 36))) == TimeWindow(30, 34)
    assert robustify(UncertainWindow((30, 30), (34, 34))) == TimeWindow(30, 34)
    with pytest.raises(EmptyRobustWindow) as e:
        robustify(UncertainWindow((28, 35), (34, 36)))
    assert e.value.code == "EMPTY_ROBUST_WINDOW"


windows = st.tuples(*[st.floats(-500, 500, allow_nan=False) for _ in range(4)]).map(
    lambda v: UncertainWindow(tuple(sorted(v[:2])), tuple(sorted(v[2:]))))


@settings(max_examples=300, deadline=None)
@given(windows)
def test_robustify_rejects_exactly_the_empty_windows(w):
    if w.lb_interval[1] > w.ub_interval[0]:
        with pytest.raises(EmptyRobustWindow):
            robustify(w)
    else:
        r = robustify(w)
        assert (r.lb, r.ub) == (w.lb_interval[1], w.ub_interval[0])


@settings(max_examples=100, deadline=None)
@given(windows, st.integers(0, 2**31 - 1))
def test_robust_feasible_means_feasible_for_all_realizations(w, seed):
    if w.is_empty:
        return
    r = robustify(w)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(r.lb, r.ub, size=20)
    for _ in range(100):
        lo = rng.uniform(*w.lb_interval)
        hi = rng.uniform(*w.ub_interval)
        assert np.all((lo <= xs) & (xs <= hi))


def test_generated_instance_validates_and_baseline_audits(small_case):
    inst = small_case.instance
    assert validate_instance(inst) == []
    rep = audit_timetable(inst, small_case.baseline)
    assert rep.feasible, rep.summary()
    assert all(rep.checked[f] > 0 for f in ("TRACK", "CROSS", "DWELL", "HEADWAY", "TRAVEL", "DOMAIN"))


def test_validation_reports_codes(small_case):
    inst = small_case.instance
    t0 = inst.trains[0]
    key = (t0.id, t0.path_platforms[0])
    bad_dwell = dict(inst.dwell_windows)
    bad_dwell[key] = UncertainWindow((30, 50), (40, 45))
    codes = {v.code for v in validate_instance(replace(inst, dwell_windows=bad_dwell))}
    assert "EMPTY_ROBUST_WINDOW" in codes

    missing = dict(inst.trip_windows)
    missing.pop(next(iter(missing)))
    codes = {v.code for v in validate_instance(replace(inst, trip_windows=missing))}
    assert codes == {"MISSING_WINDOW"}

    h = inst.headways[0]
    selfpair = replace(inst, headways=(Headway(h.from_, h.to, h.train, h.train, 90, 90),))
    assert "HEADWAY_SELF_PAIR" in {v.code for v in validate_instance(selfpair)}

    rev = replace(inst, regen_pairs=tuple((j, i) for i, j in inst.regen_pairs))
    assert "OMEGA_NOT_LEX" in {v.code for v in validate_instance(rev)}

    assert "HORIZON_TOO_SMALL" in {v.code for v in validate_instance(replace(inst, horizon=10.0))}


def test_horizon_is_serial_upper_bound(small_case):
    inst, base = small_case.instance, small_case.baseline
    m = compute_horizon(inst)
    assert m == math.ceil(m)
    assert max(max(base.arrival.values()), max(base.departure.values())) <= m


def test_audit_flags_each_family(small_case):
    inst, base = small_case.instance, small_case.baseline
    t = inst.trains[3]
    p0, p1 = t.path_platforms[:2]
    dep = dict(base.departure)
    dep[(t.id, p0)] += 30.0         # dwell too long, trip too short
    rep = audit_timetable(inst, Timetable(base.arrival, dep))
    assert rep.violations["DWELL"] and rep.violations["TRACK"]
    assert not rep.feasible
    arr = {k: v - 1e9 for k, v in base.arrival.items()}
    assert audit_timetable(inst, Timetable(arr, base.departure)).violations["DOMAIN"]


def test_timetable_missing_event_raises():
    tt = Timetable({}, {})
    with pytest.raises(MissingEvent) as e:
        tt.a("T1", "P")
    assert e.value.key == ("T1", "P")


def test_snap_to_milliseconds_keeps_feasibility(small_case):
    inst, base = small_case.instance, small_case.baseline
    rng = np.random.default_rng(0)
    shift = rng.uniform(0, 1e-3)
    noisy = Timetable({k: v + shift for k, v in base.arrival.items()},
                      {k: v + shift for k, v in base.departure.items()})
    snapped = snap_to_milliseconds(noisy)
    vals = np.array(list(snapped.arrival.values()) + list(snapped.departure.values()))
    assert np.allclose(vals * 1000, np.round(vals * 1000), atol=1e-6)
    assert audit_timetable(inst, snapped).feasible


def test_audit_agrees_with_lp_rows_on_100_instances():
    from energytt.fitting import AffineFit, FitBundle
    from energytt.lp import build_lp, point_from_timetable
    from energytt.scenario import generate_scenario

    rng = np.random.default_rng(100)
    seen = set()
    for k in range(100):
        inst, base = generate_scenario(2000 + k, int(rng.integers(2, 21)), int(rng.integers(2, 7)))
        zero = AffineFit(0.0, 0.0)
        fits = FitBundle({(t.id, i, j): zero for t in inst.trains for i, j in t.path_tracks},
                         {(c.from_, c.to, t, tp): zero for c, t, tp in inst.crossover_pairs()})
        lp = build_lp(inst, fits)
        scale = [0.0, 0.3, 4.0][k % 3]
        tt = Timetable({key: v + rng.normal(0, scale) for key, v in base.arrival.items()},
                       {key: v + rng.normal(0, scale) for key, v in base.departure.items()})
        audit_ok = audit_timetable(inst, tt).feasible
        assert audit_ok == (lp.max_violation(point_from_timetable(lp, tt)) <= 1e-6)
        seen.add(audit_ok)
    assert seen == {True, False}
