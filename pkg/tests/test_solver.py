import numpy as np
import pytest
import scipy.sparse as sp

from energytt.errors import ModelError
from energytt.lp import LinearProgram, VarRef, extract_timetable, sigma_values, evaluate_sigma
from energytt.network import audit_timetable
from energytt.solver import dual_bound, solve


def tiny_lp(lo=1.0, hi=3.0):
    """minimize x - y  s.t.  lo <= x - y <= hi,  0 <= x, y <= 10"""
    refs = [VarRef("arrival", ("T", "x"), 0), VarRef("departure", ("T", "y"), 1)]
    return LinearProgram(refs, np.array([1.0, -1.0]), 0.0, sp.csr_matrix([[1.0, -1.0]]),
                         np.array([lo]), np.array([hi]), np.array(["DWELL"]), [("T", "x")],
                         np.zeros(2), np.full(2, 10.0),
                         index={(r.kind, r.key): r.index for r in refs})


@pytest.mark.parametrize("method", ["ipm", "simplex"])
def test_tiny_lp(method):
    sol = solve(tiny_lp(), method=method)
    assert sol.optimal
    assert sol.objective == pytest.approx(1.0, abs=1e-8)
    x = sol.values
    assert x[0] - x[1] == pytest.approx(1.0, abs=1e-8)
    assert sol.gap <= 1e-6 and sol.residual <= 1e-6


def test_dual_bound_by_hand():
    lp = tiny_lp()
    # the lower row bound is active with multiplier 1; reduced costs vanish
    val, infeas = dual_bound(lp.c, lp.A, lp.row_lo, lp.row_hi, lp.col_lb, lp.col_ub, np.array([1.0]))
    assert (val, infeas) == (1.0, 0.0)
    # a wrong-sign multiplier gives a weaker (lower) bound, never a higher one
    val, _ = dual_bound(lp.c, lp.A, lp.row_lo, lp.row_hi, lp.col_lb, lp.col_ub, np.array([0.5]))
    assert val <= 1.0


@pytest.mark.parametrize("method", ["ipm", "simplex"])
def test_contradictory_range_is_infeasible(method):
    sol = solve(tiny_lp(lo=4.0, hi=3.0), method=method)
    assert sol.status == "infeasible" and not sol.optimal


def test_forced_empty_dwell_window_is_infeasible(small_case):
    lp = small_case.lp
    row = int(np.flatnonzero(lp.row_family == "DWELL")[0])
    lo, hi = lp.row_lo.copy(), lp.row_hi.copy()
    lo[row], hi[row] = hi[row] + 1.0, lo[row]
    bad = LinearProgram(lp.var_refs, lp.c, lp.offset, lp.A, lo, hi, lp.row_family, lp.row_keys,
                        lp.col_lb, lp.col_ub, lp.index)
    assert solve(bad).status == "infeasible"


def test_malformed_input_raises():
    lp = tiny_lp()
    lp.c = np.array([1.0, np.nan])
    with pytest.raises(ModelError):
        solve(lp)
    lp = tiny_lp()
    lp.row_lo = np.array([1.0, 2.0])
    with pytest.raises(ModelError):
        solve(lp)
    with pytest.raises(ModelError):
        solve(tiny_lp(), method="barrier")
    with pytest.raises(ModelError):
        solve(tiny_lp(), warm_start=np.zeros(3))


@pytest.mark.parametrize("method", ["ipm", "simplex"])
def test_generated_lp_solves_with_certificate(small_case, method):
    sol = solve(small_case.lp, method=method)
    assert sol.optimal
    assert sol.gap <= 1e-6
    assert small_case.lp.max_violation(sol.values) <= 1e-6 * 100
    assert sol.objective == pytest.approx(small_case.lp.objective_value(sol.values), rel=1e-12)
    tt = extract_timetable(small_case.lp, sol.values)
    assert audit_timetable(small_case.instance, tt).feasible


def test_methods_agree(small_case):
    a = solve(small_case.lp, method="ipm")
    b = solve(small_case.lp, method="simplex")
    assert a.objective == pytest.approx(b.objective, rel=1e-6)


@pytest.mark.parametrize("method", ["ipm", "simplex"])
def test_deterministic(small_case, method):
    objs = {solve(small_case.lp, seed=3, method=method).objective for _ in range(3)}
    assert max(objs) - min(objs) <= 1e-9 * max(1.0, abs(max(objs)))


def test_optimal_sigma_is_tight(small_case):
    sol = solve(small_case.lp)
    tt = extract_timetable(small_case.lp, sol.values)
    sig = sigma_values(small_case.lp, sol.values)
    for ev in small_case.flat:
        assert sig[ev] == pytest.approx(evaluate_sigma(small_case.instance, tt, small_case.fits, ev), abs=1e-5)


@pytest.mark.parametrize("seed", range(20))
def test_warm_start_matches_cold(make_case, seed):
    case = make_case(500 + seed, 20 + seed, 4 + seed % 4)
    for method in ("ipm", "simplex"):
        cold = solve(case.lp, method=method)
        warm = solve(case.lp, warm_start=case.x0, method=method)
        assert cold.optimal and warm.optimal and warm.warm_started
        assert warm.objective == pytest.approx(cold.objective, rel=1e-6)
        assert warm.objective <= case.lp.objective_value(case.x0) + 1e-6


def test_iteration_limit_reported(medium_case):
    sol = solve(medium_case.lp, max_iters=2)
    assert sol.status == "iteration_limit" and not sol.optimal
