"""LP solving with a recomputed optimality certificate.

Two backends are wired in: an interior point method (Clarabel, direct LDL
factorization) and dual simplex (HiGHS). Either way the returned objective is
recomputed from the primal point and the dual bound from the row duals.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import clarabel
import highspy
import numpy as np
import scipy.sparse as sp

from .errors import ModelError
from .lp import LinearProgram

TIME_SCALE = 100.0      # LP columns are solved in units of 100 s
STATUSES = ("optimal", "infeasible", "unbounded", "iteration_limit")
METHODS = ("ipm", "simplex")

_HIGHS_STATUS = {
    highspy.HighsModelStatus.kOptimal: "optimal",
    highspy.HighsModelStatus.kModelEmpty: "optimal",
    highspy.HighsModelStatus.kInfeasible: "infeasible",
    highspy.HighsModelStatus.kUnbounded: "unbounded",
    highspy.HighsModelStatus.kUnboundedOrInfeasible: "unbounded",
    highspy.HighsModelStatus.kIterationLimit: "iteration_limit",
    highspy.HighsModelStatus.kTimeLimit: "iteration_limit",
}

_CLARABEL_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "optimal",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
    "MaxIterations": "iteration_limit",
    "MaxTime": "iteration_limit",
}


@dataclass
class Solution:
    values: np.ndarray
    objective: float
    status: str
    iterations: int
    wall_time_s: float
    dual_objective: float = float("nan")
    gap: float = float("nan")             # |primal - dual| / max(1, |primal|)
    residual: float = float("nan")        # max primal infeasibility on scaled rows and columns
    method: str = ""
    warm_started: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def summary(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "residual": self.residual,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time_s,
            "method": self.method,
            "warm_started": self.warm_started,
        }


def check_well_formed(lp: LinearProgram) -> None:
    n = lp.n_vars
    if lp.A.shape[1] != n or lp.c.shape != (n,) or lp.col_lb.shape != (n,) or lp.col_ub.shape != (n,):
        raise ModelError("inconsistent LP dimensions")
    m = lp.A.shape[0]
    if lp.row_lo.shape != (m,) or lp.row_hi.shape != (m,) or len(lp.row_family) != m:
        raise ModelError("inconsistent row metadata")
    if not (np.all(np.isfinite(lp.c)) and np.all(np.isfinite(lp.A.data)) and np.isfinite(lp.offset)):
        raise ModelError("non-finite objective or matrix coefficient")
    for arr in (lp.row_lo, lp.row_hi, lp.col_lb, lp.col_ub):
        if np.any(np.isnan(arr)):
            raise ModelError("NaN bound")


@dataclass
class _Scaled:
    """The LP in units of ``scale`` seconds: x = scale * y."""

    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    col_lb: np.ndarray
    col_ub: np.ndarray

    @classmethod
    def of(cls, lp: LinearProgram, s: float) -> "_Scaled":
        return cls(lp.c * s, lp.A.tocsr(), lp.row_lo / s, lp.row_hi / s, lp.col_lb / s, lp.col_ub / s)

    def residual(self, y) -> float:
        ay = self.A @ y
        return max(
            float(np.maximum(self.row_lo - ay, 0).max(initial=0.0)),
            float(np.maximum(ay - self.row_hi, 0).max(initial=0.0)),
            float(np.maximum(self.col_lb - y, 0).max(initial=0.0)),
            float(np.maximum(y - self.col_ub, 0).max(initial=0.0)),
        )


def dual_bound(c, A, row_lo, row_hi, col_lb, col_ub, row_dual, offset=0.0):
    """Lagrangian dual value and dual infeasibility for row duals ``row_dual``.

    Sign convention: ``y > 0`` prices the lower row bound. Reduced costs are
    recomputed as ``c - A^T y``; each multiplier takes the bound its sign
    points to, and mass pointing at an infinite bound is dual infeasibility.
    """
    y = np.asarray(row_dual, dtype=float)
    z = c - A.T @ y
    val = offset
    infeas = 0.0
    for mult, lo, hi in ((y, row_lo, row_hi), (z, col_lb, col_ub)):
        pos = mult > 0
        neg = mult < 0
        lo_ok = pos & np.isfinite(lo)
        hi_ok = neg & np.isfinite(hi)
        val += float(mult[lo_ok] @ lo[lo_ok]) + float(mult[hi_ok] @ hi[hi_ok])
        bad = np.abs(mult[(pos & ~np.isfinite(lo)) | (neg & ~np.isfinite(hi))])
        infeas = max(infeas, float(bad.max(initial=0.0)))
    return val, infeas


# -- backends ----------------------------------------------------------------------

def _run_clarabel(P: _Scaled, tol: float, max_iters: int | None):
    """Returns (status, y, row_dual, iterations)."""
    n = P.c.size
    lo, hi = P.row_lo, P.row_hi
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    up = np.isfinite(hi) & ~eq
    dn = np.isfinite(lo) & ~eq
    cu, cl = np.isfinite(P.col_ub), np.isfinite(P.col_lb)
    eye = sp.identity(n, format="csr")
    A = sp.vstack([P.A[eq], P.A[up], -P.A[dn], eye[cu], -eye[cl]]).tocsc()
    b = np.concatenate([hi[eq], hi[up], -lo[dn], P.col_ub[cu], -P.col_lb[cl]])
    cones = []
    if eq.any():
        cones.append(clarabel.ZeroConeT(int(eq.sum())))
    if A.shape[0] > eq.sum():
        cones.append(clarabel.NonnegativeConeT(int(A.shape[0] - eq.sum())))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = tol
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    if max_iters is not None:
        settings.max_iter = int(max_iters)
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), P.c, A, b, cones, settings)
    out = solver.solve()
    status = _CLARABEL_STATUS.get(str(out.status).split(".")[-1])
    if status is None:
        raise ModelError(f"interior point solver ended with {out.status}")
    z = np.asarray(out.z, dtype=float)
    k = np.cumsum([0, eq.sum(), up.sum(), dn.sum()])
    y = np.zeros(P.A.shape[0])
    y[eq] = -z[k[0]:k[1]]
    y[up] -= z[k[1]:k[2]]
    y[dn] += z[k[2]:k[3]]
    return status, np.asarray(out.x, dtype=float), y, int(out.iterations)


def _run_highs(P: _Scaled, tol: float, max_iters: int | None, seed: int, warm=None):
    h = highspy.Highs()
    h.silent()
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", int(seed))
    h.setOptionValue("primal_feasibility_tolerance", tol)
    h.setOptionValue("dual_feasibility_tolerance", tol)
    h.setOptionValue("solver", "simplex")
    if max_iters is not None:
        h.setOptionValue("simplex_iteration_limit", int(max_iters))
    inf = highspy.kHighsInf
    model = highspy.HighsLp()
    model.num_col_ = P.c.size
    model.num_row_ = P.A.shape[0]
    model.col_cost_ = P.c
    model.col_lower_ = np.where(np.isfinite(P.col_lb), P.col_lb, -inf)
    model.col_upper_ = np.where(np.isfinite(P.col_ub), P.col_ub, inf)
    model.row_lower_ = np.where(np.isfinite(P.row_lo), P.row_lo, -inf)
    model.row_upper_ = np.where(np.isfinite(P.row_hi), P.row_hi, inf)
    csc = sp.csc_matrix(P.A)
    csc.sort_indices()
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = csc.indptr
    model.a_matrix_.index_ = csc.indices
    model.a_matrix_.value_ = csc.data
    if h.passModel(model) == highspy.HighsStatus.kError:
        raise ModelError("solver rejected the model")
    if warm is not None:
        start = highspy.HighsSolution()
        start.col_value = list(warm)
        start.value_valid = True
        h.setSolution(start)
    h.run()
    status = _HIGHS_STATUS.get(h.getModelStatus())
    if status is None:
        raise ModelError(f"simplex ended with {h.modelStatusToString(h.getModelStatus())}")
    sol = h.getSolution()
    iters = int(h.getInfo().simplex_iteration_count)
    return status, np.array(sol.col_value, dtype=float), np.array(sol.row_dual, dtype=float), iters


def solve(lp: LinearProgram, warm_start=None, tol: float = 1e-10, max_iters: int | None = None,
          seed: int = 0, method: str = "ipm", time_scale: float = TIME_SCALE) -> Solution:
    """Solve ``lp`` to optimality.

    ``warm_start`` is a full LP point (see ``lp.timetable_point``). Simplex
    receives it as a starting solution. The interior point backend has no
    initialization hook, so there it serves as a checked incumbent: if it is
    feasible and strictly better than the solver's point, it is returned.
    """
    check_well_formed(lp)
    if method not in METHODS:
        raise ModelError(f"unknown method {method!r}")
    s = float(time_scale)
    P = _Scaled.of(lp, s)
    w = None
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float)
        if w.shape != (lp.n_vars,) or not np.all(np.isfinite(w)):
            raise ModelError("warm start has wrong dimension or non-finite entries")
        w = w / s

    t0 = time.perf_counter()
    if method == "ipm":
        status, y, row_dual, iters = _run_clarabel(P, tol, max_iters)
    else:
        status, y, row_dual, iters = _run_highs(P, tol, max_iters, seed, w)
    if status == "optimal" and w is not None and P.residual(w) <= tol:
        if P.c @ w < P.c @ y - tol * max(1.0, abs(P.c @ y)):
            y = w
    wall = time.perf_counter() - t0

    if status != "optimal":
        return Solution(np.full(lp.n_vars, np.nan), float("nan"), status, iters, wall,
                        method=method, warm_started=w is not None)
    x = y * s
    objective = lp.objective_value(x)
    dual_obj, _ = dual_bound(P.c, P.A, P.row_lo, P.row_hi, P.col_lb, P.col_ub, row_dual, lp.offset)
    gap = abs(objective - dual_obj) / max(1.0, abs(objective))
    return Solution(x, objective, status, iters, wall, dual_obj, gap, P.residual(y),
                    method=method, warm_started=w is not None)
