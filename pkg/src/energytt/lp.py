"""Assembly of the single-stage timetable LP.

Variables are event times ``a``/``d`` and, per synchronization event, the
overlap ``sigma`` with its two hypograph parts ``varpi`` and ``varphi``.
Effective phase boundaries are affine in trip times, so they are folded into
the coefficients of the hypograph rows instead of becoming variables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MissingEvent, MissingFit
from .fitting import FitBundle
from .network import Instance, Timetable, robustify
from .pairing import RIGHT, EventRoles, SyncEvent, event_roles

ROW_FAMILIES = ("TRACK", "CROSS", "DWELL", "CONNECT", "HEADWAY", "TRAVEL", "HYPO_R", "HYPO_L")
VAR_KINDS = ("arrival", "departure", "sigma", "varpi", "varphi")


@dataclass(frozen=True)
class VarRef:
    kind: str
    key: tuple
    index: int

    @property
    def name(self) -> str:
        key = self.key.key + (self.key.direction,) if isinstance(self.key, SyncEvent) else self.key
        return "|".join((self.kind,) + tuple(key))


@dataclass
class LinearProgram:
    """``min c.x + offset`` subject to ``row_lo <= A x <= row_hi`` and ``col_lb <= x <= col_ub``."""

    var_refs: list
    c: np.ndarray
    offset: float
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    row_family: np.ndarray
    row_keys: list
    col_lb: np.ndarray
    col_ub: np.ndarray
    index: dict = field(default_factory=dict)     # (kind, key) -> column

    @property
    def n_vars(self) -> int:
        return len(self.var_refs)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_domain_bounds(self) -> int:
        return int(np.isfinite(self.col_lb).sum() + np.isfinite(self.col_ub).sum())

    @property
    def n_constraints(self) -> int:
        """Rows plus finite variable bounds (the DOMAIN family)."""
        return self.n_rows + self.n_domain_bounds

    def family_counts(self) -> dict[str, int]:
        fams, counts = np.unique(self.row_family, return_counts=True)
        out = {f: 0 for f in ROW_FAMILIES}
        out.update({str(f): int(n) for f, n in zip(fams, counts)})
        out["DOMAIN"] = self.n_domain_bounds
        return out

    def col(self, kind: str, key) -> int:
        return self.index[(kind, key)]

    def row_names(self) -> list[str]:
        return ["|".join((str(f),) + tuple(str(k) for k in key))
                for f, key in zip(self.row_family, self.row_keys)]

    def objective_value(self, x) -> float:
        return float(self.c @ x + self.offset)

    def row_activity(self, x) -> np.ndarray:
        return self.A @ x

    def violations(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Per-row and per-column infeasibility (zero when satisfied)."""
        ax = self.row_activity(x)
        rows = np.maximum(self.row_lo - ax, 0.0) + np.maximum(ax - self.row_hi, 0.0)
        cols = np.maximum(self.col_lb - x, 0.0) + np.maximum(x - self.col_ub, 0.0)
        return rows, cols

    def max_violation(self, x) -> float:
        rows, cols = self.violations(x)
        return float(max(rows.max(initial=0.0), cols.max(initial=0.0)))


# -- overlap evaluation ----------------------------------------------------------

def _roles(instance: Instance, ev: SyncEvent) -> EventRoles:
    if (ev.i, ev.j) not in set(instance.regen_pairs):
        raise MissingEvent(f"event {ev} uses platform pair outside the regen set", key=ev)
    if ev.t not in instance.train_map or ev.partner not in instance.train_map:
        raise MissingEvent(f"event {ev} names an unknown train", key=ev)
    roles = event_roles(instance, ev)
    if roles is None:
        raise MissingEvent(f"event {ev} has no accelerating/braking phase pair", key=ev)
    return roles


def _phase(fits: FitBundle, train: str, arc):
    key = (train,) + tuple(arc)
    try:
        return fits.phase[key]
    except KeyError:
        raise MissingFit(f"no phase fits for {key}", key=key) from None


def overlap_time(accel_start, accel_end, brake_start, brake_end):
    """Signed overlap of two blocks: intersection length, or minus the gap."""
    return min(brake_end, accel_end) + min(-accel_start, -brake_start)


def effective_windows(instance: Instance, tt: Timetable, fits: FitBundle, ev: SyncEvent):
    """Accelerating and braking windows of the event under timetable ``tt``."""
    r = _roles(instance, ev)
    pa = _phase(fits, r.accel_train, r.accel_track)
    pb = _phase(fits, r.brake_train, r.brake_track)
    d = tt.d(r.accel_train, r.accel_platform)
    a = tt.a(r.brake_train, r.brake_platform)
    tau_a = tt.a(r.accel_train, r.accel_track[1]) - tt.d(r.accel_train, r.accel_track[0])
    tau_b = tt.a(r.brake_train, r.brake_track[1]) - tt.d(r.brake_train, r.brake_track[0])
    accel = (d + pa.alpha_start(tau_a), d + pa.alpha_end(tau_a))
    brake = (a - pb.beta_start(tau_b), a - pb.beta_end(tau_b))
    return accel, brake


def evaluate_sigma(instance: Instance, tt: Timetable, fits: FitBundle, ev: SyncEvent):
    """Overlap time of the event's effective accelerating and braking windows."""
    (a0, a1), (b0, b1) = effective_windows(instance, tt, fits, ev)
    return overlap_time(a0, a1, b0, b1)


# -- model assembly -------------------------------------------------------------

class _Rows:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []
        self.lo, self.hi, self.family, self.keys = [], [], [], []

    def add(self, family, key, terms, lo, hi):
        r = len(self.lo)
        merged: dict[int, float] = {}
        for col, val in terms:
            merged[col] = merged.get(col, 0.0) + val
        for col, val in merged.items():
            if val != 0.0:
                self.rows.append(r)
                self.cols.append(col)
                self.vals.append(val)
        self.lo.append(lo)
        self.hi.append(hi)
        self.family.append(family)
        self.keys.append(key)


def build_lp(instance: Instance, fits: FitBundle, events=((), ())) -> LinearProgram:
    """Assemble the timetable LP.

    ``events`` is the ``(right, left)`` pair returned by ``build_sync_events``.
    """
    right, left = events
    refs: list[VarRef] = []
    index: dict = {}

    def new_var(kind, key):
        idx = len(refs)
        refs.append(VarRef(kind, key, idx))
        index[(kind, key)] = idx
        return idx

    for t in instance.trains:
        for p in t.path_platforms:
            new_var("arrival", (t.id, p))
            new_var("departure", (t.id, p))
    n_time = len(refs)
    all_events = list(right) + list(left)
    for ev in all_events:
        for kind in ("sigma", "varpi", "varphi"):
            new_var(kind, ev)

    def A(t, p):
        try:
            return index[("arrival", (t, p))]
        except KeyError:
            raise MissingEvent(f"train {t!r} does not visit {p!r}", key=(t, p)) from None

    def D(t, p):
        try:
            return index[("departure", (t, p))]
        except KeyError:
            raise MissingEvent(f"train {t!r} does not visit {p!r}", key=(t, p)) from None

    n = len(refs)
    c = np.zeros(n)
    offset = 0.0
    rows = _Rows()
    inf = math.inf

    # TRACK, with consumption terms
    for t in instance.trains:
        for i, j in t.path_tracks:
            w = robustify(instance.trip_windows[(t.id, i, j)])
            rows.add("TRACK", (t.id, i, j), [(A(t.id, j), 1.0), (D(t.id, i), -1.0)], w.lb, w.ub)
            f = fits.consumption_track.get((t.id, i, j))
            if f is None:
                raise MissingFit(f"no consumption fit for {(t.id, i, j)}", key=(t.id, i, j))
            c[A(t.id, j)] += f.slope
            c[D(t.id, i)] -= f.slope
            offset += f.intercept
    # CROSS
    for co, t, tp in instance.crossover_pairs():
        key = (co.from_, co.to, t, tp)
        w = robustify(instance.crossover_windows[key])
        rows.add("CROSS", key, [(A(tp, co.to), 1.0), (D(t, co.from_), -1.0)], w.lb, w.ub)
        f = fits.consumption_crossover.get(key)
        if f is None:
            raise MissingFit(f"no crossover consumption fit for {key}", key=key)
        c[A(tp, co.to)] += f.slope
        c[D(t, co.from_)] -= f.slope
        offset += f.intercept
    # DWELL
    for t in instance.trains:
        for p in t.path_platforms:
            w = robustify(instance.dwell_windows[(t.id, p)])
            rows.add("DWELL", (t.id, p), [(D(t.id, p), 1.0), (A(t.id, p), -1.0)], w.lb, w.ub)
    # CONNECT
    for key, uw in instance.connections.items():
        i, j, t, tp = key
        w = robustify(uw)
        rows.add("CONNECT", key, [(D(tp, j), 1.0), (A(t, i), -1.0)], w.lb, w.ub)
    # HEADWAY (departures only)
    for h in instance.headways:
        base = (h.from_, h.to, h.train, h.next_train)
        rows.add("HEADWAY", base + ("from",),
                 [(D(h.next_train, h.from_), 1.0), (D(h.train, h.from_), -1.0)], h.h_from, inf)
        rows.add("HEADWAY", base + ("to",),
                 [(D(h.next_train, h.to), 1.0), (D(h.train, h.to), -1.0)], h.h_to, inf)
    # TRAVEL
    for t in instance.trains:
        first, last = t.path_platforms[0], t.path_platforms[-1]
        rows.add("TRAVEL", (t.id,), [(A(t.id, last), 1.0), (D(t.id, first), -1.0)],
                 t.travel_window.lb, t.travel_window.ub)

    # hypograph rows: sigma <= varpi + varphi, varpi <= both "end" pieces, varphi <= both "start" pieces
    for family, evs in (("HYPO_R", right), ("HYPO_L", left)):
        for ev in evs:
            r = _roles(instance, ev)
            reg = fits.regen.get(ev)
            if reg is None:
                raise MissingFit(f"no regeneration fit for {ev}", key=ev)
            s, vp, vf = index[("sigma", ev)], index[("varpi", ev)], index[("varphi", ev)]
            c[s] -= reg.slope
            offset -= reg.intercept
            pa = _phase(fits, r.accel_train, r.accel_track)
            pb = _phase(fits, r.brake_train, r.brake_track)
            d = D(r.accel_train, r.accel_platform)
            a = A(r.brake_train, r.brake_platform)
            # accel trip time = a[accel_train, next] - d[accel_train, here]
            ta_hi, ta_lo = A(r.accel_train, r.accel_track[1]), D(r.accel_train, r.accel_track[0])
            tb_hi, tb_lo = A(r.brake_train, r.brake_track[1]), D(r.brake_train, r.brake_track[0])
            key = ev.key
            rows.add(family, key + ("sigma",), [(s, 1.0), (vp, -1.0), (vf, -1.0)], -inf, 0.0)
            # varpi <= a - beta_end(tau_b)
            f = pb.beta_end
            rows.add(family, key + ("varpi_brake",),
                     [(vp, 1.0), (a, -1.0), (tb_hi, f.slope), (tb_lo, -f.slope)], -inf, -f.intercept)
            # varpi <= d + alpha_end(tau_a)
            f = pa.alpha_end
            rows.add(family, key + ("varpi_accel",),
                     [(vp, 1.0), (d, -1.0), (ta_hi, -f.slope), (ta_lo, f.slope)], -inf, f.intercept)
            # varphi <= -d - alpha_start(tau_a)
            f = pa.alpha_start
            rows.add(family, key + ("varphi_accel",),
                     [(vf, 1.0), (d, 1.0), (ta_hi, f.slope), (ta_lo, -f.slope)], -inf, -f.intercept)
            # varphi <= -a + beta_start(tau_b)
            f = pb.beta_start
            rows.add(family, key + ("varphi_brake",),
                     [(vf, 1.0), (a, 1.0), (tb_hi, -f.slope), (tb_lo, f.slope)], -inf, f.intercept)

    mat = sp.csr_matrix((rows.vals, (rows.rows, rows.cols)), shape=(len(rows.lo), n))
    col_lb = np.full(n, -inf)
    col_ub = np.full(n, inf)
    col_lb[:n_time] = 0.0
    col_ub[:n_time] = instance.m
    return LinearProgram(
        var_refs=refs, c=c, offset=float(offset), A=mat,
        row_lo=np.array(rows.lo, dtype=float), row_hi=np.array(rows.hi, dtype=float),
        row_family=np.array(rows.family), row_keys=rows.keys,
        col_lb=col_lb, col_ub=col_ub, index=index,
    )


# -- moving between timetables and LP points ------------------------------------------

def timetable_point(lp: LinearProgram, instance: Instance, tt: Timetable,
                    fits: FitBundle) -> np.ndarray:
    """LP point for ``tt``: event times copied, overlap variables at their tight values."""
    x = np.zeros(lp.n_vars)
    for ref in lp.var_refs:
        if ref.kind == "arrival":
            x[ref.index] = tt.a(*ref.key)
        elif ref.kind == "departure":
            x[ref.index] = tt.d(*ref.key)
    for ref in lp.var_refs:
        if ref.kind == "sigma":
            ev = ref.key
            (a0, a1), (b0, b1) = effective_windows(instance, tt, fits, ev)
            x[lp.col("varpi", ev)] = min(b1, a1)
            x[lp.col("varphi", ev)] = min(-a0, -b0)
            x[ref.index] = min(b1, a1) + min(-a0, -b0)
    return x


def extract_timetable(lp: LinearProgram, x) -> Timetable:
    arr, dep = {}, {}
    for ref in lp.var_refs:
        if ref.kind == "arrival":
            arr[ref.key] = float(x[ref.index])
        elif ref.kind == "departure":
            dep[ref.key] = float(x[ref.index])
    return Timetable(arr, dep)


def sigma_values(lp: LinearProgram, x) -> dict:
    return {ref.key: float(x[ref.index]) for ref in lp.var_refs if ref.kind == "sigma"}


def complete_overlaps(lp: LinearProgram, x) -> np.ndarray:
    """Set ``varpi``, ``varphi`` and ``sigma`` to the tight values their hypograph rows allow.

    Works from the rows alone (``a``/``d`` entries of ``x`` are taken as
    given), so it also applies to a model read back from an interchange file.
    """
    x = np.array(x, dtype=float)
    aux = np.array([r.kind in ("sigma", "varpi", "varphi") for r in lp.var_refs])
    x[aux] = 0.0
    act = lp.A @ x
    cap: dict = {}
    for r, (fam, key) in enumerate(zip(lp.row_family, lp.row_keys)):
        if fam not in ("HYPO_R", "HYPO_L"):
            continue
        piece = key[-1]
        if piece == "sigma":
            continue
        direction = RIGHT if fam == "HYPO_R" else "left"
        ev = SyncEvent(*key[:-1], direction)
        kind = "varpi" if piece.startswith("varpi") else "varphi"
        val = lp.row_hi[r] - act[r]
        col = lp.col(kind, ev)
        cap[col] = min(cap.get(col, math.inf), val / lp.A[r, col])
    for col, val in cap.items():
        x[col] = val
    for ref in lp.var_refs:
        if ref.kind == "sigma":
            x[ref.index] = x[lp.col("varpi", ref.key)] + x[lp.col("varphi", ref.key)]
    return x


def point_from_timetable(lp: LinearProgram, tt: Timetable) -> np.ndarray:
    """LP point from event times alone, overlaps completed from the rows."""
    x = np.zeros(lp.n_vars)
    for ref in lp.var_refs:
        if ref.kind == "arrival":
            x[ref.index] = tt.a(*ref.key)
        elif ref.kind == "departure":
            x[ref.index] = tt.d(*ref.key)
    return complete_overlaps(lp, x)
