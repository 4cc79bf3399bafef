"""File formats: instance JSON, timetable and event CSV, sample/fit/solution JSON."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path

from .errors import ModelError
from .fitting import AffineFit, FitBundle, OracleSamples, PhaseFits
from .kinematics import FwhmRect, TripSample
from .network import (CrossOver, Headway, Instance, PhysicsParams, Platform, Timetable, TimeWindow,
                      Track, Train, UncertainWindow)
from .pairing import SyncEvent

SCHEMA_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _window(w: UncertainWindow) -> dict:
    return {"lb": list(w.lb_interval), "ub": list(w.ub_interval)}


def _unwindow(d: dict) -> UncertainWindow:
    return UncertainWindow(tuple(d["lb"]), tuple(d["ub"]))


# -- instance ----------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "network": {
            "platforms": [{"id": p.id, "station": p.station_id, "line": p.line_id} for p in inst.platforms],
            "tracks": [{"from": t.from_, "to": t.to, "length": t.length, "grade": t.grade} for t in inst.tracks],
            "crossovers": [{"from": c.from_, "to": c.to, "length": c.length,
                            "pairs": [list(p) for p in c.turnaround_pairs]} for c in inst.crossovers],
        },
        "trains": [{"id": t.id, "path": list(t.path_platforms),
                    "travel_window": [t.travel_window.lb, t.travel_window.ub]} for t in inst.trains],
        "windows": {
            "dwell": [{"train": k[0], "platform": k[1], **_window(w)} for k, w in inst.dwell_windows.items()],
            "trip": [{"train": k[0], "from": k[1], "to": k[2], **_window(w)} for k, w in inst.trip_windows.items()],
            "crossover": [{"from": k[0], "to": k[1], "train": k[2], "partner": k[3], **_window(w)}
                          for k, w in inst.crossover_windows.items()],
        },
        "connections": [{"from": k[0], "to": k[1], "train": k[2], "partner": k[3], **_window(w)}
                        for k, w in inst.connections.items()],
        "headways": [{"from": h.from_, "to": h.to, "train": h.train, "next_train": h.next_train,
                      "h_from": h.h_from, "h_to": h.h_to} for h in inst.headways],
        "regen_pairs": [list(p) for p in inst.regen_pairs],
        "physics": {**asdict(inst.physics), "davis_coeffs": list(inst.physics.davis_coeffs)},
        "params": {"closeness_radius": inst.closeness_radius, "horizon": inst.horizon,
                   "grade_range": list(inst.grade_range)},
    }


def instance_from_dict(d: dict) -> Instance:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ModelError(f"unsupported instance schema version {d.get('schema_version')!r}")
    net = d["network"]
    ph = dict(d["physics"])
    ph["davis_coeffs"] = tuple(ph["davis_coeffs"])
    par = d["params"]
    return Instance(
        platforms=tuple(Platform(p["id"], p["station"], p["line"]) for p in net["platforms"]),
        tracks=tuple(Track(t["from"], t["to"], t["length"], t["grade"]) for t in net["tracks"]),
        crossovers=tuple(CrossOver(c["from"], c["to"], tuple(tuple(p) for p in c["pairs"]), c["length"])
                         for c in net["crossovers"]),
        trains=tuple(Train.along(t["id"], t["path"], TimeWindow(*t["travel_window"])) for t in d["trains"]),
        dwell_windows={(w["train"], w["platform"]): _unwindow(w) for w in d["windows"]["dwell"]},
        trip_windows={(w["train"], w["from"], w["to"]): _unwindow(w) for w in d["windows"]["trip"]},
        crossover_windows={(w["from"], w["to"], w["train"], w["partner"]): _unwindow(w)
                           for w in d["windows"]["crossover"]},
        connections={(w["from"], w["to"], w["train"], w["partner"]): _unwindow(w) for w in d["connections"]},
        headways=tuple(Headway(h["from"], h["to"], h["train"], h["next_train"], h["h_from"], h["h_to"])
                       for h in d["headways"]),
        regen_pairs=tuple(tuple(p) for p in d["regen_pairs"]),
        physics=PhysicsParams(**ph),
        closeness_radius=par["closeness_radius"],
        horizon=par["horizon"],
        grade_range=tuple(par["grade_range"]),
    )


def dumps_instance(inst: Instance) -> str:
    return _dumps(instance_to_dict(inst))


def loads_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def read_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())


# -- timetable -----------------------------------------------------------------------

TIMETABLE_HEADER = ("train", "platform", "arrival_s", "departure_s")


def dumps_timetable(tt: Timetable, instance: Instance | None = None) -> str:
    if instance is not None:
        rows = list(tt.records(instance))
    else:
        rows = [(t, p, tt.arrival[(t, p)], tt.departure[(t, p)]) for t, p in sorted(tt.arrival)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMETABLE_HEADER)
    for t, p, a, d in rows:
        w.writerow((t, p, repr(float(a)), repr(float(d))))
    return buf.getvalue()


def loads_timetable(text: str) -> Timetable:
    r = csv.DictReader(io.StringIO(text))
    if tuple(r.fieldnames or ()) != TIMETABLE_HEADER:
        raise ModelError(f"timetable header must be {','.join(TIMETABLE_HEADER)}")
    arr, dep = {}, {}
    for row in r:
        key = (row["train"], row["platform"])
        arr[key] = float(row["arrival_s"])
        dep[key] = float(row["departure_s"])
    return Timetable(arr, dep)


def write_timetable(tt: Timetable, path, instance: Instance | None = None) -> None:
    Path(path).write_text(dumps_timetable(tt, instance))


def read_timetable(path) -> Timetable:
    return loads_timetable(Path(path).read_text())


# -- events ------------------------------------------------------------------------

EVENT_HEADER = ("i", "j", "t", "partner", "direction")


def dumps_events(events) -> str:
    right, left = events
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for ev in list(right) + list(left):
        w.writerow((ev.i, ev.j, ev.t, ev.partner, ev.direction))
    return buf.getvalue()


def loads_events(text: str):
    r = csv.DictReader(io.StringIO(text))
    if tuple(r.fieldnames or ()) != EVENT_HEADER:
        raise ModelError(f"event header must be {','.join(EVENT_HEADER)}")
    evs = [SyncEvent(row["i"], row["j"], row["t"], row["partner"], row["direction"]) for row in r]
    return (tuple(sorted(e for e in evs if e.direction == "right")),
            tuple(sorted(e for e in evs if e.direction == "left")))


def write_events(events, path) -> None:
    Path(path).write_text(dumps_events(events))


def read_events(path):
    return loads_events(Path(path).read_text())


def _ev(e: SyncEvent) -> list:
    return [e.i, e.j, e.t, e.partner, e.direction]


# -- oracle samples ----------------------------------------------------------------

def _rect(r: FwhmRect) -> list:
    return [r.start_offset_s, r.end_offset_s, r.height_W]


def _trip(s: TripSample) -> dict:
    return {"trip_time": s.trip_time, "consumed_kwh": s.consumed_kwh, "regen_kwh": s.regen_kwh,
            "hold_kwh": s.hold_kwh, "fwhm_accel": _rect(s.fwhm_accel), "fwhm_brake": _rect(s.fwhm_brake)}


def _untrip(d: dict) -> TripSample:
    return TripSample(d["trip_time"], d["consumed_kwh"], d["regen_kwh"], d["hold_kwh"],
                      FwhmRect(*d["fwhm_accel"]), FwhmRect(*d["fwhm_brake"]))


def samples_to_dict(s: OracleSamples) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "track": [{"key": list(k), "samples": [_trip(x) for x in v]} for k, v in s.track.items()],
        "crossover": [{"key": list(k), "samples": [list(x) for x in v]} for k, v in s.crossover.items()],
        "regen": [{"event": _ev(k), "samples": [list(x) for x in v]} for k, v in sorted(s.regen.items())],
    }


def samples_from_dict(d: dict) -> OracleSamples:
    out = OracleSamples()
    for row in d["track"]:
        out.track[tuple(row["key"])] = tuple(_untrip(x) for x in row["samples"])
    for row in d["crossover"]:
        out.crossover[tuple(row["key"])] = tuple(tuple(x) for x in row["samples"])
    for row in d["regen"]:
        out.regen[SyncEvent(*row["event"])] = tuple(tuple(x) for x in row["samples"])
    return out


def write_samples(s: OracleSamples, path) -> None:
    Path(path).write_text(_dumps(samples_to_dict(s)))


def read_samples(path) -> OracleSamples:
    return samples_from_dict(json.loads(Path(path).read_text()))


# -- fits --------------------------------------------------------------------------

def _fit(f: AffineFit) -> dict:
    return {"slope": f.slope, "intercept": f.intercept, "residual_rms": f.residual_rms, "n_samples": f.n_samples}


def _unfit(d: dict) -> AffineFit:
    return AffineFit(d["slope"], d["intercept"], d["residual_rms"], d["n_samples"])


PHASE_NAMES = ("alpha_start", "alpha_end", "beta_start", "beta_end")


def fits_to_dict(b: FitBundle) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "consumption_track": [{"key": list(k), **_fit(f)} for k, f in b.consumption_track.items()],
        "consumption_crossover": [{"key": list(k), **_fit(f)} for k, f in b.consumption_crossover.items()],
        "regen": [{"event": _ev(k), **_fit(f)} for k, f in sorted(b.regen.items())],
        "phase": [{"key": list(k), **{n: _fit(getattr(p, n)) for n in PHASE_NAMES}} for k, p in b.phase.items()],
    }


def fits_from_dict(d: dict) -> FitBundle:
    b = FitBundle()
    for row in d["consumption_track"]:
        b.consumption_track[tuple(row["key"])] = _unfit(row)
    for row in d["consumption_crossover"]:
        b.consumption_crossover[tuple(row["key"])] = _unfit(row)
    for row in d["regen"]:
        b.regen[SyncEvent(*row["event"])] = _unfit(row)
    for row in d["phase"]:
        b.phase[tuple(row["key"])] = PhaseFits(*(_unfit(row[n]) for n in PHASE_NAMES))
    return b


def write_fits(b: FitBundle, path) -> None:
    Path(path).write_text(_dumps(fits_to_dict(b)))


def read_fits(path) -> FitBundle:
    return fits_from_dict(json.loads(Path(path).read_text()))


def write_json(obj, path) -> None:
    Path(path).write_text(_dumps(obj))
