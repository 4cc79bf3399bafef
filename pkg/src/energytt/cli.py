"""Command line front end: gen, simulate, fit, pair, build, solve, report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ModelError
from .fitting import fit_instance, generate_oracle_samples
from .lp import build_lp, extract_timetable, point_from_timetable
from .mps import read_mps, write_mps
from .network import audit_timetable, validate_instance
from .pairing import build_sync_events
from .reporting import compare, crossvalidate, format_table, table_csv, table_row
from .scenario import generate_scenario
from .serialize import (read_events, read_fits, read_instance, read_samples, read_timetable,
                        write_events, write_fits, write_instance, write_json, write_samples,
                        write_timetable)
from .solver import METHODS, solve


def _flat(events):
    return tuple(events[0]) + tuple(events[1])


def _events(args, inst):
    if getattr(args, "events", None):
        return read_events(args.events)
    return build_sync_events(inst, read_timetable(args.baseline))


def cmd_gen(args):
    inst, base = generate_scenario(args.seed, args.trains, args.stations)
    bad = validate_instance(inst)
    if bad:
        raise ModelError(f"generated instance failed validation: {bad[0].code}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_instance(inst, out / "instance.json")
    write_timetable(base, out / "baseline.csv", inst)
    print(f"wrote {out/'instance.json'} and {out/'baseline.csv'} "
          f"({len(inst.trains)} trains, {len(inst.platforms)} platforms)")


def cmd_pair(args):
    inst = read_instance(args.instance)
    ev = build_sync_events(inst, read_timetable(args.baseline), args.radius)
    write_events(ev, args.out)
    print(f"{len(ev[0])} right and {len(ev[1])} left events -> {args.out}")


def cmd_simulate(args):
    inst = read_instance(args.instance)
    base = read_timetable(args.baseline)
    ev = _events(args, inst)
    s = generate_oracle_samples(inst, base, _flat(ev), n_trip=args.n_trip, n_overlap=args.n_overlap)
    write_samples(s, args.out)
    print(f"samples for {len(s.track)} trips, {len(s.crossover)} turnarounds, {len(s.regen)} events -> {args.out}")


def cmd_fit(args):
    inst = read_instance(args.instance)
    fits = fit_instance(inst, read_samples(args.samples), _flat(read_events(args.events)))
    write_fits(fits, args.out)
    print(f"{len(fits.consumption_track)} trip, {len(fits.consumption_crossover)} turnaround and "
          f"{len(fits.regen)} regeneration fits -> {args.out}")


def cmd_build(args):
    inst = read_instance(args.instance)
    lp = build_lp(inst, read_fits(args.fits), read_events(args.events))
    write_mps(lp, args.out)
    print(f"{lp.n_vars} variables, {lp.n_constraints} constraints -> {args.out}")


def cmd_solve(args):
    if args.lp:
        lp = read_mps(args.lp)
    else:
        lp = build_lp(read_instance(args.instance), read_fits(args.fits), read_events(args.events))
    x0 = point_from_timetable(lp, read_timetable(args.warm_start)) if args.warm_start else None
    sol = solve(lp, warm_start=x0, tol=args.tol, max_iters=args.max_iters, seed=args.seed, method=args.method)
    summary = {**sol.summary(), "n_vars": lp.n_vars, "n_constraints": lp.n_constraints}
    if args.summary:
        write_json(summary, args.summary)
    print(json.dumps(summary, indent=1))
    if not sol.optimal:
        return 2
    tt = extract_timetable(lp, sol.values)
    if args.instance:
        rep = audit_timetable(read_instance(args.instance), tt)
        print(f"audit: {'feasible' if rep.feasible else 'INFEASIBLE'}")
    write_timetable(tt, args.out)
    print(f"optimized timetable -> {args.out}")
    return 0


def cmd_report(args):
    inst = read_instance(args.instance)
    fits = read_fits(args.fits)
    ev = _flat(read_events(args.events))
    base, opt = read_timetable(args.baseline), read_timetable(args.optimized)
    rep = compare(base, opt, inst, fits, ev, simulate=args.crossvalidate)
    lp = build_lp(inst, fits, read_events(args.events))
    row = table_row(rep, len(inst.trains), lp.n_vars, lp.n_constraints)
    print(format_table([row]))
    if args.crossvalidate:
        cv = crossvalidate(opt, inst, fits, ev)
        print(f"optimized regen: surrogate {cv.surrogate.regen_transferred_kwh:.2f} kWh, "
              f"oracle {cv.simulator.regen_transferred_kwh:.2f} kWh")
    if args.csv:
        Path(args.csv).write_text(table_csv([row]))
    if args.json:
        Path(args.json).write_text(rep.to_json())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="energytt", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a synthetic scenario and its baseline")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--trains", type=int, default=1000)
    g.add_argument("--stations", type=int, default=14)
    g.add_argument("--out", default=".")
    g.set_defaults(fn=cmd_gen)

    g = sub.add_parser("pair", help="build synchronization events from a baseline")
    g.add_argument("--instance", required=True)
    g.add_argument("--baseline", required=True)
    g.add_argument("--radius", type=float, default=None)
    g.add_argument("--out", default="events.csv")
    g.set_defaults(fn=cmd_pair)

    g = sub.add_parser("simulate", help="sample the kinematics oracle")
    g.add_argument("--instance", required=True)
    g.add_argument("--baseline", required=True)
    g.add_argument("--events")
    g.add_argument("--n-trip", type=int, default=9)
    g.add_argument("--n-overlap", type=int, default=17)
    g.add_argument("--out", default="samples.json")
    g.set_defaults(fn=cmd_simulate)

    g = sub.add_parser("fit", help="fit affine surrogates to oracle samples")
    g.add_argument("--instance", required=True)
    g.add_argument("--samples", required=True)
    g.add_argument("--events", required=True)
    g.add_argument("--out", default="fits.json")
    g.set_defaults(fn=cmd_fit)

    g = sub.add_parser("build", help="assemble the LP and write it as MPS")
    g.add_argument("--instance", required=True)
    g.add_argument("--fits", required=True)
    g.add_argument("--events", required=True)
    g.add_argument("--out", default="model.mps")
    g.set_defaults(fn=cmd_build)

    g = sub.add_parser("solve", help="solve an LP file or a rebuilt model")
    g.add_argument("--lp")
    g.add_argument("--instance")
    g.add_argument("--fits")
    g.add_argument("--events")
    g.add_argument("--warm-start")
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--max-iters", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--method", choices=METHODS, default="ipm")
    g.add_argument("--summary")
    g.add_argument("--out", default="optimized.csv")
    g.set_defaults(fn=cmd_solve)

    g = sub.add_parser("report", help="compare baseline and optimized timetables")
    g.add_argument("--instance", required=True)
    g.add_argument("--fits", required=True)
    g.add_argument("--events", required=True)
    g.add_argument("--baseline", required=True)
    g.add_argument("--optimized", required=True)
    g.add_argument("--crossvalidate", action="store_true")
    g.add_argument("--csv")
    g.add_argument("--json")
    g.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "solve" and not args.lp and not (args.instance and args.fits and args.events):
        print("solve needs --lp or all of --instance, --fits, --events", file=sys.stderr)
        return 1
    try:
        return args.fn(args) or 0
    except ModelError as e:
        print(str(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
