"""Synchronization events between temporally close trains on paired platforms."""
from __future__ import annotations

import bisect
from dataclasses import dataclass

from .network import Instance, Timetable

RIGHT, LEFT = "right", "left"


@dataclass(frozen=True, order=True)
class SyncEvent:
    i: str
    j: str
    t: str          # train at platform i
    partner: str    # train at platform j
    direction: str

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.i, self.j, self.t, self.partner)


@dataclass(frozen=True)
class EventRoles:
    """Who accelerates and who brakes in an event, with the tracks driving each phase."""

    accel_train: str
    accel_platform: str
    accel_track: tuple[str, str]     # outgoing track of the accelerating train
    brake_train: str
    brake_platform: str
    brake_track: tuple[str, str]     # incoming track of the braking train


def event_roles(instance: Instance, ev: SyncEvent) -> EventRoles | None:
    """Right events pair t's departure with the partner's arrival; left events the reverse.

    Returns ``None`` when a needed phase does not exist (a train cannot
    accelerate away from its last platform or brake into its first one).
    """
    trains = instance.train_map
    if ev.direction == RIGHT:
        at, ap, bt, bp = ev.t, ev.i, ev.partner, ev.j
    else:
        at, ap, bt, bp = ev.partner, ev.j, ev.t, ev.i
    out = trains[at].outgoing(ap)
    inc = trains[bt].incoming(bp)
    if out is None or inc is None:
        return None
    return EventRoles(at, ap, out, bt, bp, inc)


def _eligible(instance: Instance, i, j, t, partner, direction) -> bool:
    return event_roles(instance, SyncEvent(i, j, t, partner, direction)) is not None


def build_sync_events(instance: Instance, baseline: Timetable,
                      radius: float | None = None) -> tuple[tuple[SyncEvent, ...], tuple[SyncEvent, ...]]:
    """Right and left events from dwell midpoints of the baseline timetable.

    A partner at ``j`` is to the right of ``t`` at ``i`` when its midpoint is
    later by a gap in ``[0, r]`` and to the left when earlier by a gap in
    ``(0, r]``.
    """
    r = instance.closeness_radius if radius is None else radius
    right, left = set(), set()
    for i, j in instance.regen_pairs:
        ti = instance.trains_at.get(i, ())
        tj = instance.trains_at.get(j, ())
        if not ti or not tj:
            continue
        mids_j = sorted((baseline.midpoint(p, j), p) for p in tj)
        keys = [m for m, _ in mids_j]
        for t in ti:
            mt = baseline.midpoint(t, i)
            lo = bisect.bisect_left(keys, mt - r)
            hi = bisect.bisect_right(keys, mt + r)
            for mp, p in mids_j[lo:hi]:
                gap = mp - mt
                if 0 <= gap <= r:
                    direction = RIGHT
                elif 0 < -gap <= r:
                    direction = LEFT
                else:
                    continue
                if _eligible(instance, i, j, t, p, direction):
                    (right if direction == RIGHT else left).add(SyncEvent(i, j, t, p, direction))
    return tuple(sorted(right)), tuple(sorted(left))
