"""
One trip, its power pulses, and one overlap
===========================================

A train runs a 1.4 km track. We look at its speed profile, the
acceleration and braking power pulses, their FWHM rectangles, and how much
braking energy a second train could pick up as the two pulses slide past
each other.
"""

import numpy as np

from energytt.kinematics import (J_PER_KWH, exact_overlap_regen, minimum_trip_time, simulate_trip,
                                 trip_sample)
from energytt.lp import overlap_time
from energytt.network import PhysicsParams, Track

ph = PhysicsParams()
track = Track("A", "B", 1400.0, 0.0)
t_min = minimum_trip_time(track, ph)
print(f"fastest trip {t_min:.1f} s")

# a trip with 12 s of slack: the extra time is spent coasting
prof = simulate_trip(track, t_min + 12.0, ph)
for p in prof.speed_profile.phases:
    print(f"  {p.kind:<10} {p.start_s:6.1f} -> {p.end_s:6.1f} s   {p.start_speed:5.2f} -> {p.end_speed:5.2f} m/s")

acc, brk = prof.segment("accelerate"), prof.segment("brake")
print(f"acceleration draws {prof.phase_energy('accelerate') / J_PER_KWH:.2f} kWh, "
      f"braking returns {prof.phase_energy('brake') / J_PER_KWH:.2f} kWh")

# the FWHM rectangles stand in for the pulses in the LP
s = trip_sample(track, t_min + 12.0, ph)
print("accel rectangle", s.fwhm_accel)
print("brake rectangle", s.fwhm_brake)

# a second, identical train departs ``lag`` seconds after this one arrives;
# both windows are written on this train's clock, where arrival is at T
T = prof.speed_profile.phases[-1].end_s
b0, b1 = T - s.fwhm_brake.start_offset_s, T - s.fwhm_brake.end_offset_s
for lag in np.arange(-40.0, 41.0, 10.0):
    a0, a1 = T + lag + s.fwhm_accel.start_offset_s, T + lag + s.fwhm_accel.end_offset_s
    sigma = overlap_time(a0, a1, b0, b1)
    regen = exact_overlap_regen(brk, acc, T + lag)
    print(f"  lag {lag:+5.0f} s   overlap {sigma:+6.1f} s   transferable {regen:.3f} kWh")

# The rectangles are narrower than the pulses, so energy still moves at small
# negative overlaps. The per-event regeneration fit is an affine function of
# the overlap, and its intercept absorbs this offset.
