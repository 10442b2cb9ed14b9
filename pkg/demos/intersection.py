"""
A self-crossing that is not a return
====================================

The projected trajectory crosses itself, yet the velocities at the two
crossing times differ, so the state in (position, velocity) space is never
repeated.
"""

import numpy as np

from jcmflow import ModelParams, find_intersections

params = ModelParams(beta=1.0)
events = find_intersections((1, 0, 0), t_max=5.0, dt=0.005, params=params)

for ev in events:
    print(f"t1 = {ev.t1:.6f}, t2 = {ev.t2:.6f}")
    print("point  ", np.round(ev.point, 6))
    print("v(t1)  ", np.round(ev.v_at_t1, 6))
    print("v(t2)  ", np.round(ev.v_at_t2, 6))
    print("phase-space gap", round(ev.phase_gap, 6))

# many more crossings appear on longer windows
print(len(find_intersections((1, 0, 0), 20.0, 0.005, params)), "crossings on [0, 20]")
