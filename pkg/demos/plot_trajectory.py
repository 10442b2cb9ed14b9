"""
Thermal Bloch trajectory
========================

An atom prepared in the superposition (|0> + |1>)/sqrt(2) has Bloch vector
(1, 0, 0).  In contact with a thermal cavity field it wanders inside the
xz-plane of the Bloch ball without ever settling down.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from jcmflow import ModelParams, sample_trajectory

params = ModelParams(beta=1.0)
traj = sample_trajectory((1, 0, 0), t_max=250.0, dt=0.01, params=params)

# the trajectory never leaves the unit disk
print("points:", len(traj))
print("largest |S|:", np.linalg.norm(traj.points, axis=1).max())
print("series error bound:", traj.err_bound)

fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(traj.points[:, 0], traj.points[:, 2], lw=0.3)
ax.add_patch(plt.Circle((0, 0), 1, fill=False, ls="--", color="gray"))
ax.set_aspect("equal")
ax.set_xlabel("$S_x$")
ax.set_ylabel("$S_z$")
fig.savefig("trajectory.png", dpi=150)
