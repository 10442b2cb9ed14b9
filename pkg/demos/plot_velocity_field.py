"""
Velocity field of the equivalent fluid
======================================

Reading the Bloch map as the Lagrangian map of a fluid filling the unit ball
gives a linear velocity field.  Here it is drawn over the lower half of the
xz-plane at three times, together with the spatially uniform density.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from jcmflow import ModelParams
from jcmflow.cli import half_disk_grid
from jcmflow.fluid import sample_field_grid

params = ModelParams(beta=1.0)
pts = half_disk_grid(21)

fig, axes = plt.subplots(1, 3, figsize=(12, 4), sharey=True)
for ax, t in zip(axes, (0.5, 1.0, 1.5)):
    f = sample_field_grid(t, pts, params)
    ax.quiver(pts[:, 0], pts[:, 2], f["v"][:, 0], f["v"][:, 2])
    ax.set_title(f"t = {t}, rho = {f['rho'][0]:.3g}")
    ax.set_aspect("equal")
    # divergence depends on time only
    print(f"t={t}: div v = {f['div_v'][0]:+.5f}, rho = {f['rho'][0]:+.5f}")
fig.savefig("velocity_field.png", dpi=150)

# L3 changes sign near t = 0.9, so the density does too
t = np.linspace(0, 3, 7)
for ti in t:
    print(f"rho({ti:.1f}) = {sample_field_grid(ti, [[0, 0, 0]], params)['rho'][0]:+.4g}")
