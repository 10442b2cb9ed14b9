"""
Closed form against exact quantum evolution
===========================================

The L-series are checked against a direct computation: the joint atom-field
state is evolved block by block in a truncated Fock space and the field is
traced out.
"""

import numpy as np

from jcmflow import FockConfig, ModelParams, compare_with_closed_form

params = ModelParams(beta=1.0)
cfg = FockConfig(n_max=200, beta=1.0)
grid = np.arange(0, 25.0001, 0.05)

for s0 in [(1, 0, 0), (0, 0, 1), (0, 0, 0)]:
    rep = compare_with_closed_form(s0, grid, params, cfg)
    print(f"s0={s0}: max deviation {rep.max_deviation:.2e}, budget {rep.error_budget:.2e}")
