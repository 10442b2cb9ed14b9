"""Bloch-vector evolution of the atom in the resonant thermal JCM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import chunked, ordered_map
from .series import LGrid, ModelParams, eval_L, eval_L_grid

__all__ = [
    "BlochVector",
    "Trajectory",
    "evolve_bloch",
    "sample_trajectory",
    "check_state",
    "affine_map",
]

NORM_SLACK = 1e-12
MAX_POINTS = 10_000_000
_CHUNK = 4096


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, v) -> "BlochVector":
        if isinstance(v, BlochVector):
            return v
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def check_state(s0, what: str = "initial Bloch vector") -> BlochVector:
    """Validate a point of the closed unit ball; return it as a BlochVector."""
    s = BlochVector.of(s0)
    vals = (s.x, s.y, s.z)
    if not all(math.isfinite(c) for c in vals):
        raise ValueError(f"{what} must be finite, got {vals}")
    if s.norm() > 1.0 + NORM_SLACK:
        raise ValueError(f"{what} has norm {s.norm():.17g} > 1; not a physical state")
    return s


def affine_map(L1, L3, L4, x0, y0, z0):
    """``(L1 x0, L1 y0, L3 z0 + L4)``; works on floats and arrays alike."""
    return L1 * x0, L1 * y0, L3 * z0 + L4


def evolve_bloch(s0, t: float, params: ModelParams) -> BlochVector:
    """Bloch vector at time ``t`` starting from ``s0``."""
    s = check_state(s0)
    lv = eval_L(params, t)
    return BlochVector(*(float(c) for c in affine_map(lv.L1, lv.L3, lv.L4, s.x, s.y, s.z)))


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory; ``points`` and ``velocities`` have shape (n, 3)."""

    params: ModelParams
    s0: BlochVector
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    err_bound: float

    def __len__(self):
        return len(self.times)

    def point(self, i: int) -> BlochVector:
        return BlochVector(*(float(c) for c in self.points[i]))


def eval_L_parallel(params: ModelParams, times: np.ndarray) -> LGrid:
    """:func:`eval_L_grid` over chunks of ``times`` on the thread pool."""
    times = np.asarray(times, dtype=float)
    if len(times) <= _CHUNK:
        return eval_L_grid(params, times)
    parts = ordered_map(lambda ts: eval_L_grid(params, ts), chunked(times, _CHUNK))
    fields = ("L1", "L3", "L4", "dL1", "dL3", "dL4", "ddL1", "ddL3", "ddL4")
    return LGrid(times, *(np.concatenate([getattr(p, f) for p in parts]) for f in fields),
                 err_bound=parts[0].err_bound, N=parts[0].N)


def sample_trajectory(s0, t_max: float, dt: float, params: ModelParams,
                      max_points: int = MAX_POINTS) -> Trajectory:
    """Sample ``S(t)`` and ``dS/dt`` on the grid ``0, dt, 2 dt, ... <= t_max``.

    Velocities come from the analytic derivative series, not differences of
    neighbouring points.
    """
    s = check_state(s0)
    if not (t_max > 0 and math.isfinite(t_max)):
        raise ValueError(f"t_max must be positive and finite, got {t_max!r}")
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    # guard against t_max/dt landing a hair below an integer
    n_steps = int(math.floor(t_max / dt * (1 + 1e-12)))
    if n_steps + 1 > max_points:
        raise ValueError(f"grid of {n_steps + 1} points exceeds the cap of {max_points}")
    times = np.arange(n_steps + 1) * dt
    g = eval_L_parallel(params, times)
    pts = np.column_stack(affine_map(g.L1, g.L3, g.L4, s.x, s.y, s.z))
    vel = np.column_stack(affine_map(g.dL1, g.dL3, g.dL4, s.x, s.y, s.z))
    return Trajectory(params, s, times, pts, vel, g.err_bound)
