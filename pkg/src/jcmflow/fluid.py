"""Eulerian description of the Bloch-vector flow.

The Bloch map ``x(t) = diag(L1, L1, L3) x(0) + (0, 0, L4)`` is read as the
Lagrangian map of a fluid filling the unit ball.  Eliminating the particle
label gives the velocity field

    v(t, x) = (a x, a y, b (z - L4) + L4')     a = L1'/L1,  b = L3'/L3

which is the gradient of a quadratic potential, has zero curl and a vector
Laplacian of zero, and is driven by a conservative body force.  The density
``rho0 / (L1**2 L3)`` is uniform in space, so any barotropic pressure is too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .bloch import affine_map, check_state
from .errors import Singular
from .series import LGrid, LValues, ModelParams, eval_L, eval_L_grid

__all__ = [
    "EPS_SING",
    "Isothermal",
    "Polytropic",
    "EquationOfState",
    "FluidSample",
    "is_singular",
    "lagrangian_map",
    "inverse_map",
    "velocity",
    "potential",
    "body_force",
    "force_potential",
    "divergence",
    "density",
    "sample_field",
    "sample_field_grid",
    "density_by_quadrature",
]

EPS_SING = 1e-6


@dataclass(frozen=True)
class Isothermal:
    """``p = c**2 rho``."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("sound speed must be positive")

    def pressure(self, rho):
        return self.c ** 2 * rho

    def internal_energy(self, rho, rho0):
        """Energy density with ``E'' = p'(rho)/rho``, gauged to vanish at ``rho0``."""
        return self.c ** 2 * rho * np.log(rho / rho0)


@dataclass(frozen=True)
class Polytropic:
    """``p = A rho**gamma``, extended oddly to negative densities."""

    A: float
    gamma: float

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")

    def pressure(self, rho):
        return self.A * np.sign(rho) * np.abs(rho) ** self.gamma

    def internal_energy(self, rho, rho0):
        return self.A * rho ** self.gamma / (self.gamma - 1.0)


EquationOfState = Union[Isothermal, Polytropic]


@dataclass(frozen=True)
class FluidSample:
    """All Eulerian quantities at one space-time point.

    When ``singular`` is set the ratio-based fields are NaN.
    """

    t: float
    x: np.ndarray
    v: np.ndarray
    phi_pot: float
    div_v: float
    rho: float
    p: float
    K_force: np.ndarray
    K_pot: float
    singular: bool


def is_singular(lv, eps: float = EPS_SING):
    """True where ``min(|L1|, |L3|) < eps``; elementwise for grids."""
    return np.minimum(np.abs(lv.L1), np.abs(lv.L3)) < eps


def _require_regular(lv, eps):
    if np.any(is_singular(lv, eps)):
        raise Singular(f"min(|L1|, |L3|) < {eps:g} at t = {lv.t}")


def lagrangian_map(x0, t: float, params: ModelParams) -> np.ndarray:
    """Position at time ``t`` of the particle starting at ``x0``."""
    s = check_state(x0, "initial particle position")
    lv = eval_L(params, t)
    return np.array(affine_map(lv.L1, lv.L3, lv.L4, s.x, s.y, s.z), dtype=float)


def inverse_map(x, t: float, params: ModelParams, eps: float = EPS_SING) -> np.ndarray:
    """Initial label of the particle found at ``x`` at time ``t``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("position must be finite")
    lv = eval_L(params, t)
    _require_regular(lv, eps)
    return np.array([x[0] / lv.L1, x[1] / lv.L1, (x[2] - lv.L4) / lv.L3])


def _ratios(lv):
    return lv.dL1 / lv.L1, lv.dL3 / lv.L3, lv.ddL1 / lv.L1, lv.ddL3 / lv.L3


def _xyz(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1], x[..., 2]


def velocity(lv: LValues, x) -> np.ndarray:
    """Eulerian velocity at positions ``x`` (shape (..., 3)) for one time."""
    a, b, _, _ = _ratios(lv)
    X, Y, Z = _xyz(x)
    return np.stack([a * X, a * Y, b * (Z - lv.L4) + lv.dL4], axis=-1)


def potential(lv: LValues, x):
    """Velocity potential; ``velocity == grad(potential)``."""
    a, b, _, _ = _ratios(lv)
    X, Y, Z = _xyz(x)
    return a * (X * X + Y * Y) / 2 + b * (Z * Z / 2 - Z * lv.L4) + lv.dL4 * Z


def body_force(lv: LValues, x) -> np.ndarray:
    """External force per unit mass that sustains the flow."""
    _, _, c, d = _ratios(lv)
    X, Y, Z = _xyz(x)
    return np.stack([c * X, c * Y, d * (Z - lv.L4) + lv.ddL4], axis=-1)


def force_potential(lv: LValues, x):
    """Scalar with ``body_force == -grad(force_potential)``."""
    _, _, c, d = _ratios(lv)
    X, Y, Z = _xyz(x)
    return -c * (X * X + Y * Y) / 2 - d * (Z * Z / 2 - Z * lv.L4) - lv.ddL4 * Z


def divergence(lv):
    """``div v = 2 L1'/L1 + L3'/L3``; independent of position."""
    return 2 * lv.dL1 / lv.L1 + lv.dL3 / lv.L3


def density(lv, rho0: float = 1.0):
    """``rho0 / (L1**2 L3)``; negative wherever L3 < 0."""
    return rho0 / (lv.L1 * lv.L1 * lv.L3)


def sample_field(t: float, x, params: ModelParams, eos: EquationOfState = Isothermal(),
                 rho0: float = 1.0, eps: float = EPS_SING) -> FluidSample:
    """Evaluate every fluid quantity at ``(t, x)``.

    Near zeros of L1 or L3 the sample is returned with ``singular=True`` and NaN
    in every ratio-based field instead of raising.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)) or not math.isfinite(t):
        raise ValueError("sample_field needs a finite time and a finite 3-vector")
    lv = eval_L(params, t)
    if is_singular(lv, eps):
        nan3 = np.full(3, np.nan)
        return FluidSample(float(t), x, nan3, math.nan, math.nan, math.nan, math.nan,
                           nan3.copy(), math.nan, True)
    rho = float(density(lv, rho0))
    return FluidSample(
        t=float(t),
        x=x,
        v=velocity(lv, x),
        phi_pot=float(potential(lv, x)),
        div_v=float(divergence(lv)),
        rho=rho,
        p=float(eos.pressure(rho)),
        K_force=body_force(lv, x),
        K_pot=float(force_potential(lv, x)),
        singular=False,
    )


def sample_field_grid(t: float, points, params: ModelParams, eos: EquationOfState = Isothermal(),
                      rho0: float = 1.0, eps: float = EPS_SING) -> dict:
    """Vectorized :func:`sample_field` over an (n, 3) array of points at one time."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    lv = eval_L(params, t)
    n = len(pts)
    if is_singular(lv, eps):
        nan = np.full(n, np.nan)
        return dict(t=np.full(n, float(t)), x=pts, v=np.full((n, 3), np.nan), phi_pot=nan,
                    div_v=nan, rho=nan, p=nan, K_force=np.full((n, 3), np.nan),
                    K_pot=nan, singular=np.ones(n, dtype=bool))
    rho = density(lv, rho0)
    return dict(
        t=np.full(n, float(t)),
        x=pts,
        v=velocity(lv, pts),
        phi_pot=potential(lv, pts),
        div_v=np.full(n, divergence(lv)),
        rho=np.full(n, rho),
        p=np.full(n, eos.pressure(rho)),
        K_force=body_force(lv, pts),
        K_pot=force_potential(lv, pts),
        singular=np.zeros(n, dtype=bool),
    )


def density_by_quadrature(t: float, params: ModelParams, rho0: float = 1.0,
                          n_steps: int = 4096, eps: float = EPS_SING) -> float:
    """``rho0 exp(-integral_0^t div v ds)`` by composite Simpson quadrature.

    Independent of the closed-form density; only the divergence is used.
    """
    if n_steps < 2 or n_steps % 2:
        raise ValueError(f"Simpson's rule needs an even number of panels >= 2, got {n_steps}")
    if t == 0:
        return float(rho0)
    nodes = np.linspace(0.0, t, n_steps + 1)
    g: LGrid = eval_L_grid(params, nodes)
    bad = is_singular(g, eps)
    if np.any(bad):
        raise Singular(f"quadrature node t = {nodes[np.argmax(bad)]:.6g} is within "
                       f"{eps:g} of a zero of L1 or L3")
    if np.any(np.diff(np.sign(g.L1)) != 0) or np.any(np.diff(np.sign(g.L3)) != 0):
        raise Singular(f"L1 or L3 changes sign on [0, {t:g}]")
    div = divergence(g)
    h = t / n_steps
    integral = h / 3 * (div[0] + div[-1] + 4 * div[1:-1:2].sum() + 2 * div[2:-1:2].sum())
    return float(rho0 * math.exp(-integral))
