"""Numerical checks that the Eulerian field behaves as an honest inviscid flow.

Particles are advected through ``v(t, x)`` with a general-purpose adaptive
Runge-Kutta integrator and compared with the closed-form Lagrangian map; the
momentum and continuity equations are checked with central differences of the
analytically evaluated fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from .bloch import affine_map, check_state
from .errors import Singular, StepUnderflow, WindowSingular
from .fluid import (
    EPS_SING,
    EquationOfState,
    Isothermal,
    body_force,
    density,
    divergence,
    force_potential,
    is_singular,
    velocity,
)
from .series import ModelParams, eval_L, eval_L_grid

__all__ = [
    "WINDOW_MARGIN",
    "AdvectionResult",
    "scan_window",
    "advect",
    "ns_residual",
    "continuity_residual",
    "energy_functional",
    "circulation",
    "sample_ball",
]

WINDOW_MARGIN = 0.05
SCAN_STEP = 1e-3
MIN_STEP = 1e-12


def scan_window(t0: float, t1: float, params: ModelParams, margin: float = WINDOW_MARGIN,
                step: float = SCAN_STEP) -> float:
    """Smallest ``min(|L1|, |L3|)`` on a grid of ``[t0, t1]``.

    Raises :class:`WindowSingular` when it drops below ``margin``.
    """
    lo, hi = min(t0, t1), max(t0, t1)
    n = max(1, int(math.ceil((hi - lo) / step)))
    g = eval_L_grid(params, np.linspace(lo, hi, n + 1))
    worst = float(np.min(np.minimum(np.abs(g.L1), np.abs(g.L3))))
    if worst < margin or np.any(np.diff(np.sign(g.L1))) or np.any(np.diff(np.sign(g.L3))):
        raise WindowSingular(f"min(|L1|, |L3|) = {worst:.3g} < {margin} on [{lo:g}, {hi:g}]")
    return worst


@dataclass(frozen=True)
class AdvectionResult:
    x0: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    steps: np.ndarray
    final_error_vs_map: float
    window: tuple
    aborted: bool = False
    reason: str = ""

    @property
    def path(self):
        """``(t, position, step size)`` triples."""
        return list(zip(self.times, self.positions, self.steps))


def advect(x0, t0: float, t1: float, params: ModelParams, rtol: float = 1e-9,
           atol: float = 1e-12, strict: bool = True) -> AdvectionResult:
    """Integrate ``dx/dt = v(t, x)`` from ``(t0, x0)`` to ``t1``.

    Uses the Dormand-Prince 5(4) pair with adaptive steps.  The window must
    keep ``min(|L1|, |L3|) >= 0.05``.  With ``strict=False`` a step-size
    underflow returns an aborted result instead of raising.
    """
    x0 = check_state(x0, "initial particle position").as_array()
    scan_window(t0, t1, params)

    # closed-form target: label of x0 at t0, mapped forward to t1
    a0 = eval_L(params, t0)
    label = (x0[0] / a0.L1, x0[1] / a0.L1, (x0[2] - a0.L4) / a0.L3)
    a1 = eval_L(params, t1)
    target = np.array(affine_map(a1.L1, a1.L3, a1.L4, *label))

    if t1 == t0:
        return AdvectionResult(x0, np.array([t0]), x0[None, :], np.zeros(1),
                               float(np.linalg.norm(x0 - target)), (t0, t1))

    def rhs(t, y):
        return velocity(eval_L(params, t), y)

    solver = RK45(rhs, t0, x0, t1, rtol=rtol, atol=atol)
    times, pos, steps = [t0], [x0.copy()], [0.0]
    aborted, reason = False, ""
    while solver.status == "running":
        msg = solver.step()
        h = abs(solver.t - times[-1])
        if solver.status == "failed" or (solver.status == "running" and h < MIN_STEP):
            aborted, reason = True, msg or f"step size {h:.3g} below {MIN_STEP:g}"
            break
        times.append(solver.t)
        pos.append(solver.y.copy())
        steps.append(h)
    if aborted and strict:
        raise StepUnderflow(f"advection from t={t0} aborted at t={times[-1]}: {reason}")
    pos = np.array(pos)
    err = float(np.linalg.norm(pos[-1] - target)) if not aborted else math.nan
    return AdvectionResult(x0, np.array(times), pos, np.array(steps), err, (t0, t1),
                           aborted, reason)


def _regular(params, times, eps):
    g = eval_L_grid(params, np.asarray(times, dtype=float))
    if np.any(is_singular(g, eps)):
        raise Singular(f"FD stencil at t in {list(map(float, times))} touches a zero of L1/L3")
    return [g.at(i) for i in range(len(g))]


def ns_residual(t: float, x, params: ModelParams, fd_step: float = 1e-4,
                eps: float = EPS_SING) -> np.ndarray:
    """Defect of ``dv/dt + (v . grad) v - K`` from central differences."""
    x = np.asarray(x, dtype=float)
    h = fd_step
    lm, l0, lp = _regular(params, [t - h, t, t + h], eps)
    dv_dt = (velocity(lp, x) - velocity(lm, x)) / (2 * h)
    offsets = np.eye(3) * h
    # jac[i, j] = d v_i / d x_j
    jac = ((velocity(l0, x + offsets) - velocity(l0, x - offsets)) / (2 * h)).T
    v = velocity(l0, x)
    return dv_dt + jac @ v - body_force(l0, x)


def continuity_residual(t: float, params: ModelParams, rho0: float = 1.0,
                        fd_step: float = 1e-4, eps: float = EPS_SING) -> float:
    """``d rho/dt + rho div v``; the density has no spatial gradient."""
    h = fd_step
    lm, l0, lp = _regular(params, [t - h, t, t + h], eps)
    drho = (density(lp, rho0) - density(lm, rho0)) / (2 * h)
    return float(drho + density(l0, rho0) * divergence(l0))


def sample_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform points in the unit ball."""
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.random(n) ** (1.0 / 3.0)
    return d * r[:, None]


def energy_functional(t: float, params: ModelParams, eos: EquationOfState = Isothermal(),
                      rho0: float = 1.0, mc_samples: int = 1_000_000, seed: int = 0,
                      return_stderr: bool = False, chunk: int = 1 << 16,
                      eps: float = EPS_SING):
    """Monte Carlo estimate of the field Hamiltonian over the unit ball.

    The integrand is ``rho |v|**2 / 2 + E(rho) + rho K``, with ``E`` the
    equation of state's internal energy density and ``K`` the force
    potential.  Each chunk draws from its own child of ``SeedSequence(seed)``,
    so the estimate depends only on ``seed``, ``mc_samples`` and ``chunk``.
    """
    lv = eval_L(params, t)
    if is_singular(lv, eps):
        raise Singular(f"min(|L1|, |L3|) < {eps:g} at t = {t}")
    rho = float(density(lv, rho0))
    if not rho > 0:
        raise ValueError(f"density {rho:.6g} at t = {t} is not positive; "
                         "the internal energy is undefined")
    e_int = float(eos.internal_energy(rho, rho0))
    sizes = [chunk] * (mc_samples // chunk)
    if mc_samples % chunk:
        sizes.append(mc_samples % chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    total = 0.0
    total_sq = 0.0
    for size, child in zip(sizes, children):
        pts = sample_ball(np.random.default_rng(child), size)
        v = velocity(lv, pts)
        f = 0.5 * rho * np.einsum("ij,ij->i", v, v) + e_int + rho * force_potential(lv, pts)
        total += f.sum()
        total_sq += (f * f).sum()
    vol = 4.0 * math.pi / 3.0
    mean = total / mc_samples
    var = max(total_sq / mc_samples - mean * mean, 0.0)
    value = vol * mean
    if return_stderr:
        return value, vol * math.sqrt(var / mc_samples)
    return value


def circulation(t: float, vertices, params: ModelParams, n_gauss: int = 5) -> float:
    """Line integral of ``v`` around the closed polygon ``vertices``."""
    lv = eval_L(params, t)
    verts = np.asarray(vertices, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    s = 0.5 * (nodes + 1.0)
    total = 0.0
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        pts = a + s[:, None] * (b - a)
        total += 0.5 * float(weights @ (velocity(lv, pts) @ (b - a)))
    return total
