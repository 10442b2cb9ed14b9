"""Self-intersections of the xz-projected Bloch trajectory.

Crossings are located on the sampled polyline with exact orientation
predicates and then refined with Newton's method on the smooth curve.  At a
crossing the two times carry different velocities, so the state in
(position, velocity) phase space never repeats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._parallel import ordered_map
from .bloch import Trajectory, check_state, sample_trajectory
from .errors import DegenerateJacobian, NoConvergence
from .series import ModelParams, eval_L

__all__ = [
    "IntersectionEvent",
    "orientation",
    "segments_cross",
    "scan_polyline",
    "scan_candidates",
    "candidate_guesses",
    "refine_event",
    "find_intersections",
]

PLANAR_TOL = 1e-12
MIN_INDEX_GAP = 10
MAX_ITER = 50
DET_FLOOR = 1e-14
COLLAPSE_TOL = 1e-8
_EPS = np.finfo(float).eps
_ORIENT_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
_BLOCK = 512


@dataclass(frozen=True)
class IntersectionEvent:
    t1: float
    t2: float
    point: np.ndarray
    v_at_t1: np.ndarray
    v_at_t2: np.ndarray
    phase_gap: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "point": [float(c) for c in self.point],
            "v_at_t1": [float(c) for c in self.v_at_t1],
            "v_at_t2": [float(c) for c in self.v_at_t2],
            "phase_gap": self.phase_gap,
            "residual": self.residual,
        }


def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    det = ((Fraction(b[0]) - ax) * (Fraction(c[1]) - ay)
           - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax))
    return (det > 0) - (det < 0)


def orientation(a, b, c) -> int:
    """Sign of the signed area of triangle (a, b, c), computed exactly."""
    l = (b[0] - a[0]) * (c[1] - a[1])
    r = (b[1] - a[1]) * (c[0] - a[0])
    det = l - r
    if abs(det) > _ORIENT_ERRBOUND * (abs(l) + abs(r)):
        return int(np.sign(det))
    return _orient_exact(a, b, c)


def segments_cross(p, q, r, s) -> bool:
    """True when segments pq and rs cross at a single interior point."""
    o1, o2 = orientation(p, q, r), orientation(p, q, s)
    o3, o4 = orientation(r, s, p), orientation(r, s, q)
    return o1 * o2 < 0 and o3 * o4 < 0


def _orient_filtered(ax, ay, bx, by, cx, cy):
    # float signs plus a mask of entries too close to call
    l = (bx - ax) * (cy - ay)
    r = (by - ay) * (cx - ax)
    det = l - r
    unsure = np.abs(det) <= _ORIENT_ERRBOUND * (np.abs(l) + np.abs(r))
    return np.sign(det), unsure


def scan_polyline(xy, min_gap: int = 2) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)``, ``j - i >= min_gap``, of properly crossing segments.

    Segment ``i`` joins ``xy[i]`` and ``xy[i + 1]``.  Pairs are returned in
    lexicographic order.
    """
    xy = np.asarray(xy, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError("polyline must be an (n, 2) array")
    min_gap = max(int(min_gap), 2)
    P, Q = xy[:-1], xy[1:]
    nseg = len(P)
    lo = np.minimum(P, Q)
    hi = np.maximum(P, Q)
    out = []
    for start in range(0, nseg, _BLOCK):
        i = np.arange(start, min(start + _BLOCK, nseg))
        j = np.arange(nseg)
        ii, jj = np.meshgrid(i, j, indexing="ij")
        keep = jj - ii >= min_gap
        keep &= np.all(lo[jj] <= hi[ii], axis=-1) & np.all(lo[ii] <= hi[jj], axis=-1)
        ci, cj = ii[keep], jj[keep]
        if len(ci) == 0:
            continue
        p, q, r, s = P[ci], Q[ci], P[cj], Q[cj]
        o1, u1 = _orient_filtered(p[:, 0], p[:, 1], q[:, 0], q[:, 1], r[:, 0], r[:, 1])
        o2, u2 = _orient_filtered(p[:, 0], p[:, 1], q[:, 0], q[:, 1], s[:, 0], s[:, 1])
        o3, u3 = _orient_filtered(r[:, 0], r[:, 1], s[:, 0], s[:, 1], p[:, 0], p[:, 1])
        o4, u4 = _orient_filtered(r[:, 0], r[:, 1], s[:, 0], s[:, 1], q[:, 0], q[:, 1])
        unsure = u1 | u2 | u3 | u4
        hit = (o1 * o2 < 0) & (o3 * o4 < 0) & ~unsure
        for k in np.flatnonzero(unsure):
            if segments_cross(p[k], q[k], r[k], s[k]):
                hit[k] = True
        out.extend(zip(ci[hit].tolist(), cj[hit].tolist()))
    out.sort()
    return out


def scan_candidates(traj: Trajectory, min_gap: int = MIN_INDEX_GAP) -> list[tuple[int, int]]:
    """Crossing segment pairs of a trajectory confined to the xz-plane.

    Adjacent segments and pairs fewer than ``min_gap`` samples apart are
    skipped so that the curve never matches itself trivially.
    """
    pts = np.asarray(traj.points)
    if len(pts) < 3:
        raise ValueError("need at least two segments")
    if np.max(np.abs(pts[:, 1])) > PLANAR_TOL:
        raise ValueError("trajectory leaves the xz-plane; projected crossings are not defined")
    return scan_polyline(pts[:, [0, 2]], min_gap)


def candidate_guesses(traj: Trajectory, pair: tuple[int, int]) -> tuple[float, float]:
    """Times at the crossing of the two linear segments in ``pair``."""
    i, j = pair
    xy = np.asarray(traj.points)[:, [0, 2]]
    p, q, r, s = xy[i], xy[i + 1], xy[j], xy[j + 1]
    d1, d2 = q - p, s - r
    den = d1[0] * d2[1] - d1[1] * d2[0]
    w = r - p
    a = (w[0] * d2[1] - w[1] * d2[0]) / den
    b = (w[0] * d1[1] - w[1] * d1[0]) / den
    t = traj.times
    return (float(t[i] + a * (t[i + 1] - t[i])), float(t[j] + b * (t[j + 1] - t[j])))


def _xz_state(lv, s0):
    pos = np.array([lv.L1 * s0.x, lv.L3 * s0.z + lv.L4])
    vel = np.array([lv.dL1 * s0.x, lv.dL3 * s0.z + lv.dL4])
    return pos, vel


def refine_event(t1_guess: float, t2_guess: float, params: ModelParams, s0,
                 tol: float = 1e-10, max_iter: int = MAX_ITER) -> IntersectionEvent:
    """Newton iteration on ``S_xz(t1) - S_xz(t2) = 0`` with analytic Jacobian."""
    s0 = check_state(s0)
    if abs(s0.y) > PLANAR_TOL:
        raise ValueError("initial state must lie in the xz-plane")
    t1, t2 = float(t1_guess), float(t2_guess)
    for _ in range(max_iter):
        p1, v1 = _xz_state(eval_L(params, t1), s0)
        p2, v2 = _xz_state(eval_L(params, t2), s0)
        F = p1 - p2
        if np.linalg.norm(F) <= tol:
            break
        J = np.column_stack([v1, -v2])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) < DET_FLOOR:
            raise DegenerateJacobian(f"|det J| = {abs(det):.3g} at t1={t1:.12g}, t2={t2:.12g}")
        d = np.linalg.solve(J, -F)
        t1 += d[0]
        t2 += d[1]
    else:
        raise NoConvergence(f"Newton did not reach |F| <= {tol:g} in {max_iter} iterations "
                            f"(t1={t1:.12g}, t2={t2:.12g}, |F|={np.linalg.norm(F):.3g})")
    if abs(t1 - t2) < COLLAPSE_TOL:
        raise DegenerateJacobian(f"refinement collapsed onto the single time t={t1:.12g}; "
                                 "a curve trivially meets itself there")
    if t1 > t2:
        t1, t2, p1, p2, v1, v2 = t2, t1, p2, p1, v2, v1
    gap = float(np.linalg.norm(np.concatenate([p1 - p2, v1 - v2])))
    return IntersectionEvent(float(t1), float(t2), 0.5 * (p1 + p2), v1, v2, gap,
                             float(np.linalg.norm(F)))


def find_intersections(s0, t_max: float, dt: float, params: ModelParams,
                       tol: float = 1e-10) -> list[IntersectionEvent]:
    """Sample, scan and refine all crossings on ``[0, t_max]``.

    Events whose refined times leave the window or coincide with an event
    already found are dropped.
    """
    traj = sample_trajectory(s0, t_max, dt, params)
    pairs = scan_candidates(traj)

    def refine(pair):
        g1, g2 = candidate_guesses(traj, pair)
        return refine_event(g1, g2, params, traj.s0, tol)

    events = []
    for ev in sorted(ordered_map(refine, pairs), key=lambda e: (e.t1, e.t2)):
        if ev.t1 < -dt or ev.t2 > t_max + dt:
            continue
        if ev.t2 - ev.t1 < MIN_INDEX_GAP * dt / 2:
            continue
        if events and math.isclose(ev.t1, events[-1].t1, abs_tol=1e-8) \
                and math.isclose(ev.t2, events[-1].t2, abs_tol=1e-8):
            continue
        events.append(ev)
    return events
