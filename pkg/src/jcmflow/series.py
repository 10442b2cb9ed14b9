"""Thermal Jaynes-Cummings coefficient series L1, L3, L4.

All times are dimensionless (units of 1/|g|) and ``beta`` is the inverse
temperature in units of 1/(hbar*omega).  With ``x = exp(-beta)``::

    L1(t) = (1 - x) * sum_{n>=0} cos(sqrt(n+1) t) cos(sqrt(n) t) x**n
    L3(t) =  (1 - x)/2 + (1 - x**2)/2 * sum_{n>=1} cos(2 sqrt(n) t) x**(n-1)
    L4(t) = -(1 - x)/2 + (1 - x)**2/2 * sum_{n>=1} cos(2 sqrt(n) t) x**(n-1)

The L3/L4 weights are the usual ``sinh(beta) x**n`` and
``(e**beta - 1)**2 / (2 e**beta) x**n`` rewritten so that nothing overflows
at large ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "FixedOrder",
    "Certified",
    "ModelParams",
    "LValues",
    "tail_bound",
    "truncation_order",
    "resolve_order",
    "eval_L",
    "eval_L_grid",
]

DEFAULT_ORDER = 150


@dataclass(frozen=True)
class FixedOrder:
    """Sum every series up to and including index ``N``."""

    N: int = DEFAULT_ORDER

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"FixedOrder.N must be a nonnegative integer, got {self.N!r}")


@dataclass(frozen=True)
class Certified:
    """Pick the smallest order whose truncation bound is below ``tol``."""

    tol: float

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"Certified.tol must be positive and finite, got {self.tol!r}")


Truncation = Union[FixedOrder, Certified]


@dataclass(frozen=True)
class ModelParams:
    """Physical configuration: inverse temperature and truncation policy."""

    beta: float
    trunc: Truncation = FixedOrder()

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta!r}")
        if not isinstance(self.trunc, (FixedOrder, Certified)):
            raise TypeError(f"unsupported truncation policy {self.trunc!r}")


@dataclass(frozen=True)
class LValues:
    """L1, L3, L4 with first and second time derivatives at one time.

    ``err_bound`` bounds the truncation error of all nine values; it does not
    include floating-point rounding.
    """

    t: float
    L1: float
    L3: float
    L4: float
    dL1: float
    dL3: float
    dL4: float
    ddL1: float
    ddL3: float
    ddL4: float
    err_bound: float
    N: int

    def as_array(self) -> np.ndarray:
        return np.array([self.L1, self.L3, self.L4,
                         self.dL1, self.dL3, self.dL4,
                         self.ddL1, self.ddL3, self.ddL4])


def _max_prefactor_times_tail_start(beta, N):
    # max over the three series of (weight of x**n) * x**(N+1)
    x = math.exp(-beta)
    one_minus_x = -math.expm1(-beta)
    l1 = one_minus_x * x ** (N + 1)
    l3 = 0.5 * one_minus_x * (1.0 + x) * x ** N
    return max(l1, l3)


def tail_bound(beta: float, N: int, order: int = 0) -> float:
    """Upper bound on the truncation error after summing up to index ``N``.

    ``order`` 0 is the bound ``exp(-(N+1) beta)`` on the L1 tail.  Orders 1 and
    2 bound the tails of the differentiated series, using
    ``|term| <= 2 (n+1) w_n`` and ``4 (n+1) w_n`` respectively, where ``w_n`` is
    the largest of the three series weights, and the closed form of
    ``sum_{n>N} (n+1) x**n``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if N < 0:
        raise ValueError("N must be nonnegative")
    if order == 0:
        return math.exp(-(N + 1) * beta)
    if order not in (1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    x = math.exp(-beta)
    one_minus_x = -math.expm1(-beta)
    weighted = ((N + 2) - (N + 1) * x) / one_minus_x ** 2
    scale = 2.0 if order == 1 else 4.0
    return scale * _max_prefactor_times_tail_start(beta, N) * weighted


def truncation_order(params: ModelParams, order: int = 0) -> int:
    """Smallest ``N`` with ``tail_bound(beta, N, order) <= tol``."""
    if not isinstance(params.trunc, Certified):
        raise ValueError("truncation_order needs a Certified truncation policy")
    tol = params.trunc.tol
    beta = params.beta
    # analytic start for order 0, then walk to the exact smallest N
    N = max(0, math.ceil(-math.log(tol) / beta) - 1) if order == 0 else 0
    while N > 0 and tail_bound(beta, N - 1, order) <= tol:
        N -= 1
    while tail_bound(beta, N, order) > tol:
        N += 1
    return N


def resolve_order(params: ModelParams) -> int:
    """Summation order used by :func:`eval_L` for these parameters."""
    if isinstance(params.trunc, FixedOrder):
        return int(params.trunc.N)
    return max(truncation_order(params, k) for k in (0, 1, 2))


def _certified_err(beta, N):
    # order 1 and 2 bounds dominate every order-0 tail including L3/L4
    return max(tail_bound(beta, N, k) for k in (0, 1, 2))


def _sums(beta, N, t):
    """Nine series values for a 1-d array of times, summed in descending n."""
    t = np.asarray(t, dtype=float)
    x = math.exp(-beta)
    one_minus_x = -math.expm1(-beta)

    n = np.arange(N, -1, -1, dtype=float)[:, None]  # descending
    w1 = one_minus_x * x ** n
    a = np.sqrt(n + 1.0)
    b = np.sqrt(n)
    at = a * t
    bt = b * t
    ca, sa = np.cos(at), np.sin(at)
    cb, sb = np.cos(bt), np.sin(bt)
    f0 = ca * cb
    f1 = -(a * sa * cb + b * ca * sb)
    f2 = -(a * a + b * b) * f0 + 2.0 * a * b * sa * sb

    # L3/L4 share sum_{n>=1} x**(n-1) g_n(t) with g_n = cos(2 sqrt(n) t)
    m = n[:-1]  # N, ..., 1
    wg = x ** (m - 1.0)
    c2 = 2.0 * np.sqrt(m)
    c2t = c2 * t
    g0 = np.cos(c2t)
    g1 = -c2 * np.sin(c2t)
    g2 = -(c2 * c2) * g0

    def seq_sum(terms):
        # cumsum accumulates strictly in row order, unlike np.sum
        if terms.shape[0] == 0:
            return np.zeros(t.shape)
        return np.cumsum(terms, axis=0)[-1]

    S1 = seq_sum(w1 * f0)
    dS1 = seq_sum(w1 * f1)
    ddS1 = seq_sum(w1 * f2)
    G = seq_sum(wg * g0)
    dG = seq_sum(wg * g1)
    ddG = seq_sum(wg * g2)

    c3 = 0.5 * one_minus_x * (1.0 + x)
    c4 = 0.5 * one_minus_x * one_minus_x
    half = 0.5 * one_minus_x
    return (S1, half + c3 * G, -half + c4 * G,
            dS1, c3 * dG, c4 * dG,
            ddS1, c3 * ddG, c4 * ddG)


@dataclass(frozen=True)
class LGrid:
    """Vectorized counterpart of :class:`LValues` over an array of times."""

    t: np.ndarray
    L1: np.ndarray
    L3: np.ndarray
    L4: np.ndarray
    dL1: np.ndarray
    dL3: np.ndarray
    dL4: np.ndarray
    ddL1: np.ndarray
    ddL3: np.ndarray
    ddL4: np.ndarray
    err_bound: float
    N: int

    def __len__(self):
        return len(self.t)

    def at(self, i: int) -> LValues:
        return LValues(float(self.t[i]), *(float(getattr(self, f)[i]) for f in _FIELDS),
                       err_bound=self.err_bound, N=self.N)


_FIELDS = ("L1", "L3", "L4", "dL1", "dL3", "dL4", "ddL1", "ddL3", "ddL4")


def eval_L_grid(params: ModelParams, times) -> LGrid:
    """Evaluate all nine series values on an array of times.

    Each time is processed independently with the same arithmetic as
    :func:`eval_L`, so ``eval_L_grid(p, ts).at(i)`` equals ``eval_L(p, ts[i])``
    bit for bit.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    N = resolve_order(params)
    vals = _sums(params.beta, N, times)
    return LGrid(times, *vals, err_bound=_certified_err(params.beta, N), N=N)


def eval_L(params: ModelParams, t: float) -> LValues:
    """L-series values and derivatives at time ``t``.

    Negative times are accepted; the series are even (L) or odd (dL) in ``t``.
    """
    return eval_L_grid(params, [t]).at(0)
