"""Exact atom-field evolution in a truncated Fock space.

This is an independent check of the L-series: nothing here touches
:mod:`jcmflow.series` except :func:`compare_with_closed_form`, which exists to
compare the two.

Conventions: ``|0>`` is the upper atomic level (sigma_z = +1), the coupling is
``g = 1`` and the evolution is in the interaction picture at resonance,
``H_I = sigma_+ a + sigma_- a^dagger``.  ``H_I`` couples only the pairs
``{|0, n>, |1, n+1>}`` with strength ``sqrt(n+1)``; ``|1, 0>`` is stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .bloch import BlochVector, check_state, evolve_bloch
from .series import ModelParams, eval_L_grid

__all__ = [
    "FockConfig",
    "AtomState",
    "as_atom_state",
    "default_cutoff",
    "thermal_weights",
    "BlockPropagator",
    "evolve_exact",
    "reduced_state",
    "ComparisonReport",
    "compare_with_closed_form",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

STATE_TOL = 1e-12
MAX_CUTOFF = 10_000


def default_cutoff(beta: float, bound: float = 1e-12) -> int:
    """Smallest ``n`` with ``exp(-(n+1) beta) <= bound``, capped at 10**4."""
    n = max(0, math.ceil(-math.log(bound) / beta) - 1)
    while n > 0 and math.exp(-n * beta) <= bound:
        n -= 1
    while math.exp(-(n + 1) * beta) > bound:
        n += 1
    return min(n, MAX_CUTOFF)


@dataclass(frozen=True)
class FockConfig:
    """Photon-number cutoff and inverse temperature.

    ``max_discarded`` bounds the thermal weight ``exp(-(n_max+1) beta)`` lost to
    the cutoff.
    """

    n_max: int
    beta: float
    max_discarded: float = 1e-12

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max!r}")
        if self.discarded_weight > self.max_discarded:
            raise ValueError(
                f"cutoff n_max={self.n_max} discards thermal weight {self.discarded_weight:.3g} "
                f"> {self.max_discarded:.3g}")

    @classmethod
    def for_beta(cls, beta: float, max_discarded: float = 1e-12) -> "FockConfig":
        return cls(max(1, default_cutoff(beta, max_discarded)), beta, max_discarded)

    @property
    def discarded_weight(self) -> float:
        return math.exp(-(self.n_max + 1) * self.beta)


@dataclass(frozen=True)
class AtomState:
    """2x2 atomic density matrix in the basis (|0>, |1>)."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("atom state must be a 2x2 matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("atom state has non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise ValueError("atom state is not Hermitian")
        if abs(np.trace(m) - 1) > STATE_TOL:
            raise ValueError(f"atom state has trace {np.trace(m).real:.15g}, expected 1")
        if np.linalg.eigvalsh(m).min() < -STATE_TOL:
            raise ValueError("atom state has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_bloch(cls, s) -> "AtomState":
        s = check_state(s)
        return cls(0.5 * (np.eye(2) + s.x * SIGMA_X + s.y * SIGMA_Y + s.z * SIGMA_Z))

    @classmethod
    def pure(cls, ket) -> "AtomState":
        k = np.asarray(ket, dtype=complex)
        k = k / np.linalg.norm(k)
        return cls(np.outer(k, k.conj()))

    def bloch(self) -> BlochVector:
        return _bloch_of(self.matrix)


def as_atom_state(atom) -> AtomState:
    """Accept an AtomState, a 2x2 density matrix or a Bloch 3-vector."""
    if isinstance(atom, AtomState):
        return atom
    if isinstance(atom, BlochVector) or np.shape(atom) == (3,):
        return AtomState.from_bloch(atom)
    return AtomState(atom)


def _bloch_of(m) -> BlochVector:
    return BlochVector(float(np.trace(m @ SIGMA_X).real),
                       float(np.trace(m @ SIGMA_Y).real),
                       float(np.trace(m @ SIGMA_Z).real))


def thermal_weights(cfg: FockConfig) -> np.ndarray:
    """Bose-Einstein weights ``(1 - e^-beta) e^(-n beta)``, n = 0..n_max.

    Deliberately not renormalized: the missing mass is the truncation error.
    """
    n = np.arange(cfg.n_max + 1)
    return -math.expm1(-cfg.beta) * np.exp(-n * cfg.beta)


class BlockPropagator:
    """Per-block 2x2 propagators from a numerical eigendecomposition.

    Block ``k`` acts on ``(|0, k>, |1, k+1>)`` for ``k = 0..n_max``; the last
    block reaches one photon past the cutoff so that every retained initial
    ket evolves exactly.
    """

    def __init__(self, n_max: int):
        self.n_max = n_max
        g = np.sqrt(np.arange(1, n_max + 2, dtype=float))
        h = np.zeros((n_max + 1, 2, 2))
        h[:, 0, 1] = g
        h[:, 1, 0] = g
        self.evals, self.evecs = np.linalg.eigh(h)

    def at(self, t: float) -> np.ndarray:
        """Stack of unitaries ``exp(-i H_k t)``, shape (n_max+1, 2, 2)."""
        phase = np.exp(-1j * self.evals * t)
        return np.einsum("kab,kb,kcb->kac", self.evecs, phase, self.evecs.conj())


def _evolved_kets(U: np.ndarray, n_max: int) -> np.ndarray:
    """Amplitudes of U|i, n>, indexed [n, i, atom, photon]."""
    n = np.arange(n_max + 1)
    psi = np.zeros((n_max + 1, 2, 2, n_max + 2), dtype=complex)
    psi[n, 0, 0, n] = U[n, 0, 0]
    psi[n, 0, 1, n + 1] = U[n, 1, 0]
    m = n[1:]
    psi[m, 1, 0, m - 1] = U[m - 1, 0, 1]
    psi[m, 1, 1, m] = U[m - 1, 1, 1]
    psi[0, 1, 1, 0] = 1.0
    return psi


def reduced_state(atom0: AtomState, t: float, cfg: FockConfig,
                  prop: BlockPropagator | None = None) -> np.ndarray:
    """Atomic density matrix after evolving and tracing out the field."""
    prop = prop or BlockPropagator(cfg.n_max)
    w = thermal_weights(cfg)
    psi = _evolved_kets(prop.at(t), cfg.n_max)
    return np.einsum("n,ij,nikm,njlm->kl", w, atom0.matrix, psi, psi.conj())


def evolve_exact(atom0, t: float, cfg: FockConfig,
                 prop: BlockPropagator | None = None) -> BlochVector:
    """Bloch vector of the reduced atomic state at time ``t``."""
    atom0 = as_atom_state(atom0)
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"t must be finite and nonnegative, got {t!r}")
    return _bloch_of(reduced_state(atom0, t, cfg, prop))


@dataclass(frozen=True)
class ComparisonReport:
    beta: float
    n_max: int
    times: np.ndarray
    deviations: np.ndarray
    max_deviation: float
    error_budget: float

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "n_max": self.n_max,
            "max_deviation": self.max_deviation,
            "error_budget": self.error_budget,
            "times": [float(t) for t in self.times],
            "deviations": [float(d) for d in self.deviations],
        }


def compare_with_closed_form(atom0, t_grid, params: ModelParams,
                             cfg: FockConfig) -> ComparisonReport:
    """Distance between exact and closed-form Bloch vectors on ``t_grid``."""
    if params.beta != cfg.beta:
        raise ValueError(f"beta mismatch: series {params.beta} vs Fock {cfg.beta}")
    atom0 = as_atom_state(atom0)
    times = np.asarray(t_grid, dtype=float)
    prop = BlockPropagator(cfg.n_max)
    s0 = atom0.bloch()

    def deviation(t):
        exact = evolve_exact(atom0, t, cfg, prop).as_array()
        closed = evolve_bloch(s0, t, params).as_array()
        return float(np.linalg.norm(exact - closed))

    devs = np.array(ordered_map(deviation, times))
    budget = eval_L_grid(params, [0.0]).err_bound + cfg.discarded_weight
    return ComparisonReport(params.beta, cfg.n_max, times, devs,
                            float(devs.max()) if len(devs) else 0.0, budget)
