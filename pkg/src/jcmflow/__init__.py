"""Thermal Jaynes-Cummings Bloch-vector dynamics as a compressible, irrotational flow."""

__version__ = "0.1.0"

from .series import Certified, FixedOrder, LValues, ModelParams, eval_L, eval_L_grid, \
    tail_bound, truncation_order
from .bloch import BlochVector, Trajectory, evolve_bloch, sample_trajectory
from .fluid import EquationOfState, FluidSample, Isothermal, Polytropic, density_by_quadrature, \
    inverse_map, lagrangian_map, sample_field
from .oracle import AtomState, FockConfig, compare_with_closed_form, evolve_exact, \
    thermal_weights
from .flow import AdvectionResult, advect, circulation, continuity_residual, \
    energy_functional, ns_residual
from .intersect import IntersectionEvent, find_intersections, refine_event, scan_candidates
from .errors import DegenerateJacobian, NoConvergence, NumericalFailure, Singular, \
    StepUnderflow, WindowSingular
