"""Structure-preserving kinetic toolkit for multi-species mixtures.

Velocity-grid collision operators for binary-collision and grazing-limit
dynamics with classical, Bose, and Fermi occupancy statistics, built so
the discrete operators inherit the continuum structure exactly:
conservation by construction, symmetric positive-semidefinite mobility,
entropy dissipation as a sum of squares, and a reversible/dissipative
phase-space split whose degeneracies hold to roundoff.  On top of the
operators sit time integration with diagnostics, an entropy-production
audit, a Fisher-information monotonicity audit, and desk-scale
experiments for the small-angle concentration limit.
"""

__version__ = "0.1.0"

from .species import (AngularPart, CallableAngular, ConstantAngular,
                      GrazingAngular, GrazingFamily, PairKernel, Species,
                      SpeciesSet, assumption_check, deviation_angle,
                      kernel_A, kernel_B, make_kernel, post_collision)
from .grid import (SphereQuadrature, VelocityGrid, equilibrium, field_to_csv,
                   grad_v, div_v, interpolate, load_field, moments,
                   save_field)
from .boltzmann import (CollisionResult, collision_invariants,
                        conservative_projection, entropy_dissipation_B,
                        metric_apply, metric_form, pair_gradient,
                        pair_gradient_grid, q_linear_B, q_pair, q_total,
                        weak_form)
from .landau import (entropy_dissipation_L, metric_apply_L, pi_projection,
                     grad_tilde, q_landau_pair, q_landau_total, q_linear_L,
                     weak_form_L)
from .functionals import (dH_fields, energy_E, entropy_H, entropy_density,
                          mass_per_species, mixture_moments, momentum_M)
from .generic import (FLAVORS, PhaseGrid, L_apply, M_apply, collision_rhs,
                      degeneracy_report, dE_phase, dH_phase, generic_rhs,
                      report_text)
from .fisher import (CircleGrid, FisherReport, LatLongGrid,
                     estimate_lambda_b, fisher_I, fisher_total, gamma2,
                     gamma_delta, lsi_gap, monotonicity_audit,
                     sample_even_density, sphere_B)
from .solver import (OPERATORS, ResolutionError, SimConfig, Trajectory,
                     grazing_lemma_check, grazing_sweep, h_theorem_audit,
                     initial_state, perp_identity_check, simulate, step)

__all__ = [
    "__version__",
    # species and kernels
    "AngularPart", "CallableAngular", "ConstantAngular", "GrazingAngular",
    "GrazingFamily", "PairKernel", "Species", "SpeciesSet",
    "assumption_check", "deviation_angle", "kernel_A", "kernel_B",
    "make_kernel", "post_collision",
    # grids
    "SphereQuadrature", "VelocityGrid", "equilibrium", "field_to_csv",
    "grad_v", "div_v", "interpolate", "load_field", "moments", "save_field",
    # binary-collision operator
    "CollisionResult", "collision_invariants", "conservative_projection",
    "entropy_dissipation_B", "metric_apply", "metric_form", "pair_gradient",
    "pair_gradient_grid", "q_linear_B", "q_pair", "q_total", "weak_form",
    # grazing-limit operator
    "entropy_dissipation_L", "metric_apply_L", "pi_projection", "grad_tilde",
    "q_landau_pair", "q_landau_total", "q_linear_L", "weak_form_L",
    # functionals
    "dH_fields", "energy_E", "entropy_H", "entropy_density",
    "mass_per_species", "mixture_moments", "momentum_M",
    # phase-space structure
    "FLAVORS", "PhaseGrid", "L_apply", "M_apply", "collision_rhs",
    "degeneracy_report", "dE_phase", "dH_phase", "generic_rhs",
    "report_text",
    # information functionals
    "CircleGrid", "FisherReport", "LatLongGrid", "estimate_lambda_b",
    "fisher_I", "fisher_total", "gamma2", "gamma_delta", "lsi_gap",
    "monotonicity_audit", "sample_even_density", "sphere_B",
    # solver and experiments
    "OPERATORS", "ResolutionError", "SimConfig", "Trajectory",
    "grazing_lemma_check", "grazing_sweep", "h_theorem_audit",
    "initial_state", "perp_identity_check", "simulate", "step",
]
