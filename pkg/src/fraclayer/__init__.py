"""Transition layers for nonlocal Allen-Cahn energies.

Computes one-dimensional transition-layer minimizers of the nonlocal
phase-transition energy for a general class of interaction kernels and
provides the measurement tools (decay fits, energy growth, the scaled
density limit, the dimensional-reduction identity) that make the layer's
asymptotic laws checkable at desk scale.
"""

from .asymptotics import (FitReport, LimitEstimate, fit_decay,
                          fit_energy_growth, lambda_star_limit,
                          log_lower_bound_check, psi_s)
from .kernels import (KernelInfinityEstimate, KernelSpec, kernel_infinity,
                      make_custom, make_fractional, make_homogeneous,
                      make_perturbed, make_truncated, second_moment,
                      tail_mass, validate)
from .operators import (EnergyBreakdown, QuadratureOptions, apply_operator,
                        beta_density, energy, residual, tail_interaction)
from .potentials import Potential, check_assumptions, quartic
from .profiles import (Profile, center, eval_extended, load_csv,
                       make_linear_init, make_tanh_init, save_csv,
                       zero_crossing)
from .reduction import (IdentityCheck, NdEnergyEstimate, ReductionResult,
                        energy_nd_ratio, extend_profile,
                        lambda_star_homogeneous, reduce_kernel,
                        unit_ball_volume, varpi, verify_identity)
from .solver import (MaxIterationsError, SolveOptions, SolveReport,
                     solve_dirichlet, solve_layer, translation_distance)

__version__ = "0.1.0"

__all__ = [
    "FitReport", "LimitEstimate", "fit_decay", "fit_energy_growth",
    "lambda_star_limit", "log_lower_bound_check", "psi_s",
    "KernelInfinityEstimate", "KernelSpec", "kernel_infinity", "make_custom",
    "make_fractional", "make_homogeneous", "make_perturbed", "make_truncated",
    "second_moment", "tail_mass", "validate",
    "EnergyBreakdown", "QuadratureOptions", "apply_operator", "beta_density",
    "energy", "residual", "tail_interaction",
    "Potential", "check_assumptions", "quartic",
    "Profile", "center", "eval_extended", "load_csv", "make_linear_init",
    "make_tanh_init", "save_csv", "zero_crossing",
    "IdentityCheck", "NdEnergyEstimate", "ReductionResult", "energy_nd_ratio",
    "extend_profile", "lambda_star_homogeneous", "reduce_kernel",
    "unit_ball_volume", "varpi", "verify_identity",
    "MaxIterationsError", "SolveOptions", "SolveReport", "solve_dirichlet",
    "solve_layer", "translation_distance",
]
