from __future__ import annotations

"""
svepath: singular stochastic Volterra equations

Euler simulation with singular kernels, the θ-heat field whose trace solves the equation,
path-independence checks for additive functionals, fBm kernels and Monte Carlo experiments.
"""

from svepath.bumps import HeatKernelFunction, QuadraticBump, ThetaBump
from svepath.coefficients import (
    CoefficientPair,
    HolderCoefficient,
    get_fixture,
    mollify,
    mollify_pair,
    scale_coefficients,
    standard_examples,
)
from svepath.config import ExperimentConfig, load_config, merge_config, save_config
from svepath.exceptions import (
    BlowUpError,
    ConvergenceError,
    DomainError,
    MomentWindowError,
    NumericalError,
    ParameterError,
    SvepathError,
    TruncationError,
    UnknownFixtureError,
)
from svepath.experiments import (
    ResultTable,
    convergence_study,
    mc_holder_modulus,
    mc_moment,
    psi_limit_table,
    simulate_ensemble,
    verify_field_study,
    verify_pi_study,
)
from svepath.fbm_kernels import (
    FbmParams,
    covariance,
    covariance_from_kernel,
    fbm_sample,
    gauss_2f1,
    kernel_exact,
    kernel_simple,
    v_constant,
)
from svepath.fractional import c_alpha, frac_forward, frac_inverse
from svepath.kernels import (
    FbmExactKernel,
    FbmSimpleKernel,
    PowerLawKernel,
    SingularKernel,
    parse_kernel_spec,
)
from svepath.path_independence import (
    AdditiveFunctional,
    CandidateV,
    ResidualReport,
    derive_g_from_v,
    fbm_verify,
    get_candidate,
    ito_functional,
    psi_limit_study,
    psi_m,
    residual_scan,
    verify_field_path_independence,
    verify_path_independence,
)
from svepath.selftest import CheckResult, run_selftest
from svepath.spde_field import (
    FieldSolution,
    InitialCondition,
    field_evaluate,
    initial_trace,
    pairing_series,
    solve_field,
    solve_trace,
    weak_form_residual,
    weighted_moment,
    zero_forcing_error_table,
)
from svepath.sve_engine import euler_solve, lp_gap, mollified_solve, picard_solve
from svepath.theta_kernel import (
    ThetaHeatKernel,
    compute_c_theta,
    delta_theta_apply,
    heat_kernel_derivatives,
    heat_kernel_eval,
    semigroup_apply,
)
from svepath.types import BrownianDriver, SamplePath, SpatialGrid, TimeGrid

__version__ = "0.3.0"

__all__ = [
    # Kernels and the θ-heat kernel
    "FbmExactKernel",
    "FbmSimpleKernel",
    "PowerLawKernel",
    "SingularKernel",
    "ThetaHeatKernel",
    "compute_c_theta",
    "delta_theta_apply",
    "heat_kernel_derivatives",
    "heat_kernel_eval",
    "parse_kernel_spec",
    "semigroup_apply",
    # Test functions
    "HeatKernelFunction",
    "QuadraticBump",
    "ThetaBump",
    # Coefficients
    "CoefficientPair",
    "HolderCoefficient",
    "get_fixture",
    "mollify",
    "mollify_pair",
    "scale_coefficients",
    "standard_examples",
    # Solvers
    "euler_solve",
    "lp_gap",
    "mollified_solve",
    "picard_solve",
    "FieldSolution",
    "InitialCondition",
    "field_evaluate",
    "initial_trace",
    "pairing_series",
    "solve_field",
    "solve_trace",
    "weak_form_residual",
    "weighted_moment",
    "zero_forcing_error_table",
    # fBm and fractional transforms
    "FbmParams",
    "c_alpha",
    "covariance",
    "covariance_from_kernel",
    "fbm_sample",
    "frac_forward",
    "frac_inverse",
    "gauss_2f1",
    "kernel_exact",
    "kernel_simple",
    "v_constant",
    # Path independence
    "AdditiveFunctional",
    "CandidateV",
    "ResidualReport",
    "derive_g_from_v",
    "fbm_verify",
    "get_candidate",
    "ito_functional",
    "psi_limit_study",
    "psi_m",
    "residual_scan",
    "verify_field_path_independence",
    "verify_path_independence",
    # Experiments
    "ExperimentConfig",
    "ResultTable",
    "convergence_study",
    "load_config",
    "mc_holder_modulus",
    "mc_moment",
    "merge_config",
    "psi_limit_table",
    "save_config",
    "simulate_ensemble",
    "verify_field_study",
    "verify_pi_study",
    "CheckResult",
    "run_selftest",
    # Types
    "BrownianDriver",
    "SamplePath",
    "SpatialGrid",
    "TimeGrid",
    # Exceptions
    "BlowUpError",
    "ConvergenceError",
    "DomainError",
    "MomentWindowError",
    "NumericalError",
    "ParameterError",
    "SvepathError",
    "TruncationError",
    "UnknownFixtureError",
]
