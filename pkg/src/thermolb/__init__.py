"""Discrete-velocity thermal lattice Boltzmann models built from a single
univariate polynomial equation, with truncated equilibria, a shock-tube
simulator and an exact Riemann reference solver."""

__version__ = "0.1.0"

from .equilibrium import (DiscreteEquilibrium, EquilibriumPolynomial,
                          ExpansionSpec, evaluate_feq, expand, expand_he,
                          expand_te, moment_accuracy, truncated_mb_moment,
                          verify_moments)
from .model_solver import (CATALOG, MultiDimModel, NoRealSolutionError,
                           RatioTuple, VelocityModel, build_polynomial,
                           closed_form_q5, detect_ghosts, resolve_catalog,
                           solve_model, tensor_product_model)
from .moments import (SqrtPiRational, discrete_moment, gaussian_moment,
                      mb_moment)
from .riemann import (GasState, RiemannSolution, VacuumError, sample,
                      sample_profile, solve_riemann)
from .simulator import (LatticeState, PlateauReport, RunResult,
                        ShockTubeConfig, Snapshot, StabilityVerdict,
                        default_step_count, extract_plateaus,
                        init_shock_tube, run, stability_scan, step)

__all__ = [
    "CATALOG", "DiscreteEquilibrium", "EquilibriumPolynomial",
    "ExpansionSpec", "GasState", "LatticeState", "MultiDimModel",
    "NoRealSolutionError", "PlateauReport", "RatioTuple", "RiemannSolution",
    "RunResult", "ShockTubeConfig", "Snapshot", "SqrtPiRational",
    "StabilityVerdict", "VacuumError", "VelocityModel", "build_polynomial",
    "closed_form_q5", "default_step_count", "detect_ghosts",
    "discrete_moment", "evaluate_feq", "expand", "expand_he", "expand_te",
    "extract_plateaus", "gaussian_moment", "init_shock_tube", "mb_moment",
    "moment_accuracy", "resolve_catalog", "run", "sample", "sample_profile",
    "solve_model", "solve_riemann", "stability_scan", "step",
    "tensor_product_model", "truncated_mb_moment", "verify_moments",
]
