"""Maximal operators over box bases on uniform grids.

Arithmetic, harmonic, geometric and power maximal operators for dyadic cubes,
cubes and rectangles, sup-type weight constants (A_p, A_infinity, doubling,
condition A, two-weight conditions) and empirical two-weight norm checks.
"""
from .basis import CUBES, DYADIC, RECTS, Basis, BasisSet, SetUnion
from .experiments import EXPERIMENTS, ExperimentResult, run_experiment
from .grid import (CellSet, Domain, GridFormatError, GridFunction, average, integral, load_grid,
                   save_grid)
from .operators import (ARITHMETIC, GEOMETRIC, HARMONIC, MaximalField, MeanKind, SigmaNullSet,
                        dyadic_stopping_cubes, limit_harmonic_to_geometric, maximal,
                        maximal_fast_dyadic, minimal_operator, set_mean)
from .twoweight import (NormEstimate, SelectionResult, TestingReport, chain_inequality_ratio,
                        estimate_operator_norm, select_sparse_subfamily,
                        testing_constant_geometric, testing_constant_harmonic)
from .weights import (ConstantReport, ainfty_constant, ap_constant, bump_arithmetic_constant,
                      bump_harmonic_constant, condition_a_estimate, doubling_constant,
                      joint_harmonic_constant, twoweight_ainfty_constant)

__version__ = "0.1.0"

__all__ = [
    "Domain", "GridFunction", "CellSet", "GridFormatError", "integral", "average",
    "load_grid", "save_grid",
    "Basis", "BasisSet", "SetUnion", "DYADIC", "CUBES", "RECTS",
    "MeanKind", "ARITHMETIC", "HARMONIC", "GEOMETRIC", "MaximalField", "SigmaNullSet",
    "maximal", "maximal_fast_dyadic", "minimal_operator", "set_mean",
    "limit_harmonic_to_geometric", "dyadic_stopping_cubes",
    "ConstantReport", "ap_constant", "ainfty_constant", "doubling_constant",
    "condition_a_estimate", "joint_harmonic_constant", "bump_harmonic_constant",
    "bump_arithmetic_constant", "twoweight_ainfty_constant",
    "TestingReport", "NormEstimate", "SelectionResult", "testing_constant_harmonic",
    "testing_constant_geometric", "estimate_operator_norm", "select_sparse_subfamily",
    "chain_inequality_ratio",
    "ExperimentResult", "EXPERIMENTS", "run_experiment",
]
