"""Numerical laboratory for the imaginary-time semigroups of the three
magnetic relativistic Schrodinger operators: spectral oracles, Chernoff
product approximants, and Levy-process Monte Carlo."""

__version__ = "0.1.0"

from .fields import Field, GridSpec, make_grid
from .potentials import PotentialSpec, potential_preset
from .symbols import bessel_k, symbol_of_norm, symbol_value
from .levy import (
    PathSkeleton,
    RngStream,
    SubordinatorPath,
    levy_density,
    sample_path_skeleton,
    sample_relativistic_increment,
    sample_subordinator_increment,
    sample_subordinator_path,
    verify_levy_khinchin,
)
from .propagators import (
    apply_free_semigroup,
    apply_heat_semigroup,
    free_heat_kernel,
    free_relativistic_kernel,
)
from .oracles import (
    OperatorMatrix,
    build_h1,
    build_h2,
    build_h3,
    build_hnr,
    build_operator,
    semigroup_apply,
)
from .chernoff import ConvergenceReport, iterate, rate_study, step
from .montecarlo import (
    GaussianData,
    McEstimate,
    estimate_h1,
    estimate_h2,
    estimate_h3,
    estimate_nr,
    slice_refinement_study,
)

__all__ = [
    "Field",
    "GridSpec",
    "make_grid",
    "PotentialSpec",
    "potential_preset",
    "bessel_k",
    "symbol_of_norm",
    "symbol_value",
    "PathSkeleton",
    "RngStream",
    "SubordinatorPath",
    "levy_density",
    "sample_path_skeleton",
    "sample_relativistic_increment",
    "sample_subordinator_increment",
    "sample_subordinator_path",
    "verify_levy_khinchin",
    "apply_free_semigroup",
    "apply_heat_semigroup",
    "free_heat_kernel",
    "free_relativistic_kernel",
    "OperatorMatrix",
    "build_h1",
    "build_h2",
    "build_h3",
    "build_hnr",
    "build_operator",
    "semigroup_apply",
    "ConvergenceReport",
    "iterate",
    "rate_study",
    "step",
    "GaussianData",
    "McEstimate",
    "estimate_h1",
    "estimate_h2",
    "estimate_h3",
    "estimate_nr",
    "slice_refinement_study",
]
