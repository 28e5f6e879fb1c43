"""Numerical verification of weighted decay estimates for radial waves with a potential."""
from __future__ import annotations

from .duhamel import (
    InitialDataSpec,
    IterationReport,
    RadialPotential,
    SolverError,
    SolverOptions,
    SourceSpec,
    free_solution,
    solve_fixed_point,
    solve_with_source,
    time_derivative_data,
)
from .geometry import cone_integral, sphere_average_radial, sphere_integral_closed_form
from .profiles import bump_data, gaussian_data, model_data, model_potential, model_source
from .weights import ConstantSet, SpacetimeSampleSet, WeightedNormParams, theorem_constants

__version__ = "0.1.0"

__all__ = [
    "ConstantSet",
    "InitialDataSpec",
    "IterationReport",
    "RadialPotential",
    "SolverError",
    "SolverOptions",
    "SourceSpec",
    "SpacetimeSampleSet",
    "WeightedNormParams",
    "bump_data",
    "cone_integral",
    "free_solution",
    "gaussian_data",
    "model_data",
    "model_potential",
    "model_source",
    "solve_fixed_point",
    "solve_with_source",
    "sphere_average_radial",
    "sphere_integral_closed_form",
    "theorem_constants",
    "time_derivative_data",
]
