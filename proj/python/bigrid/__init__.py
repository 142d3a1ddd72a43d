"""Bi-grid Allen-Cahn finite elements."""

from ._core import (
    Error,
    FemSpace,
    InvalidArgument,
    NotFound,
    ParseError,
    Prolongation,
    SolverError,
    TriangleMesh,
    energy,
    initial_condition,
    initial_condition_names,
    interpolate,
    mass_matrix,
    norms,
    parse_config,
    preset,
    presets,
    read_mesh,
    refine,
    run_experiment,
    simulate,
    steady_residual,
    stiffness_matrix,
    unit_square_mesh,
)

__all__ = [
    "Error",
    "FemSpace",
    "InvalidArgument",
    "NotFound",
    "ParseError",
    "Prolongation",
    "SolverError",
    "TriangleMesh",
    "energy",
    "initial_condition",
    "initial_condition_names",
    "interpolate",
    "mass_matrix",
    "norms",
    "parse_config",
    "preset",
    "presets",
    "read_mesh",
    "refine",
    "run_experiment",
    "simulate",
    "steady_residual",
    "stiffness_matrix",
    "unit_square_mesh",
]
