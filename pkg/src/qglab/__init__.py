"""Numerical lab for quantum graphs with delta couplings: spectra, Weyl laws, gap means, heat kernels."""

from .graph import (
    Delta,
    Dirichlet,
    GraphPoint,
    GraphValidationError,
    LengthRule,
    MetricGraph,
    PathFamily,
    PiecewisePotential,
    SigmaSequence,
    attach_delta_vertices,
    build_path_graph,
    star_graph,
    truncate_family,
)
from .solver import CertificationError, SolverOptions, Spectrum, solve, solve_spectrum, solve_spectrum_graph

__version__ = "0.1.0"

__all__ = [
    "CertificationError",
    "Delta",
    "Dirichlet",
    "GraphPoint",
    "GraphValidationError",
    "LengthRule",
    "MetricGraph",
    "PathFamily",
    "PiecewisePotential",
    "SigmaSequence",
    "SolverOptions",
    "Spectrum",
    "attach_delta_vertices",
    "build_path_graph",
    "solve",
    "solve_spectrum",
    "solve_spectrum_graph",
    "star_graph",
    "truncate_family",
]
