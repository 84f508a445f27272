"""Eigenvalue solvers for quantum graphs with delta couplings."""

from .fem import assemble, fem_extrapolated, fem_oracle
from .general import count_below_graph, edge_transfer, solve_spectrum_graph
from .path import count_below_path, path_segments, secular_path, solve_spectrum
from .spectrum import (
    CertificationError,
    SolverOptions,
    certification_tally,
    Spectrum,
    eigenfunction_value,
    exact_harmonic_spectrum,
    gram_matrix,
    group_clusters,
)
from .transfer import cell_integrals, transfer_const_potential, transfer_delta, transfer_free

__all__ = [
    "CertificationError",
    "SolverOptions",
    "Spectrum",
    "assemble",
    "cell_integrals",
    "certification_tally",
    "count_below_graph",
    "count_below_path",
    "edge_transfer",
    "eigenfunction_value",
    "exact_harmonic_spectrum",
    "fem_extrapolated",
    "fem_oracle",
    "gram_matrix",
    "group_clusters",
    "path_segments",
    "secular_path",
    "solve_spectrum",
    "solve_spectrum_graph",
    "transfer_const_potential",
    "transfer_delta",
    "transfer_free",
]


def solve(g, options: SolverOptions) -> Spectrum:
    """Path solver for path graphs, inertia solver otherwise."""
    return solve_spectrum(g, options) if g.is_path else solve_spectrum_graph(g, options)


__all__.append("solve")
