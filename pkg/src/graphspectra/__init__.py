"""Spectra of quantum graphs and their thin planar neighborhoods.

The package computes quantum-graph spectra from the secular determinant of
the unitary family e^{i z 2L} sigma S, tracks root branches under changes of
the scattering data, solves planar waveguide junctions numerically for their
scattering matrices and bound states, and verifies the thin-neighborhood
eigenvalue structure mu_k = eps^-2 nu + b_k + O(eps) against direct 2D
discretizations.
"""

from .errors import AcceptanceFailure, NumericalError, ValidationError
from .graph import (Edge, GraphOperators, HalfEdge, HalfEdgeIndex, MetricGraph,
                    build_graph, graph_operators, subspace_distance)
from .scattering import (ScatteringFamily, VertexScattering, assemble_global,
                         commuting_generator, dirichlet_matrix, kirchhoff_matrix,
                         pm_eigenspaces, random_involution, synthetic_family, vertex_blocks)
from .secular import (Branch, Intersection, LeadingTermReport, RootCluster,
                      StabilityReport, UnitaryFamily, branch_point, count_roots,
                      intersect_with_line, leading_term_check, locate_roots,
                      monotonicity_certificate, stability_residual, track_branch)
from .quantumgraph import (GraphSpectrum, PositiveEigenvalue, QuantumGraphSpec,
                           ThinPrediction, eigencount_bound, oracle_spectrum,
                           positive_spectrum, thin_limit_prediction,
                           vertex_condition_residual, zero_mode_dim)
from .junction import (BoundStateResult, JunctionDomain, Port, ScatteringResult,
                       TransverseModeSet, ZeroEnergyResult, assemble_port_system,
                       bound_states, cross, l_bend, rasterize_junction,
                       scattering_matrix, scattering_matrix_at_zero,
                       scattering_solution_trace, straight_strip, transverse_modes)
from .thindomain import (ConvergenceReport, CutoffReport, EigenResult, EmbeddedGraph,
                         ModeProfileReport, RasterDomain, assemble_laplacian,
                         convergence_study, cutoff_bound_state_residual,
                         cutoff_scattering_residual, discrete_threshold, dump_eigenvector,
                         junction_for_vertex, load_eigenvector, lowest_eigenvalues, mode_profile_check,
                         rasterize, thin_eigenvalues)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
