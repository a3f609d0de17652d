"""Simulator and verification toolkit for the H-free random graph process."""

from .graphs import (
    GraphSpec, ForbiddenGraph, RootedPattern, ExtensionSeries,
    PairClassification, GraphFormatError, SizeCapError,
    parse_graph, parse_preset, graph_from_spec_string,
    complete_graph, cycle_graph, complete_bipartite_graph,
    automorphisms, automorphism_count, contains_subgraph,
    is_strictly_two_balanced, p_exponent, forbidden_graph,
    scaling_exponent, pair_scaling_exponent, classify_pair, extension_series,
)
from .process import ProcessState, StepRecord, RunResult, Status
from .extensions import (
    ExtensionPattern, Anchor, TrackSample, Tracker,
    count_extensions, count_embeddings, enumerate_extensions,
    is_trackable, closure_quadruples, quadruple_orbit_reps,
    closure_identity_check, delta_decomposition, closed_overlap,
    build_catalogue, parse_pattern,
    q_pattern, degree_pattern, common_neighbor_pattern, closure_pattern,
)
from .trajectory import (
    TrajectoryParams, EnvelopeRow, q_of_t, c_of_t, x_of_t, p_of_t, e_of_t,
    gamma_of_t, theta_of_t, envelope, envelope_row, ode_residual,
    martingale_tail, alpha_bound,
)
from .analysis import (
    CensusReport, FitResult, DegreeStats, IndependenceResult, ProbeResult,
    degree_stats, common_neighbors, subgraph_census, classify_regime,
    independence_number, open_pairs_within, smooth_independence_probe,
    edges_between, exponent_fit,
)

__version__ = "0.1.0"
