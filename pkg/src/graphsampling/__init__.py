"""Sampling-set selection and bandlimited reconstruction of graph signals.

Typical use::

    from graphsampling import build_knn_gaussian, greedy_select, predict, LabeledOracle

    graph = build_knn_gaussian(X)
    sset = greedy_select(graph, m=20, k=8)
    pred = predict(graph, sset, LabeledOracle(labels))
"""

__version__ = "0.1.0"

from .filters import (
    SpectralKernel,
    apply_exact_filter,
    apply_filter,
    chebyshev_approximate,
    ideal_kernel,
    polynomial_kernel,
    sigmoid_kernel,
)
from .graph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    IsolatedNodeError,
    OracleSizeError,
    SpectralBasis,
    dense_spectral_basis,
    gft,
    igft,
    laplacian_apply,
    laplacian_power_apply,
    read_edge_list,
    write_edge_list,
)
from .knn import (
    DegenerateDataError,
    GraphBuildConfig,
    build_graph,
    build_knn_cosine,
    build_knn_gaussian,
    make_blobs,
    make_two_circles,
    tfidf_features,
)
from .reconstruct import (
    PocsConfig,
    PocsResult,
    RankDeficiencyError,
    SampledSignal,
    least_squares_reconstruct,
    pocs_reconstruct,
    sample,
)
from .sampling import (
    SamplingSet,
    bandwidth_estimate,
    estimate_cutoff,
    greedy_select,
    partial_out_degree_ratios,
    surrogate_cutoff_min_ratio,
)
from .solver import (
    ConvergenceError,
    EigenPair,
    SolverConfig,
    dense_restricted_eigenpair,
    restricted_operator_apply,
    smallest_eigenpair_restricted,
)
from .ssl import (
    LabeledOracle,
    MembershipPrediction,
    gft_energy_cdf,
    membership_signals,
    min_labels_lower_bound,
    predict,
    smoothness_gamma,
)
from .bench import ConfigError, RunConfig, emit_spectrum_report, random_baseline_select, run_benchmark
