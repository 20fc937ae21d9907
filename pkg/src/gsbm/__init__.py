"""Robust estimation of connection probabilities in partially observed
networks: low-rank plus column-sparse decomposition with outlier detection,
link prediction and community assignment.
"""

from .exceptions import (
    ConfigError,
    ConvergenceError,
    GsbmError,
    InputError,
    ParseError,
    ShapeError,
)
from .graph_io import (
    ObservedGraph,
    largest_connected_component,
    load_fit,
    parse_edge_list,
    parse_mask,
    save_fit,
)
from .harness import (
    ExperimentSpec,
    MetricsReport,
    RepRecord,
    detection_metrics,
    prediction_error,
    run_experiment,
)
from .inference import (
    CommunityReport,
    OutlierReport,
    Prediction,
    baseline_average_degree,
    default_lambdas,
    detect_outliers,
    kkt_certificate,
    predict_links,
    resolve_lambdas,
    spectral_communities,
)
from .linalg import eigenvector_k, group_norm_21, masked_residual, top_singular_pair
from .simulate import (
    GroundTruth,
    OutlierConfig,
    SbmConfig,
    build_ground_truth,
    full_observation,
    sample_adjacency,
    sample_mask,
    split_rng,
    split_seeds,
)
from .solver import (
    FitResult,
    SolverConfig,
    SolverState,
    fit,
    grad_l,
    grad_s,
    lmo_direction,
    mcgd_iterate,
    objective_f,
    objective_phi,
    prox_s_update,
    step_size,
    upper_bound_r,
)

__version__ = "0.1.0"
