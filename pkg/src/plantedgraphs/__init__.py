"""Detection and reconstruction of planted lines, stars and D-ary trees in sparse random graphs."""

from .detect import (
    H0,
    H1,
    DetectionResult,
    component_count_test,
    dary_height_messages,
    dary_test,
    k_path_test,
    lambda_hat,
    longest_path,
    run_test,
    star_test,
)
from .errors import (
    BudgetExceededError,
    DegenerateSpectrumError,
    InvalidParameterError,
    InvalidProbabilityError,
    InvalidRegimeError,
    ParseError,
    PlantedGraphError,
)
from .estimators import LineReconstructor, PlantedStructureDetector, StarReconstructor
from .experiments import SweepTable, TrialConfig, emit_csv, emit_svg_heatmap, run_trials, sweep
from .graph import (
    DaryTree,
    Graph,
    GroundTruth,
    Instance,
    Line,
    PlantSpec,
    Star,
    connected_components,
    load_edgelist,
    plant,
    sample_er,
    save_edgelist,
)
from .reconstruct import ReconstructionResult, overlap, peel, reconstruct_line, reconstruct_star
from .theory import (
    dary_thresholds,
    gw_sequence,
    lambda_d,
    line_threshold,
    m0_eigensystem,
    markov_bound_E0L2,
    p_star,
    psi_d,
    star_threshold,
)

__version__ = "0.1.0"
