"""Adaptive tube sampling and low-tubal-rank completion of RF maps.

A fingerprint map is a real n1 x n2 x n3 array: grid rows, grid columns,
access points.  The third-mode fibers ("tubes") are the per-location
fingerprints.  This package provides the tube algebra, nuclear-norm
completion from sampled tubes, a two-pass adaptive sampler, a path-loss
simulator, and fingerprint localizers, plus file formats and experiment
drivers tying them together.
"""

from .completion import (
    FLOOR_DBM,
    CompletionConfig,
    ConvergenceReport,
    TubeSampleSet,
    complete_mc_facewise,
    complete_mc_flat,
    complete_tnn,
    completion_objective,
    svt,
)
from .experiments import (
    ExperimentSpec,
    run_budget_search,
    run_localization_cdf,
    run_recovery_curve,
)
from .formats import read_smp, read_t3b, write_smp, write_t3b
from .localize import (
    FingerprintDB,
    LocalizerConfig,
    build_db,
    empirical_cdf,
    kernel_locate,
    knn_locate,
    localization_error,
)
from .sampling import (
    AdaptiveConfig,
    MeasurementOracle,
    RunReport,
    SimulatedOracle,
    SubspaceEstimate,
    UnderdeterminedError,
    adaptive_complete,
    estimate_column_probs,
    estimate_lateral_slice,
    first_pass,
    pass_budgets,
    prob_estimate_quality,
    second_pass,
    stream,
    uniform_sample,
)
from .simulate import (
    AccessPoint,
    FloorPlan,
    NoiseConfig,
    Wall,
    add_noise,
    budget_plan,
    default_plan,
    gen_rss,
    nse,
    wall_crossings,
)
from .tensor_core import (
    NumericError,
    RegularizedInverseWarning,
    SingularSliceError,
    SvdConvergenceError,
    TSVDFactors,
    best_rank_r,
    coherence,
    fft3,
    identity_tensor,
    ifft3,
    max_column_energy,
    tinv,
    tnn,
    tprod,
    tproj,
    tsvd,
    ttranspose,
    tubal_rank,
)

__version__ = "0.1.0"

__all__ = [
    "FLOOR_DBM",
    "AccessPoint",
    "AdaptiveConfig",
    "CompletionConfig",
    "ConvergenceReport",
    "ExperimentSpec",
    "FingerprintDB",
    "FloorPlan",
    "LocalizerConfig",
    "MeasurementOracle",
    "NoiseConfig",
    "NumericError",
    "RegularizedInverseWarning",
    "RunReport",
    "SimulatedOracle",
    "SingularSliceError",
    "SubspaceEstimate",
    "SvdConvergenceError",
    "TSVDFactors",
    "TubeSampleSet",
    "UnderdeterminedError",
    "Wall",
    "adaptive_complete",
    "add_noise",
    "best_rank_r",
    "budget_plan",
    "build_db",
    "coherence",
    "complete_mc_facewise",
    "complete_mc_flat",
    "complete_tnn",
    "completion_objective",
    "default_plan",
    "empirical_cdf",
    "estimate_column_probs",
    "estimate_lateral_slice",
    "fft3",
    "first_pass",
    "gen_rss",
    "identity_tensor",
    "ifft3",
    "kernel_locate",
    "knn_locate",
    "localization_error",
    "max_column_energy",
    "nse",
    "pass_budgets",
    "prob_estimate_quality",
    "read_smp",
    "read_t3b",
    "run_budget_search",
    "run_localization_cdf",
    "run_recovery_curve",
    "second_pass",
    "stream",
    "svt",
    "tinv",
    "tnn",
    "tprod",
    "tproj",
    "tsvd",
    "ttranspose",
    "tubal_rank",
    "uniform_sample",
    "wall_crossings",
    "write_smp",
    "write_t3b",
]
