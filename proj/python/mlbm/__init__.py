"""Biclustering of multilayer bipartite graphs with a Poisson latent block model."""

from ._core import (
    CannotFit,
    DimensionMismatch,
    Error,
    FitConfig,
    FitResult,
    Graph,
    GraphStats,
    HardPartition,
    InvalidInput,
    InvalidParameter,
    ModelParams,
    NumericalError,
    Side,
    SoftAssignments,
    Weighting,
    adjusted_rand_index,
    complete_log_likelihood,
    fit,
    fit_multi_restart,
    fuzzy_criterion,
    grid_search,
    icl,
    ingest_files,
    init_degree_factors,
    sample,
    summarize,
)

__version__ = "0.1.0"
