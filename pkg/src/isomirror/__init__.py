"""Iso-mirror estimation and change point detection for time series of networks."""

from .changepoint import (
    PiecewiseLinearFit,
    SlopeTestResult,
    cusum_slope_detect,
    grid_breakpoint,
    segmented_fit,
)
from .errors import (
    ConnectivityError,
    DegenerateInputError,
    DomainError,
    DuplicateEdgeError,
    InsufficientDataError,
    IsoMirrorError,
    ParseError,
    RankDeficiencyError,
    SpecValidationError,
)
from .graphs import (
    TemporalGraphSet,
    WeightedGraph,
    activity_stats,
    largest_common_connected_component,
    load_time_series,
    rank_transform,
    save_time_series,
    select_days,
    symmetrize,
    window_filter,
)
from .matching import (
    DoublyStochastic,
    MatchResult,
    Permutation,
    barycenter,
    correspondence_assessment,
    faq_match,
    ofv,
    random_permutation_baseline,
    solve_lap,
)
from .mirror import (
    DistanceMatrix,
    IsoMirror,
    LatentPositions,
    MirrorCurve,
    ase,
    cmds,
    distance_matrix,
    dmv_hat,
    isomap,
    mirror_pipeline,
    procrustes_align,
)
from .synth import LppSpec, pipeline_benchmark, sample_lpp, true_dmv

__version__ = "0.1.0"
