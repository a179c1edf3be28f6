"""Anytime genetic search for time-series motifs with support."""

from .engine import (
    Budget,
    GaParams,
    InfeasibleTaskError,
    RunResult,
    RunTrace,
    TaskSpec,
    TraceRecord,
    evolve,
)
from .scoring import (
    SQ_EUCLIDEAN,
    DissimilarityMeasure,
    FitnessConfig,
    SegmentGroupSet,
    davies_bouldin,
    goodness,
    search_space_size,
    silhouette_index,
)
from .timeseries import Gene, Segment, Solution, TimeSeries, read_csv

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "DissimilarityMeasure",
    "FitnessConfig",
    "GaParams",
    "Gene",
    "InfeasibleTaskError",
    "RunResult",
    "RunTrace",
    "SQ_EUCLIDEAN",
    "Segment",
    "SegmentGroupSet",
    "Solution",
    "TaskSpec",
    "TimeSeries",
    "TraceRecord",
    "davies_bouldin",
    "evolve",
    "goodness",
    "read_csv",
    "search_space_size",
    "silhouette_index",
]
