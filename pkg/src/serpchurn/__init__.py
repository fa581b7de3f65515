"""Track news-story URIs across search result pages and measure churn."""

from .errors import (
    FitConvergenceError,
    FixtureNotFound,
    InsufficientDataError,
    OracleScaleError,
    RateLimited,
    SerpChurnError,
    SerpParseError,
    StoreMismatchError,
    StoreMissingError,
    TransportError,
    UnderdeterminedFitError,
    UndefinedRateError,
    UriParseError,
    ValidationError,
)
from .fitting import eval_model, fit_exponential, fit_from_timelines
from .metrics import (
    ChurnReport,
    IntervalSpec,
    RateKind,
    ReportCell,
    TransitionEstimate,
    avg_interval_rate,
    compute_report,
    new_story_rate,
    overlap,
    prob_seen,
    prob_seen_on_page,
    recall,
    replacement_rate,
    report_to_csv,
    transition_matrix,
)
from .model import (
    CollectionManifest,
    RefindabilityModel,
    SerpResult,
    SerpSnapshot,
    StoryTimeline,
    Vertical,
    canonicalize,
    dedup_snapshot,
)
from .oracle import oracle_report, oracle_transition_counts
from .serp_io import FetchMode, FetchPlan, build_snapshot, parse_serp_html
from .store import CollectionStore, open_store
from .synth import SynthParams, generate

__version__ = "0.1.0"

__all__ = [
    "CollectionManifest",
    "CollectionStore",
    "ChurnReport",
    "FetchMode",
    "FetchPlan",
    "FitConvergenceError",
    "FixtureNotFound",
    "InsufficientDataError",
    "IntervalSpec",
    "OracleScaleError",
    "RateKind",
    "RateLimited",
    "RefindabilityModel",
    "ReportCell",
    "SerpChurnError",
    "SerpParseError",
    "SerpResult",
    "SerpSnapshot",
    "StoreMismatchError",
    "StoreMissingError",
    "StoryTimeline",
    "SynthParams",
    "TransitionEstimate",
    "TransportError",
    "UnderdeterminedFitError",
    "UndefinedRateError",
    "UriParseError",
    "ValidationError",
    "Vertical",
    "avg_interval_rate",
    "build_snapshot",
    "canonicalize",
    "compute_report",
    "dedup_snapshot",
    "eval_model",
    "fit_exponential",
    "fit_from_timelines",
    "generate",
    "new_story_rate",
    "open_store",
    "oracle_report",
    "oracle_transition_counts",
    "overlap",
    "parse_serp_html",
    "prob_seen",
    "prob_seen_on_page",
    "recall",
    "replacement_rate",
    "report_to_csv",
    "transition_matrix",
]
