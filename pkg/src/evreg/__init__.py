"""Event detection via probability-density regression on time series.

The toolkit encodes labeled events into normalized density targets, trains
a small 1-D encoder-decoder on regression or segmentation objectives,
decodes predictions into scored events, and evaluates with a tolerance-based
event-detection AP.
"""

from .config import (
    ExperimentConfig,
    GridSpec,
    PathsSpec,
    config_from_mapping,
    load_config,
    override_seed,
)
from .decode import (
    DecodeParams,
    decode_points,
    decode_regression,
    decode_seg_peaks,
    decode_seg_threshold,
)
from .experiment import (
    CvResult,
    FoldResult,
    GridResult,
    build_dataset,
    decode_outputs,
    encode_targets,
    fold_splits,
    grid_search,
    run_cv,
)
from .metric import (
    EdapConfig,
    MatchResult,
    average_precision,
    edap,
    edap_table,
    match_events,
    prf_at_tolerance,
)
from .model import (
    ModelConfig,
    Parameters,
    TrainConfig,
    TrainResult,
    forward,
    gradients,
    init_params,
    load_params,
    loss,
    predict,
    save_params,
    train,
)
from .signal import Peak, SmoothingParams, WindowParams, find_peaks, gaussian_smooth, window_convolve
from .targets import (
    PdfSpec,
    TargetSeries,
    encode_cpd,
    encode_regression,
    encode_segmentation,
    gamma,
    make_kernel,
    sigma_schedule,
)
from .types import (
    EventSet,
    IntervalEvent,
    PointEvent,
    ScoredEvents,
    TimeSeries,
    derive_state_labels,
    points_from_intervals,
    validate_events,
    validate_series,
)

__version__ = "0.1.0"

__all__ = [
    "CvResult",
    "DecodeParams",
    "EdapConfig",
    "EventSet",
    "ExperimentConfig",
    "FoldResult",
    "GridResult",
    "GridSpec",
    "PathsSpec",
    "IntervalEvent",
    "MatchResult",
    "ModelConfig",
    "Parameters",
    "Peak",
    "PdfSpec",
    "PointEvent",
    "ScoredEvents",
    "SmoothingParams",
    "TargetSeries",
    "TimeSeries",
    "TrainConfig",
    "TrainResult",
    "WindowParams",
    "average_precision",
    "build_dataset",
    "config_from_mapping",
    "decode_outputs",
    "decode_points",
    "decode_regression",
    "decode_seg_peaks",
    "decode_seg_threshold",
    "derive_state_labels",
    "edap",
    "edap_table",
    "encode_targets",
    "fold_splits",
    "grid_search",
    "load_config",
    "override_seed",
    "run_cv",
    "encode_cpd",
    "encode_regression",
    "encode_segmentation",
    "find_peaks",
    "forward",
    "gamma",
    "gaussian_smooth",
    "gradients",
    "init_params",
    "load_params",
    "loss",
    "make_kernel",
    "match_events",
    "points_from_intervals",
    "predict",
    "prf_at_tolerance",
    "save_params",
    "sigma_schedule",
    "train",
    "validate_events",
    "validate_series",
    "window_convolve",
]
