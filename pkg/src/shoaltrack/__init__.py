"""Fixed-cardinality multi-object tracking for fish schools.

Detections in, HOTA out: a SORT/ByteTrack-style tracker with cardinality
extensions, an offline track connector, a HOTA evaluator, hyperparameter
search, and a synthetic school generator.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .assign import AssignmentResult, solve_lap
from .connector import ConnectorConfig, connect, track_distance
from .geometry import center_distance, iou, iou_matrix
from .metrics import ALPHAS, MetricsReport, evaluate, evaluate_report_table
from .mot_io import BBox, Detection, Sequence, Track, TrackPoint, parse_mot, write_mot
from .motion import KalmanState, kf_init, kf_predict, kf_update
from .synth import CorruptionConfig, SchoolConfig, corrupt, generate_school
from .tracker import TrackerConfig, run_sequence
from .tuner import Param, SearchSpace, coordinate_ascent, random_search

__all__ = [
    "ALPHAS", "AssignmentResult", "BACKEND", "BBox", "ConnectorConfig", "CorruptionConfig",
    "Detection", "KalmanState", "MetricsReport", "Param", "SchoolConfig", "SearchSpace",
    "Sequence", "Track", "TrackPoint", "TrackerConfig", "center_distance", "connect",
    "coordinate_ascent", "corrupt", "evaluate", "evaluate_report_table", "generate_school",
    "iou", "iou_matrix", "kf_init", "kf_predict", "kf_update", "parse_mot", "random_search",
    "run_sequence", "solve_lap", "track_distance", "write_mot",
]
