"""Perceptual consistency measurement for video segmentation.

Scores how well a video's segmentation maps agree with dense
correspondences found by matching generic perceptual features across
frames, predicts per-pixel segmentation correctness on unlabeled
frames, and ships the conventional flow-warp baseline plus the
statistics used to compare the two.
"""

from .consistency import (
    LossBreakdown,
    PairConsistency,
    VideoConsistency,
    consistency_loss,
    directional_map,
    pair_consistency,
    video_consistency,
)
from .correctness import (
    CorrectnessPrediction,
    confidence_from_scores,
    correctness_labels,
    nearest_labeled_frame,
    predict_correctness,
    upsample_nearest,
)
from .errors import (
    FormatError,
    InsufficientFramesError,
    PerconError,
    SchemaError,
    ShapeError,
    TruncationError,
    UndefinedMeasureError,
    UnsupportedDtypeError,
    ValidationError,
)
from .flow import FlowConsistency, WarpResult, flow_consistency, miou, warp_seg
from .matching import (
    MatchResult,
    SearchConfig,
    align_seg_to_features,
    brute_force_match_constrained,
    brute_force_match_unconstrained,
    match_constrained,
    match_frames,
    match_unconstrained,
    normalize_features,
)
from .stats import (
    ClassAgreement,
    CorrelationReport,
    CurveReport,
    class_agreement,
    correlation_report,
    kendall,
    mannwhitney_auc,
    pearson,
    roc_pr,
    spearman,
)
from .tensor_io import (
    FeatureMap,
    FlowField,
    FrameRecord,
    ScoreMap,
    SegMap,
    VideoManifest,
    VideoRecord,
    load_feature_map,
    load_flow_field,
    load_manifest,
    load_score_map,
    load_seg_map,
    read_tensor,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "ClassAgreement",
    "CorrectnessPrediction",
    "CorrelationReport",
    "CurveReport",
    "FeatureMap",
    "FlowConsistency",
    "FlowField",
    "FormatError",
    "FrameRecord",
    "InsufficientFramesError",
    "LossBreakdown",
    "MatchResult",
    "PairConsistency",
    "PerconError",
    "SchemaError",
    "ScoreMap",
    "SearchConfig",
    "SegMap",
    "ShapeError",
    "TruncationError",
    "UndefinedMeasureError",
    "UnsupportedDtypeError",
    "ValidationError",
    "VideoConsistency",
    "VideoManifest",
    "VideoRecord",
    "WarpResult",
    "align_seg_to_features",
    "brute_force_match_constrained",
    "brute_force_match_unconstrained",
    "class_agreement",
    "confidence_from_scores",
    "consistency_loss",
    "correctness_labels",
    "correlation_report",
    "directional_map",
    "flow_consistency",
    "kendall",
    "load_feature_map",
    "load_flow_field",
    "load_manifest",
    "load_score_map",
    "load_seg_map",
    "mannwhitney_auc",
    "match_constrained",
    "match_frames",
    "match_unconstrained",
    "miou",
    "nearest_labeled_frame",
    "normalize_features",
    "pair_consistency",
    "pearson",
    "predict_correctness",
    "read_tensor",
    "roc_pr",
    "spearman",
    "upsample_nearest",
    "video_consistency",
    "warp_seg",
    "write_tensor",
]
