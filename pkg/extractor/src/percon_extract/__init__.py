"""Perceptual feature exporter feeding the percon toolkit."""

from .extract import (
    BACKBONES,
    POOLED_TAPS,
    SPATIAL_TAPS,
    ConfigError,
    ExtractError,
    ExtractorConfig,
    InputError,
    SegHead,
    build_backbone,
    export_confidence,
    extract_features,
    load_image,
    load_seg_head,
    preprocess,
    run_extraction,
)

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "POOLED_TAPS",
    "SPATIAL_TAPS",
    "ConfigError",
    "ExtractError",
    "ExtractorConfig",
    "InputError",
    "SegHead",
    "build_backbone",
    "export_confidence",
    "extract_features",
    "load_image",
    "load_seg_head",
    "preprocess",
    "run_extraction",
    "__version__",
]
