"""Pixel-wise correctness prediction for unlabeled frames.

Combines the segmenter's own confidence z with the directional
consistency map (lifted to segmentation resolution) into a correctness
score alpha = z + w * rho_hat.  Higher alpha predicts a correctly
classified pixel; the error-detection score handed to ranking metrics
is -alpha.  w defaults to 1 (plain sum); other weights are an ablation
knob, not the reference behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import softmax

from .errors import ShapeError, ValidationError
from .tensor_io import ScoreMap, SegMap

_PROB_SUM_TOL = 1e-3


@dataclass
class CorrectnessPrediction:
    alpha: ScoreMap
    z: ScoreMap
    rho_hat_upsampled: ScoreMap
    t_u: int
    t_l: int


def confidence_from_scores(scores: np.ndarray, kind: str) -> ScoreMap:
    """Per-pixel confidence from a (H, W, K) score tensor.

    kind "logits" applies a per-pixel softmax first; kind "prob" takes
    the input as class probabilities, which must lie in [0, 1] and sum
    to 1 within 1e-3 per pixel.  Either way the confidence is the
    maximum class score.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] < 1:
        raise ShapeError(f"expected (H, W, K) scores, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("scores contain non-finite values")
    if kind == "logits":
        probs = softmax(arr, axis=2)
    elif kind == "prob":
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("probabilities must lie in [0, 1]")
        sums = arr.sum(axis=2)
        bad = np.abs(sums - 1.0) > _PROB_SUM_TOL
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"probabilities at pixel ({i}, {j}) sum to {sums[i, j]:.6f}, not 1"
            )
        probs = arr
    else:
        raise ValidationError(f"unknown confidence kind {kind!r}")
    return ScoreMap(values=probs.max(axis=2))


def scalar_confidence(values: np.ndarray, kind: str) -> ScoreMap:
    """Accept an already-reduced (H, W) confidence grid (kind must be prob)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected (H, W) confidence, got shape {arr.shape}")
    if kind != "prob":
        raise ValidationError(
            "per-pixel scalar confidence must be kind 'prob'; "
            "logits need the full (H, W, K) tensor"
        )
    if not np.isfinite(arr).all():
        raise ValidationError("confidence contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError("confidence values must lie in [0, 1]")
    return ScoreMap(values=arr)


def nearest_labeled_frame(t_u: int, labeled: Sequence[int]) -> int:
    """Labeled frame index closest to t_u; ties go to the earlier frame."""
    if not labeled:
        raise ValidationError("no labeled frames available")
    return min(labeled, key=lambda t: (abs(t - t_u), t))


def upsample_nearest(m: ScoreMap, target: tuple[int, int]) -> ScoreMap:
    """Nearest-neighbor lift of a feature-grid map to segmentation resolution.

    output(i, j) = m(floor(i*H_f/H), floor(j*W_f/W)); shrinking is refused.
    """
    hf, wf = m.grid
    h, w = target
    if h < hf or w < wf:
        raise ShapeError(f"cannot shrink {m.grid} map to {target}")
    rows = np.arange(h, dtype=np.int64) * hf // h
    cols = np.arange(w, dtype=np.int64) * wf // w
    return ScoreMap(values=m.values[np.ix_(rows, cols)])


def predict_correctness(
    z: ScoreMap,
    rho_hat: ScoreMap,
    t_u: int = -1,
    t_l: int = -1,
    weight: float = 1.0,
) -> CorrectnessPrediction:
    """Fuse confidence and consistency: alpha = z + weight * rho_hat.

    rho_hat must already be at z's resolution (upsample_nearest).
    """
    if z.grid != rho_hat.grid:
        raise ShapeError(
            f"confidence grid {z.grid} does not match consistency grid {rho_hat.grid}"
        )
    alpha = z.values + weight * rho_hat.values
    return CorrectnessPrediction(
        alpha=ScoreMap(values=alpha),
        z=z,
        rho_hat_upsampled=rho_hat,
        t_u=t_u,
        t_l=t_l,
    )


def correctness_labels(pred: SegMap, gt: SegMap) -> np.ndarray:
    """Binary error grid: 1 where prediction differs from ground truth.

    Mis-segmented pixels are the positive class for the downstream
    ranking metrics.
    """
    if pred.grid != gt.grid:
        raise ShapeError(f"grids differ: {pred.grid} vs {gt.grid}")
    return (pred.labels != gt.labels).astype(np.uint8)
