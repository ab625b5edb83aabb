"""Perceptual-consistency scores built on the dense correlation search.

A segmentation pair (y_a, y_b) is consistent with the feature
correspondences when constrained and unconstrained correlation maxima
agree.  Per pixel the score is the centered ratio

    r(i,j) = (c_dagger(i,j) - mean c_dagger) / (c_star(i,j) - mean c_star)

and a frame pair scores the mean ratio per direction, taking the worse
(minimum) direction.  A video scores the mean over consecutive pairs.

Two cases the ratio formula leaves open are fixed here: a degenerate
denominator (|c_star - mean| <= 1e-6) scores 1 when the numerator is
degenerate too, else 0; and a pixel whose class is absent from the
target frame contributes ratio 0.  The constrained mean is taken over
feasible pixels only, so the -1 infeasibility sentinel never enters it.
Ratios are deliberately not clamped: on tiny grids they can leave
[0, 1] (see the test fixtures), converging toward 1 only at realistic
pixel counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientFramesError, ValidationError
from .matching import MatchResult, SearchConfig, match_frames
from .tensor_io import FeatureMap, ScoreMap, SegMap

DEGENERATE_EPS = 1e-6


@dataclass
class PairConsistency:
    """Consistency of a segmentation pair, both directions."""

    rho: float
    rho_ab: float
    rho_ba: float
    mean_c_star_ab: float
    mean_c_dagger_ab: float
    mean_c_star_ba: float
    mean_c_dagger_ba: float
    per_pixel_ratio_ab: np.ndarray
    per_pixel_ratio_ba: np.ndarray


@dataclass
class VideoConsistency:
    """Per-consecutive-pair consistency and its mean over the video."""

    per_pair: list  # PairConsistency for (t, t+1), t = 0..T-2
    rho_tilde: float


@dataclass
class LossBreakdown:
    """Consistency training loss: per-video means of (1 - rho) and their average."""

    total: float
    per_video: list  # (name, loss, pair_count)


def _direction_ratios(match: MatchResult) -> tuple[np.ndarray, float, float]:
    """Centered-ratio grid plus the two frame means for one direction."""
    c_star = match.c_star
    c_dagger = match.c_dagger
    feasible = match.feasible
    mean_star = float(c_star.mean())
    if feasible.all():
        mean_dagger = float(c_dagger.mean())
    elif feasible.any():
        mean_dagger = float(c_dagger[feasible].mean())
    else:
        mean_dagger = float("nan")
    num = c_dagger - mean_dagger
    den = c_star - mean_star
    degenerate = np.abs(den) <= DEGENERATE_EPS
    safe_den = np.where(degenerate, 1.0, den)
    ratios = num / safe_den
    ratios[degenerate] = np.where(np.abs(num[degenerate]) <= DEGENERATE_EPS, 1.0, 0.0)
    ratios[~feasible] = 0.0
    return ratios, mean_star, mean_dagger


def pair_consistency(
    f_a: FeatureMap,
    f_b: FeatureMap,
    y_a: SegMap,
    y_b: SegMap,
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> PairConsistency:
    """Score a segmentation pair; rho is the minimum of the two directions.

    Segmentation maps must already live on the feature grids.
    """
    fwd = match_frames(f_a, f_b, y_a, y_b, cfg, direction=(0, 1), threads=threads)
    bwd = match_frames(f_b, f_a, y_b, y_a, cfg, direction=(1, 0), threads=threads)
    r_ab, ms_ab, md_ab = _direction_ratios(fwd)
    r_ba, ms_ba, md_ba = _direction_ratios(bwd)
    rho_ab = float(r_ab.mean())
    rho_ba = float(r_ba.mean())
    return PairConsistency(
        rho=min(rho_ab, rho_ba),
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        mean_c_star_ab=ms_ab,
        mean_c_dagger_ab=md_ab,
        mean_c_star_ba=ms_ba,
        mean_c_dagger_ba=md_ba,
        per_pixel_ratio_ab=r_ab,
        per_pixel_ratio_ba=r_ba,
    )


def video_consistency(
    frames: Sequence[tuple[FeatureMap, SegMap]],
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> VideoConsistency:
    """Mean pair consistency over the T-1 consecutive frame pairs."""
    if len(frames) < 2:
        raise InsufficientFramesError(
            f"video consistency needs at least 2 frames, got {len(frames)}"
        )
    per_pair = []
    for (f_a, y_a), (f_b, y_b) in zip(frames[:-1], frames[1:]):
        per_pair.append(pair_consistency(f_a, f_b, y_a, y_b, cfg, threads=threads))
    rho_tilde = sum(p.rho for p in per_pair) / len(per_pair)
    return VideoConsistency(per_pair=per_pair, rho_tilde=rho_tilde)


def directional_map(
    f_u: FeatureMap,
    f_l: FeatureMap,
    y_u: SegMap,
    s_l: SegMap,
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> ScoreMap:
    """Per-pixel consistency of an unlabeled frame against a labeled one.

    One direction only (unlabeled toward labeled): the unlabeled frame's
    predicted segmentation is checked against the labeled frame's ground
    truth through the feature correspondences.  Same centered ratio,
    degenerate and infeasibility rules as the pairwise score.
    """
    match = match_frames(f_u, f_l, y_u, s_l, cfg, direction=(0, 1), threads=threads)
    ratios, _, _ = _direction_ratios(match)
    return ScoreMap(values=ratios)


def consistency_loss(
    videos: Sequence[Sequence[tuple[FeatureMap, SegMap]]],
    window: int,
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
    names: Optional[Sequence[str]] = None,
) -> LossBreakdown:
    """Mean of (1 - rho) over frame pairs at temporal offsets 1..window.

    Each video averages over its valid (t, t+offset) pairs; the total
    averages the per-video values, so videos weigh equally regardless of
    length.  Exposed as a value (not a gradient) for training-side use.
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if not videos:
        raise ValidationError("need at least one video")
    if names is None:
        names = [f"video[{i}]" for i in range(len(videos))]
    per_video = []
    for name, frames in zip(names, videos):
        t_count = len(frames)
        if t_count < 2:
            raise InsufficientFramesError(
                f"{name}: loss needs at least 2 frames, got {t_count}"
            )
        acc = 0.0
        pairs = 0
        for t in range(t_count - 1):
            for delta in range(1, window + 1):
                if t + delta >= t_count:
                    break
                f_a, y_a = frames[t]
                f_b, y_b = frames[t + delta]
                acc += 1.0 - pair_consistency(f_a, f_b, y_a, y_b, cfg, threads=threads).rho
                pairs += 1
        per_video.append((name, acc / pairs, pairs))
    total = sum(v[1] for v in per_video) / len(per_video)
    return LossBreakdown(total=total, per_video=per_video)
