"""Flow-warp temporal-consistency baseline.

Warps the next frame's segmentation back onto the current frame with a
dense flow field and scores agreement by masked mIoU.  This is the
conventional consistency measure the correlation analysis compares
against; it needs flow, which the perceptual score does not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    InsufficientFramesError,
    ShapeError,
    UndefinedMeasureError,
    ValidationError,
)
from .tensor_io import FlowField, SegMap


@dataclass
class WarpResult:
    warped: SegMap
    valid: np.ndarray  # (H, W) bool, False where the flow target left the frame


@dataclass
class FlowConsistency:
    per_pair: list   # (miou, excluded_pixels) per consecutive pair
    mean_miou: float


def warp_seg(y_next: SegMap, flow: FlowField) -> WarpResult:
    """Backward-gather warp: warped(i,j) = y_next(i + dv, j + dh), rounded.

    Flow channel 0 is the row (vertical) displacement, channel 1 the
    column displacement, both in pixels at the current frame.  Labels
    are categorical so the target coordinate is rounded (half away from
    zero via floor(x + 0.5)); targets outside the frame are marked
    invalid and read as label 0.
    """
    h, w = y_next.grid
    if flow.grid != (h, w):
        raise ShapeError(f"flow grid {flow.grid} does not match seg grid {(h, w)}")
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    rows = np.floor(ii + flow.values[..., 0].astype(np.float64) + 0.5).astype(np.int64)
    cols = np.floor(jj + flow.values[..., 1].astype(np.float64) + 0.5).astype(np.int64)
    valid = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    labels = np.zeros((h, w), dtype=y_next.labels.dtype)
    labels[valid] = y_next.labels[rows[valid], cols[valid]]
    return WarpResult(
        warped=SegMap(labels=labels, num_classes=y_next.num_classes), valid=valid
    )


def miou(a: SegMap, b: SegMap, mask: np.ndarray, num_classes: int) -> float:
    """Mean IoU over classes present in either map inside the mask.

    Classes absent from both maps are excluded rather than counted as
    vacuous perfect scores.
    """
    if a.grid != b.grid:
        raise ShapeError(f"grids differ: {a.grid} vs {b.grid}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.labels.shape:
        raise ShapeError(f"mask shape {mask.shape} does not match grid {a.grid}")
    if not mask.any():
        raise UndefinedMeasureError("mIoU undefined on an empty mask")
    la = a.labels[mask]
    lb = b.labels[mask]
    ious = []
    for c in range(num_classes):
        in_a = la == c
        in_b = lb == c
        union = int(np.count_nonzero(in_a | in_b))
        if union == 0:
            continue
        ious.append(int(np.count_nonzero(in_a & in_b)) / union)
    return float(sum(ious) / len(ious))


def flow_consistency(
    frames: Sequence[tuple[SegMap, Optional[FlowField]]],
    names: Optional[Sequence[str]] = None,
) -> FlowConsistency:
    """Warped mIoU per consecutive pair and its mean over the video.

    ``frames[t]`` pairs each segmentation with the flow from frame t to
    t+1 (the last frame's flow is unused and may be None).
    """
    if len(frames) < 2:
        raise InsufficientFramesError(
            f"flow consistency needs at least 2 frames, got {len(frames)}"
        )
    if names is None:
        names = [f"frame[{t}]" for t in range(len(frames))]
    per_pair = []
    for t in range(len(frames) - 1):
        seg_t, flow_t = frames[t]
        seg_next = frames[t + 1][0]
        if flow_t is None:
            raise ValidationError(f"{names[t]}: missing flow to the next frame")
        warp = warp_seg(seg_next, flow_t)
        excluded = int(warp.valid.size - np.count_nonzero(warp.valid))
        per_pair.append(
            (miou(seg_t, warp.warped, warp.valid, seg_t.num_classes), excluded)
        )
    mean = sum(v for v, _ in per_pair) / len(per_pair)
    return FlowConsistency(per_pair=per_pair, mean_miou=mean)
