"""Evaluation statistics.

Rank correlations between consistency series, ROC / precision-recall
curves for correctness prediction, and the cross-frame class-agreement
analysis of dense correspondences.

Correlations and curves are computed from first principles on purpose:
the exact tie conventions (average ranks, tau-b tie terms, tie-grouped
threshold sweeps, step-integrated average precision) are part of this
package's contract, and the Mann-Whitney pair statistic doubles as an
independent cross-check of the ROC area.  Only ranking itself is
delegated (scipy.stats.rankdata).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ShapeError, UndefinedMeasureError, ValidationError
from .matching import _source_blocks
from .tensor_io import FeatureMap, SegMap


@dataclass
class CorrelationReport:
    pearson: float
    spearman: float
    kendall: float
    n: int


@dataclass
class CurveReport:
    points: list  # ordered (x, y)
    auc: float
    positive_count: int
    negative_count: int


@dataclass
class ClassAgreement:
    top1_rate: float
    topk_rate: float
    corr_gap: float
    k: int


def _as_series(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ShapeError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValidationError(f"need at least 2 samples, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("series contain non-finite values")
    return x, y


def pearson(x, y) -> float:
    """Sample Pearson correlation; undefined when either series is constant."""
    x, y = _as_series(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise UndefinedMeasureError("correlation undefined for a constant series")
    return float((dx @ dy) / np.sqrt(vx * vy))


def spearman(x, y) -> float:
    """Pearson correlation of average-fractional ranks."""
    x, y = _as_series(x, y)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def kendall(x, y) -> float:
    """Kendall tau-b by exhaustive pair enumeration.

    tau_b = (C - D) / sqrt((n0 - n1) (n0 - n2)) with n0 = n(n-1)/2 and
    n1, n2 the tied-pair counts in x and y.
    """
    x, y = _as_series(x, y)
    iu, ju = np.triu_indices(x.size, k=1)
    sx = np.sign(x[iu] - x[ju])
    sy = np.sign(y[iu] - y[ju])
    concordant = int(np.count_nonzero(sx * sy > 0))
    discordant = int(np.count_nonzero(sx * sy < 0))
    n0 = iu.size
    n1 = int(np.count_nonzero(sx == 0))
    n2 = int(np.count_nonzero(sy == 0))
    if n0 == n1 or n0 == n2:
        raise UndefinedMeasureError("kendall tau undefined for an all-tied series")
    return float((concordant - discordant) / np.sqrt((n0 - n1) * (n0 - n2)))


def correlation_report(x, y) -> CorrelationReport:
    x, y = _as_series(x, y)
    return CorrelationReport(
        pearson=pearson(x, y),
        spearman=spearman(x, y),
        kendall=kendall(x, y),
        n=int(x.size),
    )


def roc_pr(scores, labels) -> tuple[CurveReport, CurveReport]:
    """ROC and PR curves with a tie-grouped descending threshold sweep.

    Higher score must mean more likely positive.  ROC area uses the
    trapezoid rule; the PR area is average precision (step integration,
    no interpolation).  Tied scores collapse into a single sweep point,
    so permuting equal-scored samples cannot change either curve.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    lab = np.asarray(labels).reshape(-1)
    if s.shape != lab.shape:
        raise ShapeError(f"scores/labels lengths differ: {s.size} vs {lab.size}")
    if not np.isfinite(s).all():
        raise ValidationError("scores contain non-finite values")
    if not np.isin(lab, (0, 1)).all():
        raise ValidationError("labels must be binary")
    lab = lab.astype(np.int64)
    pos = int(lab.sum())
    neg = int(lab.size - pos)
    if pos == 0 or neg == 0:
        raise UndefinedMeasureError("both classes must be present")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    l_sorted = lab[order]
    # last index of each tie group in the descending order
    group_end = np.flatnonzero(np.diff(s_sorted) != 0)
    group_end = np.append(group_end, s.size - 1)
    tp = np.cumsum(l_sorted)[group_end]
    fp = (group_end + 1) - tp

    tpr = tp / pos
    fpr = fp / neg
    roc_x = np.concatenate(([0.0], fpr))
    roc_y = np.concatenate(([0.0], tpr))
    roc_auc = float(np.sum(np.diff(roc_x) * (roc_y[1:] + roc_y[:-1])) / 2.0)
    roc = CurveReport(
        points=list(zip(roc_x.tolist(), roc_y.tolist())),
        auc=roc_auc,
        positive_count=pos,
        negative_count=neg,
    )

    recall = tp / pos
    precision = tp / (group_end + 1)
    prev_r = np.concatenate(([0.0], recall[:-1]))
    ap = float(np.sum((recall - prev_r) * precision))
    pr = CurveReport(
        points=list(zip(recall.tolist(), precision.tolist())),
        auc=ap,
        positive_count=pos,
        negative_count=neg,
    )
    return roc, pr


def mannwhitney_auc(scores, labels) -> float:
    """ROC area by direct (positive, negative) pair counting, ties as 1/2.

    Quadratic in sample count; the independent cross-check for roc_pr.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    lab = np.asarray(labels).astype(np.int64).reshape(-1)
    ps = s[lab == 1]
    ns = s[lab == 0]
    if ps.size == 0 or ns.size == 0:
        raise UndefinedMeasureError("both classes must be present")
    diff = ps[:, None] - ns[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (ps.size * ns.size))


def class_agreement(
    f_a: FeatureMap,
    f_b: FeatureMap,
    gt_a: SegMap,
    gt_b: SegMap,
    k: int = 1,
) -> ClassAgreement:
    """How often a pixel's strongest correspondences land in its own class.

    top1_rate: fraction of source pixels whose best target match shares
    the source ground-truth class.  topk_rate: fraction with any
    same-class pixel among the k strongest matches.  corr_gap: mean of
    (best correlation - k-th best correlation); ranking ties break
    toward the earlier target pixel in row-major order.
    """
    if gt_a.grid != f_a.grid or gt_b.grid != f_b.grid:
        raise ShapeError("ground truth must be aligned to the feature grids")
    if gt_a.num_classes != gt_b.num_classes:
        raise ValidationError(
            f"class counts differ: {gt_a.num_classes} vs {gt_b.num_classes}"
        )
    n_tgt = f_b.grid[0] * f_b.grid[1]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n_tgt:
        raise ValidationError(f"k={k} exceeds target pixel count {n_tgt}")
    src = f_a.values.astype(np.float64, copy=False).reshape(-1, f_a.dim)
    tgt = f_b.values.astype(np.float64, copy=False).reshape(-1, f_b.dim)
    src_lab = gt_a.labels.reshape(-1)
    tgt_lab = gt_b.labels.reshape(-1)
    n_src = src.shape[0]
    top1_hits = 0
    topk_hits = 0
    gap_sum = 0.0
    for s, e in _source_blocks(n_src, n_tgt):
        sims = src[s:e] @ tgt.T
        # stable sort on -sims: equal correlations keep row-major target order
        order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
        top_vals = np.take_along_axis(sims, order, axis=1)
        top_labs = tgt_lab[order]
        top1_hits += int(np.count_nonzero(top_labs[:, 0] == src_lab[s:e]))
        topk_hits += int(
            np.count_nonzero((top_labs == src_lab[s:e, None]).any(axis=1))
        )
        gap_sum += float(np.sum(top_vals[:, 0] - top_vals[:, k - 1]))
    return ClassAgreement(
        top1_rate=top1_hits / n_src,
        topk_rate=topk_hits / n_src,
        corr_gap=gap_sum / n_src,
        k=k,
    )
