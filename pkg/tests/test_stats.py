from __future__ import annotations

import numpy as np
import pytest

from percon import (
    SegMap,
    ShapeError,
    UndefinedMeasureError,
    ValidationError,
    class_agreement,
    correlation_report,
    kendall,
    mannwhitney_auc,
    pearson,
    roc_pr,
    spearman,
)
from conftest import unit_features


def test_pearson_hand_values():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3], [3, 2, 4]) == pytest.approx(0.5, abs=1e-12)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_hand_values():
    assert spearman([1, 2, 3], [10, 100, 1000]) == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_averages_tied_ranks():
    # ties in y share rank 1.5; scipy's rankdata is the reference
    from scipy.stats import rankdata

    x = [1, 2, 3, 4]
    y = [5, 5, 7, 9]
    assert spearman(x, y) == pytest.approx(
        pearson(rankdata(x, method="average"), rankdata(y, method="average")),
        abs=1e-12,
    )


def test_kendall_hand_values():
    assert kendall([1, 2, 3], [4, 5, 6]) == pytest.approx(1.0, abs=1e-12)
    assert kendall([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3, abs=1e-12)
    assert kendall([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)


def test_kendall_tau_b_tie_correction():
    # against scipy's tau-b on tied data
    from scipy.stats import kendalltau

    rng = np.random.default_rng(43)
    for trial in range(20):
        n = int(rng.integers(3, 30))
        x = rng.integers(0, 5, n).astype(float)
        y = rng.integers(0, 5, n).astype(float)
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        expected = kendalltau(x, y, variant="b").statistic
        assert kendall(x, y) == pytest.approx(expected, abs=1e-12)


def test_correlations_invariant_under_positive_affine():
    rng = np.random.default_rng(47)
    x = rng.standard_normal(25)
    y = rng.standard_normal(25)
    assert pearson(3 * x + 2, y) == pytest.approx(pearson(x, y), abs=1e-12)
    assert spearman(x, 5 * y - 1) == pytest.approx(spearman(x, y), abs=1e-12)
    assert kendall(3 * x + 2, y) == pytest.approx(kendall(x, y), abs=1e-12)
    # rank statistics survive any strictly monotone transform
    assert spearman(np.exp(x), y) == pytest.approx(spearman(x, y), abs=1e-12)
    assert kendall(np.exp(x), y) == pytest.approx(kendall(x, y), abs=1e-12)


def test_correlation_errors():
    with pytest.raises(UndefinedMeasureError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedMeasureError):
        spearman([1, 2, 3], [2, 2, 2])
    with pytest.raises(UndefinedMeasureError):
        kendall([5, 5, 5], [1, 2, 3])
    with pytest.raises(ShapeError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(ValidationError):
        pearson([1], [2])
    with pytest.raises(ValidationError):
        pearson([1, np.nan, 3], [1, 2, 3])


def test_correlation_report_bundles_all_three():
    rep = correlation_report([1, 2, 3, 4], [1, 3, 2, 4])
    assert rep.n == 4
    assert rep.spearman == pytest.approx(0.8, abs=1e-12)
    assert -1 <= rep.kendall <= 1 and -1 <= rep.pearson <= 1


def test_roc_auc_hand_value():
    roc, pr = roc_pr([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert roc.auc == pytest.approx(0.75, abs=1e-12)
    assert roc.positive_count == 2 and roc.negative_count == 2
    # average precision by hand: 1.0 * 0.5 + (2/3) * 0.5
    assert pr.auc == pytest.approx(5 / 6, abs=1e-12)


def test_roc_perfect_separation():
    roc, pr = roc_pr([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert roc.auc == 1.0
    assert pr.auc == 1.0


def test_constant_scores_give_chance_level():
    roc, _ = roc_pr([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1])
    assert roc.points == [(0.0, 0.0), (1.0, 1.0)]  # one tie group
    assert roc.auc == pytest.approx(0.5, abs=1e-12)


def test_roc_x_non_decreasing_and_curve_tie_stable():
    rng = np.random.default_rng(59)
    for trial in range(30):
        n = int(rng.integers(4, 60))
        scores = np.round(rng.random(n), 1)  # coarse grid forces ties
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            continue
        roc, pr = roc_pr(scores, labels)
        xs = [p[0] for p in roc.points]
        assert xs == sorted(xs)
        assert 0.0 <= roc.auc <= 1.0
        # permuting samples cannot change the tie-grouped curves
        perm = rng.permutation(n)
        roc2, pr2 = roc_pr(scores[perm], labels[perm])
        assert roc2.points == roc.points
        assert pr2.points == pr.points


def test_roc_auc_equals_pair_statistic():
    rng = np.random.default_rng(61)
    for trial in range(100):
        n = int(rng.integers(4, 200))
        scores = np.round(rng.standard_normal(n), 2)
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            continue
        roc, _ = roc_pr(scores, labels)
        assert roc.auc == pytest.approx(mannwhitney_auc(scores, labels), abs=1e-12)


def test_roc_requires_both_classes():
    with pytest.raises(UndefinedMeasureError):
        roc_pr([0.1, 0.2], [1, 1])
    with pytest.raises(UndefinedMeasureError):
        mannwhitney_auc([0.1, 0.2], [0, 0])


def test_roc_input_validation():
    with pytest.raises(ValidationError):
        roc_pr([0.1, 0.2], [0, 2])
    with pytest.raises(ShapeError):
        roc_pr([0.1], [0, 1])
    with pytest.raises(ValidationError):
        roc_pr([np.inf, 0.2], [0, 1])


def test_agreement_identical_frames(pc1):
    rep = class_agreement(pc1["f_a"], pc1["f_a"], pc1["y_a"], pc1["y_a"], k=1)
    assert rep.top1_rate == 1.0
    assert rep.topk_rate == 1.0
    assert rep.corr_gap == 0.0


def test_agreement_fixture_top1(pc1):
    # a2's best match is b2, which carries the other class
    rep = class_agreement(pc1["f_a"], pc1["f_b"], pc1["y_a"], pc1["y_b"], k=1)
    assert rep.top1_rate == pytest.approx(2 / 3, abs=1e-12)


def test_agreement_monotone_in_k():
    rng = np.random.default_rng(67)
    for trial in range(10):
        f_a = unit_features(rng, (3, 4, 3))
        f_b = unit_features(rng, (3, 4, 3))
        g_a = SegMap(rng.integers(0, 3, (3, 4)).astype(np.int64), 3)
        g_b = SegMap(rng.integers(0, 3, (3, 4)).astype(np.int64), 3)
        prev_rate, prev_gap = 0.0, 0.0
        for k in (1, 2, 4, 8, 12):
            rep = class_agreement(f_a, f_b, g_a, g_b, k=k)
            assert rep.topk_rate >= prev_rate
            assert rep.corr_gap >= prev_gap - 1e-12
            assert rep.corr_gap >= 0.0
            prev_rate, prev_gap = rep.topk_rate, rep.corr_gap


def test_agreement_argument_checks(pc1):
    with pytest.raises(ValidationError):
        class_agreement(pc1["f_a"], pc1["f_b"], pc1["y_a"], pc1["y_b"], k=4)
    with pytest.raises(ValidationError):
        class_agreement(pc1["f_a"], pc1["f_b"], pc1["y_a"], pc1["y_b"], k=0)
    misaligned = SegMap(np.zeros((2, 3), dtype=np.int64), 2)
    with pytest.raises(ShapeError):
        class_agreement(pc1["f_a"], pc1["f_b"], misaligned, pc1["y_b"], k=1)
