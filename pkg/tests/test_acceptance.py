"""Acceptance gate: one test per shipped guarantee, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Every check here states its tolerance explicitly; the rest of the test
suite covers the same code paths at finer granularity.
"""

from __future__ import annotations

import time

import numpy as np

from percon import (
    FeatureMap,
    ScoreMap,
    SearchConfig,
    SegMap,
    brute_force_match_constrained,
    brute_force_match_unconstrained,
    consistency_loss,
    correctness_labels,
    directional_map,
    flow_consistency,
    kendall,
    mannwhitney_auc,
    match_constrained,
    match_frames,
    match_unconstrained,
    miou,
    pair_consistency,
    pearson,
    predict_correctness,
    roc_pr,
    spearman,
    video_consistency,
)
from percon.tensor_io import FlowField
from conftest import unit_features


def _check(label: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    assert ok, f"{label}: {detail}"


# ---------------------------------------------------------------------------
# 1. ground-truth videos score exactly 1
# ---------------------------------------------------------------------------


def test_ground_truth_videos_score_exactly_one():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        h, w = int(rng.integers(3, 11)), int(rng.integers(3, 11))
        d = int(rng.integers(3, 9))
        k = int(rng.integers(1, 5))
        fmap = unit_features(rng, (h, w, d))
        seg = SegMap(rng.integers(0, k, (h, w)), k)
        frames = [(fmap, seg)] * 3  # identical consecutive frames, seg == GT
        vc = video_consistency(frames)
        worst = max(worst, abs(vc.rho_tilde - 1.0))
    elapsed = time.perf_counter() - start
    _check(
        "gt-self-consistency",
        worst <= 1e-9 and elapsed < 5.0,
        f"50 videos, max |rho_tilde - 1| = {worst:.3g}, {elapsed:.2f}s (limit 5s)",
    )


# ---------------------------------------------------------------------------
# 2. optimized matchers equal the brute-force reference
# ---------------------------------------------------------------------------


def test_optimized_matchers_equal_brute_force():
    rng = np.random.default_rng(1002)
    windows = [1, 3, None]
    start = time.perf_counter()
    failures = []
    for trial in range(200):
        if trial % 20 == 0:
            h = w = 32
            d = 16
        else:
            h, w = int(rng.integers(2, 33)), int(rng.integers(2, 33))
            d = int(rng.integers(2, 17))
        k = int(rng.integers(1, 6))
        cfg = SearchConfig(window_radius=windows[trial % 3])
        f_a = unit_features(rng, (h, w, d))
        f_b = unit_features(rng, (h, w, d))
        y_a = SegMap(rng.integers(0, k, (h, w)), k)
        y_b = SegMap(rng.integers(0, k, (h, w)), k)

        c_s, a_s = match_unconstrained(f_a, f_b, cfg)
        bc_s, ba_s = brute_force_match_unconstrained(f_a, f_b, cfg)
        if not np.array_equal(a_s, ba_s):
            failures.append(f"trial {trial}: unconstrained argmax")
        if np.abs(c_s - bc_s).max() > 1e-6:
            failures.append(f"trial {trial}: unconstrained values")

        c_d, a_d, feas = match_constrained(f_a, f_b, y_a, y_b, cfg)
        bc_d, ba_d, bfeas = brute_force_match_constrained(f_a, f_b, y_a, y_b, cfg)
        if not (np.array_equal(a_d, ba_d) and np.array_equal(feas, bfeas)):
            failures.append(f"trial {trial}: constrained argmax/feasible")
        if np.abs(c_d - bc_d).max() > 1e-6:
            failures.append(f"trial {trial}: constrained values")
        if failures:
            break
    elapsed = time.perf_counter() - start
    _check(
        "matching-oracle",
        not failures and elapsed < 60.0,
        failures[0] if failures else f"200 instances, {elapsed:.1f}s (limit 60s)",
    )


# ---------------------------------------------------------------------------
# 3. signed pair fixture and label ordering
# ---------------------------------------------------------------------------


def _pc1_arrays():
    f_a = np.array([[[1.0, 0.0], [0.0, 1.0], [0.8, 0.6]]])
    f_b = np.array([[[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]]])
    y_a = SegMap(np.array([[0, 1, 0]]), 2)
    y_b = SegMap(np.array([[0, 1, 1]]), 2)
    y_flip = SegMap(np.array([[1, 0, 0]]), 2)
    return f_a, f_b, y_a, y_b, y_flip


def test_signed_pair_fixture_and_label_ordering():
    f_a, f_b, y_a, y_b, y_flip = _pc1_arrays()
    rho_c = pair_consistency(FeatureMap(f_a), FeatureMap(f_b), y_a, y_b).rho
    rho_f = pair_consistency(FeatureMap(f_a), FeatureMap(f_b), y_a, y_flip).rho
    exact = abs(rho_c - 5.0) <= 1e-6 and abs(rho_f - (-16.5)) <= 1e-6

    rng = np.random.default_rng(1003)
    ordered = 0
    for _ in range(100):
        pa = f_a + rng.uniform(-0.01, 0.01, f_a.shape)
        pb = f_b + rng.uniform(-0.01, 0.01, f_b.shape)
        pa /= np.linalg.norm(pa, axis=-1, keepdims=True)
        pb /= np.linalg.norm(pb, axis=-1, keepdims=True)
        r_c = pair_consistency(FeatureMap(pa), FeatureMap(pb), y_a, y_b).rho
        r_f = pair_consistency(FeatureMap(pa), FeatureMap(pb), y_a, y_flip).rho
        ordered += r_c > r_f
    _check(
        "signed-pair-fixture",
        exact and ordered == 100,
        f"rho={rho_c:.9g} (want 5 +/- 1e-6), flipped={rho_f:.9g} (want -16.5 +/- 1e-6), "
        f"ordering held {ordered}/100",
    )


# ---------------------------------------------------------------------------
# 4. single-class segmentation scores 1
# ---------------------------------------------------------------------------


def test_single_class_segmentation_scores_one():
    rng = np.random.default_rng(1004)
    worst = 0.0
    for _ in range(100):
        h, w = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        d = int(rng.integers(2, 7))
        k = int(rng.integers(1, 5))
        label = int(rng.integers(0, k))
        f_a = unit_features(rng, (h, w, d))
        f_b = unit_features(rng, (h, w, d))
        seg = SegMap(np.full((h, w), label), k)
        rho = pair_consistency(f_a, f_b, seg, seg).rho
        worst = max(worst, abs(rho - 1.0))
    _check(
        "single-class-unit-value",
        worst <= 1e-9,
        f"100 seeds, max |rho - 1| = {worst:.3g} (limit 1e-9)",
    )


# ---------------------------------------------------------------------------
# 5. loss at window 1 complements the video score
# ---------------------------------------------------------------------------


def test_loss_at_window_one_complements_video_score():
    rng = np.random.default_rng(1005)
    worst = 0.0
    for _ in range(20):
        h, w = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 5))
        frames = [
            (
                unit_features(rng, (h, w, d)),
                SegMap(rng.integers(0, k, (h, w)), k),
            )
            for _ in range(5)
        ]
        loss = consistency_loss([frames], window=1).per_video[0][1]
        rho_tilde = video_consistency(frames).rho_tilde
        worst = max(worst, abs(loss - (1.0 - rho_tilde)))
    _check(
        "loss-window-one",
        worst <= 1e-9,
        f"20 videos of length 5, max |loss - (1 - rho_tilde)| = {worst:.3g}",
    )


# ---------------------------------------------------------------------------
# 6. flow-warp baseline values and masking
# ---------------------------------------------------------------------------


def test_flow_warp_baseline_values_and_masking():
    a = SegMap(np.array([[0, 0], [1, 1]]), 2)
    b = SegMap(np.array([[0, 1], [1, 1]]), 2)
    hand = miou(a, b, np.ones((2, 2), bool), 2)
    hand_ok = abs(hand - 7 / 12) <= 1e-12

    y = SegMap(np.array([[0, 1], [2, 3]]), 4)
    zf = FlowField(np.zeros((2, 2, 2)))
    identity_ok = flow_consistency([(y, zf), (y, zf), (y, None)]).mean_miou == 1.0

    rng = np.random.default_rng(1006)
    masked_ok = True
    checked = 0
    while checked < 100:
        h, w, k = int(rng.integers(2, 8)), int(rng.integers(2, 8)), int(rng.integers(2, 5))
        sa = rng.integers(0, k, (h, w))
        sb = rng.integers(0, k, (h, w))
        mask = rng.random((h, w)) < 0.7
        if not mask.any():
            continue
        base = miou(SegMap(sa, k), SegMap(sb, k), mask, k)
        sa2, sb2 = sa.copy(), sb.copy()
        sa2[~mask] = rng.integers(0, k, int((~mask).sum()))
        sb2[~mask] = rng.integers(0, k, int((~mask).sum()))
        if miou(SegMap(sa2, k), SegMap(sb2, k), mask, k) != base:
            masked_ok = False
            break
        checked += 1
    _check(
        "flow-baseline",
        hand_ok and identity_ok and masked_ok,
        f"2x2 fixture miou={hand:.12g} (want 7/12), zero-flow identity"
        f"={'1.0' if identity_ok else 'off'}, masking held {checked}/100",
    )


# ---------------------------------------------------------------------------
# 7. rank statistics and ROC reference values
# ---------------------------------------------------------------------------


def test_rank_statistics_and_roc_reference_values():
    stats_ok = (
        abs(pearson([1, 2, 3], [3, 2, 4]) - 0.5) <= 1e-12
        and abs(spearman([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) <= 1e-12
        and abs(kendall([1, 2, 3], [1, 3, 2]) - 1 / 3) <= 1e-12
    )
    roc, _ = roc_pr([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    roc_ok = abs(roc.auc - 0.75) <= 1e-12

    rng = np.random.default_rng(1007)
    pair_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        # quantized scores force ties through both code paths
        scores = rng.integers(0, 10, n) / 10.0
        auc_curve = roc_pr(scores, labels)[0].auc
        auc_pairs = mannwhitney_auc(scores, labels)
        if abs(auc_curve - auc_pairs) > 1e-12:
            pair_ok = False
            break
    _check(
        "rank-statistics",
        stats_ok and roc_ok and pair_ok,
        f"hand values {'ok' if stats_ok else 'off'}, roc auc={roc.auc:.12g} (want 0.75), "
        f"curve == pair statistic on 100 sets: {pair_ok}",
    )


# ---------------------------------------------------------------------------
# 8. fused score beats confidence alone
# ---------------------------------------------------------------------------


def test_fused_score_beats_confidence_alone():
    """Errors sit at pixels whose features match a region labeled differently.

    Five frames; frame 1 carries ground truth.  Rows 0-4 are class 0 with
    one feature cluster, rows 5-7 class 1 with another, rows 8-9 class 0
    with features only weakly present in frame 1 (keeps the correlation
    spread wide so the centered ratio stays signed the right way).
    """
    rng = np.random.default_rng(1008)
    h, w, d, k = 10, 10, 6, 2
    mu0 = np.eye(d)[0]
    mu1 = np.eye(d)[1]
    mu_dist = np.eye(d)[2]
    mu_half = (np.eye(d)[2] + np.sqrt(3.0) * np.eye(d)[3]) / 2.0  # cos 0.5 to mu_dist

    def frame_features(protos):
        raw = protos + 0.03 * rng.standard_normal((h, w, d))
        return FeatureMap(raw / np.linalg.norm(raw, axis=-1, keepdims=True))

    gt_labels = np.zeros((h, w), dtype=np.int64)
    gt_labels[5:8] = 1
    gt = SegMap(gt_labels, k)

    protos_l = np.empty((h, w, d))
    protos_l[0:5] = mu0
    protos_l[5:8] = mu1
    protos_l[8:10] = mu_half
    f_l = frame_features(protos_l)

    protos_u = protos_l.copy()
    protos_u[8:10] = mu_dist
    err_all, z_all, alpha_all = [], [], []
    for _ in range(4):  # frames 2..5, scored against frame 1
        f_u = frame_features(protos_u)
        pred = gt_labels.copy()
        err_rows = rng.integers(0, 5, 8)
        err_cols = rng.integers(0, w, 8)
        pred[err_rows, err_cols] = 1
        y_u = SegMap(pred, k)
        err = correctness_labels(y_u, gt)

        z = np.where(err == 1, rng.uniform(0.35, 0.9, (h, w)), rng.uniform(0.45, 1.0, (h, w)))
        rho_hat = directional_map(f_u, f_l, y_u, gt)
        alpha = predict_correctness(ScoreMap(z), rho_hat).alpha.values

        err_all.append(err.reshape(-1))
        z_all.append(z.reshape(-1))
        alpha_all.append(alpha.reshape(-1))

    err_v = np.concatenate(err_all)
    auc_z = roc_pr(-np.concatenate(z_all), err_v)[0].auc
    auc_alpha = roc_pr(-np.concatenate(alpha_all), err_v)[0].auc
    _check(
        "fusion-discrimination",
        auc_alpha >= auc_z + 0.05,
        f"AUC(-alpha)={auc_alpha:.4f} vs AUC(-z)={auc_z:.4f} (need +0.05)",
    )


# ---------------------------------------------------------------------------
# 9. full-frame matching speed and thread determinism
# ---------------------------------------------------------------------------


def test_full_frame_matching_speed_and_thread_determinism():
    rng = np.random.default_rng(1009)
    h, w, d, k = 64, 128, 64, 5
    f_a = unit_features(rng, (h, w, d))
    f_b = unit_features(rng, (h, w, d))
    y_a = SegMap(rng.integers(0, k, (h, w)), k)
    y_b = SegMap(rng.integers(0, k, (h, w)), k)

    start = time.perf_counter()
    base = match_frames(f_a, f_b, y_a, y_b, threads=1)
    elapsed = time.perf_counter() - start

    deterministic = True
    for threads in (4, 8):
        other = match_frames(f_a, f_b, y_a, y_b, threads=threads)
        same = (
            base.c_star.tobytes() == other.c_star.tobytes()
            and base.argmax_star.tobytes() == other.argmax_star.tobytes()
            and base.c_dagger.tobytes() == other.c_dagger.tobytes()
            and base.argmax_dagger.tobytes() == other.argmax_dagger.tobytes()
            and base.feasible.tobytes() == other.feasible.tobytes()
        )
        deterministic = deterministic and same
    _check(
        "matching-performance",
        elapsed < 2.0 and deterministic,
        f"64x128 d=64 single-threaded in {elapsed:.2f}s (limit 2s), "
        f"bit-identical at 1/4/8 threads: {deterministic}",
    )
