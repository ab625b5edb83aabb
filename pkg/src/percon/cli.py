"""Command-line front end.

Every report command reads a manifest, writes CSV reports plus PNG
figures into --out, and prints a one-line human summary.  Frame indices
on the command line are 1-based (frame 1 is the first frame of a
video).  Exit codes: 0 all outputs written, 2 input or validation
problems, 1 internal errors.

Float cells in CSV output are printed with 9 significant digits, so
re-running a command on identical inputs reproduces files byte for
byte; the thread count never changes any emitted number.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import consistency, correctness, flow, plotting, stats
from .errors import PerconError, SchemaError, ValidationError
from .matching import SearchConfig, align_seg_to_features, normalize_features
from .tensor_io import (
    FrameRecord,
    SegMap,
    VideoManifest,
    VideoRecord,
    check_frame_shapes,
    load_feature_map,
    load_flow_field,
    load_manifest,
    load_seg_map,
    read_tensor,
    write_tensor,
)


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_run_config(out: Path, args: argparse.Namespace) -> None:
    # lambda_weight is provenance only: the training-loss mixing factor is
    # recorded with the run but never used by any computation here
    record = {
        "command": args.command,
        "manifest": getattr(args, "manifest", None),
        "video": getattr(args, "video", None),
        "window": getattr(args, "window", None),
        "threads": getattr(args, "resolved_threads", None),
        "fusion_weight": getattr(args, "fusion_weight", None),
        "topk": getattr(args, "topk", None),
        "lambda_weight": getattr(args, "lambda_weight", None),
    }
    with open(out / "run_config.json", "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_threads(value: Optional[int]) -> int:
    if value is None:
        env = os.environ.get("PERCON_THREADS")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ValidationError(
                    f"PERCON_THREADS must be an integer, got {env!r}"
                ) from None
        else:
            value = os.cpu_count() or 1
    if value < 1:
        raise ValidationError(f"thread count must be >= 1, got {value}")
    return value


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _select_video(manifest: VideoManifest, name: Optional[str]) -> VideoRecord:
    return manifest.video(name) if name else manifest.videos[0]


def _select_videos(manifest: VideoManifest, name: Optional[str]) -> list[VideoRecord]:
    return [manifest.video(name)] if name else list(manifest.videos)


def _check_frame_index(video: VideoRecord, t: int, what: str) -> None:
    if not 1 <= t <= video.num_frames:
        raise ValidationError(
            f"{what}={t} out of range 1..{video.num_frames} for video {video.name!r}"
        )


class _Frame:
    """Everything a command needs from one frame, loaded once."""

    def __init__(self, manifest: VideoManifest, video: VideoRecord, t: int):
        rec = video.frames[t - 1]
        self.record = rec
        self.t = t
        fmap = load_feature_map(rec.features)
        self.fmap = normalize_features(fmap)
        self.pred_full = load_seg_map(rec.pred_seg, manifest.num_classes)
        self.pred_aligned = align_seg_to_features(self.pred_full, fmap.grid)
        self.gt_full = None
        self.gt_aligned = None
        if rec.gt_seg is not None:
            self.gt_full = load_seg_map(rec.gt_seg, manifest.num_classes)
            check_frame_shapes(
                (f"{video.name}[t={t}] pred_seg", self.pred_full.grid),
                (f"{video.name}[t={t}] gt_seg", self.gt_full.grid),
            )
            self.gt_aligned = align_seg_to_features(self.gt_full, fmap.grid)


def _load_confidence(
    rec: FrameRecord, num_classes: int, pred_grid: tuple[int, int], label: str
):
    if rec.confidence is None:
        raise ValidationError(f"{label}: no confidence tensor in the manifest")
    arr = read_tensor(rec.confidence)
    if arr.ndim == 3:
        if arr.shape[2] != num_classes:
            raise ValidationError(
                f"{label}: confidence has {arr.shape[2]} classes, manifest says {num_classes}"
            )
        z = correctness.confidence_from_scores(arr, rec.confidence_kind)
    else:
        z = correctness.scalar_confidence(arr, rec.confidence_kind)
    check_frame_shapes((f"{label} pred_seg", pred_grid), (f"{label} confidence", z.grid))
    return z


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_pc_pair(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    video = _select_video(manifest, args.video)
    _check_frame_index(video, args.frame_a, "--frame-a")
    _check_frame_index(video, args.frame_b, "--frame-b")
    cfg = SearchConfig(window_radius=args.window)
    fa = _Frame(manifest, video, args.frame_a)
    fb = _Frame(manifest, video, args.frame_b)
    pair = consistency.pair_consistency(
        fa.fmap, fb.fmap, fa.pred_aligned, fb.pred_aligned, cfg,
        threads=args.resolved_threads,
    )
    _write_csv(
        out / "pair_report.csv",
        [
            "video", "frame_a", "frame_b", "rho", "rho_ab", "rho_ba",
            "mean_c_star_ab", "mean_c_dagger_ab", "mean_c_star_ba", "mean_c_dagger_ba",
        ],
        [[
            video.name, args.frame_a, args.frame_b,
            _fmt(pair.rho), _fmt(pair.rho_ab), _fmt(pair.rho_ba),
            _fmt(pair.mean_c_star_ab), _fmt(pair.mean_c_dagger_ab),
            _fmt(pair.mean_c_star_ba), _fmt(pair.mean_c_dagger_ba),
        ]],
    )
    write_tensor(pair.per_pixel_ratio_ab.astype(np.float32), out / "ratio_ab.npy")
    write_tensor(pair.per_pixel_ratio_ba.astype(np.float32), out / "ratio_ba.npy")
    plotting.histogram_figure(
        out / "pair_ratios.png",
        [(pair.per_pixel_ratio_ab, "a to b"), (pair.per_pixel_ratio_ba, "b to a")],
        "per-pixel ratio",
        f"{video.name}: frames {args.frame_a} and {args.frame_b}",
    )
    _write_run_config(out, args)
    print(
        f"pc-pair: video={video.name} frames=({args.frame_a},{args.frame_b}) "
        f"rho={_fmt(pair.rho)} (ab={_fmt(pair.rho_ab)}, ba={_fmt(pair.rho_ba)})"
    )
    return 0


def cmd_pc_video(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    videos = _select_videos(manifest, args.video)
    cfg = SearchConfig(window_radius=args.window)
    pair_rows = []
    summary_rows = []
    figure_series = []
    for video in videos:
        frames = []
        for t in range(1, video.num_frames + 1):
            fr = _Frame(manifest, video, t)
            seg = fr.pred_aligned
            if args.alternate_gt and t % 2 == 0:
                if fr.gt_aligned is None:
                    raise ValidationError(
                        f"--alternate-gt: {video.name}[t={t}] has no ground truth"
                    )
                seg = fr.gt_aligned
            frames.append((fr, seg))
        vc = consistency.video_consistency(
            [(fr.fmap, seg) for fr, seg in frames], cfg, threads=args.resolved_threads
        )
        for t, pair in enumerate(vc.per_pair, start=1):
            pair_rows.append(
                [video.name, t, _fmt(pair.rho_ab), _fmt(pair.rho_ba), _fmt(pair.rho)]
            )
        miou_vs_gt = ""
        if args.alternate_gt:
            full = np.ones(frames[0][0].pred_full.grid, dtype=bool)
            per_frame = [
                flow.miou(fr.pred_full, fr.gt_full, full, manifest.num_classes)
                for fr, _ in frames
                if fr.gt_full is not None
            ]
            if per_frame:
                miou_vs_gt = _fmt(sum(per_frame) / len(per_frame))
        summary_rows.append(
            [video.name, _fmt(vc.rho_tilde), len(vc.per_pair), miou_vs_gt]
        )
        figure_series.append(
            (
                list(range(1, len(vc.per_pair) + 1)),
                [p.rho for p in vc.per_pair],
                video.name,
            )
        )
    _write_csv(
        out / "video_tc.csv", ["video", "t", "rho_ab", "rho_ba", "rho"], pair_rows
    )
    _write_csv(
        out / "video_tc_summary.csv",
        ["video", "rho_tilde", "pair_count", "miou_vs_gt"],
        summary_rows,
    )
    plotting.line_figure(
        out / "video_tc.png", figure_series, "pair (t, t+1)", "rho",
        "consistency over consecutive pairs",
    )
    _write_run_config(out, args)
    for row in summary_rows:
        print(f"pc-video: video={row[0]} pairs={row[2]} rho_tilde={row[1]}")
    return 0


def cmd_predict(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    video = _select_video(manifest, args.video)
    cfg = SearchConfig(window_radius=args.window)
    labeled_all = video.labeled_frames()
    if args.label_every is not None:
        if args.label_every < 1:
            raise ValidationError(f"--label-every must be >= 1, got {args.label_every}")
        omega = tuple(t for t in labeled_all if (t - 1) % args.label_every == 0)
    else:
        omega = labeled_all
    if not omega:
        raise ValidationError(f"video {video.name!r} has no usable labeled frames")
    unlabeled = [t for t in range(1, video.num_frames + 1) if t not in omega]

    frame_rows = []
    score_chunks = {"fused": [], "confidence": [], "consistency": []}
    label_chunks = []
    labeled_cache = {}
    for t_u in unlabeled:
        fr = _Frame(manifest, video, t_u)
        label = f"{video.name}[t={t_u}]"
        z = _load_confidence(fr.record, manifest.num_classes, fr.pred_full.grid, label)
        t_l = correctness.nearest_labeled_frame(t_u, omega)
        if t_l not in labeled_cache:
            labeled_cache[t_l] = _Frame(manifest, video, t_l)
        fl = labeled_cache[t_l]
        rho_hat = consistency.directional_map(
            fr.fmap, fl.fmap, fr.pred_aligned, fl.gt_aligned, cfg,
            threads=args.resolved_threads,
        )
        rho_up = correctness.upsample_nearest(rho_hat, fr.pred_full.grid)
        pred = correctness.predict_correctness(
            z, rho_up, t_u=t_u, t_l=t_l, weight=args.fusion_weight
        )
        write_tensor(
            pred.alpha.values.astype(np.float32), out / f"alpha_f{t_u:04d}.npy"
        )
        frame_rows.append([
            video.name, t_u, t_l,
            _fmt(z.values.mean()), _fmt(rho_up.values.mean()),
            _fmt(pred.alpha.values.mean()),
        ])
        if fr.gt_full is not None:
            label_chunks.append(
                correctness.correctness_labels(fr.pred_full, fr.gt_full).reshape(-1)
            )
            score_chunks["fused"].append(-pred.alpha.values.reshape(-1))
            score_chunks["confidence"].append(-z.values.reshape(-1))
            score_chunks["consistency"].append(-rho_up.values.reshape(-1))
    _write_csv(
        out / "predict_frames.csv",
        ["video", "t_u", "t_l", "mean_z", "mean_rho_hat", "mean_alpha"],
        frame_rows,
    )

    summary = f"predict: video={video.name} labeled={len(omega)} scored_frames={len(label_chunks)}"
    if label_chunks:
        labels = np.concatenate(label_chunks)
        auc_lines = []
        roc_curves = []
        pr_curves = []
        for key, suffix in (("fused", ""), ("confidence", "_confidence"),
                            ("consistency", "_consistency")):
            scores = np.concatenate(score_chunks[key])
            roc, pr = stats.roc_pr(scores, labels)
            _write_csv(
                out / f"roc{suffix}.csv", ["fpr", "tpr"],
                [[_fmt(x), _fmt(y)] for x, y in roc.points],
            )
            _write_csv(
                out / f"pr{suffix}.csv", ["recall", "precision"],
                [[_fmt(x), _fmt(y)] for x, y in pr.points],
            )
            auc_lines.append(f"{key}_roc_auc={_fmt(roc.auc)}")
            auc_lines.append(f"{key}_pr_auc={_fmt(pr.auc)}")
            roc_curves.append((roc.points, f"{key} (auc={roc.auc:.3f})"))
            pr_curves.append((pr.points, f"{key} (ap={pr.auc:.3f})"))
            if key == "fused":
                summary += f" roc_auc={_fmt(roc.auc)}"
        (out / "auc.txt").write_text("\n".join(auc_lines) + "\n", encoding="utf-8")
        plotting.curve_figure(
            out / "roc.png", roc_curves, "false positive rate", "true positive rate",
            "error detection (positives = mis-segmented pixels)", diagonal=True,
        )
        plotting.curve_figure(
            out / "pr.png", pr_curves, "recall", "precision",
            "error detection precision-recall",
        )
    _write_run_config(out, args)
    print(summary)
    return 0


def cmd_flow_tc(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    videos = _select_videos(manifest, args.video)
    pair_rows = []
    summary_rows = []
    figure_series = []
    for video in videos:
        frames = []
        names = []
        for t, rec in enumerate(video.frames, start=1):
            seg = load_seg_map(rec.pred_seg, manifest.num_classes)
            fl = None
            if rec.flow_to_next is not None:
                fl = load_flow_field(rec.flow_to_next)
            frames.append((seg, fl))
            names.append(f"{video.name}[t={t}]")
        fc = flow.flow_consistency(frames, names=names)
        for t, (value, excluded) in enumerate(fc.per_pair, start=1):
            pair_rows.append([video.name, t, _fmt(value), excluded])
        summary_rows.append([
            video.name, _fmt(fc.mean_miou), len(fc.per_pair),
            sum(e for _, e in fc.per_pair),
        ])
        figure_series.append(
            (
                list(range(1, len(fc.per_pair) + 1)),
                [v for v, _ in fc.per_pair],
                video.name,
            )
        )
    _write_csv(
        out / "flow_tc.csv", ["video", "t", "miou", "excluded_pixels"], pair_rows
    )
    _write_csv(
        out / "flow_tc_summary.csv",
        ["video", "mean_miou", "pair_count", "excluded_pixels_total"],
        summary_rows,
    )
    plotting.line_figure(
        out / "flow_tc.png", figure_series, "pair (t, t+1)", "warped mIoU",
        "flow-warp consistency over consecutive pairs",
    )
    _write_run_config(out, args)
    for row in summary_rows:
        print(f"flow-tc: video={row[0]} pairs={row[2]} mean_miou={row[1]}")
    return 0


def _read_series(path: str, column: str) -> list[float]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    if column not in rows[0]:
        raise SchemaError(
            f"{path}: no column {column!r}; available: {', '.join(rows[0])}"
        )
    values = []
    for i, row in enumerate(rows):
        try:
            values.append(float(row[column]))
        except ValueError:
            raise SchemaError(
                f"{path}: row {i + 1} column {column!r} is not a number: {row[column]!r}"
            ) from None
    return values


def cmd_eval_corr(args) -> int:
    out = _out_dir(args)
    series_a = _read_series(args.series_a, args.col_a)
    series_b = _read_series(args.series_b, args.col_b)
    if len(series_a) != len(series_b):
        raise ValidationError(
            f"series lengths differ: {len(series_a)} vs {len(series_b)}"
        )
    report = stats.correlation_report(series_a, series_b)
    _write_csv(
        out / "correlation.csv",
        ["pearson", "spearman", "kendall", "n"],
        [[_fmt(report.pearson), _fmt(report.spearman), _fmt(report.kendall), report.n]],
    )
    plotting.scatter_figure(
        out / "correlation.png", series_a, series_b,
        f"{args.col_a} ({Path(args.series_a).name})",
        f"{args.col_b} ({Path(args.series_b).name})",
        "series agreement",
    )
    _write_run_config(out, args)
    print(
        f"eval-corr: n={report.n} pearson={_fmt(report.pearson)} "
        f"spearman={_fmt(report.spearman)} kendall={_fmt(report.kendall)}"
    )
    return 0


def cmd_loss(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    videos = _select_videos(manifest, args.video)
    cfg = SearchConfig(window_radius=args.window)
    data = []
    for video in videos:
        frames = []
        for t in range(1, video.num_frames + 1):
            fr = _Frame(manifest, video, t)
            frames.append((fr.fmap, fr.pred_aligned))
        data.append(frames)
    breakdown = consistency.consistency_loss(
        data, args.loss_window, cfg, threads=args.resolved_threads,
        names=[v.name for v in videos],
    )
    _write_csv(
        out / "loss.csv",
        ["video", "loss", "pair_count"],
        [[name, _fmt(value), pairs] for name, value, pairs in breakdown.per_video],
    )
    (out / "loss.txt").write_text(_fmt(breakdown.total) + "\n", encoding="utf-8")
    plotting.bar_figure(
        out / "loss.png",
        [name for name, _, _ in breakdown.per_video],
        [value for _, value, _ in breakdown.per_video],
        "mean (1 - rho)",
        f"consistency loss per video (window={args.loss_window})",
    )
    _write_run_config(out, args)
    print(
        f"loss: videos={len(breakdown.per_video)} window={args.loss_window} "
        f"total={_fmt(breakdown.total)}"
    )
    return 0


def cmd_agreement(args) -> int:
    out = _out_dir(args)
    manifest = load_manifest(args.manifest)
    video = _select_video(manifest, args.video)
    labeled = video.labeled_frames()
    if (args.frame_a is None) != (args.frame_b is None):
        raise ValidationError("--frame-a and --frame-b must be given together")
    if args.frame_a is not None:
        _check_frame_index(video, args.frame_a, "--frame-a")
        _check_frame_index(video, args.frame_b, "--frame-b")
        for t in (args.frame_a, args.frame_b):
            if t not in labeled:
                raise ValidationError(
                    f"{video.name}[t={t}] has no ground truth; agreement needs GT"
                )
        pairs = [(args.frame_a, args.frame_b)]
    else:
        pairs = [
            (t, t + 1) for t in range(1, video.num_frames)
            if t in labeled and (t + 1) in labeled
        ]
        if not pairs:
            raise ValidationError(
                f"video {video.name!r} has no consecutive ground-truth pairs"
            )
    rows = []
    acc = np.zeros(3)
    for a, b in pairs:
        fa = _Frame(manifest, video, a)
        fb = _Frame(manifest, video, b)
        rep = stats.class_agreement(
            fa.fmap, fb.fmap, fa.gt_aligned, fb.gt_aligned, k=args.topk
        )
        rows.append([
            video.name, a, b,
            _fmt(rep.top1_rate), _fmt(rep.topk_rate), _fmt(rep.corr_gap), rep.k,
        ])
        acc += (rep.top1_rate, rep.topk_rate, rep.corr_gap)
    mean = acc / len(pairs)
    rows.append([
        video.name, "(mean)", "", _fmt(mean[0]), _fmt(mean[1]), _fmt(mean[2]), args.topk
    ])
    _write_csv(
        out / "agreement.csv",
        ["video", "frame_a", "frame_b", "top1_rate", "topk_rate", "corr_gap", "k"],
        rows,
    )
    plotting.bar_figure(
        out / "agreement.png",
        ["top-1", f"top-{args.topk}"],
        [mean[0], mean[1]],
        "same-class rate",
        f"{video.name}: correspondence class agreement",
    )
    _write_run_config(out, args)
    print(
        f"agreement: video={video.name} pairs={len(pairs)} top1={_fmt(mean[0])} "
        f"top{args.topk}={_fmt(mean[1])} corr_gap={_fmt(mean[2])}"
    )
    return 0


def cmd_plot(args) -> int:
    out = _out_dir(args)
    with open(args.curve, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{args.curve}: empty CSV")
    header = rows[0]
    if len(header) < 2:
        raise SchemaError(f"{args.curve}: need at least two columns, got {header}")
    x_col = args.x_col or header[0]
    y_col = args.y_col or header[1]
    for name in (x_col, y_col):
        if name not in header:
            raise SchemaError(f"{args.curve}: no column {name!r}; available: {header}")
    ix, iy = header.index(x_col), header.index(y_col)
    points = []
    for i, row in enumerate(rows[1:], start=2):
        try:
            points.append((float(row[ix]), float(row[iy])))
        except (ValueError, IndexError):
            raise SchemaError(f"{args.curve}: line {i} is not a numeric (x, y) row") from None
    if not points:
        raise SchemaError(f"{args.curve}: no data rows")
    svg = plotting.curve_svg(points, xlabel=x_col, ylabel=y_col)
    target = out / (Path(args.curve).stem + ".svg")
    target.write_text(svg, encoding="utf-8")
    print(f"plot: {target} points={len(points)}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, manifest=True, video=True, window=True):
    if manifest:
        p.add_argument("--manifest", required=True, help="manifest JSON path")
    if video:
        p.add_argument("--video", help="video name (default: first in manifest)")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    if window:
        p.add_argument(
            "--window", type=int, default=None,
            help="search window radius in feature pixels (default: full frame)",
        )
    p.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: PERCON_THREADS or all cores)",
    )
    p.add_argument(
        "--lambda-weight", dest="lambda_weight", type=float, default=0.5,
        help="training-loss mixing factor, recorded with the run but unused",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percon",
        description="Perceptual consistency measurement for video segmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pc-pair", help="consistency of one frame pair")
    _add_common(p)
    p.add_argument("--frame-a", type=int, required=True, help="first frame (1-based)")
    p.add_argument("--frame-b", type=int, required=True, help="second frame (1-based)")
    p.set_defaults(func=cmd_pc_pair)

    p = sub.add_parser("pc-video", help="consistency over consecutive pairs")
    _add_common(p)
    p.add_argument(
        "--alternate-gt", action="store_true",
        help="substitute ground truth on even frames and report mIoU vs GT",
    )
    p.set_defaults(func=cmd_pc_video)

    p = sub.add_parser("predict", help="correctness scores for unlabeled frames")
    _add_common(p)
    p.add_argument(
        "--fusion-weight", type=float, default=1.0,
        help="weight w in alpha = z + w * rho_hat (default 1.0)",
    )
    p.add_argument(
        "--label-every", type=int, default=None,
        help="treat only every Nth ground-truth frame as labeled; the rest are "
        "scored as held-out frames",
    )
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("flow-tc", help="flow-warp mIoU baseline")
    _add_common(p, window=False)
    p.set_defaults(func=cmd_flow_tc)

    p = sub.add_parser("eval-corr", help="correlate two series CSVs")
    p.add_argument("--series-a", required=True, help="first CSV")
    p.add_argument("--series-b", required=True, help="second CSV")
    p.add_argument("--col-a", default="rho_tilde", help="column in --series-a")
    p.add_argument("--col-b", default="mean_miou", help="column in --series-b")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--lambda-weight", dest="lambda_weight", type=float, default=0.5,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_eval_corr)

    p = sub.add_parser("loss", help="consistency training loss over a manifest")
    _add_common(p)
    p.add_argument(
        "--loss-window", type=int, default=1, metavar="T_W",
        help="max temporal offset of loss pairs (default 1)",
    )
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("agreement", help="correspondence class-agreement rates")
    _add_common(p, window=False)
    p.add_argument("--frame-a", type=int, default=None, help="first frame (1-based)")
    p.add_argument("--frame-b", type=int, default=None, help="second frame (1-based)")
    p.add_argument("--topk", type=int, default=10, help="k for top-k agreement")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("plot", help="render a curve CSV to a standalone SVG")
    p.add_argument("--curve", required=True, help="CSV with x and y columns")
    p.add_argument("--x-col", default=None, help="x column (default: first)")
    p.add_argument("--y-col", default=None, help="y column (default: second)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if hasattr(args, "threads"):
            args.resolved_threads = _resolve_threads(args.threads)
        return args.func(args)
    except PerconError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
