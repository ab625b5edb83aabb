"""Command line entry for the feature exporter."""

from __future__ import annotations

import argparse
import sys

from .extract import BACKBONES, ConfigError, ExtractError, ExtractorConfig, run_extraction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percon-extract",
        description=(
            "Export per-frame perceptual feature maps (and optionally "
            "per-class confidence tensors) into the tensor container the "
            "percon toolkit reads."
        ),
    )
    parser.add_argument("--images", required=True, help="directory of input frames")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--backbone", default="resnet18", choices=BACKBONES,
        help="feature network (default resnet18)",
    )
    parser.add_argument(
        "--tap", default="layer3",
        help="residual stage whose activation is exported (default layer3, stride 16)",
    )
    parser.add_argument(
        "--weights", default="pretrained",
        help="'pretrained', 'none' (fixed random init), or a state-dict path",
    )
    parser.add_argument(
        "--short-side", type=int, default=512,
        help="resize so the short image side has this many pixels; 0 keeps native size",
    )
    parser.add_argument(
        "--seg-checkpoint", default=None,
        help="toy segmentation-head checkpoint; adds per-class logit tensors",
    )
    parser.add_argument(
        "--num-classes", type=int, default=None,
        help="expected class count; mismatches with the checkpoint are rejected",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExtractorConfig(
            backbone=args.backbone,
            tap=args.tap,
            weights=args.weights,
            short_side=args.short_side,
        )
        fragment, errors = run_extraction(
            args.images, args.out, cfg,
            seg_checkpoint=args.seg_checkpoint,
            num_classes=args.num_classes,
        )
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1
    for line in errors:
        print(f"error: {line}", file=sys.stderr)
    print(
        f"extracted {len(fragment['frames'])} frame(s) with {cfg.backbone}/{cfg.tap} "
        f"to {args.out}"
    )
    return 2 if errors else 0


if __name__ == "__main__":
    raise SystemExit(main())
