"""Feature and confidence export from pretrained image backbones.

Images go through a fixed preprocessing pipeline (optional short-side
resize, standard channel normalization) and a truncated residual
network; the activation at the chosen stage is saved per frame in the
tensor container the core toolkit reads.  A sidecar manifest fragment
describes the exported files so they can be merged into a full
manifest.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch
import torch.nn as nn
from PIL import Image, UnidentifiedImageError

from percon import write_tensor


class ExtractError(Exception):
    """Base for everything this package raises on purpose."""


class ConfigError(ExtractError):
    pass


class InputError(ExtractError):
    pass


BACKBONES = ("resnet18", "resnet101", "wide_resnet50_2")

# stages that keep a spatial layout; everything after global pooling
# collapses to a vector and cannot serve as a per-pixel feature map
SPATIAL_TAPS = ("layer1", "layer2", "layer3", "layer4")
POOLED_TAPS = ("avgpool", "fc")

_CHANNEL_MEAN = (0.485, 0.456, 0.406)
_CHANNEL_STD = (0.229, 0.224, 0.225)

# fixed init seed for --weights none keeps runs byte-identical
_RANDOM_WEIGHTS_SEED = 0


@dataclass(frozen=True)
class ExtractorConfig:
    """Frozen description of one extraction run."""

    backbone: str = "resnet18"
    tap: str = "layer3"
    weights: str = "pretrained"  # "pretrained" | "none" | checkpoint path
    short_side: int = 512  # 0 disables resizing

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ConfigError(
                f"unknown backbone {self.backbone!r}; choose from {', '.join(BACKBONES)}"
            )
        if self.tap in POOLED_TAPS:
            raise ConfigError(
                f"tap {self.tap!r} produces a pooled vector, not a spatial map; "
                f"choose from {', '.join(SPATIAL_TAPS)}"
            )
        if self.tap not in SPATIAL_TAPS:
            raise ConfigError(
                f"unknown tap {self.tap!r}; choose from {', '.join(SPATIAL_TAPS)}"
            )
        if self.short_side < 0:
            raise ConfigError(f"short side must be >= 0, got {self.short_side}")


def build_backbone(cfg: ExtractorConfig) -> nn.Module:
    """Backbone truncated at the tap stage, in eval mode.

    ``weights="pretrained"`` needs the published weight files; when they
    cannot be fetched the error says so and points at the offline
    alternatives instead of dumping a network traceback.
    """
    from torchvision import models

    if cfg.weights == "pretrained":
        try:
            net = models.get_model(cfg.backbone, weights="DEFAULT")
        except Exception as exc:
            raise ConfigError(
                f"pretrained weights for {cfg.backbone} are unavailable "
                f"({exc}); pass --weights none for a fixed random "
                f"initialization or --weights PATH for a local state dict"
            ) from exc
    elif cfg.weights == "none":
        torch.manual_seed(_RANDOM_WEIGHTS_SEED)
        net = models.get_model(cfg.backbone, weights=None)
    else:
        net = models.get_model(cfg.backbone, weights=None)
        try:
            state = torch.load(cfg.weights, map_location="cpu", weights_only=True)
        except OSError as exc:
            raise InputError(f"cannot read weights file {cfg.weights}: {exc}") from exc
        except Exception as exc:
            raise ConfigError(f"cannot load weights from {cfg.weights}: {exc}") from exc
        try:
            net.load_state_dict(state)
        except RuntimeError as exc:
            raise ConfigError(
                f"weights in {cfg.weights} do not fit {cfg.backbone}: {exc}"
            ) from exc

    stages = []
    for name, module in net.named_children():
        stages.append((name, module))
        if name == cfg.tap:
            break
    trunk = nn.Sequential()
    for name, module in stages:
        trunk.add_module(name, module)
    trunk.eval()
    for p in trunk.parameters():
        p.requires_grad_(False)
    return trunk


def load_image(path) -> np.ndarray:
    """Decode to an (H, W, 3) uint8 array; any decode problem is an InputError."""
    try:
        with Image.open(path) as img:
            # np.array copies; PIL's buffer is read-only and torch wants writable
            return np.array(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc


def preprocess(image: np.ndarray, short_side: int) -> torch.Tensor:
    """uint8 HWC image to a normalized (1, 3, H, W) float tensor."""
    x = torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1).float() / 255.0
    x = x.unsqueeze(0)
    if short_side > 0:
        h, w = x.shape[2], x.shape[3]
        if h <= w:
            nh, nw = short_side, max(1, round(w * short_side / h))
        else:
            nh, nw = max(1, round(h * short_side / w)), short_side
        if (nh, nw) != (h, w):
            x = torch.nn.functional.interpolate(
                x, size=(nh, nw), mode="bilinear", align_corners=False, antialias=True
            )
    mean = torch.tensor(_CHANNEL_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(_CHANNEL_STD).view(1, 3, 1, 1)
    return (x - mean) / std


def extract_features(image: np.ndarray, trunk: nn.Module, cfg: ExtractorConfig) -> np.ndarray:
    """One image to its (H_f, W_f, D) float32 feature map."""
    x = preprocess(image, cfg.short_side)
    with torch.inference_mode():
        y = trunk(x)
    if y.ndim != 4:
        raise ConfigError(
            f"tap {cfg.tap!r} produced a rank-{y.ndim} activation, not a spatial map"
        )
    return y[0].permute(1, 2, 0).contiguous().numpy().astype(np.float32)


class SegHead(nn.Module):
    """Toy per-pixel classifier: a 1x1 convolution over the raw image.

    Stands in for a real segmentation model so the confidence-export
    path has a loadable checkpoint format: ``{"num_classes": K,
    "state_dict": ...}``.
    """

    def __init__(self, num_classes: int):
        super().__init__()
        self.conv = nn.Conv2d(3, num_classes, kernel_size=1)

    def forward(self, x):
        return self.conv(x)


def load_seg_head(path) -> SegHead:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except OSError as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from exc
    except Exception as exc:
        raise ConfigError(f"cannot load checkpoint {path}: {exc}") from exc
    if not isinstance(blob, dict) or "num_classes" not in blob or "state_dict" not in blob:
        raise ConfigError(
            f"checkpoint {path} must hold keys 'num_classes' and 'state_dict'"
        )
    head = SegHead(int(blob["num_classes"]))
    try:
        head.load_state_dict(blob["state_dict"])
    except RuntimeError as exc:
        raise ConfigError(f"checkpoint {path} does not fit the head: {exc}") from exc
    head.eval()
    return head


def export_confidence(image: np.ndarray, head: SegHead) -> np.ndarray:
    """Per-class scores at native image resolution, (H, W, K) float32 logits."""
    x = torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1).float() / 255.0
    with torch.inference_mode():
        scores = head(x.unsqueeze(0))
    return scores[0].permute(1, 2, 0).contiguous().numpy().astype(np.float32)


def write_tensor_atomic(values: np.ndarray, path: Path) -> None:
    # partial files must never be picked up by a concurrent reader
    tmp = path.with_name(path.name + ".tmp")
    write_tensor(values, tmp)
    os.replace(tmp, path)


def list_images(images_dir) -> list[Path]:
    root = Path(images_dir)
    if not root.is_dir():
        raise InputError(f"images directory {root} does not exist")
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise InputError(f"images directory {root} holds no files")
    return files


def run_extraction(
    images_dir,
    out_dir,
    cfg: ExtractorConfig,
    seg_checkpoint: Optional[str] = None,
    num_classes: Optional[int] = None,
) -> tuple[dict, list[str]]:
    """Process every file in images_dir; returns (fragment, per-file errors).

    Good frames are written even when some files fail; the caller turns
    a nonempty error list into a nonzero exit.
    """
    files = list_images(images_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # single-threaded kernels keep output bytes reproducible
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        trunk = build_backbone(cfg)
        head = None
        if seg_checkpoint is not None:
            head = load_seg_head(seg_checkpoint)
            head_classes = head.conv.out_channels
            if num_classes is not None and num_classes != head_classes:
                raise ConfigError(
                    f"checkpoint predicts {head_classes} classes but the manifest "
                    f"expects {num_classes}"
                )

        frames = []
        errors = []
        for path in files:
            try:
                image = load_image(path)
            except InputError as exc:
                errors.append(str(exc))
                continue
            features = extract_features(image, trunk, cfg)
            feat_name = f"{path.stem}_feat.npy"
            write_tensor_atomic(features, out / feat_name)
            entry = {
                "image": path.name,
                "features": feat_name,
                "grid": [int(features.shape[0]), int(features.shape[1])],
                "channels": int(features.shape[2]),
            }
            if head is not None:
                conf = export_confidence(image, head)
                conf_name = f"{path.stem}_conf.npy"
                write_tensor_atomic(conf, out / conf_name)
                entry["confidence"] = conf_name
                entry["confidence_kind"] = "logits"
            frames.append(entry)
    finally:
        torch.set_num_threads(previous_threads)

    if not frames and errors:
        raise InputError("no image could be decoded: " + "; ".join(errors))

    fragment = {
        "backbone": cfg.backbone,
        "tap": cfg.tap,
        "weights": cfg.weights,
        "short_side": cfg.short_side,
        "frames": frames,
    }
    if head is not None:
        fragment["num_classes"] = int(head.conv.out_channels)
    frag_path = out / "manifest_fragment.json"
    tmp = frag_path.with_name(frag_path.name + ".tmp")
    tmp.write_text(json.dumps(fragment, indent=1, sort_keys=True), encoding="utf-8")
    os.replace(tmp, frag_path)
    return fragment, errors
