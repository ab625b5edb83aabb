from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from percon import FeatureMap, SegMap, write_tensor


def unit_features(rng: np.random.Generator, shape) -> FeatureMap:
    """Random unit-norm feature map for property loops."""
    v = rng.standard_normal(shape)
    v /= np.sqrt((v * v).sum(axis=-1, keepdims=True))
    return FeatureMap(values=v)


@pytest.fixture
def pc1():
    """Tiny hand-enumerable pair: 1x3 grids, 2 feature dims, 2 classes.

    With the consistent labels both directions give mean ratios of 5.0;
    with the flipped labels both give -16.5.
    """
    f_a = FeatureMap(np.array([[[1, 0], [0, 1], [0.8, 0.6]]], dtype=np.float64))
    f_b = FeatureMap(np.array([[[1, 0], [0, 1], [0.6, 0.8]]], dtype=np.float64))
    return {
        "f_a": f_a,
        "f_b": f_b,
        "y_a": SegMap(np.array([[0, 1, 0]], dtype=np.int64), num_classes=2),
        "y_b": SegMap(np.array([[0, 1, 1]], dtype=np.int64), num_classes=2),
        "y_b_flipped": SegMap(np.array([[1, 0, 0]], dtype=np.int64), num_classes=2),
    }


class ManifestBuilder:
    """Writes frame tensors plus the manifest JSON tying them together."""

    def __init__(self, root: Path, num_classes: int):
        self.root = root
        self.num_classes = num_classes
        self.videos: dict[str, list[dict]] = {}

    def add_frame(
        self,
        video: str,
        features: np.ndarray,
        pred_seg: np.ndarray,
        gt_seg=None,
        confidence=None,
        confidence_kind=None,
        flow_to_next=None,
    ) -> dict:
        frames = self.videos.setdefault(video, [])
        t = len(frames)
        stem = f"{video}_f{t}"
        entry = {}

        def put(key, arr, suffix):
            name = f"{stem}_{suffix}.npy"
            write_tensor(arr, self.root / name)
            entry[key] = name

        put("features", np.asarray(features, dtype=np.float32), "feat")
        put("pred_seg", np.asarray(pred_seg, dtype=np.uint8), "pred")
        if gt_seg is not None:
            put("gt_seg", np.asarray(gt_seg, dtype=np.uint8), "gt")
        if confidence is not None:
            put("confidence", np.asarray(confidence, dtype=np.float32), "conf")
            entry["confidence_kind"] = confidence_kind or "prob"
        if flow_to_next is not None:
            put("flow_to_next", np.asarray(flow_to_next, dtype=np.float32), "flow")
        frames.append(entry)
        return entry

    def write(self, name: str = "manifest.json") -> Path:
        doc = {
            "num_classes": self.num_classes,
            "videos": [
                {"name": v, "frames": frames} for v, frames in self.videos.items()
            ],
        }
        path = self.root / name
        path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        return path


@pytest.fixture
def build_manifest(tmp_path):
    def factory(num_classes: int) -> ManifestBuilder:
        return ManifestBuilder(tmp_path, num_classes)

    return factory


def pc1_manifest(builder: ManifestBuilder, flipped: bool = False) -> Path:
    """The 1x3 fixture pair packaged as a two-frame video manifest."""
    f_a = np.array([[[1, 0], [0, 1], [0.8, 0.6]]], dtype=np.float32)
    f_b = np.array([[[1, 0], [0, 1], [0.6, 0.8]]], dtype=np.float32)
    y_a = np.array([[0, 1, 0]], dtype=np.uint8)
    y_b = np.array([[1, 0, 0]] if flipped else [[0, 1, 1]], dtype=np.uint8)
    builder.add_frame("pair", f_a, y_a)
    builder.add_frame("pair", f_b, y_b)
    return builder.write()
