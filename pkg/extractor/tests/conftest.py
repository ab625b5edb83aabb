from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def checker_image(size: int = 224, seed: int = 42) -> np.ndarray:
    """Deterministic RGB test image: noisy checkerboard."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    base = (((yy // 16) + (xx // 16)) % 2) * 160 + 40
    img = np.stack([base, np.roll(base, 5, 0), np.roll(base, 5, 1)], axis=-1)
    img = img + rng.integers(0, 40, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture
def image_dir(tmp_path) -> Path:
    """Two distinct frames plus a duplicate of the first."""
    d = tmp_path / "imgs"
    d.mkdir()
    Image.fromarray(checker_image(seed=42)).save(d / "f000.png")
    Image.fromarray(checker_image(seed=42)).save(d / "f001.png")
    Image.fromarray(checker_image(seed=43)).save(d / "f002.png")
    return d


@pytest.fixture
def single_image_dir(tmp_path) -> Path:
    d = tmp_path / "one"
    d.mkdir()
    Image.fromarray(checker_image(seed=42)).save(d / "f000.png")
    return d
