"""Tensor container I/O, typed grid loaders, and manifest parsing.

All tensor artifacts (features, segmentation, confidence, flow, score
maps) live in the plain binary array container, version 1.0: magic
``\\x93NUMPY``, one byte major=1, one byte minor=0, little-endian uint16
header length, an ASCII header dict with keys ``descr``/``fortran_order``/
``shape``, then the raw row-major payload.  Column-major files are
rejected rather than transposed, so an axis mix-up fails loudly.

Supported dtypes: float32 (little-endian), uint8, uint16, int32
(little-endian).  Features, confidence, flow and score maps must be
float32; segmentation may be uint8 (preferred), uint16, or int32.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    FormatError,
    SchemaError,
    ShapeError,
    TruncationError,
    UnsupportedDtypeError,
    ValidationError,
)

_MAGIC = b"\x93NUMPY"

# canonical descr per supported dtype; read side also accepts the
# byte-order-free spellings numpy emits for single-byte types
_DESCR_BY_DTYPE = {
    np.dtype(np.float32): "<f4",
    np.dtype(np.uint8): "|u1",
    np.dtype(np.uint16): "<u2",
    np.dtype(np.int32): "<i4",
}
_DTYPE_BY_DESCR = {
    "<f4": np.dtype(np.float32),
    "|u1": np.dtype(np.uint8),
    "<u1": np.dtype(np.uint8),
    "<u2": np.dtype(np.uint16),
    "<i4": np.dtype(np.int32),
}

_FLOAT_DESCR = "<f4"
_SEG_DTYPES = (np.dtype(np.uint8), np.dtype(np.uint16), np.dtype(np.int32))


def write_tensor(values: np.ndarray, path: str | Path) -> None:
    """Write an array to ``path`` in the container format.

    The array dtype must be one of the supported four; rank must be 1,
    2, or 3.  The payload is written row-major, so a later
    :func:`read_tensor` returns an element-wise identical array.
    """
    values = np.asarray(values)
    if values.dtype not in _DESCR_BY_DTYPE:
        raise UnsupportedDtypeError(f"cannot write dtype {values.dtype}")
    if values.ndim not in (1, 2, 3):
        raise ShapeError(f"tensor rank must be 1, 2, or 3, got {values.ndim}")
    descr = _DESCR_BY_DTYPE[values.dtype]
    shape = values.shape
    shape_repr = "(%s)" % (", ".join(str(d) for d in shape) + ("," if len(shape) == 1 else ""))
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (descr, shape_repr)
    # pad with spaces + newline so magic+version+len+header is a multiple of 64
    unpadded = len(_MAGIC) + 2 + 2 + len(header) + 1
    padding = (64 - unpadded % 64) % 64
    header = header + " " * padding + "\n"
    payload = np.ascontiguousarray(values).tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("ascii"))
        fh.write(payload)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a container file back into a row-major array.

    Raises:
        FormatError: missing magic, unparseable header, or trailing bytes.
        UnsupportedDtypeError: descr outside the supported set.
        TruncationError: payload shorter than the header promises.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 4 or blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: not a tensor container (bad magic)")
    major, minor = blob[6], blob[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"{path}: unsupported container version {major}.{minor}")
    (hlen,) = struct.unpack("<H", blob[8:10])
    header_end = 10 + hlen
    if len(blob) < header_end:
        raise FormatError(f"{path}: header extends past end of file")
    try:
        header = ast.literal_eval(blob[10:header_end].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{path}: header keys must be descr/fortran_order/shape")
    descr = header["descr"]
    if not isinstance(descr, str) or descr not in _DTYPE_BY_DESCR:
        raise UnsupportedDtypeError(f"{path}: unsupported dtype descr {descr!r}")
    if header["fortran_order"] is not False:
        raise FormatError(f"{path}: column-major files are rejected, re-export row-major")
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(d, int) and d >= 0 for d in shape
    ):
        raise FormatError(f"{path}: bad shape {shape!r}")
    if not 1 <= len(shape) <= 3:
        raise ShapeError(f"{path}: rank must be 1..3, got shape {shape}")
    dtype = _DTYPE_BY_DESCR[descr]
    count = int(np.prod(shape, dtype=np.int64))
    nbytes = count * dtype.itemsize
    payload = blob[header_end:]
    if len(payload) < nbytes:
        raise TruncationError(
            f"{path}: payload has {len(payload)} bytes, header promises {nbytes}"
        )
    if len(payload) > nbytes:
        raise FormatError(f"{path}: {len(payload) - nbytes} trailing bytes after payload")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


# ---------------------------------------------------------------------------
# typed grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureMap:
    """Per-pixel perceptual feature grid, shape (H_f, W_f, D)."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ShapeError(f"feature map must be (H, W, D), got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValidationError("feature map contains non-finite values")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]


@dataclass(frozen=True)
class SegMap:
    """Per-pixel class-label grid with its class count."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise ShapeError(f"segmentation must be (H, W), got {self.labels.shape}")
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValidationError(
                f"labels must lie in [0, {self.num_classes}), "
                f"found range [{self.labels.min()}, {self.labels.max()}]"
            )

    @property
    def grid(self) -> tuple[int, int]:
        return self.labels.shape


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel scalar grid (confidence z, PC map, correctness alpha)."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ShapeError(f"score map must be (H, W), got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValidationError("score map contains non-finite values")

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class FlowField:
    """Displacement grid (H, W, 2): channel 0 horizontal, channel 1 vertical."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[2] != 2:
            raise ShapeError(f"flow must be (H, W, 2), got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValidationError("flow field contains non-finite values")

    @property
    def grid(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]


def load_feature_map(path: str | Path) -> FeatureMap:
    arr = read_tensor(path)
    if arr.dtype != np.float32:
        raise UnsupportedDtypeError(f"{path}: feature maps must be float32")
    if arr.ndim != 3:
        raise ShapeError(f"{path}: feature file must be (H_f, W_f, D), got {arr.shape}")
    return FeatureMap(values=arr)


def load_seg_map(path: str | Path, num_classes: int) -> SegMap:
    arr = read_tensor(path)
    if arr.dtype not in _SEG_DTYPES:
        raise UnsupportedDtypeError(f"{path}: segmentation must be uint8/uint16/int32")
    if arr.ndim != 2:
        raise ShapeError(f"{path}: segmentation file must be (H, W), got {arr.shape}")
    try:
        return SegMap(labels=arr.astype(np.int64), num_classes=num_classes)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def load_score_map(path: str | Path) -> ScoreMap:
    arr = read_tensor(path)
    if arr.dtype != np.float32:
        raise UnsupportedDtypeError(f"{path}: score maps must be float32")
    if arr.ndim != 2:
        raise ShapeError(f"{path}: score file must be (H, W), got {arr.shape}")
    return ScoreMap(values=arr)


def load_flow_field(path: str | Path) -> FlowField:
    arr = read_tensor(path)
    if arr.dtype != np.float32:
        raise UnsupportedDtypeError(f"{path}: flow fields must be float32")
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ShapeError(f"{path}: flow file must be (H, W, 2), got {arr.shape}")
    return FlowField(values=arr)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

_CONFIDENCE_KINDS = ("prob", "logits")


@dataclass(frozen=True)
class FrameRecord:
    """File paths for one video frame; optional entries are None."""

    features: Path
    pred_seg: Path
    gt_seg: Optional[Path] = None
    confidence: Optional[Path] = None
    confidence_kind: Optional[str] = None
    flow_to_next: Optional[Path] = None
    image: Optional[Path] = None


@dataclass(frozen=True)
class VideoRecord:
    name: str
    frames: tuple[FrameRecord, ...]

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def labeled_frames(self) -> tuple[int, ...]:
        """1-based indices of frames with ground-truth segmentation."""
        return tuple(t for t, f in enumerate(self.frames, start=1) if f.gt_seg is not None)


@dataclass(frozen=True)
class VideoManifest:
    num_classes: int
    videos: tuple[VideoRecord, ...]
    path: Optional[Path] = field(default=None, compare=False)

    @property
    def num_videos(self) -> int:
        return len(self.videos)

    def video(self, name: str) -> VideoRecord:
        for v in self.videos:
            if v.name == name:
                return v
        raise SchemaError(f"manifest has no video named {name!r}")


def _frame_path(entry: dict, key: str, base: Path, required: bool) -> Optional[Path]:
    if key not in entry or entry[key] is None:
        if required:
            raise SchemaError(f"frame record missing required field {key!r}")
        return None
    value = entry[key]
    if not isinstance(value, str):
        raise SchemaError(f"frame field {key!r} must be a path string")
    return base / value


def load_manifest(path: str | Path) -> VideoManifest:
    """Parse a manifest JSON document; referenced files are not opened.

    Relative paths inside the manifest resolve against the manifest's
    own directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise SchemaError(f"{path}: cannot parse manifest ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: manifest top level must be an object")
    if "num_classes" not in doc:
        raise SchemaError(f"{path}: manifest missing num_classes")
    num_classes = doc["num_classes"]
    if not isinstance(num_classes, int) or num_classes < 1:
        raise SchemaError(f"{path}: num_classes must be an integer >= 1")
    raw_videos = doc.get("videos")
    if not isinstance(raw_videos, list) or not raw_videos:
        raise SchemaError(f"{path}: manifest must list at least one video")
    base = path.parent
    videos = []
    for vi, rv in enumerate(raw_videos):
        if not isinstance(rv, dict) or not isinstance(rv.get("name"), str):
            raise SchemaError(f"{path}: video #{vi} missing name")
        raw_frames = rv.get("frames")
        if not isinstance(raw_frames, list) or not raw_frames:
            raise SchemaError(f"{path}: video {rv['name']!r} has no frames")
        frames = []
        for fi, rf in enumerate(raw_frames):
            if not isinstance(rf, dict):
                raise SchemaError(f"{path}: video {rv['name']!r} frame #{fi} is not an object")
            kind = rf.get("confidence_kind")
            if kind is not None and kind not in _CONFIDENCE_KINDS:
                raise SchemaError(
                    f"{path}: confidence_kind must be one of {_CONFIDENCE_KINDS}, got {kind!r}"
                )
            confidence = _frame_path(rf, "confidence", base, required=False)
            if confidence is not None and kind is None:
                raise SchemaError(
                    f"{path}: video {rv['name']!r} frame #{fi} has a confidence file "
                    "but no confidence_kind"
                )
            frames.append(
                FrameRecord(
                    features=_frame_path(rf, "features", base, required=True),
                    pred_seg=_frame_path(rf, "pred_seg", base, required=True),
                    gt_seg=_frame_path(rf, "gt_seg", base, required=False),
                    confidence=confidence,
                    confidence_kind=kind,
                    flow_to_next=_frame_path(rf, "flow_to_next", base, required=False),
                    image=_frame_path(rf, "image", base, required=False),
                )
            )
        videos.append(VideoRecord(name=rv["name"], frames=tuple(frames)))
    return VideoManifest(num_classes=num_classes, videos=tuple(videos), path=path)


def check_frame_shapes(*grids: tuple[str, tuple[int, int]]) -> None:
    """Require every (name, (H, W)) pair to agree; raise ShapeError naming the odd one."""
    if not grids:
        return
    ref_name, ref = grids[0]
    for name, shape in grids[1:]:
        if shape != ref:
            raise ShapeError(
                f"{name} grid {shape} does not match {ref_name} grid {ref}"
            )
