"""Dense cross-frame cosine-correlation search.

For every source pixel the unconstrained search finds the target pixel
with maximum feature correlation; the constrained search restricts the
candidates to target pixels sharing the source pixel's segmentation
label.  Features are expected to be pre-normalized (unit L2 per pixel,
or exactly zero), which turns cosine similarity into a dot product.

Two implementations are provided: a brute-force reference that defines
the exact semantics (including the tie-break: first maximizer in a
row-major scan of the target grid), and a blocked kernel that evaluates
similarities in source-block x target matrix products.  All similarity
arithmetic is float64 so the two paths agree to well below the 1e-6
documented tolerance.

Search is full-frame by default; ``SearchConfig.window_radius`` opts in
to a square search window of Chebyshev radius r around the source
coordinate (both grids must then agree).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError, ValidationError
from .tensor_io import FeatureMap, SegMap

_ZERO_NORM = 1e-12
_TIE_BREAK = "first-row-major"

# cap on elements of one similarity block (~32 MB of float64)
_BLOCK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SearchConfig:
    """Search window and tie-break policy.

    ``window_radius=None`` searches the full target frame; an integer
    r >= 0 restricts candidates to |i'-i| <= r and |j'-j| <= r.  The
    tie-break is fixed: among equal maxima the first target pixel in
    row-major order wins.
    """

    window_radius: Optional[int] = None
    tie_break: str = _TIE_BREAK

    def __post_init__(self):
        if self.window_radius is not None and self.window_radius < 0:
            raise ValidationError(f"window_radius must be >= 0, got {self.window_radius}")
        if self.tie_break != _TIE_BREAK:
            raise ValidationError(f"tie_break is fixed to {_TIE_BREAK!r}")


@dataclass
class MatchResult:
    """Per-pixel maxima for one search direction (source -> target).

    ``c_star``/``argmax_star`` hold the unconstrained maxima,
    ``c_dagger``/``argmax_dagger`` the segmentation-constrained maxima.
    ``feasible`` is False where the target frame has no candidate of the
    source pixel's class (there ``c_dagger`` is -1 and the argmax is a
    (0, 0) placeholder).
    """

    c_star: np.ndarray          # (H, W) float64
    argmax_star: np.ndarray     # (H, W, 2) int64, (row, col) into target
    c_dagger: np.ndarray        # (H, W) float64
    argmax_dagger: np.ndarray   # (H, W, 2) int64
    feasible: np.ndarray        # (H, W) bool
    direction: tuple = (0, 1)   # (source frame id, target frame id)


def normalize_features(fmap: FeatureMap) -> FeatureMap:
    """Scale every pixel vector to unit L2 norm.

    Vectors with norm below 1e-12 become exactly zero; they then
    correlate 0 with everything.
    """
    values = fmap.values.astype(np.float64, copy=False)
    norms = np.sqrt(np.einsum("hwd,hwd->hw", values, values))
    out = np.zeros_like(values, dtype=np.float64)
    ok = norms >= _ZERO_NORM
    out[ok] = values[ok] / norms[ok, None]
    return FeatureMap(values=out)


def align_seg_to_features(seg: SegMap, target_grid: tuple[int, int]) -> SegMap:
    """Nearest-neighbor subsample of a segmentation map onto the feature grid.

    Output pixel (i, j) takes the source label at
    row = round((i+0.5)*H/H_f - 0.5), col analogous (round half up).
    Upsampling is refused: segmentation is never coarser than features.
    """
    h, w = seg.grid
    hf, wf = target_grid
    if hf < 1 or wf < 1:
        raise ShapeError(f"target grid must be positive, got {target_grid}")
    if h < hf or w < wf:
        raise ShapeError(
            f"cannot upsample segmentation {seg.grid} to feature grid {target_grid}"
        )
    # round-half-up of (i+0.5)*H/H_f - 0.5 simplifies to ((2i+1)*H) // (2*H_f)
    rows = np.minimum((2 * np.arange(hf, dtype=np.int64) + 1) * h // (2 * hf), h - 1)
    cols = np.minimum((2 * np.arange(wf, dtype=np.int64) + 1) * w // (2 * wf), w - 1)
    return SegMap(labels=seg.labels[np.ix_(rows, cols)], num_classes=seg.num_classes)


def _check_pair(f_src: FeatureMap, f_tgt: FeatureMap, cfg: SearchConfig) -> None:
    if f_src.dim != f_tgt.dim:
        raise ShapeError(f"feature dims differ: {f_src.dim} vs {f_tgt.dim}")
    if cfg.window_radius is not None and f_src.grid != f_tgt.grid:
        raise ShapeError(
            f"windowed search requires equal grids, got {f_src.grid} vs {f_tgt.grid}"
        )


def _check_seg(f: FeatureMap, y: SegMap, role: str) -> None:
    if y.grid != f.grid:
        raise ShapeError(
            f"{role} segmentation grid {y.grid} does not match feature grid {f.grid}; "
            "align_seg_to_features first"
        )


def _flat_to_coords(flat: np.ndarray, width: int) -> np.ndarray:
    coords = np.empty(flat.shape + (2,), dtype=np.int64)
    coords[..., 0] = flat // width
    coords[..., 1] = flat % width
    return coords


def _source_blocks(n: int, n_target: int) -> list[tuple[int, int]]:
    block = max(1, min(n, _BLOCK_ELEMENTS // max(1, n_target)))
    return [(s, min(s + block, n)) for s in range(0, n, block)]


def _run_blocks(blocks, worker, threads: int) -> None:
    # each block writes a disjoint output slice, so any schedule is bit-identical
    if threads <= 1 or len(blocks) <= 1:
        for b in blocks:
            worker(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(worker, blocks))


def _search_full(
    src_flat: np.ndarray,
    tgt_flat: np.ndarray,
    y_src_flat: Optional[np.ndarray],
    y_tgt_flat: Optional[np.ndarray],
    num_classes: int,
    need_star: bool,
    need_dagger: bool,
    threads: int,
):
    ns = src_flat.shape[0]
    c_star = np.empty(ns) if need_star else None
    a_star = np.empty(ns, dtype=np.int64) if need_star else None
    c_dag = np.empty(ns) if need_dagger else None
    a_dag = np.empty(ns, dtype=np.int64) if need_dagger else None
    feas = np.empty(ns, dtype=bool) if need_dagger else None
    if need_dagger:
        class_cols = [np.flatnonzero(y_tgt_flat == c) for c in range(num_classes)]

    def worker(block):
        s, e = block
        sims = src_flat[s:e] @ tgt_flat.T
        if need_star:
            c_star[s:e] = sims.max(axis=1)
            a_star[s:e] = sims.argmax(axis=1)
        if need_dagger:
            for lab in np.unique(y_src_flat[s:e]):
                rows = np.flatnonzero(y_src_flat[s:e] == lab)
                cols = class_cols[lab]
                if cols.size == 0:
                    c_dag[s + rows] = -1.0
                    a_dag[s + rows] = 0
                    feas[s + rows] = False
                    continue
                sub = sims[rows[:, None], cols[None, :]]
                c_dag[s + rows] = sub.max(axis=1)
                a_dag[s + rows] = cols[sub.argmax(axis=1)]
                feas[s + rows] = True

    _run_blocks(_source_blocks(ns, tgt_flat.shape[0]), worker, threads)
    return c_star, a_star, c_dag, a_dag, feas


def _search_windowed(
    src: np.ndarray,
    tgt: np.ndarray,
    y_src: Optional[np.ndarray],
    y_tgt: Optional[np.ndarray],
    num_classes: int,
    radius: int,
    need_star: bool,
    need_dagger: bool,
    threads: int,
):
    h, w, _ = src.shape
    n = h * w
    c_star = np.empty(n) if need_star else None
    a_star = np.empty(n, dtype=np.int64) if need_star else None
    c_dag = np.empty(n) if need_dagger else None
    a_dag = np.empty(n, dtype=np.int64) if need_dagger else None
    feas = np.empty(n, dtype=bool) if need_dagger else None
    # column window |j - j'| <= r, shared by every source row
    jj = np.arange(w)
    col_ok = np.abs(jj[:, None] - jj[None, :]) <= radius  # (w_src, w_tgt)
    y_tgt_flat = None if y_tgt is None else y_tgt.reshape(-1)

    def worker(block):
        for i in range(*block):
            i0, i1 = max(0, i - radius), min(h, i + radius + 1)
            band = tgt[i0:i1].reshape(-1, tgt.shape[2])
            sims = src[i] @ band.T                        # (w, band_rows*w)
            # band is flattened row-major, so tile the column window per band row
            allowed = np.repeat(col_ok[:, None, :], i1 - i0, axis=1).reshape(w, -1)
            base = i * w
            if need_star:
                masked = np.where(allowed, sims, -np.inf)
                a = masked.argmax(axis=1)
                c_star[base : base + w] = masked[np.arange(w), a]
                a_star[base : base + w] = i0 * w + a
            if need_dagger:
                y_band = y_tgt_flat[i0 * w : i1 * w]
                for lab in np.unique(y_src[i]):
                    rows = np.flatnonzero(y_src[i] == lab)
                    m = allowed[rows] & (y_band == lab)[None, :]
                    vals = np.where(m, sims[rows], -np.inf)
                    a = vals.argmax(axis=1)
                    mx = vals[np.arange(rows.size), a]
                    ok = np.isfinite(mx)
                    c_dag[base + rows] = np.where(ok, mx, -1.0)
                    a_dag[base + rows] = np.where(ok, i0 * w + a, 0)
                    feas[base + rows] = ok

    rows_per_chunk = max(1, h // max(1, threads * 4)) if threads > 1 else h
    blocks = [(s, min(s + rows_per_chunk, h)) for s in range(0, h, rows_per_chunk)]
    _run_blocks(blocks, worker, threads)
    return c_star, a_star, c_dag, a_dag, feas


def _search(
    f_src: FeatureMap,
    f_tgt: FeatureMap,
    y_src: Optional[SegMap],
    y_tgt: Optional[SegMap],
    cfg: SearchConfig,
    need_star: bool,
    need_dagger: bool,
    threads: int,
):
    _check_pair(f_src, f_tgt, cfg)
    if need_dagger:
        _check_seg(f_src, y_src, "source")
        _check_seg(f_tgt, y_tgt, "target")
        if y_src.num_classes != y_tgt.num_classes:
            raise ValidationError(
                f"class counts differ: {y_src.num_classes} vs {y_tgt.num_classes}"
            )
    src = f_src.values.astype(np.float64, copy=False)
    tgt = f_tgt.values.astype(np.float64, copy=False)
    if cfg.window_radius is None:
        res = _search_full(
            src.reshape(-1, f_src.dim),
            tgt.reshape(-1, f_tgt.dim),
            None if y_src is None else y_src.labels.reshape(-1),
            None if y_tgt is None else y_tgt.labels.reshape(-1),
            0 if y_src is None else y_src.num_classes,
            need_star,
            need_dagger,
            threads,
        )
    else:
        res = _search_windowed(
            src,
            tgt,
            None if y_src is None else y_src.labels,
            None if y_tgt is None else y_tgt.labels,
            0 if y_src is None else y_src.num_classes,
            cfg.window_radius,
            need_star,
            need_dagger,
            threads,
        )
    c_star, a_star, c_dag, a_dag, feas = res
    hs, ws = f_src.grid
    wt = f_tgt.grid[1]
    out = []
    if need_star:
        out += [c_star.reshape(hs, ws), _flat_to_coords(a_star, wt).reshape(hs, ws, 2)]
    if need_dagger:
        out += [
            c_dag.reshape(hs, ws),
            _flat_to_coords(a_dag, wt).reshape(hs, ws, 2),
            feas.reshape(hs, ws),
        ]
    return tuple(out)


def match_unconstrained(
    f_src: FeatureMap,
    f_tgt: FeatureMap,
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Maximum correlation and its target coordinates for every source pixel."""
    return _search(f_src, f_tgt, None, None, cfg, True, False, threads)


def match_constrained(
    f_src: FeatureMap,
    f_tgt: FeatureMap,
    y_src: SegMap,
    y_tgt: SegMap,
    cfg: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Maximum correlation over target pixels sharing the source pixel's label.

    Returns (c_dagger, argmax_dagger, feasible); feasible is False where
    the target frame holds no pixel of the source class inside the window.
    """
    return _search(f_src, f_tgt, y_src, y_tgt, cfg, False, True, threads)


def match_frames(
    f_src: FeatureMap,
    f_tgt: FeatureMap,
    y_src: SegMap,
    y_tgt: SegMap,
    cfg: SearchConfig = SearchConfig(),
    direction: tuple = (0, 1),
    threads: int = 1,
) -> MatchResult:
    """Unconstrained and constrained search in one pass over the similarities."""
    c_star, a_star, c_dag, a_dag, feas = _search(
        f_src, f_tgt, y_src, y_tgt, cfg, True, True, threads
    )
    return MatchResult(
        c_star=c_star,
        argmax_star=a_star,
        c_dagger=c_dag,
        argmax_dagger=a_dag,
        feasible=feas,
        direction=direction,
    )


# ---------------------------------------------------------------------------
# brute-force reference
# ---------------------------------------------------------------------------


def _window_candidates(i: int, j: int, h: int, w: int, radius: Optional[int]) -> np.ndarray:
    """Flat target indices inside the window, in row-major order."""
    if radius is None:
        return np.arange(h * w, dtype=np.int64)
    rows = np.arange(max(0, i - radius), min(h, i + radius + 1), dtype=np.int64)
    cols = np.arange(max(0, j - radius), min(w, j + radius + 1), dtype=np.int64)
    return (rows[:, None] * w + cols[None, :]).reshape(-1)


def brute_force_match_unconstrained(
    f_src: FeatureMap, f_tgt: FeatureMap, cfg: SearchConfig = SearchConfig()
) -> tuple[np.ndarray, np.ndarray]:
    """Reference implementation: per-pixel linear scan of all candidates.

    Defines the semantics the blocked kernel must reproduce, including
    the first-in-row-major tie-break.  Intended for small grids.
    """
    _check_pair(f_src, f_tgt, cfg)
    hs, ws = f_src.grid
    ht, wt = f_tgt.grid
    tgt_flat = f_tgt.values.astype(np.float64, copy=False).reshape(-1, f_tgt.dim)
    c = np.empty((hs, ws))
    a = np.empty((hs, ws), dtype=np.int64)
    for i in range(hs):
        for j in range(ws):
            cand = _window_candidates(i, j, ht, wt, cfg.window_radius)
            sims = tgt_flat[cand] @ f_src.values[i, j].astype(np.float64)
            k = int(np.argmax(sims))
            c[i, j] = sims[k]
            a[i, j] = cand[k]
    return c, _flat_to_coords(a, wt)


def brute_force_match_constrained(
    f_src: FeatureMap,
    f_tgt: FeatureMap,
    y_src: SegMap,
    y_tgt: SegMap,
    cfg: SearchConfig = SearchConfig(),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference constrained search; same scan order as the unconstrained one."""
    _check_pair(f_src, f_tgt, cfg)
    _check_seg(f_src, y_src, "source")
    _check_seg(f_tgt, y_tgt, "target")
    hs, ws = f_src.grid
    ht, wt = f_tgt.grid
    tgt_flat = f_tgt.values.astype(np.float64, copy=False).reshape(-1, f_tgt.dim)
    y_tgt_flat = y_tgt.labels.reshape(-1)
    c = np.empty((hs, ws))
    a = np.empty((hs, ws), dtype=np.int64)
    feas = np.empty((hs, ws), dtype=bool)
    for i in range(hs):
        for j in range(ws):
            cand = _window_candidates(i, j, ht, wt, cfg.window_radius)
            cand = cand[y_tgt_flat[cand] == y_src.labels[i, j]]
            if cand.size == 0:
                c[i, j] = -1.0
                a[i, j] = 0
                feas[i, j] = False
                continue
            sims = tgt_flat[cand] @ f_src.values[i, j].astype(np.float64)
            k = int(np.argmax(sims))
            c[i, j] = sims[k]
            a[i, j] = cand[k]
            feas[i, j] = True
    return c, _flat_to_coords(a, wt), feas
