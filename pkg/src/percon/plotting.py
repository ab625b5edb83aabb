"""Figure rendering for the report paths.

Report commands save PNG figures (matplotlib, Agg backend) next to
their CSV outputs.  The standalone ``curve_svg`` renderer is separate:
it hand-writes a minimal SVG polyline so a curve CSV can be turned into
a plot with no raster step, and its output format (640x480 viewBox,
axes, single polyline) is part of the CLI contract.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_DPI = 120


def line_figure(path, series, xlabel: str, ylabel: str, title: str) -> None:
    """Line plot; series is a list of (x values, y values, label)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for xs, ys, label in series:
        ax.plot(xs, ys, marker="o" if len(xs) <= 64 else None, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def bar_figure(path, labels, values, ylabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def histogram_figure(path, arrays, xlabel: str, title: str) -> None:
    """Overlaid histograms; arrays is a list of (values, label)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for values, label in arrays:
        flat = values.reshape(-1)
        # near-constant data makes 40 bin edges collide; collapse to one bin
        spread = float(flat.max() - flat.min()) if flat.size else 0.0
        scale = max(abs(float(flat.max())), 1.0) if flat.size else 1.0
        bins = 40 if spread > 1e-9 * scale else 1
        ax.hist(flat, bins=bins, alpha=0.6, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("pixels")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def scatter_figure(path, x, y, xlabel: str, ylabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.scatter(x, y)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def curve_figure(path, curves, xlabel: str, ylabel: str, title: str, diagonal=False):
    """Curve overlay (ROC / PR style); curves is a list of (points, label)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for points, label in curves:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, label=label)
    if diagonal:
        ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


# ---------------------------------------------------------------------------
# standalone SVG
# ---------------------------------------------------------------------------

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50  # plot margins


def curve_svg(points, xlabel: str = "x", ylabel: str = "y") -> str:
    """Standalone 640x480 SVG: one polyline over plain axes.

    Axis ranges snap to the data extent; a flat extent is centered.
    """
    if not points:
        raise ValueError("no points to plot")
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px0, px1 = _ML, _W - _MR
    py0, py1 = _H - _MB, _MT  # y axis points up

    def sx(x):
        return px0 + (x - x0) / (x1 - x0) * (px1 - px0)

    def sy(y):
        return py0 + (y - y0) / (y1 - y0) * (py1 - py0)

    coord = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{px0}" y1="{py0}" x2="{px1}" y2="{py0}" stroke="black"/>',
        f'<line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}" stroke="black"/>',
        f'<text x="{(px0 + px1) / 2:.0f}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="14">{escape(xlabel)}</text>',
        f'<text x="16" y="{(py0 + py1) / 2:.0f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 16 {(py0 + py1) / 2:.0f})">{escape(ylabel)}</text>',
        f'<text x="{px0}" y="{py0 + 18}" text-anchor="middle" font-size="11">{x0:.9g}</text>',
        f'<text x="{px1}" y="{py0 + 18}" text-anchor="middle" font-size="11">{x1:.9g}</text>',
        f'<text x="{px0 - 6}" y="{py0 + 4}" text-anchor="end" font-size="11">{y0:.9g}</text>',
        f'<text x="{px0 - 6}" y="{py1 + 4}" text-anchor="end" font-size="11">{y1:.9g}</text>',
        f'<polyline points="{coord}" fill="none" stroke="#1f6fb2" stroke-width="2"/>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
