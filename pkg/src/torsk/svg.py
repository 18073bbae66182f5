"""Self-contained SVG heatmaps built from one rectangle per grid cell."""
from __future__ import annotations

from pathlib import Path

import numpy as np

# viridis sampled at 9 stops; cells interpolate linearly between them
_STOPS = np.array(
    [
        [68, 1, 84],
        [71, 44, 122],
        [59, 81, 139],
        [44, 113, 142],
        [33, 144, 141],
        [39, 173, 129],
        [92, 200, 99],
        [170, 220, 50],
        [253, 231, 37],
    ],
    dtype=np.float64,
)


def colormap(values: np.ndarray, vmin: float, vmax: float) -> np.ndarray:
    """RGB rows (0..255 ints) for ``values`` mapped linearly onto ``[vmin, vmax]``."""
    v = np.asarray(values, dtype=np.float64)
    span = vmax - vmin
    u = np.zeros_like(v) if span <= 0 else np.clip((v - vmin) / span, 0.0, 1.0)
    pos = u * (len(_STOPS) - 1)
    i0 = np.minimum(np.floor(pos).astype(int), len(_STOPS) - 2)
    frac = (pos - i0)[..., None]
    rgb = (1.0 - frac) * _STOPS[i0] + frac * _STOPS[i0 + 1]
    return np.rint(rgb).astype(int)


def heatmap_svg(grid, cell: int = 12, title: str | None = None) -> str:
    """SVG document drawing ``grid`` (rows top to bottom) as colored squares."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"heatmap needs a 2D grid, got shape {g.shape}")
    rows, cols = g.shape
    top = 20 if title else 0
    width, height = cols * cell, rows * cell + top
    rgb = colormap(g, float(g.min()), float(g.max()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if title:
        parts.append(f'<text x="2" y="14" font-family="sans-serif" font-size="12">{_escape(title)}</text>')
    for i in range(rows):
        for j in range(cols):
            r, gr, b = rgb[i, j]
            parts.append(
                f'<rect x="{j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({r},{gr},{b})"><title>({i},{j}) {g[i, j]:g}</title></rect>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_heatmap_svg(path, grid, cell: int = 12, title: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(heatmap_svg(grid, cell, title), encoding="utf-8")
    return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
