"""Phase-diagram rendering of surrogate grids to PPM images and CSV tables.

Each heatmap shows one outcome measure over the (h, a) plane on a diverging
blue-white-red scale with red anchored at the fragmented end.  Average edge
weight grows as the network homogenizes, so that one measure is drawn with
the scale reversed; everything else (community count, modularity, community
state spread) grows with fragmentation and maps high values to red.

Images are binary PPM (P6): trivially written, readable by any image tool.
Grid cells are replicated to integer pixel blocks so small grids still come
out at a readable size.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import MEASURES
from .surrogate import HeatmapGrid

_BLUE = np.array([59.0, 76.0, 192.0])
_WHITE = np.array([255.0, 255.0, 255.0])
_RED = np.array([180.0, 4.0, 38.0])

# Measures whose high end means cohesion, not fragmentation.
_RED_IS_LOW = frozenset({"avg_edge_weight"})

_TARGET_PIXELS = 360


def _diverging_rgb(t: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] onto the blue-white-red ramp."""
    t = np.clip(t, 0.0, 1.0)[..., None]
    lower = _BLUE + (_WHITE - _BLUE) * (2.0 * t)
    upper = _WHITE + (_RED - _WHITE) * (2.0 * t - 1.0)
    rgb = np.where(t < 0.5, lower, upper)
    return np.rint(rgb).astype(np.uint8)


def render_heatmap(grid: HeatmapGrid, measure: str) -> tuple[bytes, str]:
    """Render one measure of a grid to (ppm_bytes, csv_text).

    Rows run top-down from the largest to the smallest a; columns run left
    to right from the smallest to the largest h.  The CSV holds the raw
    predicted values in that same orientation, one plain number per cell.
    The color scale stretches over the field's own min/max; a constant field
    paints uniform white.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    field = grid.fields[measure][::-1]  # row 0 = largest a
    vmin = float(field.min())
    vmax = float(field.max())
    if vmax > vmin:
        t = (field - vmin) / (vmax - vmin)
    else:
        t = np.full(field.shape, 0.5)
    if measure in _RED_IS_LOW:
        t = 1.0 - t
    rgb = _diverging_rgb(t)

    scale = max(1, _TARGET_PIXELS // grid.resolution)
    rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    height, width = rgb.shape[:2]
    ppm = f"P6\n{width} {height}\n255\n".encode("ascii") + rgb.tobytes()

    csv_text = "\n".join(
        ",".join(repr(float(v)) for v in row) for row in field
    ) + "\n"
    return ppm, csv_text


def heatmap_stem(grid: HeatmapGrid, measure: str) -> str:
    """Filename stem encoding the measure and the grid's fixed parameters."""
    return (
        f"{measure}__n{grid.network_size}__c{grid.c:g}"
        f"__thh{grid.theta_h:g}__tha{grid.theta_a:g}"
    )


def write_heatmap_outputs(grid: HeatmapGrid, measure: str, out_dir) -> tuple[Path, Path]:
    """Write the PPM and CSV for one measure; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ppm, csv_text = render_heatmap(grid, measure)
    stem = heatmap_stem(grid, measure)
    ppm_path = out_dir / f"{stem}.ppm"
    csv_path = out_dir / f"{stem}.csv"
    ppm_path.write_bytes(ppm)
    csv_path.write_text(csv_text)
    return ppm_path, csv_path
