"""Raster-to-PNG rendering for map overlays.

Overlays use straight (non-premultiplied) alpha: nodata and unstyled cells
are fully transparent.  A downsampling factor keeps the long edge within a
pixel budget; factor 1 maps one cell to one pixel.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .grid import ClassGrid

MAX_EDGE_PX = 4096


def downsample_factor(header, max_edge: int = MAX_EDGE_PX) -> int:
    long_edge = max(header.ncols, header.nrows)
    return max(1, int(np.ceil(long_edge / max_edge)))


def parse_color(color: str):
    s = color.lstrip("#")
    if len(s) == 6:
        s += "FF"
    return tuple(int(s[i : i + 2], 16) for i in (0, 2, 4, 6))


def render_class_grid(
    grid: ClassGrid, colors: dict, opacity: float = 1.0, factor: int | None = None
) -> bytes:
    """PNG bytes for a categorical grid.

    ``colors`` maps class id -> (r, g, b, a); classes missing from the map
    and nodata cells render transparent.  ``opacity`` scales every alpha.
    """
    if factor is None:
        factor = downsample_factor(grid.header)
    cells = grid.cells[::factor, ::factor]
    lut = np.zeros((256, 4), dtype=np.uint8)
    for cid, (r, g, b, a) in colors.items():
        lut[cid] = (r, g, b, int(round(a * opacity)))
    rgba = lut[cells]
    rgba[cells == int(grid.header.nodata_value)] = 0
    img = Image.fromarray(rgba, mode="RGBA")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def render_mask(grid: ClassGrid, color: str, opacity: float, factor: int | None = None) -> bytes:
    """Wet cells in the layer color at the given opacity, dry transparent."""
    return render_class_grid(grid, {1: parse_color(color)}, opacity, factor)


def render_legend_colors(grid: ClassGrid, opacity: float = 1.0, factor: int | None = None) -> bytes:
    colors = {cid: entry.color for cid, entry in grid.legend.items()}
    return render_class_grid(grid, colors, opacity, factor)


def count_opaque_pixels(png_bytes: bytes) -> int:
    img = Image.open(io.BytesIO(png_bytes)).convert("RGBA")
    alpha = np.asarray(img)[:, :, 3]
    return int(np.count_nonzero(alpha))
