"""Shared raster operations: clipping, cross-tabulation, polygonization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import CrsMismatch
from .grid import ClassGrid, require_aligned
from .vector import Feature, VectorLayer, rasterize

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def connectivity_structure(connectivity: str) -> np.ndarray:
    if connectivity == "four":
        return FOUR_CONNECTED
    if connectivity == "eight":
        return EIGHT_CONNECTED
    raise ValueError(f"connectivity must be 'four' or 'eight', got {connectivity!r}")


def clip_by_polygon(grid, mask: VectorLayer):
    """Set cells whose center falls outside every mask polygon to nodata."""
    if grid.header.crs_tag != mask.crs_tag:
        raise CrsMismatch(
            f"grid crs {grid.header.crs_tag!r} != mask crs {mask.crs_tag!r}"
        )
    inside = rasterize(mask, grid.header)
    cells = np.array(grid.cells)
    cells[~inside] = grid.header.nodata_value
    return grid.with_cells(cells)


@dataclass(frozen=True)
class CrossTab:
    """Joint cell counts of two categorical grids over jointly valid cells."""

    classes_a: tuple
    classes_b: tuple
    counts: np.ndarray  # shape (len(classes_a), len(classes_b))

    def count(self, a_class: int, b_class: int) -> int:
        try:
            i = self.classes_a.index(a_class)
            j = self.classes_b.index(b_class)
        except ValueError:
            return 0
        return int(self.counts[i, j])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_totals(self) -> dict:
        return {c: int(n) for c, n in zip(self.classes_a, self.counts.sum(axis=1))}

    def col_totals(self) -> dict:
        return {c: int(n) for c, n in zip(self.classes_b, self.counts.sum(axis=0))}


def cross_tab(a: ClassGrid, b: ClassGrid) -> CrossTab:
    """count[i][j] = cells with class i in ``a`` and class j in ``b``."""
    require_aligned(a, b, what="cross_tab inputs")
    valid = a.data_mask & b.data_mask
    av = a.cells[valid].astype(np.int64)
    bv = b.cells[valid].astype(np.int64)
    classes_a = tuple(sorted(set(np.unique(av).tolist()) | set(a.legend)))
    classes_b = tuple(sorted(set(np.unique(bv).tolist()) | set(b.legend)))
    index_a = {c: i for i, c in enumerate(classes_a)}
    index_b = {c: i for i, c in enumerate(classes_b)}
    counts = np.zeros((len(classes_a), len(classes_b)), dtype=np.int64)
    # map raw ids to dense indices, then a single bincount over joint codes
    lut_a = np.full(256, -1, dtype=np.int64)
    lut_b = np.full(256, -1, dtype=np.int64)
    for c, i in index_a.items():
        lut_a[c] = i
    for c, i in index_b.items():
        lut_b[c] = i
    codes = lut_a[av] * len(classes_b) + lut_b[bv]
    binned = np.bincount(codes, minlength=counts.size)
    counts[:, :] = binned.reshape(counts.shape)
    return CrossTab(classes_a, classes_b, counts)


# Directions for boundary tracing, in lattice coordinates (x east, y north).
_E, _N, _W, _S = 0, 1, 2, 3
_STEP = {_E: (1, 0), _N: (0, 1), _W: (-1, 0), _S: (0, -1)}
# Successor preference by incoming direction: left turn, straight, right turn.
_TURNS = {
    _E: (_N, _E, _S),
    _N: (_W, _N, _E),
    _W: (_S, _W, _N),
    _S: (_E, _S, _W),
}


def polygonize(mask: ClassGrid, class_id: int) -> VectorLayer:
    """Trace exact pixel outlines of all connected regions of ``class_id``.

    Regions are 4-connected; each becomes one polygon feature whose exterior
    ring is counter-clockwise and holes clockwise.  Vertices lie on the cell
    lattice, so the total polygon area equals cell_count * cell_size**2
    exactly.  Boundary edges are walked with interior on the left; at pinch
    vertices the leftmost turn keeps diagonal neighbours in separate rings.
    """
    if class_id not in mask.legend:
        raise KeyError(f"class {class_id} not in legend")
    h = mask.header
    binary = mask.cells == class_id
    labels, n_regions = ndimage.label(binary, structure=FOUR_CONNECTED)
    if n_regions == 0:
        return VectorLayer([], crs_tag=h.crs_tag)

    nrows, ncols = binary.shape
    padded = np.zeros((nrows + 2, ncols + 2), dtype=bool)
    padded[1:-1, 1:-1] = binary
    exposed = {
        "top": binary & ~padded[:-2, 1:-1],
        "bottom": binary & ~padded[2:, 1:-1],
        "left": binary & ~padded[1:-1, :-2],
        "right": binary & ~padded[1:-1, 2:],
    }

    # Directed edges keyed by start vertex (lattice coords, y up from origin).
    outgoing = {}

    def add_edge(start, direction, label):
        outgoing.setdefault(start, []).append((direction, label))

    for side, cells in exposed.items():
        rows, cols = np.nonzero(cells)
        y_top = nrows - rows
        y_bot = y_top - 1
        for r, c, yt, yb in zip(rows, cols, y_top, y_bot):
            lab = int(labels[r, c])
            if side == "bottom":
                add_edge((int(c), int(yb)), _E, lab)
            elif side == "top":
                add_edge((int(c) + 1, int(yt)), _W, lab)
            elif side == "left":
                add_edge((int(c), int(yt)), _S, lab)
            else:  # right
                add_edge((int(c) + 1, int(yb)), _N, lab)

    used = set()
    rings_by_label = {}
    for start_vertex, choices in outgoing.items():
        for direction, label in choices:
            if (start_vertex, direction) in used:
                continue
            ring = _trace_ring(start_vertex, direction, outgoing, used)
            rings_by_label.setdefault(label, []).append(ring)

    features = []
    cell_area = h.cell_size * h.cell_size
    for label in range(1, n_regions + 1):
        rings = rings_by_label.get(label, [])
        exterior = [r for r in rings if _lattice_ring_area(r) > 0]
        holes = [r for r in rings if _lattice_ring_area(r) < 0]
        if len(exterior) != 1:
            raise AssertionError(
                f"region {label}: expected one exterior ring, got {len(exterior)}"
            )
        coords = [_to_map(exterior[0], h)] + [_to_map(r, h) for r in holes]
        n_cells = int(np.count_nonzero(labels == label))
        features.append(
            Feature(
                {"type": "Polygon", "coordinates": coords},
                {
                    "class_id": int(class_id),
                    "cells": n_cells,
                    "area": n_cells * cell_area,
                },
            )
        )
    return VectorLayer(features, crs_tag=h.crs_tag)


def _trace_ring(start_vertex, start_dir, outgoing, used):
    """Follow directed boundary edges until the walk returns to its start."""
    ring = [start_vertex]
    vertex, direction = start_vertex, start_dir
    while True:
        used.add((vertex, direction))
        dx, dy = _STEP[direction]
        vertex = (vertex[0] + dx, vertex[1] + dy)
        ring.append(vertex)
        candidates = [d for d, _ in outgoing.get(vertex, ())]
        next_dir = None
        for d in _TURNS[direction]:
            if d in candidates:
                next_dir = d
                break
        if next_dir is None:
            raise AssertionError(f"boundary walk dead-ends at {vertex}")
        if vertex == start_vertex and next_dir == start_dir:
            return _merge_collinear(ring)
        direction = next_dir


def _merge_collinear(ring):
    # drop intermediate vertices of straight runs
    merged = [ring[0]]
    for i in range(1, len(ring) - 1):
        x0, y0 = merged[-1]
        x1, y1 = ring[i]
        x2, y2 = ring[i + 1]
        if (x1 - x0) * (y2 - y1) == (x2 - x1) * (y1 - y0):
            continue
        merged.append(ring[i])
    merged.append(ring[-1])
    return merged


def _lattice_ring_area(ring) -> float:
    arr = np.asarray(ring, dtype=np.float64)
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _to_map(ring, header):
    return [
        [header.origin_x + x * header.cell_size, header.origin_y + y * header.cell_size]
        for x, y in ring
    ]


def merge_to_multipolygon(layer: VectorLayer, properties: dict) -> VectorLayer:
    """Collapse a polygon layer into a single MultiPolygon feature."""
    coords = layer.polygons()
    feat = Feature({"type": "MultiPolygon", "coordinates": coords}, dict(properties))
    return VectorLayer([feat], crs_tag=layer.crs_tag)
