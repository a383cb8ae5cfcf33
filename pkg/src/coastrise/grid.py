"""Georeferenced grid model: header, continuous and categorical rasters.

Conventions used throughout the package:

* cells are stored row-major in a 2-D numpy array of shape (nrows, ncols),
  with row 0 the northernmost row (file order of an Esri ASCII grid);
* the header origin is the map coordinate of the lower-left corner;
* grids are north-up with square cells; rotated grids are rejected at ingest;
* cell arrays are frozen (non-writeable) after construction, so grids can be
  shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AlignmentError

CLASS_NODATA = 255


@dataclass(frozen=True)
class GridHeader:
    """Shared georeferencing of a raster: size, cell size, origin, CRS tag."""

    ncols: int
    nrows: int
    cell_size: float
    origin_x: float
    origin_y: float
    crs_tag: str = ""
    nodata_value: float = -9999.0

    def __post_init__(self):
        if self.ncols <= 0 or self.nrows <= 0:
            raise ValueError(f"grid must be non-empty, got {self.ncols}x{self.nrows}")
        if not (self.cell_size > 0) or not math.isfinite(self.cell_size):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not math.isfinite(self.nodata_value):
            raise ValueError("nodata_value must be finite")

    def aligned_with(self, other: "GridHeader") -> bool:
        """True when all fields except the nodata sentinel match exactly."""
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and self.cell_size == other.cell_size
            and self.origin_x == other.origin_x
            and self.origin_y == other.origin_y
            and self.crs_tag == other.crs_tag
        )

    @property
    def bounds(self):
        """(xmin, ymin, xmax, ymax) of the full grid extent."""
        return (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.ncols * self.cell_size,
            self.origin_y + self.nrows * self.cell_size,
        )

    def cell_center(self, row, col):
        """Map coordinates of the center of cell (row, col); row 0 is north."""
        x = self.origin_x + (np.asarray(col) + 0.5) * self.cell_size
        y = self.origin_y + (self.nrows - np.asarray(row) - 0.5) * self.cell_size
        return x, y

    def cell_at(self, x, y):
        """(row, col) of the cell containing map point (x, y).

        Points outside the extent yield indices outside [0, nrows/ncols).
        """
        col = np.floor((np.asarray(x) - self.origin_x) / self.cell_size).astype(np.int64)
        row = np.floor((self.origin_y + self.nrows * self.cell_size - np.asarray(y))
                       / self.cell_size).astype(np.int64)
        return row, col

    def contains(self, x, y):
        xmin, ymin, xmax, ymax = self.bounds
        return (np.asarray(x) >= xmin) & (np.asarray(x) < xmax) & \
               (np.asarray(y) > ymin) & (np.asarray(y) <= ymax)

    def with_nodata(self, nodata_value: float) -> "GridHeader":
        return replace(self, nodata_value=nodata_value)


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class FloatGrid:
    """Single-band continuous raster (64-bit reals) with a nodata sentinel."""

    header: GridHeader
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.shape != (self.header.nrows, self.header.ncols):
            raise ValueError(
                f"cells shape {cells.shape} does not match header "
                f"{(self.header.nrows, self.header.ncols)}"
            )
        data = cells != self.header.nodata_value
        if not np.all(np.isfinite(cells[data])):
            raise ValueError("non-nodata cells must be finite")
        object.__setattr__(self, "cells", _freeze(cells))

    @property
    def data_mask(self) -> np.ndarray:
        return self.cells != self.header.nodata_value

    def value_at(self, x, y):
        """Cell value at a map point, or None outside the extent."""
        if not bool(self.header.contains(x, y)):
            return None
        row, col = self.header.cell_at(x, y)
        v = float(self.cells[int(row), int(col)])
        return None if v == self.header.nodata_value else v

    def with_cells(self, cells: np.ndarray) -> "FloatGrid":
        return FloatGrid(self.header, cells)


@dataclass(frozen=True)
class LegendEntry:
    name: str
    color: tuple  # (r, g, b, a) each 0..255


@dataclass(frozen=True)
class ClassGrid:
    """Categorical raster (small unsigned ids) with a class legend.

    The nodata sentinel defaults to 255, leaving ids 0..254 for classes.
    """

    header: GridHeader
    cells: np.ndarray
    legend: dict = field(default_factory=dict)

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if not np.issubdtype(cells.dtype, np.integer):
            if not np.all(cells == np.floor(cells)):
                raise ValueError("class cells must be integral")
        cells = cells.astype(np.uint8)
        if cells.shape != (self.header.nrows, self.header.ncols):
            raise ValueError(
                f"cells shape {cells.shape} does not match header "
                f"{(self.header.nrows, self.header.ncols)}"
            )
        nodata = int(self.header.nodata_value)
        present = set(np.unique(cells).tolist()) - {nodata}
        missing = present - set(self.legend)
        if missing:
            raise ValueError(f"cell ids {sorted(missing)} missing from legend")
        object.__setattr__(self, "cells", _freeze(cells))

    @property
    def data_mask(self) -> np.ndarray:
        return self.cells != int(self.header.nodata_value)

    def class_counts(self) -> dict:
        """Cell count per legend class (zero counts included)."""
        counts = np.bincount(self.cells[self.data_mask].ravel(), minlength=256)
        return {cid: int(counts[cid]) for cid in sorted(self.legend)}

    def value_at(self, x, y):
        if not bool(self.header.contains(x, y)):
            return None
        row, col = self.header.cell_at(x, y)
        v = int(self.cells[int(row), int(col)])
        return None if v == int(self.header.nodata_value) else v

    def with_cells(self, cells: np.ndarray) -> "ClassGrid":
        return ClassGrid(self.header, cells, self.legend)


def class_header(header: GridHeader) -> GridHeader:
    """Header for a categorical grid derived from ``header``."""
    return header.with_nodata(CLASS_NODATA)


def require_aligned(*grids, what="grids"):
    first = grids[0].header
    for g in grids[1:]:
        if not first.aligned_with(g.header):
            raise AlignmentError(f"{what} are not aligned: {first} vs {g.header}")


MASK_LEGEND = {
    0: LegendEntry("dry", (0, 0, 0, 0)),
    1: LegendEntry("inundated", (31, 119, 180, 255)),
}
