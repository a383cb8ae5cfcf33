"""Driver variables for the land-change model.

The stack holds exactly six aligned rasters, in a fixed order: elevation,
distance from rivers, distance from disturbance, distance from roads,
distance from urban areas, and slope.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyFeatureError, MissingLayerError
from .grid import ClassGrid, FloatGrid, GridHeader, require_aligned
from .gridio import read_grid, write_grid
from .vector import VectorLayer, rasterize

DRIVER_NAMES = (
    "elevation",
    "dist_rivers",
    "dist_disturbance",
    "dist_roads",
    "dist_urban",
    "slope",
)

_STACK_MANIFEST = "driver_stack.json"


@dataclass(frozen=True)
class DriverStack:
    """Named, ordered, aligned driver rasters."""

    names: tuple
    grids: tuple

    def __post_init__(self):
        if len(self.names) != len(self.grids):
            raise ValueError("names and grids must pair up")
        require_aligned(*self.grids, what="driver grids")

    def __len__(self):
        return len(self.grids)

    def grid(self, name: str) -> FloatGrid:
        return self.grids[self.names.index(name)]

    @property
    def header(self) -> GridHeader:
        return self.grids[0].header

    def valid_mask(self) -> np.ndarray:
        """Cells where every driver has data."""
        mask = self.grids[0].data_mask
        for g in self.grids[1:]:
            mask = mask & g.data_mask
        return mask

    def values_at(self, rows, cols) -> np.ndarray:
        """(n_cells, n_variables) matrix of driver values."""
        return np.column_stack([g.cells[rows, cols] for g in self.grids])

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        files = {}
        for name, grid in zip(self.names, self.grids):
            fname = f"{name}.asc"
            write_grid(grid, os.path.join(directory, fname))
            files[name] = fname
        manifest = {"variables": list(self.names), "files": files}
        with open(os.path.join(directory, _STACK_MANIFEST), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory) -> "DriverStack":
        with open(os.path.join(directory, _STACK_MANIFEST), "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        names = tuple(manifest["variables"])
        grids = tuple(
            read_grid(os.path.join(directory, manifest["files"][name]))
            for name in names
        )
        return cls(names, grids)


def slope_deg(dem: FloatGrid) -> FloatGrid:
    """Per-cell slope in degrees from the 3x3 finite-difference kernel of
    Horn (the common GIS default).  Border cells and cells with any nodata
    neighbour get nodata."""
    h = dem.header
    if h.nrows < 3 or h.ncols < 3:
        raise ValueError("slope needs at least a 3x3 grid")
    z = dem.cells
    data = dem.data_mask

    def shifted(dr, dc):
        out = np.full(z.shape, np.nan)
        rs = slice(max(0, dr), z.shape[0] + min(0, dr))
        rd = slice(max(0, -dr), z.shape[0] + min(0, -dr))
        cs = slice(max(0, dc), z.shape[1] + min(0, dc))
        cd = slice(max(0, -dc), z.shape[1] + min(0, -dc))
        out[rd, cd] = np.where(data[rs, cs], z[rs, cs], np.nan)
        return out

    nw, n_, ne = shifted(-1, -1), shifted(-1, 0), shifted(-1, 1)
    w_, e_ = shifted(0, -1), shifted(0, 1)
    sw, s_, se = shifted(1, -1), shifted(1, 0), shifted(1, 1)

    dzdx = ((ne + 2 * e_ + se) - (nw + 2 * w_ + sw)) / (8.0 * h.cell_size)
    dzdy = ((sw + 2 * s_ + se) - (nw + 2 * n_ + ne)) / (8.0 * h.cell_size)
    with np.errstate(invalid="ignore"):
        slope = np.degrees(np.arctan(np.hypot(dzdx, dzdy)))

    valid = np.isfinite(slope) & data
    cells = np.where(valid, slope, h.nodata_value)
    return FloatGrid(h, cells)


def _feature_mask(features, header) -> np.ndarray:
    if isinstance(features, ClassGrid):
        if not features.header.aligned_with(header):
            raise EmptyFeatureError("feature grid is not aligned with the base header")
        return features.data_mask & (features.cells != 0)
    if isinstance(features, VectorLayer):
        return rasterize(features, header)
    if isinstance(features, np.ndarray):
        return features.astype(bool)
    raise TypeError(f"unsupported feature source {type(features).__name__}")


def distance_from(features, base: GridHeader) -> FloatGrid:
    """Exact Euclidean distance (metres) from each cell center to the
    nearest feature cell center; zero on feature cells."""
    mask = _feature_mask(features, base)
    if not mask.any():
        raise EmptyFeatureError("no feature cell after rasterization")
    dist = ndimage.distance_transform_edt(~mask, sampling=base.cell_size)
    hdr = base.with_nodata(-9999.0)
    return FloatGrid(hdr, dist.astype(np.float64))


def build_driver_stack(dem: FloatGrid, rivers, disturbance, roads, urban) -> DriverStack:
    """Assemble the six-variable stack on the DEM's grid."""
    layers = {
        "dist_rivers": rivers,
        "dist_disturbance": disturbance,
        "dist_roads": roads,
        "dist_urban": urban,
    }
    for name, layer in layers.items():
        if layer is None:
            raise MissingLayerError(f"missing feature layer for variable {name!r}")
    grids = {
        "elevation": FloatGrid(dem.header, dem.cells),
        "slope": slope_deg(dem),
    }
    for name, layer in layers.items():
        grids[name] = distance_from(layer, dem.header)
    return DriverStack(DRIVER_NAMES, tuple(grids[n] for n in DRIVER_NAMES))
