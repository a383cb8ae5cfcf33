"""Bathtub sea-level-rise masks with hydrologic connectivity.

A scenario mask marks every cell at or below the water level ``h`` that is
reachable from the ocean through other flooded cells.  Low-lying pockets with
no path to an ocean seed are removed: elevation alone does not flood a cell.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ExtentError, NoSeedError
from .grid import (
    MASK_LEGEND,
    ClassGrid,
    FloatGrid,
    LegendEntry,
    class_header,
    require_aligned,
)
from .rasterops import clip_by_polygon, connectivity_structure
from .vector import VectorLayer, rasterize


@dataclass(frozen=True)
class SlrScenario:
    """One water level: height in metres plus its connectivity-filtered mask."""

    height_m: float
    mask: ClassGrid  # classes {0: dry, 1: inundated}
    connectivity: str = "four"
    seed_source: str = ""

    @property
    def inundated_cells(self) -> int:
        return int(np.count_nonzero(self.mask.cells == 1))


@dataclass(frozen=True)
class ScenarioStats:
    height_m: float
    inundated_cells: int
    area_km2: float
    pct_of_study_area: float
    study_area_km2: float


def threshold_dem(dem: FloatGrid, h: float) -> ClassGrid:
    """1 where dem <= h (cells exactly at h flood), 0 above, nodata kept."""
    if not np.isfinite(h):
        raise ValueError(f"water level must be finite, got {h}")
    data = dem.data_mask
    cells = np.zeros(dem.cells.shape, dtype=np.uint8)
    cells[data & (dem.cells <= h)] = 1
    hdr = class_header(dem.header)
    cells[~data] = int(hdr.nodata_value)
    return ClassGrid(hdr, cells, MASK_LEGEND)


def _seed_mask(ocean_seeds, header) -> np.ndarray:
    if isinstance(ocean_seeds, np.ndarray):
        if ocean_seeds.shape != (header.nrows, header.ncols):
            raise NoSeedError("seed array shape does not match grid")
        return ocean_seeds.astype(bool)
    if isinstance(ocean_seeds, ClassGrid):
        if not ocean_seeds.header.aligned_with(header):
            raise NoSeedError("seed grid is not aligned with the mask")
        return ocean_seeds.data_mask & (ocean_seeds.cells != 0)
    if isinstance(ocean_seeds, VectorLayer):
        return rasterize(ocean_seeds, header)
    raise TypeError(f"unsupported seed source {type(ocean_seeds).__name__}")


def hydro_connect(mask: ClassGrid, ocean_seeds, connectivity: str = "four") -> ClassGrid:
    """Keep only inundated cells reachable from an ocean seed.

    Seeds may lie outside the inundated set (e.g. offshore nodata cells); a
    flooded cell adjacent to a seed under the chosen connectivity counts as
    connected.  Nodata cells never flood and block the search.
    """
    structure = connectivity_structure(connectivity)
    seeds = _seed_mask(ocean_seeds, mask.header)
    if not seeds.any():
        raise NoSeedError("no seed cell intersects the grid")

    wet = mask.cells == 1
    labels, n = ndimage.label(wet, structure=structure)
    if n:
        touched = seeds | ndimage.binary_dilation(seeds, structure=structure)
        keep_labels = np.unique(labels[wet & touched])
        keep_labels = keep_labels[keep_labels > 0]
        keep = np.isin(labels, keep_labels)
    else:
        keep = wet

    cells = np.array(mask.cells)
    cells[wet & ~keep] = 0
    return ClassGrid(mask.header, cells, mask.legend)


def coastline_seed_mask(dem: FloatGrid, clipped: FloatGrid) -> np.ndarray:
    """Default ocean seeds: cells the coastline clip removed, where they
    touch (edge-adjacency) the remaining study-area cells."""
    removed = dem.data_mask & ~clipped.data_mask
    touching = ndimage.binary_dilation(
        clipped.data_mask, structure=connectivity_structure("four")
    )
    return removed & touching


def build_scenarios(
    dem: FloatGrid,
    coastline: VectorLayer,
    heights,
    connectivity: str = "four",
    seeds=None,
    threads: int = 1,
):
    """Clip, threshold and connectivity-filter one mask per water level.

    Heights must be strictly increasing and positive; the returned masks are
    nested (a cell flooded at h1 stays flooded at any h2 > h1).
    """
    heights = [float(h) for h in heights]
    if not heights:
        raise ValueError("need at least one height")
    if any(h <= 0 for h in heights):
        raise ValueError(f"heights must be positive: {heights}")
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise ValueError(f"heights must be strictly increasing: {heights}")

    clipped = clip_by_polygon(dem, coastline)
    if seeds is None:
        seed_arr = coastline_seed_mask(dem, clipped)
        seed_source = "coastline clip ring (removed cells touching the study area)"
    else:
        seed_arr = _seed_mask(seeds, dem.header)
        seed_source = "explicit seed layer"
    if not seed_arr.any():
        raise NoSeedError("no seed cell intersects the grid")

    def one(h: float) -> SlrScenario:
        mask = hydro_connect(threshold_dem(clipped, h), seed_arr, connectivity)
        return SlrScenario(h, mask, connectivity, seed_source)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, heights))
    return [one(h) for h in heights]


def scenario_stats(s: SlrScenario, study_area_cells: int) -> ScenarioStats:
    """Area and share of the study area flooded by one scenario."""
    if study_area_cells <= 0:
        raise ValueError("study_area_cells must be positive")
    cs = s.mask.header.cell_size
    cells = s.inundated_cells
    area_km2 = cells * cs * cs / 1e6
    study_area_km2 = study_area_cells * cs * cs / 1e6
    return ScenarioStats(
        height_m=s.height_m,
        inundated_cells=cells,
        area_km2=area_km2,
        pct_of_study_area=100.0 * area_km2 / study_area_km2,
        study_area_km2=study_area_km2,
    )


DIFF_LEGEND = {
    0: LegendEntry("agree_dry", (0, 0, 0, 0)),
    1: LegendEntry("agree_wet", (31, 119, 180, 255)),
    2: LegendEntry("only_theirs", (214, 39, 40, 255)),
    3: LegendEntry("only_ours", (44, 160, 44, 255)),
}


@dataclass(frozen=True)
class MaskDiff:
    grid: ClassGrid  # DIFF_LEGEND classes
    agree_dry: int
    both: int
    only_theirs: int
    only_ours: int

    @property
    def total(self) -> int:
        return self.agree_dry + self.both + self.only_theirs + self.only_ours


def resample_nearest(src: ClassGrid, header) -> ClassGrid:
    """Nearest-neighbour resample of a categorical grid onto ``header``.

    Each target cell takes the class of the source cell containing its
    center; target cells outside the source extent become nodata.
    """
    sxmin, symin, sxmax, symax = src.header.bounds
    txmin, tymin, txmax, tymax = header.bounds
    if txmin >= sxmax or txmax <= sxmin or tymin >= symax or tymax <= symin:
        raise ExtentError("grids have disjoint extents")

    cols, rows = np.meshgrid(np.arange(header.ncols), np.arange(header.nrows))
    xs, ys = header.cell_center(rows, cols)
    src_rows, src_cols = src.header.cell_at(xs, ys)
    inside = (
        (src_rows >= 0)
        & (src_rows < src.header.nrows)
        & (src_cols >= 0)
        & (src_cols < src.header.ncols)
    )
    out_hdr = class_header(header)
    cells = np.full((header.nrows, header.ncols), int(out_hdr.nodata_value), np.uint8)
    sr = src_rows[inside]
    sc = src_cols[inside]
    vals = src.cells[sr, sc]
    vals = np.where(
        vals == int(src.header.nodata_value), int(out_hdr.nodata_value), vals
    )
    cells[inside] = vals
    return ClassGrid(out_hdr, cells, src.legend)


def mask_diff(ours: ClassGrid, theirs: ClassGrid) -> MaskDiff:
    """Cellwise agreement map between two inundation masks.

    ``theirs`` is resampled (nearest neighbour) onto our grid first when the
    headers differ; 'over' marks cells flooded only in theirs, 'under' cells
    flooded only in ours.
    """
    if not ours.header.aligned_with(theirs.header):
        theirs = resample_nearest(theirs, ours.header)
    valid = ours.data_mask & theirs.data_mask
    wet_ours = ours.cells == 1
    wet_theirs = theirs.cells == 1

    hdr = class_header(ours.header)
    cells = np.full(ours.cells.shape, int(hdr.nodata_value), dtype=np.uint8)
    cells[valid & ~wet_ours & ~wet_theirs] = 0
    cells[valid & wet_ours & wet_theirs] = 1
    cells[valid & ~wet_ours & wet_theirs] = 2
    cells[valid & wet_ours & ~wet_theirs] = 3
    grid = ClassGrid(hdr, cells, DIFF_LEGEND)
    return MaskDiff(
        grid=grid,
        agree_dry=int(np.count_nonzero(cells == 0)),
        both=int(np.count_nonzero(cells == 1)),
        only_theirs=int(np.count_nonzero(cells == 2)),
        only_ours=int(np.count_nonzero(cells == 3)),
    )
