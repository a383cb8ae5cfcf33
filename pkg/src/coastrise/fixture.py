"""Synthetic fjord study area for tests, demos and the end-to-end run.

Generates a deterministic 256x256 (10 m cell) dataset: a DEM with an inlet
entering from the south, a hand-drawn-style coastline polygon, three dated
land-cover maps whose dominant change is grassland turning into built area
near roads, driver feature masks, points of interest, and a ready-to-run
pipeline configuration.

Everything is derived from a seeded generator plus analytic shapes, so two
runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np
from scipy import ndimage

from .grid import ClassGrid, FloatGrid, GridHeader, LegendEntry, class_header
from .gridio import write_grid
from .rasterops import polygonize
from .vector import Feature, VectorLayer, write_geojson

CRS_TAG = "NAD 1983 UTM Zone 10N"
SIZE = 256
CELL = 10.0
ORIGIN_X = 490000.0
ORIGIN_Y = 5450000.0

LULC_LEGEND = {
    1: LegendEntry("Waterbodies", (31, 119, 180, 255)),
    2: LegendEntry("Trees", (34, 111, 57, 255)),
    3: LegendEntry("Grassland", (152, 223, 138, 255)),
    4: LegendEntry("Buildings or Roads", (140, 140, 140, 255)),
    5: LegendEntry("Bare Earth", (222, 184, 135, 255)),
}

FEATURE_LEGEND = {
    0: LegendEntry("background", (0, 0, 0, 0)),
    1: LegendEntry("feature", (255, 0, 0, 255)),
}


def _header(nodata=-9999.0) -> GridHeader:
    return GridHeader(SIZE, SIZE, CELL, ORIGIN_X, ORIGIN_Y, CRS_TAG, nodata)


def _smooth_noise(rng, shape, sigma, amplitude):
    field = rng.standard_normal(shape)
    field = ndimage.gaussian_filter(field, sigma=sigma)
    field /= max(np.abs(field).max(), 1e-12)
    return field * amplitude


def _ocean_mask(rows, cols):
    """South coast with a sinuous inlet reaching inland."""
    coast_row = 205 + 14 * np.sin(cols / SIZE * 2 * np.pi * 1.3 + 0.7)
    ocean = rows > coast_row

    channel_center = 128 + 26 * np.sin((rows - 60) / 42.0)
    channel_width = 10 + 9 * (rows - 58) / 150.0
    channel = (rows >= 58) & (np.abs(cols - channel_center) < channel_width)
    ocean |= channel & (rows <= 230)

    # eastern side arm off the inlet
    arm = (np.abs(rows - 96) < 7) & (cols > 128) & (cols < 206)
    ocean |= arm
    return ocean


def _rivers_mask(rows, cols):
    r1 = np.abs(cols - (40 + 9 * np.sin(rows / 23.0))) < 1
    r2 = np.abs(cols - (198 + 11 * np.sin(rows / 31.0 + 2.0))) < 1
    return (r1 & (rows < 208)) | (r2 & (rows < 100))


def _roads_mask(rows, cols):
    coast_row = 205 + 14 * np.sin(cols / SIZE * 2 * np.pi * 1.3 + 0.7)
    shore_road = np.abs(rows - (coast_row - 12)) < 1
    north_road = (np.abs(cols - 70) < 1) & (rows > 40) & (rows < 200)
    east_road = (np.abs(rows - 120) < 1) & (cols > 70) & (cols < 230)
    return shore_road | north_road | east_road


def build_fixture(directory, seed: int = 7) -> str:
    """Write the full synthetic dataset; returns the config file path."""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:SIZE, 0:SIZE]

    ocean = _ocean_mask(rows, cols)
    land = ~ocean

    # coastline polygon drawn around the land cells
    land_grid = ClassGrid(
        class_header(_header()), land.astype(np.uint8), FEATURE_LEGEND
    )
    coastline = polygonize(land_grid, 1)
    for feat in coastline.features:
        feat.properties = {"name": "high-tide coastline"}

    # terrain: ramps away from the water, plus noise and built platforms
    dist_ocean = ndimage.distance_transform_edt(land, sampling=CELL)
    noise = _smooth_noise(rng, (SIZE, SIZE), sigma=6.0, amplitude=1.1)
    elev = 0.35 + 0.016 * dist_ocean + 1.6e-5 * dist_ocean**2 + noise
    elev = np.maximum(elev, 0.05)

    # raised port platform along the waterfront: stays dry at every height
    platform = (rows >= 196) & (rows <= 200) & (cols >= 58) & (cols <= 104)
    elev = np.where(platform & land, 5.6, elev)

    # diked rail yard: interior below 2 m but ringed by a berm, so
    # connectivity must keep it dry at every height
    berm = (rows >= 152) & (rows <= 168) & (cols >= 14) & (cols <= 44)
    yard = (rows >= 154) & (rows <= 166) & (cols >= 16) & (cols <= 42)
    elev = np.where(berm & land, 5.8, elev)
    elev = np.where(yard & land, 1.6, elev)

    # inland basin below 1 m, far from any water: stays dry in every scenario
    basin = (rows - 52) ** 2 + (cols - 38) ** 2 < 7**2
    elev = np.where(basin & land, 0.7, elev)

    elev = np.where(ocean, -3.0 - 0.02 * ndimage.distance_transform_edt(ocean, sampling=CELL), elev)
    dem = FloatGrid(_header(), elev)

    rivers = _rivers_mask(rows, cols) & land
    roads = _roads_mask(rows, cols) & land
    quarry = ((rows - 48) ** 2 + (cols - 214) ** 2 < 8**2) & land
    clearcut = ((rows - 30) ** 2 + (cols - 150) ** 2 < 6**2) & land
    disturbance = quarry | clearcut

    dist_roads = ndimage.distance_transform_edt(~roads, sampling=CELL)

    urban_1991 = (
        land
        & (dist_ocean > 20)
        & (dist_ocean < 330)
        & ((np.abs(cols - 110) < 55) | (rows > 170))
        & ~roads
    )

    # 1991 land cover
    lulc91 = np.full((SIZE, SIZE), 2, dtype=np.uint8)  # trees by default
    grass = land & (dist_ocean >= 330) & (dist_ocean < 1350) & (rows > 40)
    lulc91[grass] = 3
    lulc91[urban_1991] = 4
    beach = land & (dist_ocean <= 20) & (elev < 1.4)
    lulc91[beach] = 5
    lulc91[quarry] = 5
    lulc91[clearcut] = 3
    lulc91[rivers] = 1
    lulc91[roads] = 4
    lulc91[ocean] = 1

    # 2006: grassland near roads urbanizes (the only large transition)
    grass91 = lulc91 == 3
    convert06 = grass91 & (dist_roads < 330) & (rng.random((SIZE, SIZE)) < 0.92)
    lulc06 = lulc91.copy()
    lulc06[convert06] = 4
    small_bare = grass91 & ~convert06 & (rng.random((SIZE, SIZE)) < 0.01)
    lulc06[small_bare] = 5

    # 2011: the band keeps filling in outward from the roads
    grass06 = lulc06 == 3
    convert11 = grass06 & (dist_roads < 420) & (rng.random((SIZE, SIZE)) < 0.55)
    lulc11 = lulc06.copy()
    lulc11[convert11] = 4

    # current land cover: the 2011 map plus river-mouth water pixels
    lulc_now = lulc11.copy()
    mouths = land & (dist_ocean <= 30) & _rivers_mask(rows, cols)
    lulc_now[mouths] = 1

    chdr = class_header(_header())
    grids = {
        "dem.asc": dem,
        "lulc_1991.asc": ClassGrid(chdr, lulc91, LULC_LEGEND),
        "lulc_2006.asc": ClassGrid(chdr, lulc06, LULC_LEGEND),
        "lulc_2011.asc": ClassGrid(chdr, lulc11, LULC_LEGEND),
        "lulc_current.asc": ClassGrid(chdr, lulc_now, LULC_LEGEND),
        "rivers.asc": ClassGrid(chdr, rivers.astype(np.uint8), FEATURE_LEGEND),
        "roads.asc": ClassGrid(chdr, roads.astype(np.uint8), FEATURE_LEGEND),
        "urban.asc": ClassGrid(chdr, urban_1991.astype(np.uint8), FEATURE_LEGEND),
        "disturbance.asc": ClassGrid(chdr, disturbance.astype(np.uint8), FEATURE_LEGEND),
    }
    for fname, grid in grids.items():
        write_grid(grid, os.path.join(directory, fname))

    write_geojson(coastline, os.path.join(directory, "coastline.geojson"))

    xmin, ymin, xmax, ymax = _header().bounds
    pad = 2 * CELL
    boundary_ring = [
        [xmin + pad, ymin + pad],
        [xmax - pad, ymin + pad],
        [xmax - pad, ymax - pad],
        [xmin + pad, ymax - pad],
        [xmin + pad, ymin + pad],
    ]
    boundary = VectorLayer(
        [
            Feature(
                {"type": "Polygon", "coordinates": [boundary_ring]},
                {"name": "District of Fjordview"},
            )
        ],
        crs_tag=CRS_TAG,
    )
    write_geojson(boundary, os.path.join(directory, "boundary.geojson"))

    pois = _fixture_pois(dem)
    config = {
        "crs_tag": CRS_TAG,
        "inputs": {
            "dem": "dem.asc",
            "coastline": "coastline.geojson",
            "lulc": "lulc_current.asc",
            "lulc_series": {
                "1991": "lulc_1991.asc",
                "2006": "lulc_2006.asc",
                "2011": "lulc_2011.asc",
            },
            "drivers": {
                "rivers": "rivers.asc",
                "disturbance": "disturbance.asc",
                "roads": "roads.asc",
                "urban": "urban.asc",
            },
            "boundary": "boundary.geojson",
        },
        "pois": pois,
        "heights_m": [1, 2, 3, 4],
        "connectivity": "four",
        "calibration": {"t1": 1991, "t2": 2006, "t3": 2011},
        "projection_targets": {"2100": 1, "2200": 2, "2300": 4},
        "transition_threshold_cells": 5000,
        "mlp": {
            "samples_per_class": 2000,
            "max_iter": 600,
            "lr_start": 0.05,
        },
        "seed": 1606,
        "output_dir": "out",
    }
    config_path = os.path.join(directory, "fixture.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config_path


def _fixture_pois(dem: FloatGrid):
    """Nine waterfront locations spanning the four flood levels."""
    spots = [
        ("ferry-landing", "Inlet Ferry Landing", 112, 214,
         "Passenger ferry dock at the mouth of the inlet."),
        ("container-terminal", "Narrows Container Terminal", 80, 198,
         "Raised loading platform serving deep-sea traffic."),
        ("heritage-pier", "Heritage Pier", 150, 216,
         "Restored timber pier and boardwalk."),
        ("shoreline-park", "Shoreline Park", 180, 208,
         "Beachfront park with tidal flats."),
        ("estuary-reserve", "Estuary Nature Reserve", 40, 204,
         "Protected migratory bird habitat at the west creek mouth."),
        ("harbour-mall", "Harbourview Shopping Centre", 128, 188,
         "Largest retail complex on the waterfront."),
        ("grain-terminal", "Eastgate Grain Terminal", 196, 212,
         "Bulk export terminal with rail loop."),
        ("seaplane-base", "Seaplane Base", 136, 226,
         "Commuter float-plane dock in the outer basin."),
        ("rail-yard", "Diked Rail Yard", 30, 160,
         "Low freight staging yard protected by a berm."),
    ]
    pois = []
    for poi_id, name, col, row, desc in spots:
        x, y = dem.header.cell_center(row, col)
        pois.append(
            {
                "id": poi_id,
                "name": name,
                "x": float(x),
                "y": float(y),
                "description": desc,
                "image": f"https://example.org/images/{poi_id}.jpg",
                "link": f"https://example.org/places/{poi_id}",
            }
        )
    return pois
