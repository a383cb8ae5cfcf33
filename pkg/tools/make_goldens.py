"""Regenerate the committed golden checksums for the end-to-end test.

The goldens are only written after every scenario mask is re-verified
against an independent breadth-first flood fill and the stats rows against
plain arithmetic, so the committed values are oracle-anchored rather than
merely snapshotted.

Usage: python3 tools/make_goldens.py
"""

import json
import os
import sys
import tempfile
from collections import deque

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from coastrise.config import validate_config  # noqa: E402
from coastrise.fixture import build_fixture  # noqa: E402
from coastrise.gridio import read_grid  # noqa: E402
from coastrise.inundation import coastline_seed_mask, threshold_dem  # noqa: E402
from coastrise.pipeline import run_pipeline  # noqa: E402
from coastrise.rasterops import clip_by_polygon  # noqa: E402
from coastrise.vector import read_geojson  # noqa: E402


def bfs(wet, seeds):
    offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    nrows, ncols = wet.shape
    reached = np.zeros_like(wet, dtype=bool)
    queue = deque()
    seed_rows, seed_cols = np.nonzero(seeds)
    for r, c in zip(seed_rows.tolist(), seed_cols.tolist()):
        for dr, dc in offsets + [(0, 0)]:
            rr, cc = r + dr, c + dc
            if 0 <= rr < nrows and 0 <= cc < ncols and wet[rr, cc] and not reached[rr, cc]:
                reached[rr, cc] = True
                queue.append((rr, cc))
    while queue:
        r, c = queue.popleft()
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < nrows and 0 <= cc < ncols and wet[rr, cc] and not reached[rr, cc]:
                reached[rr, cc] = True
                queue.append((rr, cc))
    return reached


def main():
    workdir = tempfile.mkdtemp(prefix="goldens_")
    cfg_path = build_fixture(os.path.join(workdir, "fixture"))
    os.environ["COASTRISE_OUTPUT_DIR"] = os.path.join(workdir, "out")
    cfg = validate_config(cfg_path)
    report = run_pipeline(cfg)
    del os.environ["COASTRISE_OUTPUT_DIR"]

    with open(report.catalog_path, encoding="utf-8") as fh:
        doc = json.load(fh)

    dem = read_grid(cfg.dem_path)
    coast = read_geojson(cfg.coastline_path)
    clipped = clip_by_polygon(dem, coast)
    seeds = coastline_seed_mask(dem, clipped)
    study_cells = int(clipped.data_mask.sum())

    mask_cells = {}
    for h in cfg.heights:
        label = f"{h:g}"
        mask = read_grid(os.path.join(cfg.output_dir, f"masks/slr_{label}m.asc"))
        wet = threshold_dem(clipped, h).cells == 1
        oracle = bfs(wet, seeds)
        if not np.array_equal(mask.cells == 1, oracle):
            raise SystemExit(f"mask {label} does not match the BFS oracle; refusing goldens")
        mask_cells[label] = int(oracle.sum())

    for row in doc["stats"]:
        cells = row["inundated_cells"]
        cs = doc["grid"]["cell_size"]
        if abs(row["area_km2"] - cells * cs * cs / 1e6) > 1e-12:
            raise SystemExit("stats arithmetic failed verification; refusing goldens")
        if abs(row["study_area_km2"] - study_cells * cs * cs / 1e6) > 1e-12:
            raise SystemExit("study-area arithmetic failed verification; refusing goldens")

    golden = {
        "catalog_checksum": doc["checksum"],
        "files": doc["files"],
        "mask_cells": mask_cells,
        "stats": doc["stats"],
    }
    out_path = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "golden_catalog.json")
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(golden, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"goldens written: {os.path.normpath(out_path)}")
    print(f"catalog checksum: {doc['checksum']}")
    print(f"mask cells: {mask_cells}")


if __name__ == "__main__":
    main()
