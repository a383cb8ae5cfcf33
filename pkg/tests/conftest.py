import numpy as np
import pytest

from coastrise.config import validate_config
from coastrise.fixture import build_fixture
from coastrise.grid import ClassGrid, FloatGrid, GridHeader, LegendEntry
from coastrise.pipeline import run_pipeline


def make_header(ncols=8, nrows=8, cell=1.0, x0=0.0, y0=0.0, crs="test", nodata=-9999.0):
    return GridHeader(ncols, nrows, cell, x0, y0, crs, nodata)


def make_float_grid(cells, cell=1.0, crs="test", nodata=-9999.0):
    cells = np.asarray(cells, dtype=np.float64)
    hdr = GridHeader(cells.shape[1], cells.shape[0], cell, 0.0, 0.0, crs, nodata)
    return FloatGrid(hdr, cells)


def binary_legend():
    return {
        0: LegendEntry("zero", (0, 0, 0, 0)),
        1: LegendEntry("one", (255, 0, 0, 255)),
    }


def lulc_legend(n=5):
    names = ["Water", "Trees", "Grassland", "Built", "BareEarth"]
    return {
        i + 1: LegendEntry(names[i % len(names)], (10 * i, 20 * i, 30 * i, 255))
        for i in range(n)
    }


def make_class_grid(cells, legend=None, cell=1.0, crs="test"):
    cells = np.asarray(cells, dtype=np.uint8)
    hdr = GridHeader(cells.shape[1], cells.shape[0], cell, 0.0, 0.0, crs, 255)
    if legend is None:
        present = sorted(set(np.unique(cells).tolist()) - {255})
        legend = {
            int(c): LegendEntry(f"class_{c}", (c * 13 % 256, c * 29 % 256, c * 47 % 256, 255))
            for c in present
        }
    return ClassGrid(hdr, cells, legend)


@pytest.fixture(scope="session")
def fjord_dataset(tmp_path_factory):
    """Synthetic fjord inputs shared by integration-level tests."""
    directory = tmp_path_factory.mktemp("fjord")
    config_path = build_fixture(str(directory))
    return {"dir": str(directory), "config_path": config_path}


@pytest.fixture(scope="session")
def fjord_catalog(fjord_dataset):
    """One full pipeline run over the fjord fixture."""
    cfg = validate_config(fjord_dataset["config_path"])
    report = run_pipeline(cfg)
    return {"config": cfg, "report": report, "catalog_path": report.catalog_path}
