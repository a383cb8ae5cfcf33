"""coastrise: coastal sea-level-rise scenario engine and map service."""

__version__ = "0.1.0"

from .grid import ClassGrid, FloatGrid, GridHeader, LegendEntry  # noqa: F401
from .gridio import read_grid, write_grid  # noqa: F401
from .vector import Feature, VectorLayer, read_geojson, write_geojson  # noqa: F401
