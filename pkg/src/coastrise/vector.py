"""Vector layers: GeoJSON-backed features plus the geometry predicates the
raster operations need (point-in-polygon, shoelace areas, rasterization).

Geometries are stored as plain GeoJSON geometry dicts (Point, Polygon,
MultiPolygon) with coordinates in the layer's projected CRS; the CRS tag is
carried in a ``crs_tag`` foreign member of the FeatureCollection.  Rings are
normalized on construction: closed, exterior counter-clockwise, holes
clockwise.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import IoError, ParseError

_POLYGON_TYPES = ("Polygon", "MultiPolygon")
_SUPPORTED_TYPES = _POLYGON_TYPES + ("Point",)


@dataclass
class Feature:
    geometry: dict
    properties: dict = field(default_factory=dict)


@dataclass
class VectorLayer:
    features: list
    crs_tag: str = ""

    def __post_init__(self):
        for feat in self.features:
            gtype = feat.geometry.get("type")
            if gtype not in _SUPPORTED_TYPES:
                raise ParseError(f"unsupported geometry type {gtype!r}")
            feat.geometry = normalize_geometry(feat.geometry)

    def polygons(self):
        """All polygons as lists of rings, flattening MultiPolygons."""
        polys = []
        for feat in self.features:
            geom = feat.geometry
            if geom["type"] == "Polygon":
                polys.append(geom["coordinates"])
            elif geom["type"] == "MultiPolygon":
                polys.extend(geom["coordinates"])
        return polys

    def points(self):
        return [
            feat.geometry["coordinates"]
            for feat in self.features
            if feat.geometry["type"] == "Point"
        ]

    @property
    def bounds(self):
        xs, ys = [], []
        for poly in self.polygons():
            for ring in poly:
                for x, y in ring:
                    xs.append(x)
                    ys.append(y)
        for x, y in self.points():
            xs.append(x)
            ys.append(y)
        if not xs:
            return None
        return (min(xs), min(ys), max(xs), max(ys))


def ring_area(ring) -> float:
    """Signed shoelace area; positive for counter-clockwise rings."""
    arr = np.asarray(ring, dtype=np.float64)
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def polygon_area(rings) -> float:
    """Area of a polygon (exterior ring plus holes), holes subtracted."""
    total = abs(ring_area(rings[0]))
    for hole in rings[1:]:
        total -= abs(ring_area(hole))
    return total


def layer_area(layer: VectorLayer) -> float:
    return sum(polygon_area(p) for p in layer.polygons())


def _close_ring(ring):
    ring = [list(map(float, pt)) for pt in ring]
    if ring[0] != ring[-1]:
        ring.append(list(ring[0]))
    if len(ring) < 4:
        raise ParseError("polygon ring needs at least 3 distinct vertices")
    return ring


def _orient(ring, counter_clockwise: bool):
    area = ring_area(ring)
    if (area > 0) != counter_clockwise and area != 0:
        return ring[::-1]
    return ring


def normalize_rings(rings):
    rings = [_close_ring(r) for r in rings]
    out = [_orient(rings[0], counter_clockwise=True)]
    out.extend(_orient(r, counter_clockwise=False) for r in rings[1:])
    return out


def normalize_geometry(geom: dict) -> dict:
    gtype = geom["type"]
    if gtype == "Polygon":
        return {"type": gtype, "coordinates": normalize_rings(geom["coordinates"])}
    if gtype == "MultiPolygon":
        return {
            "type": gtype,
            "coordinates": [normalize_rings(p) for p in geom["coordinates"]],
        }
    if gtype == "Point":
        return {"type": gtype, "coordinates": [float(c) for c in geom["coordinates"]]}
    raise ParseError(f"unsupported geometry type {gtype!r}")


def points_in_rings(xs, ys, rings, chunk=8192) -> np.ndarray:
    """Even-odd point-in-polygon test, vectorized over edges and points.

    Holes are handled by parity: a point inside an odd number of rings is
    inside the polygon.  Points are processed in chunks to bound the
    (edges x points) working set.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    edges = []
    for ring in rings:
        arr = np.asarray(ring, dtype=np.float64)
        seg = np.stack([arr[:-1, 0], arr[:-1, 1], arr[1:, 0], arr[1:, 1]], axis=1)
        edges.append(seg[seg[:, 1] != seg[:, 3]])  # horizontal edges never cross
    if not edges:
        return np.zeros(xs.shape, dtype=bool)
    seg = np.concatenate(edges, axis=0)
    x1, y1, x2, y2 = (seg[:, i][:, None] for i in range(4))
    slope = (x2 - x1) / (y2 - y1)

    inside = np.zeros(xs.shape, dtype=bool)
    for start in range(0, xs.size, chunk):
        px = xs[start : start + chunk][None, :]
        py = ys[start : start + chunk][None, :]
        crosses = ((y1 > py) != (y2 > py)) & (px < slope * (py - y1) + x1)
        inside[start : start + chunk] = np.bitwise_xor.reduce(crosses, axis=0)
    return inside


def points_in_layer(xs, ys, layer: VectorLayer) -> np.ndarray:
    """True where a point lies inside any polygon of the layer (flat array)."""
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    inside = np.zeros(xs.shape, dtype=bool)
    for rings in layer.polygons():
        inside |= points_in_rings(xs, ys, rings)
    return inside


def rasterize(layer: VectorLayer, header) -> np.ndarray:
    """Boolean cell mask: polygon membership by cell center, points by cell."""
    cols, rows = np.meshgrid(np.arange(header.ncols), np.arange(header.nrows))
    xs, ys = header.cell_center(rows, cols)
    mask = points_in_layer(xs.ravel(), ys.ravel(), layer).reshape(
        header.nrows, header.ncols
    )
    for x, y in layer.points():
        if bool(header.contains(x, y)):
            r, c = header.cell_at(x, y)
            mask[int(r), int(c)] = True
    return mask


def read_geojson(path) -> VectorLayer:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc

    if doc.get("type") != "FeatureCollection":
        raise ParseError(f"{path}: expected a FeatureCollection")
    features = []
    for item in doc.get("features", []):
        if item.get("type") != "Feature" or "geometry" not in item:
            raise ParseError(f"{path}: malformed feature")
        features.append(Feature(item["geometry"], item.get("properties") or {}))
    return VectorLayer(features, crs_tag=doc.get("crs_tag", ""))


def to_geojson_dict(layer: VectorLayer) -> dict:
    doc = {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "geometry": f.geometry, "properties": f.properties}
            for f in layer.features
        ],
    }
    if layer.crs_tag:
        doc["crs_tag"] = layer.crs_tag
    return doc


def write_geojson(layer: VectorLayer, path) -> None:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(to_geojson_dict(layer), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def box_polygon(xmin, ymin, xmax, ymax, properties=None, crs_tag="") -> VectorLayer:
    """Convenience axis-aligned rectangle layer."""
    ring = [
        [xmin, ymin],
        [xmax, ymin],
        [xmax, ymax],
        [xmin, ymax],
        [xmin, ymin],
    ]
    feat = Feature({"type": "Polygon", "coordinates": [ring]}, properties or {})
    return VectorLayer([feat], crs_tag=crs_tag)
