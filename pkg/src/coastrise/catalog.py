"""Published-catalog loading and verification for the map service.

A catalog is the ``catalog.json`` manifest written by the pipeline plus the
layer files it references.  The loader verifies every recorded checksum, so
a service never starts on a silently corrupted catalog.  Once loaded the
catalog is immutable and safe to share across request handlers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import ParseError
from .gridio import read_grid
from .pipeline import file_sha256, format_height
from .proj import utm_from_crs_tag


@dataclass(frozen=True)
class Catalog:
    directory: str
    manifest: dict
    masks: dict  # height label -> ClassGrid
    dem: object  # FloatGrid of the clipped study area
    lulc_current: object  # ClassGrid
    lulc_predicted: dict  # year (str) -> ClassGrid
    boundary: dict  # GeoJSON FeatureCollection
    pois_geojson: dict
    transverse_mercator: object = None
    extra: dict = field(default_factory=dict)

    @property
    def checksum(self) -> str:
        return self.manifest["checksum"]

    @property
    def heights(self) -> list:
        return list(self.manifest["heights_m"])

    @property
    def stats(self) -> list:
        return list(self.manifest["stats"])

    @property
    def pois(self) -> list:
        return list(self.manifest["pois"])

    @property
    def crs_tag(self) -> str:
        return self.manifest.get("crs_tag", "")

    def height_label(self, h) -> str | None:
        """Canonical label for a requested height, or None if not published."""
        try:
            value = float(h)
        except (TypeError, ValueError):
            return None
        for known in self.heights:
            if value == float(known):
                return format_height(float(known))
        return None

    def mask(self, h):
        label = self.height_label(h)
        return self.masks.get(label) if label else None

    def stats_for(self, h) -> dict | None:
        for row in self.stats:
            if float(row["height_m"]) == float(h):
                return row
        return None


def load_catalog(catalog_path, verify: bool = True) -> Catalog:
    """Read a catalog manifest and all referenced layers into memory."""
    catalog_path = os.path.abspath(catalog_path)
    directory = os.path.dirname(catalog_path)
    with open(catalog_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if "checksum" not in manifest or "files" not in manifest:
        raise ParseError(f"{catalog_path}: not a catalog manifest")

    if verify:
        for rel, digest in manifest["files"].items():
            path = os.path.join(directory, rel)
            if not os.path.exists(path):
                raise ParseError(f"catalog file missing: {rel}")
            actual = file_sha256(path)
            if actual != digest:
                raise ParseError(
                    f"catalog file corrupt: {rel} (sha256 {actual} != {digest})"
                )

    masks = {}
    for h in manifest["heights_m"]:
        label = format_height(float(h))
        masks[label] = read_grid(os.path.join(directory, manifest["masks"][label]))
    dem = read_grid(os.path.join(directory, manifest["dem"]))
    lulc_current = read_grid(os.path.join(directory, manifest["lulc"]["current"]))
    lulc_predicted = {
        year: read_grid(os.path.join(directory, rel))
        for year, rel in manifest["lulc"]["predicted"].items()
    }
    with open(os.path.join(directory, manifest["boundary"]), encoding="utf-8") as fh:
        boundary = json.load(fh)
    pois_rel = next(
        (l["href"] for l in manifest["layers"] if l["kind"] == "points"), None
    )
    pois_geojson = {"type": "FeatureCollection", "features": []}
    if pois_rel:
        with open(os.path.join(directory, pois_rel), encoding="utf-8") as fh:
            pois_geojson = json.load(fh)

    return Catalog(
        directory=directory,
        manifest=manifest,
        masks=masks,
        dem=dem,
        lulc_current=lulc_current,
        lulc_predicted=lulc_predicted,
        boundary=boundary,
        pois_geojson=pois_geojson,
        transverse_mercator=utm_from_crs_tag(manifest.get("crs_tag", "")),
    )
