"""Read-only HTTP service publishing a scenario catalog.

The catalog is loaded once at startup into immutable shared state; rendered
overlays are cached, so responses for a fixed catalog are byte-stable.  All
endpoints are GET; CORS is enabled so the viewer can be served separately.
"""

from __future__ import annotations

import json
import math
import os

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse

from .catalog import Catalog
from .render import downsample_factor, render_legend_colors, render_mask

GEOJSON_MEDIA = "application/geo+json"


def _layer_links(layer: dict, heights) -> dict:
    kind = layer["kind"]
    links = {}
    if kind == "raster_overlay" and layer["id"].startswith("slr_"):
        label = layer["id"][len("slr_") : -1]  # slr_<label>m
        links = {
            "overlay_png": f"/api/scenario/{label}/overlay.png",
            "bounds": f"/api/scenario/{label}/bounds",
            "polygons": f"/api/scenario/{label}/polygons.geojson",
        }
    elif layer["id"] == "lulc_current":
        links = {
            "overlay_png": "/api/lulc/current.png",
            "bounds": "/api/lulc/current/bounds",
        }
    elif kind == "vector":
        links = {"geojson": f"/api/vector/{layer['id']}.geojson"}
    elif kind == "points":
        links = {"geojson": "/api/pois"}
    return links


def create_app(catalog: Catalog, web_root: str | None = None) -> FastAPI:
    app = FastAPI(title="coastrise scenario service", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )
    etag = f'"{catalog.checksum}"'
    png_cache: dict = {}
    geo_polygon_cache: dict = {}

    manifest = catalog.manifest
    heights = catalog.heights
    layers = []
    for layer in manifest["layers"]:
        entry = dict(layer)
        entry["links"] = _layer_links(layer, heights)
        layers.append(entry)

    catalog_body = {
        "checksum": catalog.checksum,
        "crs_tag": catalog.crs_tag,
        "grid": manifest["grid"],
        "heights_m": heights,
        "layers": layers,
        "lulc_years": ["current"] + sorted(manifest["lulc"]["predicted"]),
        "study_area_km2": manifest.get("study_area_km2"),
        "geographic_projection": manifest.get("geographic_projection"),
        "metadata": {
            "connectivity": manifest.get("connectivity"),
            "validation": manifest.get("validation", {}).get("summary"),
            "model": manifest.get("model"),
        },
    }

    def style_for(layer_id: str) -> dict:
        for layer in manifest["layers"]:
            if layer["id"] == layer_id:
                return layer["style"]
        return {"color": "#1F77B4FF", "opacity": 1.0}

    def bounds_payload(grid) -> dict:
        header = grid.header
        xmin, ymin, xmax, ymax = header.bounds
        factor = downsample_factor(header)
        body = {
            "projected": [xmin, ymin, xmax, ymax],
            "geographic": None,
            "crs_tag": catalog.crs_tag,
            "downsample_factor": factor,
            "width_px": math.ceil(header.ncols / factor),
            "height_px": math.ceil(header.nrows / factor),
        }
        tm = catalog.transverse_mercator
        if tm is not None:
            xs = [xmin, xmax, xmin, xmax]
            ys = [ymin, ymin, ymax, ymax]
            lons, lats = tm.inverse(xs, ys)
            body["geographic"] = [
                float(min(lons)),
                float(min(lats)),
                float(max(lons)),
                float(max(lats)),
            ]
        return body

    @app.get("/api/catalog")
    def get_catalog(request: Request):
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return JSONResponse(catalog_body, headers={"ETag": etag})

    @app.get("/api/stats")
    def get_stats():
        return {"study_area_km2": manifest.get("study_area_km2"), "stats": catalog.stats}

    @app.get("/api/pois")
    def get_pois():
        return JSONResponse(catalog.pois_geojson, media_type=GEOJSON_MEDIA)

    @app.get("/api/scenario/{h}/overlay.png")
    def scenario_overlay(h: str):
        label = catalog.height_label(h)
        if label is None:
            return JSONResponse({"error": f"unknown height {h!r}", "heights_m": heights}, 404)
        key = ("mask", label)
        if key not in png_cache:
            style = style_for(f"slr_{label}m")
            png_cache[key] = render_mask(
                catalog.masks[label], style["color"], style["opacity"]
            )
        return Response(png_cache[key], media_type="image/png")

    @app.get("/api/scenario/{h}/bounds")
    def scenario_bounds(h: str):
        label = catalog.height_label(h)
        if label is None:
            return JSONResponse({"error": f"unknown height {h!r}", "heights_m": heights}, 404)
        return bounds_payload(catalog.masks[label])

    @app.get("/api/scenario/{h}/polygons.geojson")
    def scenario_polygons(h: str):
        label = catalog.height_label(h)
        if label is None:
            return JSONResponse({"error": f"unknown height {h!r}", "heights_m": heights}, 404)
        if label not in geo_polygon_cache:
            geo_polygon_cache[label] = _geographic_polygons(catalog, label)
        return JSONResponse(geo_polygon_cache[label], media_type=GEOJSON_MEDIA)

    @app.get("/api/lulc/{year}.png")
    def lulc_png(year: str):
        grid = _lulc_grid(catalog, year)
        if grid is None:
            return JSONResponse(
                {"error": f"unknown year {year!r}", "years": catalog_body["lulc_years"]}, 404
            )
        key = ("lulc", year)
        if key not in png_cache:
            opacity = style_for("lulc_current")["opacity"]
            png_cache[key] = render_legend_colors(grid, opacity)
        return Response(png_cache[key], media_type="image/png")

    @app.get("/api/lulc/{year}/bounds")
    def lulc_bounds(year: str):
        grid = _lulc_grid(catalog, year)
        if grid is None:
            return JSONResponse(
                {"error": f"unknown year {year!r}", "years": catalog_body["lulc_years"]}, 404
            )
        return bounds_payload(grid)

    @app.get("/api/lulc/{year}/legend")
    def lulc_legend(year: str):
        grid = _lulc_grid(catalog, year)
        if grid is None:
            return JSONResponse(
                {"error": f"unknown year {year!r}", "years": catalog_body["lulc_years"]}, 404
            )
        return {
            str(cid): {"name": e.name, "color": "#%02X%02X%02X%02X" % e.color}
            for cid, e in sorted(grid.legend.items())
        }

    vector_cache: dict = {}

    @app.get("/api/vector/{layer_id}.geojson")
    def vector_layer(layer_id: str):
        if layer_id in vector_cache:
            return JSONResponse(vector_cache[layer_id], media_type=GEOJSON_MEDIA)
        doc = None
        if layer_id == "boundary":
            doc = catalog.boundary
        else:
            for layer in manifest["layers"]:
                if layer["id"] == layer_id and layer["kind"] == "vector":
                    with open(
                        os.path.join(catalog.directory, layer["href"]), encoding="utf-8"
                    ) as fh:
                        doc = json.load(fh)
        if doc is None:
            return JSONResponse({"error": f"unknown vector layer {layer_id!r}"}, 404)
        vector_cache[layer_id] = _to_geographic_collection(doc, catalog.transverse_mercator)
        return JSONResponse(vector_cache[layer_id], media_type=GEOJSON_MEDIA)

    @app.get("/api/query")
    def query(
        h: float,
        x: float | None = None,
        y: float | None = None,
        lon: float | None = None,
        lat: float | None = None,
    ):
        label = catalog.height_label(h)
        if label is None:
            return JSONResponse({"error": f"unknown height {h!r}", "heights_m": heights}, 404)
        if x is None or y is None:
            if lon is None or lat is None:
                return JSONResponse(
                    {"error": "provide projected x,y or geographic lon,lat"}, 422
                )
            tm = catalog.transverse_mercator
            if tm is None:
                return JSONResponse(
                    {"error": "catalog has no geographic projection; use x,y"}, 422
                )
            xa, ya = tm.forward(lon, lat)
            x, y = float(xa), float(ya)

        header = catalog.dem.header
        if not bool(header.contains(x, y)):
            return JSONResponse(
                {
                    "error": "point outside the grid extent",
                    "extent": list(header.bounds),
                    "crs_tag": catalog.crs_tag,
                },
                422,
            )

        elev = catalog.dem.value_at(x, y)
        wet = catalog.masks[label].value_at(x, y) == 1
        depth = max(0.0, h - elev) if (wet and elev is not None) else 0.0
        lulc_id = catalog.lulc_current.value_at(x, y)
        lulc = None
        if lulc_id is not None:
            entry = catalog.lulc_current.legend.get(lulc_id)
            lulc = {"id": lulc_id, "name": entry.name if entry else str(lulc_id)}
        nearest = None
        best = float("inf")
        for poi in catalog.pois:
            d = math.hypot(poi["x"] - x, poi["y"] - y)
            if d < best:
                best = d
                nearest = {"id": poi["id"], "name": poi["name"], "distance_m": d}
        return {
            "x": x,
            "y": y,
            "height_m": float(h),
            "inundated": bool(wet),
            "ground_elev_m": elev,
            "depth_m": depth,
            "lulc_class": lulc,
            "nearest_poi": nearest,
        }

    @app.get("/api/docs")
    def api_docs():
        return HTMLResponse(_API_DOCS_HTML)

    if web_root:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=web_root, html=True), name="web")

    return app


def _lulc_grid(catalog: Catalog, year: str):
    if year == "current":
        return catalog.lulc_current
    return catalog.lulc_predicted.get(str(year))


def _geographic_polygons(catalog: Catalog, label: str) -> dict:
    rel = f"masks/slr_{label}m.geojson"
    with open(os.path.join(catalog.directory, rel), encoding="utf-8") as fh:
        doc = json.load(fh)
    return _to_geographic_collection(doc, catalog.transverse_mercator)


def _to_geographic_collection(doc: dict, tm) -> dict:
    """Convert a projected FeatureCollection to lon/lat via the catalog's
    single documented projection; untouched when no projection is known."""
    if tm is None:
        return doc
    doc = json.loads(json.dumps(doc))  # deep copy; the catalog stays immutable

    def convert_ring(ring):
        out = []
        for px, py in ring:
            lon, lat = tm.inverse(px, py)
            out.append([float(lon), float(lat)])
        return out

    for feature in doc.get("features", []):
        geom = feature["geometry"]
        if geom["type"] == "Polygon":
            geom["coordinates"] = [convert_ring(r) for r in geom["coordinates"]]
        elif geom["type"] == "MultiPolygon":
            geom["coordinates"] = [
                [convert_ring(r) for r in poly] for poly in geom["coordinates"]
            ]
        elif geom["type"] == "Point":
            lon, lat = tm.inverse(geom["coordinates"][0], geom["coordinates"][1])
            geom["coordinates"] = [float(lon), float(lat)]
    doc["crs_tag"] = "geographic (lon, lat degrees)"
    return doc


_API_DOCS_HTML = """<!doctype html>
<html><head><meta charset="utf-8"><title>coastrise API</title>
<style>body{font-family:sans-serif;max-width:54rem;margin:2rem auto;padding:0 1rem}
code{background:#f2f2f2;padding:0 .25rem}</style></head><body>
<h1>coastrise scenario service</h1>
<p>Read-only JSON/PNG/GeoJSON API over a published scenario catalog.
All responses for a fixed catalog are byte-stable; <code>/api/catalog</code>
carries an <code>ETag</code> equal to the catalog checksum.</p>
<h2>Endpoints</h2>
<dl>
<dt><code>GET /api/catalog</code></dt>
<dd>Layer descriptors (id, kind, title, bounds, style, links), published
heights, land-cover years, grid header and metadata. Supports
<code>If-None-Match</code>.</dd>
<dt><code>GET /api/stats</code></dt>
<dd>Flooded area per height: <code>height_m</code>, <code>inundated_cells</code>,
<code>area_km2</code>, <code>pct_of_study_area</code>, <code>study_area_km2</code>.</dd>
<dt><code>GET /api/scenario/{h}/overlay.png</code></dt>
<dd>Semi-transparent overlay for height <code>h</code>: wet cells in the layer
color, dry cells transparent; straight alpha.</dd>
<dt><code>GET /api/scenario/{h}/bounds</code></dt>
<dd>Projected and geographic corner coordinates for placing the overlay,
plus pixel size and downsampling factor.</dd>
<dt><code>GET /api/scenario/{h}/polygons.geojson</code></dt>
<dd>Flood mask outlines as GeoJSON in geographic coordinates with
<code>height_m</code> and <code>area_km2</code> properties.</dd>
<dt><code>GET /api/lulc/{year}.png</code>, <code>/api/lulc/{year}/bounds</code>,
<code>/api/lulc/{year}/legend</code></dt>
<dd>Land-cover overlays; <code>year</code> is <code>current</code> or a projected
year listed in the catalog.</dd>
<dt><code>GET /api/pois</code></dt>
<dd>Points of interest with name, description, image, link and per-height
flood summary.</dd>
<dt><code>GET /api/vector/{id}.geojson</code></dt>
<dd>Vector layers (e.g. <code>boundary</code>).</dd>
<dt><code>GET /api/query?h=&amp;x=&amp;y=</code> (or <code>lon=&amp;lat=</code>)</dt>
<dd>Point query: inundation flag under connectivity, ground elevation,
water depth (<code>max(0, h - elev)</code> when flooded, else 0), land-cover
class and nearest point of interest. Returns 422 with the extent when the
point is outside the grid.</dd>
</dl></body></html>
"""
