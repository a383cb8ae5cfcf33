"""Raster file I/O.

The interchange format is the Esri ASCII grid (.asc): a 6-line header
(ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value) followed by one
whitespace-separated line of values per row, north row first.  Values are
rendered with Python's shortest round-trip ``repr``, so write -> read is
bitwise lossless for 64-bit floats.

Two sidecar files travel next to a grid (same stem):

* ``<stem>.legend`` — one line per class, ``id<TAB>name<TAB>#RRGGBBAA``.
  Its presence is what makes ``read_grid`` return a ClassGrid.
* ``<stem>.crs`` — single line carrying the opaque CRS tag, written only
  when the tag is non-empty (the .asc header has no CRS slot).

GeoTIFF is a read-only optional feature backed by Pillow: single band,
north-up, georeferenced via the pixel-scale and tie-point tags.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError, UnsupportedFormat
from .grid import ClassGrid, FloatGrid, GridHeader, LegendEntry

_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")

# GeoTIFF tag ids (pixel scale, tie point, GDAL nodata)
_TIFF_PIXEL_SCALE = 33550
_TIFF_TIE_POINT = 33922
_TIFF_GDAL_NODATA = 42113


def _sidecar(path, ext):
    return Path(path).with_suffix(ext)


def _format_value(v) -> str:
    f = float(v)
    if f == int(f) and abs(f) < 1e16:
        return str(int(f))
    return repr(f)


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".asc", ".txt"):
        return "esri_ascii"
    if suffix in (".tif", ".tiff"):
        return "geotiff"
    raise UnsupportedFormat(f"cannot infer raster format from {path!r}")


def read_grid(path, format=None):
    """Read a raster file; returns a ClassGrid when a legend sidecar exists."""
    fmt = format or infer_format(path)
    if fmt == "esri_ascii":
        return _read_ascii(path)
    if fmt == "geotiff":
        return _read_geotiff(path)
    raise UnsupportedFormat(f"unknown raster format {fmt!r}")


def write_grid(grid, path, format=None) -> None:
    """Write a raster; ClassGrid legends go to a ``.legend`` sidecar."""
    fmt = format or infer_format(path)
    if fmt == "geotiff":
        raise UnsupportedFormat("geotiff support is read-only")
    if fmt != "esri_ascii":
        raise UnsupportedFormat(f"unknown raster format {fmt!r}")
    _write_ascii(grid, path)


def _read_ascii(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    header_vals = {}
    idx = 0
    while idx < len(lines):
        parts = lines[idx].split()
        if len(parts) != 2 or not parts[0][0].isalpha():
            break
        key = parts[0].lower()
        if key in ("xllcenter", "yllcenter"):
            raise ParseError(f"{path}: cell-center origins are not supported")
        try:
            header_vals[key] = float(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}: bad header value in {lines[idx]!r}") from exc
        idx += 1

    missing = [k for k in _ASCII_KEYS if k not in header_vals]
    if missing:
        raise ParseError(f"{path}: missing header keys {missing}")
    nodata = header_vals.get("nodata_value", -9999.0)

    ncols = int(header_vals["ncols"])
    nrows = int(header_vals["nrows"])
    if header_vals["ncols"] != ncols or header_vals["nrows"] != nrows:
        raise ParseError(f"{path}: ncols/nrows must be integers")

    rows = lines[idx:]
    if len(rows) != nrows:
        raise ParseError(f"{path}: expected {nrows} data rows, found {len(rows)}")
    cells = np.empty((nrows, ncols), dtype=np.float64)
    for r, line in enumerate(rows):
        parts = line.split()
        if len(parts) != ncols:
            raise ParseError(
                f"{path}: row {r} has {len(parts)} values, expected {ncols}"
            )
        try:
            cells[r, :] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"{path}: non-numeric value in row {r}") from exc

    header = GridHeader(
        ncols=ncols,
        nrows=nrows,
        cell_size=header_vals["cellsize"],
        origin_x=header_vals["xllcorner"],
        origin_y=header_vals["yllcorner"],
        crs_tag=_read_crs_sidecar(path),
        nodata_value=nodata,
    )

    legend_path = _sidecar(path, ".legend")
    if legend_path.exists():
        legend = read_legend(legend_path)
        return ClassGrid(header, cells, legend)
    return FloatGrid(header, cells)


def _write_ascii(grid, path) -> None:
    h = grid.header
    is_class = isinstance(grid, ClassGrid)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"ncols {h.ncols}\n")
            fh.write(f"nrows {h.nrows}\n")
            fh.write(f"xllcorner {_format_value(h.origin_x)}\n")
            fh.write(f"yllcorner {_format_value(h.origin_y)}\n")
            fh.write(f"cellsize {_format_value(h.cell_size)}\n")
            fh.write(f"NODATA_value {_format_value(h.nodata_value)}\n")
            for r in range(h.nrows):
                row = grid.cells[r]
                if is_class:
                    fh.write(" ".join(str(int(v)) for v in row))
                else:
                    fh.write(" ".join(_format_value(v) for v in row))
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc

    if is_class:
        write_legend(grid.legend, _sidecar(path, ".legend"))
    if h.crs_tag:
        crs_path = _sidecar(path, ".crs")
        try:
            crs_path.write_text(h.crs_tag + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {crs_path}: {exc}") from exc


def _read_crs_sidecar(path) -> str:
    crs_path = _sidecar(path, ".crs")
    if crs_path.exists():
        return crs_path.read_text(encoding="utf-8").strip()
    return ""


def read_legend(path) -> dict:
    legend = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected id<TAB>name<TAB>#RRGGBBAA")
        cid_s, name, color_s = parts
        try:
            cid = int(cid_s)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad class id {cid_s!r}") from exc
        legend[cid] = LegendEntry(name, _parse_color(color_s, path, lineno))
    return legend


def write_legend(legend, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for cid in sorted(legend):
                entry = legend[cid]
                fh.write(f"{cid}\t{entry.name}\t{_format_color(entry.color)}\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_color(s, path, lineno):
    s = s.strip()
    if not s.startswith("#") or len(s) != 9:
        raise ParseError(f"{path}:{lineno}: color must be #RRGGBBAA, got {s!r}")
    try:
        return tuple(int(s[i : i + 2], 16) for i in (1, 3, 5, 7))
    except ValueError as exc:
        raise ParseError(f"{path}:{lineno}: bad color {s!r}") from exc


def _format_color(color) -> str:
    r, g, b, a = color
    return f"#{r:02X}{g:02X}{b:02X}{a:02X}"


def geotiff_supported() -> bool:
    try:
        import PIL.Image  # noqa: F401
    except ImportError:
        return False
    return True


def _read_geotiff(path):
    if not geotiff_supported():
        raise UnsupportedFormat("geotiff reading requires Pillow")
    from PIL import Image

    try:
        img = Image.open(path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with img:
        tags = getattr(img, "tag_v2", None)
        if tags is None or _TIFF_PIXEL_SCALE not in tags or _TIFF_TIE_POINT not in tags:
            raise ParseError(f"{path}: missing georeferencing tags")
        scale = tags[_TIFF_PIXEL_SCALE]
        tie = tags[_TIFF_TIE_POINT]
        sx, sy = float(scale[0]), float(scale[1])
        if abs(sx - sy) > 1e-9 * max(sx, sy):
            raise ParseError(f"{path}: non-square pixels ({sx} x {sy})")
        # tie point maps raster (i, j) to map (x, y); only (0, 0) top-left supported
        if float(tie[0]) != 0.0 or float(tie[1]) != 0.0:
            raise ParseError(f"{path}: only top-left tie points are supported")
        top_left_x, top_left_y = float(tie[3]), float(tie[4])

        cells = np.asarray(img, dtype=np.float64)
        if cells.ndim != 2:
            raise ParseError(f"{path}: expected a single-band raster")
        nrows, ncols = cells.shape

        nodata = -9999.0
        if _TIFF_GDAL_NODATA in tags:
            try:
                nodata = float(str(tags[_TIFF_GDAL_NODATA]).strip("\x00 "))
            except ValueError:
                pass

    header = GridHeader(
        ncols=ncols,
        nrows=nrows,
        cell_size=sx,
        origin_x=top_left_x,
        origin_y=top_left_y - nrows * sx,
        crs_tag=_read_crs_sidecar(path),
        nodata_value=nodata,
    )
    legend_path = _sidecar(path, ".legend")
    if legend_path.exists():
        return ClassGrid(header, cells, read_legend(legend_path))
    return FloatGrid(header, cells)
