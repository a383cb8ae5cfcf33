"""Pipeline configuration: a single JSON document, validated strictly.

Relative paths are resolved against the config file's directory.  Unknown
keys are rejected with the JSON path of the offender, so typos surface
immediately instead of silently using a default.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .mlp import MlpHyperparams

DEFAULT_HEIGHTS = (1.0, 2.0, 3.0, 4.0)
DEFAULT_TRANSITION_THRESHOLD = 5000
DEFAULT_STYLES = {
    "slr_color": "#1F77B4",
    "slr_opacity": 0.55,
    "lulc_opacity": 0.7,
    "boundary_color": "#555555FF",
}

_TOP_KEYS = {
    "crs_tag",
    "inputs",
    "pois",
    "heights_m",
    "connectivity",
    "calibration",
    "projection_targets",
    "transition_threshold_cells",
    "mlp",
    "seed",
    "output_dir",
    "styles",
}
_INPUT_KEYS = {
    "dem",
    "coastline",
    "lulc",
    "lulc_series",
    "drivers",
    "boundary",
    "buildings",
    "seeds",
}
_DRIVER_KEYS = {"rivers", "disturbance", "roads", "urban"}
_POI_KEYS = {"id", "name", "x", "y", "description", "image", "link"}
_MLP_KEYS = {
    "lr_start",
    "lr_end",
    "momentum",
    "sigmoid_c",
    "max_iter",
    "target_rms",
    "samples_per_class",
    "hidden_dim",
}
_CALIBRATION_KEYS = {"t1", "t2", "t3"}

OUTPUT_DIR_ENV = "COASTRISE_OUTPUT_DIR"


@dataclass(frozen=True)
class PoiSpec:
    id: str
    name: str
    x: float
    y: float
    description: str = ""
    image: str = ""
    link: str = ""


@dataclass(frozen=True)
class PipelineConfig:
    config_path: str
    crs_tag: str
    dem_path: str
    coastline_path: str
    lulc_path: str
    lulc_series: dict  # year -> path
    driver_paths: dict  # variable -> path
    boundary_path: str
    buildings_path: str | None
    seeds_path: str | None
    pois: tuple
    heights: tuple
    connectivity: str
    t1: int
    t2: int
    t3: int
    projection_targets: dict  # year -> SLR height (m)
    transition_threshold: int
    mlp: MlpHyperparams
    seed: int
    output_dir: str
    styles: dict = field(default_factory=dict)

    def effective_dict(self) -> dict:
        return {
            "crs_tag": self.crs_tag,
            "inputs": {
                "dem": self.dem_path,
                "coastline": self.coastline_path,
                "lulc": self.lulc_path,
                "lulc_series": {str(y): p for y, p in sorted(self.lulc_series.items())},
                "drivers": dict(sorted(self.driver_paths.items())),
                "boundary": self.boundary_path,
                "buildings": self.buildings_path,
                "seeds": self.seeds_path,
            },
            "pois": [vars(p) for p in self.pois],
            "heights_m": list(self.heights),
            "connectivity": self.connectivity,
            "calibration": {"t1": self.t1, "t2": self.t2, "t3": self.t3},
            "projection_targets": {
                str(y): h for y, h in sorted(self.projection_targets.items())
            },
            "transition_threshold_cells": self.transition_threshold,
            "mlp": self.mlp.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "styles": dict(sorted(self.styles.items())),
        }


def _reject_unknown(mapping, allowed, path):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def _require(mapping, key, path, kind=None):
    if key not in mapping or mapping[key] is None:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required value")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(
            f"{path}.{key}" if path else key,
            f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
        )
    return value


def _resolve(base_dir, rel, key_path, must_exist=True):
    path = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
    path = os.path.normpath(path)
    if must_exist and not os.path.exists(path):
        raise ConfigError(key_path, f"file does not exist: {path}")
    return path


def validate_config(path, write_echo: bool = True) -> PipelineConfig:
    """Parse, cross-check and resolve a pipeline config file.

    Injects defaults, resolves paths, verifies every referenced file exists,
    and writes the effective configuration next to the future outputs.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("(file)", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("(file)", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("(root)", "config must be a JSON object")

    base_dir = os.path.dirname(os.path.abspath(path))
    _reject_unknown(doc, _TOP_KEYS, "")

    inputs = _require(doc, "inputs", "", dict)
    _reject_unknown(inputs, _INPUT_KEYS, "inputs")
    dem = _resolve(base_dir, _require(inputs, "dem", "inputs", str), "inputs.dem")
    coastline = _resolve(
        base_dir, _require(inputs, "coastline", "inputs", str), "inputs.coastline"
    )
    lulc = _resolve(base_dir, _require(inputs, "lulc", "inputs", str), "inputs.lulc")

    series_raw = _require(inputs, "lulc_series", "inputs", dict)
    lulc_series = {}
    for year_s, rel in series_raw.items():
        try:
            year = int(year_s)
        except ValueError as exc:
            raise ConfigError(
                f"inputs.lulc_series.{year_s}", "year keys must be integers"
            ) from exc
        lulc_series[year] = _resolve(base_dir, rel, f"inputs.lulc_series.{year_s}")

    drivers_raw = _require(inputs, "drivers", "inputs", dict)
    _reject_unknown(drivers_raw, _DRIVER_KEYS, "inputs.drivers")
    driver_paths = {}
    for name in sorted(_DRIVER_KEYS):
        rel = _require(drivers_raw, name, "inputs.drivers", str)
        driver_paths[name] = _resolve(base_dir, rel, f"inputs.drivers.{name}")

    boundary = _resolve(
        base_dir, _require(inputs, "boundary", "inputs", str), "inputs.boundary"
    )
    buildings = inputs.get("buildings")
    if buildings is not None:
        buildings = _resolve(base_dir, buildings, "inputs.buildings")
    seeds = inputs.get("seeds")
    if seeds is not None:
        seeds = _resolve(base_dir, seeds, "inputs.seeds")

    heights = doc.get("heights_m", list(DEFAULT_HEIGHTS))
    if not isinstance(heights, list) or not heights:
        raise ConfigError("heights_m", "must be a non-empty list of metres")
    try:
        heights = tuple(float(h) for h in heights)
    except (TypeError, ValueError) as exc:
        raise ConfigError("heights_m", "heights must be numbers") from exc
    if any(h <= 0 for h in heights):
        raise ConfigError("heights_m", f"heights must be positive: {list(heights)}")
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise ConfigError(
            "heights_m", f"heights must be strictly increasing: {list(heights)}"
        )

    connectivity = doc.get("connectivity", "four")
    if connectivity not in ("four", "eight"):
        raise ConfigError("connectivity", f"must be 'four' or 'eight', got {connectivity!r}")

    calibration = _require(doc, "calibration", "", dict)
    _reject_unknown(calibration, _CALIBRATION_KEYS, "calibration")
    years = {}
    for key in ("t1", "t2", "t3"):
        years[key] = int(_require(calibration, key, "calibration", (int,)))
        if years[key] not in lulc_series:
            raise ConfigError(
                f"calibration.{key}",
                f"year {years[key]} has no entry in inputs.lulc_series",
            )
    if not years["t1"] < years["t2"] < years["t3"]:
        raise ConfigError("calibration", "years must satisfy t1 < t2 < t3")

    targets_raw = doc.get("projection_targets", {})
    if not isinstance(targets_raw, dict):
        raise ConfigError("projection_targets", "must map years to SLR heights")
    projection_targets = {}
    for year_s, h in targets_raw.items():
        try:
            year = int(year_s)
        except ValueError as exc:
            raise ConfigError(
                f"projection_targets.{year_s}", "year keys must be integers"
            ) from exc
        if year <= years["t2"]:
            raise ConfigError(
                f"projection_targets.{year_s}", f"target year must be after t2={years['t2']}"
            )
        h = float(h)
        if h not in heights:
            raise ConfigError(
                f"projection_targets.{year_s}",
                f"height {h} is not one of heights_m {list(heights)}",
            )
        projection_targets[year] = h

    threshold = doc.get("transition_threshold_cells", DEFAULT_TRANSITION_THRESHOLD)
    if not isinstance(threshold, int) or threshold < 0:
        raise ConfigError("transition_threshold_cells", "must be a non-negative integer")

    mlp_raw = doc.get("mlp", {})
    if not isinstance(mlp_raw, dict):
        raise ConfigError("mlp", "must be an object")
    _reject_unknown(mlp_raw, _MLP_KEYS, "mlp")
    try:
        mlp = MlpHyperparams(**mlp_raw)
    except TypeError as exc:
        raise ConfigError("mlp", str(exc)) from exc

    pois = []
    for i, raw in enumerate(doc.get("pois", [])):
        if not isinstance(raw, dict):
            raise ConfigError(f"pois[{i}]", "must be an object")
        _reject_unknown(raw, _POI_KEYS, f"pois[{i}]")
        name = _require(raw, "name", f"pois[{i}]", str)
        poi_id = raw.get("id") or name.lower().replace(" ", "-")
        pois.append(
            PoiSpec(
                id=poi_id,
                name=name,
                x=float(_require(raw, "x", f"pois[{i}]", (int, float))),
                y=float(_require(raw, "y", f"pois[{i}]", (int, float))),
                description=raw.get("description", ""),
                image=raw.get("image", ""),
                link=raw.get("link", ""),
            )
        )
    ids = [p.id for p in pois]
    if len(set(ids)) != len(ids):
        raise ConfigError("pois", f"duplicate poi ids: {ids}")

    output_dir = os.environ.get(OUTPUT_DIR_ENV) or doc.get("output_dir", "out")
    if not os.path.isabs(output_dir):
        output_dir = os.path.normpath(os.path.join(base_dir, output_dir))

    styles = dict(DEFAULT_STYLES)
    styles_raw = doc.get("styles", {})
    if not isinstance(styles_raw, dict):
        raise ConfigError("styles", "must be an object")
    _reject_unknown(styles_raw, set(DEFAULT_STYLES), "styles")
    styles.update(styles_raw)

    cfg = PipelineConfig(
        config_path=os.path.abspath(path),
        crs_tag=doc.get("crs_tag", ""),
        dem_path=dem,
        coastline_path=coastline,
        lulc_path=lulc,
        lulc_series=lulc_series,
        driver_paths=driver_paths,
        boundary_path=boundary,
        buildings_path=buildings,
        seeds_path=seeds,
        pois=tuple(pois),
        heights=heights,
        connectivity=connectivity,
        t1=years["t1"],
        t2=years["t2"],
        t3=years["t3"],
        projection_targets=projection_targets,
        transition_threshold=threshold,
        mlp=mlp,
        seed=int(doc.get("seed", 0)),
        output_dir=output_dir,
        styles=styles,
    )

    if write_echo:
        os.makedirs(output_dir, exist_ok=True)
        echo_path = os.path.join(output_dir, "config_effective.json")
        with open(echo_path, "w", encoding="utf-8") as fh:
            json.dump(cfg.effective_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return cfg
