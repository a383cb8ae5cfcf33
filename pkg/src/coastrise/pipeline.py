"""End-to-end study pipeline with content-addressed stage caching.

Each stage hashes its input files and parameters; when the hash matches the
cache entry and every recorded output still verifies, the stage is skipped.
A corrupted or deleted intermediate file fails verification and the stage
re-runs.  All outputs are written deterministically (no timestamps), so the
same config and seed produce byte-identical catalogs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .classify import lulc_under_slr
from .config import PipelineConfig
from .drivers import DriverStack, build_driver_stack
from .grid import FloatGrid
from .gridio import read_grid, write_grid
from .inundation import SlrScenario, build_scenarios, scenario_stats
from .landchange import (
    allocate,
    build_training_set,
    change_analysis,
    filter_transitions,
    markov_from_crosstab,
    project_markov,
    require_transitions,
    validate_three_map,
    variable_influence,
)
from .mlp import MlpModel, train_mlp
from .proj import utm_from_crs_tag
from .rasterops import clip_by_polygon, merge_to_multipolygon, polygonize
from .vector import read_geojson, write_geojson

log = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "scenarios",
    "stats",
    "lulc_tab",
    "drivers",
    "change",
    "mlp",
    "markov",
    "projections",
    "validation",
    "catalog",
)

CACHE_FILE = ".cache.json"
CATALOG_FILE = "catalog.json"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def format_height(h: float) -> str:
    """Canonical height label: '1' for 1.0, '2.5' for 2.5."""
    return f"{h:g}"


def shade_color(hex_color: str, factor: float) -> str:
    """Darken an #RRGGBB(AA) color towards black by ``factor`` in [0, 1]."""
    s = hex_color.lstrip("#")
    if len(s) == 6:
        s += "FF"
    r, g, b, a = (int(s[i : i + 2], 16) for i in (0, 2, 4, 6))
    scale = 1.0 - factor
    return "#{:02X}{:02X}{:02X}{:02X}".format(
        int(round(r * scale)), int(round(g * scale)), int(round(b * scale)), a
    )


@dataclass
class PipelineReport:
    catalog_path: str | None
    stages_run: list = field(default_factory=list)
    stages_skipped: list = field(default_factory=list)


class _StageCache:
    def __init__(self, out_dir):
        self.path = os.path.join(out_dir, CACHE_FILE)
        self.out_dir = out_dir
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                self.entries = json.load(fh)
        except (OSError, json.JSONDecodeError):
            self.entries = {}

    def fresh(self, stage: str, key: str) -> bool:
        entry = self.entries.get(stage)
        if not entry or entry.get("key") != key:
            return False
        for rel, digest in entry.get("outputs", {}).items():
            path = os.path.join(self.out_dir, rel)
            if not os.path.exists(path) or file_sha256(path) != digest:
                return False
        return True

    def record(self, stage: str, key: str, outputs) -> None:
        self.entries[stage] = {
            "key": key,
            "outputs": {
                rel: file_sha256(os.path.join(self.out_dir, rel)) for rel in outputs
            },
        }
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.entries, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _write_csv(path, header, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_value(v) for v in row])


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


class PipelineRun:
    """Runs the study stages against one validated configuration."""

    def __init__(self, config: PipelineConfig, threads: int = 1):
        self.cfg = config
        self.threads = threads
        self.out = config.output_dir
        os.makedirs(self.out, exist_ok=True)
        self.cache = _StageCache(self.out)
        self.report = PipelineReport(catalog_path=None)
        self._grids = {}

    # -- helpers ---------------------------------------------------------

    def _path(self, rel: str) -> str:
        return os.path.join(self.out, rel)

    def _params_key(self, *parts) -> str:
        h = hashlib.sha256()
        for part in parts:
            if isinstance(part, (dict, list, tuple)):
                h.update(json.dumps(part, sort_keys=True, default=str).encode())
            elif os.path.isabs(str(part)) and os.path.exists(str(part)):
                h.update(file_sha256(part).encode())
            else:
                h.update(str(part).encode())
            h.update(b"\x00")
        return h.hexdigest()

    def _stage(self, name: str, key: str, outputs, fn) -> None:
        if self.cache.fresh(name, key):
            self.report.stages_skipped.append(name)
            log.info("stage %-12s skipped (cached)", name)
            return
        log.info("stage %-12s running", name)
        extra = fn()
        self.cache.record(name, key, list(outputs) + list(extra or ()))
        self.report.stages_run.append(name)

    def _grid_outputs(self, rel: str, legend: bool = True) -> list:
        out = [rel]
        if legend:
            out.append(rel.rsplit(".", 1)[0] + ".legend")
        if self.cfg.crs_tag:
            out.append(rel.rsplit(".", 1)[0] + ".crs")
        return out

    def _grid(self, rel: str):
        if rel not in self._grids:
            self._grids[rel] = read_grid(self._path(rel))
        return self._grids[rel]

    def _invalidate(self, *rels) -> None:
        for rel in rels:
            self._grids.pop(rel, None)

    def _mask_rel(self, h: float) -> str:
        return f"masks/slr_{format_height(h)}m.asc"

    # -- stages ----------------------------------------------------------

    def run(self, until: str = "catalog") -> PipelineReport:
        if until not in STAGES:
            raise ValueError(f"unknown stage {until!r}")
        limit = STAGES.index(until)
        for stage in STAGES[: limit + 1]:
            getattr(self, f"_stage_{stage}")()
        if limit == len(STAGES) - 1:
            self.report.catalog_path = self._path(CATALOG_FILE)
        return self.report

    def _stage_ingest(self) -> None:
        cfg = self.cfg
        inputs = {
            "dem": cfg.dem_path,
            "coastline": cfg.coastline_path,
            "lulc": cfg.lulc_path,
            "boundary": cfg.boundary_path,
        }
        for year, p in cfg.lulc_series.items():
            inputs[f"lulc_series.{year}"] = p
        for name, p in cfg.driver_paths.items():
            inputs[f"drivers.{name}"] = p
        if cfg.buildings_path:
            inputs["buildings"] = cfg.buildings_path
        if cfg.seeds_path:
            inputs["seeds"] = cfg.seeds_path
        key = self._params_key(*[inputs[k] for k in sorted(inputs)], cfg.crs_tag)

        def fn():
            manifest = {
                role: {
                    "file": os.path.basename(path),
                    "sha256": file_sha256(path),
                }
                for role, path in sorted(inputs.items())
            }
            dem = read_grid(cfg.dem_path)
            if cfg.crs_tag and dem.header.crs_tag and dem.header.crs_tag != cfg.crs_tag:
                raise ValueError(
                    f"dem crs {dem.header.crs_tag!r} != config crs {cfg.crs_tag!r}"
                )
            with open(self._path("inputs_manifest.json"), "w", encoding="utf-8") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True)
                fh.write("\n")

        self._stage("ingest", key, ["inputs_manifest.json"], fn)

    def _stage_scenarios(self) -> None:
        cfg = self.cfg
        # thread count deliberately excluded: it must not change the outputs
        key = self._params_key(
            cfg.dem_path,
            cfg.coastline_path,
            cfg.seeds_path or "",
            list(cfg.heights),
            cfg.connectivity,
        )
        outputs = self._grid_outputs("study/dem_clipped.asc", legend=False)
        for h in cfg.heights:
            outputs += self._grid_outputs(self._mask_rel(h))

        def fn():
            dem = read_grid(cfg.dem_path)
            coastline = read_geojson(cfg.coastline_path)
            seeds = read_geojson(cfg.seeds_path) if cfg.seeds_path else None
            scenarios = build_scenarios(
                dem,
                coastline,
                cfg.heights,
                connectivity=cfg.connectivity,
                seeds=seeds,
                threads=self.threads,
            )
            clipped = clip_by_polygon(dem, coastline)
            write_grid(clipped, self._path("study/dem_clipped.asc"))
            for scen in scenarios:
                write_grid(scen.mask, self._path(self._mask_rel(scen.height_m)))
            self._invalidate(*outputs)

        self._stage("scenarios", key, outputs, fn)

    def _scenario(self, h: float) -> SlrScenario:
        return SlrScenario(
            height_m=h, mask=self._grid(self._mask_rel(h)), connectivity=self.cfg.connectivity
        )

    def _study_cells(self) -> int:
        return int(self._grid("study/dem_clipped.asc").data_mask.sum())

    def _stats_rows(self):
        study = self._study_cells()
        rows = []
        for h in self.cfg.heights:
            st = scenario_stats(self._scenario(h), study)
            rows.append(st)
        return rows

    def _stage_stats(self) -> None:
        key = self._params_key(
            *[self._path(self._mask_rel(h)) for h in self.cfg.heights],
            self._path("study/dem_clipped.asc"),
        )

        def fn():
            rows = [
                (
                    st.height_m,
                    st.inundated_cells,
                    st.area_km2,
                    st.pct_of_study_area,
                    st.study_area_km2,
                )
                for st in self._stats_rows()
            ]
            _write_csv(
                self._path("stats.csv"),
                ["height_m", "inundated_cells", "area_km2", "pct_of_study_area", "study_area_km2"],
                rows,
            )

        self._stage("stats", key, ["stats.csv"], fn)

    def _stage_lulc_tab(self) -> None:
        cfg = self.cfg
        key = self._params_key(
            cfg.lulc_path, *[self._path(self._mask_rel(h)) for h in cfg.heights]
        )

        def fn():
            lulc = read_grid(cfg.lulc_path)
            rows = []
            for h in cfg.heights:
                tab = lulc_under_slr(lulc, self._scenario(h))
                for cid, name, cells, pct in tab.rows(lulc.legend):
                    rows.append((format_height(h), cid, name, cells, pct))
                rows.append((format_height(h), "", "nodata", tab.nodata_cells, ""))
            _write_csv(
                self._path("lulc_under_slr.csv"),
                ["height_m", "class_id", "class_name", "cells", "pct"],
                rows,
            )

        self._stage("lulc_tab", key, ["lulc_under_slr.csv"], fn)

    def _stage_drivers(self) -> None:
        cfg = self.cfg
        key = self._params_key(
            cfg.dem_path, *[cfg.driver_paths[k] for k in sorted(cfg.driver_paths)]
        )
        names = ("elevation", "dist_rivers", "dist_disturbance", "dist_roads", "dist_urban", "slope")
        outputs = ["drivers/driver_stack.json"]
        for n in names:
            outputs += self._grid_outputs(f"drivers/{n}.asc", legend=False)

        def fn():
            dem = read_grid(cfg.dem_path)
            stack = build_driver_stack(
                dem,
                rivers=read_grid(cfg.driver_paths["rivers"]),
                disturbance=read_grid(cfg.driver_paths["disturbance"]),
                roads=read_grid(cfg.driver_paths["roads"]),
                urban=read_grid(cfg.driver_paths["urban"]),
            )
            stack.save(self._path("drivers"))

        self._stage("drivers", key, outputs, fn)

    def _driver_stack(self) -> DriverStack:
        return DriverStack.load(self._path("drivers"))

    def _stage_change(self) -> None:
        cfg = self.cfg
        t1_path = cfg.lulc_series[cfg.t1]
        t2_path = cfg.lulc_series[cfg.t2]
        key = self._params_key(t1_path, t2_path, cfg.transition_threshold)

        def fn():
            t1 = read_grid(t1_path)
            t2 = read_grid(t2_path)
            ca = change_analysis(t1, t2)
            classes = sorted(set(ca.gains) | set(ca.losses))
            _write_csv(
                self._path("change/gains_losses.csv"),
                ["class_id", "class_name", "gain_cells", "loss_cells"],
                [
                    (c, t1.legend[c].name if c in t1.legend else str(c), ca.gains[c], ca.losses[c])
                    for c in classes
                ],
            )
            included = {s.key for s in filter_transitions(ca.transitions, cfg.transition_threshold)}
            _write_csv(
                self._path("change/transitions.csv"),
                ["from_class", "to_class", "cells", "included"],
                [
                    (s.from_class, s.to_class, s.cell_count, int(s.key in included))
                    for s in ca.transitions
                ],
            )

        self._stage(
            "change", key, ["change/gains_losses.csv", "change/transitions.csv"], fn
        )

    def _included_transitions(self):
        t1 = read_grid(self.cfg.lulc_series[self.cfg.t1])
        t2 = read_grid(self.cfg.lulc_series[self.cfg.t2])
        ca = change_analysis(t1, t2)
        specs = filter_transitions(ca.transitions, self.cfg.transition_threshold)
        return t1, t2, require_transitions(specs)

    def _stage_mlp(self) -> None:
        cfg = self.cfg
        key = self._params_key(
            cfg.lulc_series[cfg.t1],
            cfg.lulc_series[cfg.t2],
            cfg.transition_threshold,
            cfg.mlp.to_dict(),
            cfg.seed,
            self._path("drivers/driver_stack.json"),
        )
        outputs = [
            "model/model.json",
            "model/performance.csv",
            "model/class_skill.csv",
            "model/influence_forced.csv",
            "model/influence_single.csv",
        ]

        def fn():
            t1, t2, specs = self._included_transitions()
            spec = specs[0]  # dominant transition drives the network
            stack = self._driver_stack()
            ts = build_training_set(
                t1, t2, stack, spec, cfg.mlp.samples_per_class, cfg.seed
            )
            model = train_mlp(ts, cfg.mlp, seed=cfg.seed)
            model.save(self._path("model/model.json"))

            perf_rows = [
                ("input_layer_neurons", model.input_dim),
                ("hidden_layer_neurons", model.hidden_dim),
                ("output_layer_neurons", model.output_dim),
                ("requested_samples_per_class", cfg.mlp.samples_per_class),
                ("final_learning_rate", cfg.mlp.lr_end),
                ("momentum_factor", cfg.mlp.momentum),
                ("sigmoid_constant", cfg.mlp.sigmoid_c),
                ("acceptable_rms", cfg.mlp.target_rms),
                ("iterations", cfg.mlp.max_iter),
                ("iterations_run", len(model.train_rms_history)),
                ("training_rms", model.train_rms_history[-1]),
                ("testing_rms", model.test_rms_history[-1]),
                ("accuracy_rate_pct", 100.0 * model.accuracy),
                ("skill_measure", model.skill_measure),
                ("transition", f"{spec.from_class}->{spec.to_class}"),
            ]
            _write_csv(self._path("model/performance.csv"), ["parameter", "value"], perf_rows)

            from_name = t1.legend[spec.from_class].name if spec.from_class in t1.legend else str(spec.from_class)
            to_name = t1.legend[spec.to_class].name if spec.to_class in t1.legend else str(spec.to_class)
            _write_csv(
                self._path("model/class_skill.csv"),
                ["class", "skill_measure"],
                [
                    (f"Transition : {from_name} to {to_name}",
                     model.class_skill.get("transition", "")),
                    (f"Persistence : {from_name}",
                     model.class_skill.get("persistence", "")),
                ],
            )

            report = variable_influence(model, ts)
            _write_csv(
                self._path("model/influence_forced.csv"),
                ["model", "accuracy_pct", "skill_measure", "influence_order"],
                [
                    (r.label, 100.0 * r.accuracy, r.skill_measure, r.influence_order or "")
                    for r in report.forced_constant
                ],
            )
            _write_csv(
                self._path("model/influence_single.csv"),
                ["model", "accuracy_pct", "skill_measure"],
                [(r.label, 100.0 * r.accuracy, r.skill_measure) for r in report.all_but_one],
            )

        self._stage("mlp", key, outputs, fn)

    def _stage_markov(self) -> None:
        cfg = self.cfg
        key = self._params_key(
            cfg.lulc_series[cfg.t1], cfg.lulc_series[cfg.t2], cfg.t1, cfg.t2
        )

        def fn():
            t1 = read_grid(cfg.lulc_series[cfg.t1])
            t2 = read_grid(cfg.lulc_series[cfg.t2])
            mm = markov_from_crosstab(t1, t2, cfg.t1, cfg.t2)
            rows = [
                (c, *[mm.probabilities[i, j] for j in range(len(mm.classes))])
                for i, c in enumerate(mm.classes)
            ]
            _write_csv(
                self._path("markov/markov.csv"),
                ["from_class", *[f"to_{c}" for c in mm.classes]],
                rows,
            )

        self._stage("markov", key, ["markov/markov.csv"], fn)

    def _predicted_rel(self, year: int) -> str:
        return f"lulc/predicted_{year}.asc"

    def _stage_projections(self) -> None:
        cfg = self.cfg
        years = sorted(set(cfg.projection_targets) | {cfg.t3})
        key = self._params_key(
            cfg.lulc_series[cfg.t1],
            cfg.lulc_series[cfg.t2],
            cfg.transition_threshold,
            cfg.mlp.to_dict(),
            cfg.seed,
            years,
            {str(y): h for y, h in cfg.projection_targets.items()},
            self._path("model/model.json"),
            self._path("drivers/driver_stack.json"),
        )
        outputs = ["projected_lulc_under_slr.csv", "projections/quotas.csv"]
        for y in years:
            outputs += self._grid_outputs(self._predicted_rel(y))

        def fn():
            t1, t2, specs = self._included_transitions()
            model = MlpModel.load(self._path("model/model.json"))
            stack = self._driver_stack()
            mm = markov_from_crosstab(t1, t2, cfg.t1, cfg.t2)
            counts = t2.class_counts()

            valid = stack.valid_mask()
            rows, cols_idx = np.nonzero(valid)
            features = stack.values_at(rows, cols_idx)
            pot_values = model.transition_potential(features)
            potentials = {}
            for spec in specs:
                cells = np.full(t2.cells.shape, -9999.0)
                cells[rows, cols_idx] = pot_values
                hdr = t2.header.with_nodata(-9999.0)
                potentials[spec.key] = FloatGrid(hdr, cells)

            quota_rows = []
            for year in years:
                tq = project_markov(mm, counts, year, cfg.t2)
                quotas = {s.key: tq.quota(*s.key) for s in specs}
                result = allocate(t2, potentials, quotas)
                write_grid(result.predicted, self._path(self._predicted_rel(year)))
                self._invalidate(self._predicted_rel(year))
                for s in specs:
                    quota_rows.append(
                        (
                            year,
                            s.from_class,
                            s.to_class,
                            quotas[s.key],
                            result.applied.get(s.key, 0),
                            result.shortfalls.get(s.key, 0),
                        )
                    )
            _write_csv(
                self._path("projections/quotas.csv"),
                ["year", "from_class", "to_class", "quota_cells", "applied_cells", "shortfall"],
                quota_rows,
            )

            tab_rows = []
            for year, h in sorted(cfg.projection_targets.items()):
                predicted = self._grid(self._predicted_rel(year))
                tab = lulc_under_slr(predicted, self._scenario(h))
                for cid, name, cells, pct in tab.rows(predicted.legend):
                    tab_rows.append((year, format_height(h), cid, name, cells, pct))
            _write_csv(
                self._path("projected_lulc_under_slr.csv"),
                ["year", "height_m", "class_id", "class_name", "cells", "pct"],
                tab_rows,
            )

        self._stage("projections", key, outputs, fn)

    def _stage_validation(self) -> None:
        cfg = self.cfg
        key = self._params_key(
            cfg.lulc_series[cfg.t2],
            cfg.lulc_series[cfg.t3],
            self._path(self._predicted_rel(cfg.t3)),
        )
        outputs = self._grid_outputs("validation/validation_map.asc") + [
            "validation/summary.csv"
        ]

        def fn():
            observed_t2 = read_grid(cfg.lulc_series[cfg.t2])
            observed_t3 = read_grid(cfg.lulc_series[cfg.t3])
            predicted_t3 = self._grid(self._predicted_rel(cfg.t3))
            vm = validate_three_map(observed_t2, predicted_t3, observed_t3)
            write_grid(vm.grid, self._path("validation/validation_map.asc"))
            _write_csv(
                self._path("validation/summary.csv"),
                ["outcome", "cells"],
                [
                    ("hits", vm.hits),
                    ("misses", vm.misses),
                    ("false_alarms", vm.false_alarms),
                    ("correct_rejections", vm.correct_rejections),
                ],
            )

        self._stage("validation", key, outputs, fn)

    # -- catalog ---------------------------------------------------------

    def _bounds_pair(self, header):
        xmin, ymin, xmax, ymax = header.bounds
        projected = [xmin, ymin, xmax, ymax]
        tm = utm_from_crs_tag(header.crs_tag or self.cfg.crs_tag)
        if tm is None:
            return projected, None
        xs = np.array([xmin, xmax, xmin, xmax])
        ys = np.array([ymin, ymin, ymax, ymax])
        lons, lats = tm.inverse(xs, ys)
        return projected, [
            float(lons.min()),
            float(lats.min()),
            float(lons.max()),
            float(lats.max()),
        ]

    def _stage_catalog(self) -> None:
        cfg = self.cfg
        dep_files = (
            [self._path(self._mask_rel(h)) for h in cfg.heights]
            + [
                self._path("study/dem_clipped.asc"),
                self._path("stats.csv"),
                self._path("validation/validation_map.asc"),
                self._path("model/model.json"),
                cfg.lulc_path,
                cfg.boundary_path,
            ]
            + [self._path(self._predicted_rel(y)) for y in sorted(cfg.projection_targets)]
        )
        key = self._params_key(
            *dep_files,
            [vars(p) for p in cfg.pois],
            cfg.styles,
            cfg.buildings_path or "",
            cfg.crs_tag,
        )
        outputs = [CATALOG_FILE]  # full list recorded after the run

        def fn():
            files = {}

            def track(rel):
                files[rel] = file_sha256(self._path(rel))
                return rel

            def track_grid(rel, legend=True):
                for sidecar in self._grid_outputs(rel, legend=legend):
                    track(sidecar)
                return rel

            # current land cover travels into the catalog directory
            lulc = read_grid(cfg.lulc_path)
            write_grid(lulc, self._path("lulc/current.asc"))
            self._invalidate("lulc/current.asc")

            boundary = read_geojson(cfg.boundary_path)
            write_geojson(boundary, self._path("boundary.geojson"))

            dem = self._grid("study/dem_clipped.asc")
            heights = [float(h) for h in cfg.heights]
            n = len(heights)

            layers = []
            masks_index = {}
            for i, h in enumerate(heights):
                label = format_height(h)
                rel = self._mask_rel(h)
                mask = self._grid(rel)
                poly = merge_to_multipolygon(
                    polygonize(mask, 1),
                    {
                        "height_m": h,
                        "area_km2": scenario_stats(
                            self._scenario(h), self._study_cells()
                        ).area_km2,
                    },
                )
                poly_rel = f"masks/slr_{label}m.geojson"
                write_geojson(poly, self._path(poly_rel))
                projected, geographic = self._bounds_pair(mask.header)
                shade = 0.0 if n == 1 else 0.5 * i / (n - 1)
                layers.append(
                    {
                        "id": f"slr_{label}m",
                        "kind": "raster_overlay",
                        "title": f"Sea level +{label} m",
                        "bounds": {"projected": projected, "geographic": geographic},
                        "style": {
                            "color": shade_color(cfg.styles["slr_color"], shade),
                            "opacity": cfg.styles["slr_opacity"],
                        },
                        "href": track_grid(rel),
                    }
                )
                track(poly_rel)
                masks_index[label] = rel

            projected, geographic = self._bounds_pair(lulc.header)
            layers.append(
                {
                    "id": "lulc_current",
                    "kind": "raster_overlay",
                    "title": "Land cover (current)",
                    "bounds": {"projected": projected, "geographic": geographic},
                    "style": {"color": None, "opacity": cfg.styles["lulc_opacity"]},
                    "href": track_grid("lulc/current.asc"),
                }
            )

            bb = boundary.bounds
            b_projected = list(bb) if bb else None
            b_geo = None
            tm = utm_from_crs_tag(cfg.crs_tag)
            if bb and tm is not None:
                lons, lats = tm.inverse(
                    np.array([bb[0], bb[2], bb[0], bb[2]]),
                    np.array([bb[1], bb[1], bb[3], bb[3]]),
                )
                b_geo = [
                    float(lons.min()),
                    float(lats.min()),
                    float(lons.max()),
                    float(lats.max()),
                ]
            layers.append(
                {
                    "id": "boundary",
                    "kind": "vector",
                    "title": "Municipal boundary",
                    "bounds": {"projected": b_projected, "geographic": b_geo},
                    "style": {
                        "color": cfg.styles["boundary_color"],
                        "opacity": 1.0,
                    },
                    "href": track("boundary.geojson"),
                }
            )

            if cfg.buildings_path:
                buildings = read_geojson(cfg.buildings_path)
                write_geojson(buildings, self._path("buildings.geojson"))
                pb = buildings.bounds
                layers.append(
                    {
                        "id": "buildings",
                        "kind": "vector",
                        "title": "Building footprints",
                        "bounds": {
                            "projected": list(pb) if pb else None,
                            "geographic": None,
                        },
                        "style": {"color": "#8C564BFF", "opacity": 1.0},
                        "href": track("buildings.geojson"),
                    }
                )

            pois = self._poi_entries(dem, heights, tm)
            pois_layer = {
                "type": "FeatureCollection",
                "features": [
                    {
                        "type": "Feature",
                        "geometry": {"type": "Point", "coordinates": [p["x"], p["y"]]},
                        "properties": {k: v for k, v in p.items() if k not in ("x", "y")},
                    }
                    for p in pois
                ],
            }
            if cfg.crs_tag:
                pois_layer["crs_tag"] = cfg.crs_tag
            with open(self._path("pois.geojson"), "w", encoding="utf-8") as fh:
                json.dump(pois_layer, fh, sort_keys=True, separators=(",", ":"))
                fh.write("\n")
            layers.append(
                {
                    "id": "pois",
                    "kind": "points",
                    "title": "Points of interest",
                    "bounds": {"projected": None, "geographic": None},
                    "style": {"color": "#D62728FF", "opacity": 1.0},
                    "href": track("pois.geojson"),
                }
            )

            stats_rows = [
                {
                    "height_m": st.height_m,
                    "inundated_cells": st.inundated_cells,
                    "area_km2": st.area_km2,
                    "pct_of_study_area": st.pct_of_study_area,
                    "study_area_km2": st.study_area_km2,
                }
                for st in self._stats_rows()
            ]
            track("stats.csv")

            predicted = {}
            for year in sorted(cfg.projection_targets):
                rel = self._predicted_rel(year)
                predicted[str(year)] = track_grid(rel)
            track_grid("validation/validation_map.asc")
            track("validation/summary.csv")
            track("model/model.json")
            track_grid("study/dem_clipped.asc", legend=False)

            validation_summary = {}
            with open(self._path("validation/summary.csv"), encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    validation_summary[row["outcome"]] = int(row["cells"])

            model = MlpModel.load(self._path("model/model.json"))
            projection_meta = None
            if tm is not None:
                projection_meta = {
                    "type": "transverse_mercator",
                    "ellipsoid": tm.ellipsoid.name,
                    "lon0_deg": tm.lon0_deg,
                    "k0": tm.k0,
                    "false_easting": tm.false_easting,
                    "false_northing": tm.false_northing,
                }

            doc = {
                "version": 1,
                "crs_tag": cfg.crs_tag,
                "grid": {
                    "ncols": dem.header.ncols,
                    "nrows": dem.header.nrows,
                    "cell_size": dem.header.cell_size,
                    "origin_x": dem.header.origin_x,
                    "origin_y": dem.header.origin_y,
                },
                "heights_m": heights,
                "connectivity": cfg.connectivity,
                "study_area_cells": self._study_cells(),
                "study_area_km2": stats_rows[0]["study_area_km2"] if stats_rows else None,
                "stats": stats_rows,
                "layers": layers,
                "masks": masks_index,
                "dem": "study/dem_clipped.asc",
                "lulc": {"current": "lulc/current.asc", "predicted": predicted},
                "pois": pois,
                "boundary": "boundary.geojson",
                "validation": {
                    "map": "validation/validation_map.asc",
                    "summary": validation_summary,
                },
                "model": {
                    "href": "model/model.json",
                    "accuracy": model.accuracy,
                    "skill_measure": model.skill_measure,
                },
                "geographic_projection": projection_meta,
                "files": files,
            }
            body = json.dumps(doc, sort_keys=True, separators=(",", ":"))
            doc["checksum"] = hashlib.sha256(body.encode()).hexdigest()
            with open(self._path(CATALOG_FILE), "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
                fh.write("\n")
            return sorted(files)

        self._stage("catalog", key, outputs, fn)
        self.report.catalog_path = self._path(CATALOG_FILE)

    def _poi_entries(self, dem: FloatGrid, heights, tm):
        entries = []
        for poi in self.cfg.pois:
            elev = dem.value_at(poi.x, poi.y)
            flood = {}
            for h in heights:
                wet = self._grid(self._mask_rel(h)).value_at(poi.x, poi.y) == 1
                depth = max(0.0, h - elev) if (wet and elev is not None) else 0.0
                flood[format_height(h)] = {"inundated": bool(wet), "depth_m": depth}
            lon = lat = None
            if tm is not None:
                lon_a, lat_a = tm.inverse(poi.x, poi.y)
                lon, lat = float(lon_a), float(lat_a)
            entries.append(
                {
                    "id": poi.id,
                    "name": poi.name,
                    "x": poi.x,
                    "y": poi.y,
                    "lon": lon,
                    "lat": lat,
                    "description": poi.description,
                    "image": poi.image,
                    "link": poi.link,
                    "ground_elev_m": elev,
                    "flood_summary": flood,
                }
            )
        return entries


def run_pipeline(config: PipelineConfig, until: str = "catalog", threads: int = 1) -> PipelineReport:
    """Execute the study end to end (or up to ``until``); see PipelineRun."""
    return PipelineRun(config, threads=threads).run(until=until)
