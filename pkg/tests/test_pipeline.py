"""Pipeline orchestration: staging, caching, repair, and catalog assembly."""

import dataclasses
import json
import os

import numpy as np
import pytest

from coastrise.config import validate_config
from coastrise.gridio import read_grid
from coastrise.pipeline import (
    format_height,
    run_pipeline,
    shade_color,
)


class TestHelpers:
    def test_height_labels(self):
        assert format_height(1.0) == "1"
        assert format_height(2.5) == "2.5"
        assert format_height(10.0) == "10"

    def test_shade_color_darkens(self):
        assert shade_color("#FF8800", 0.0) == "#FF8800FF"
        assert shade_color("#FF8800FF", 0.5) == "#80440080"[:7] + "FF"  # alpha kept

    def test_shade_color_preserves_alpha(self):
        assert shade_color("#10203040", 0.5) == "#08101840"


class TestPipelineRun:
    def test_full_run_produces_expected_artifacts(self, fjord_catalog):
        out = fjord_catalog["config"].output_dir
        for rel in (
            "catalog.json",
            "stats.csv",
            "lulc_under_slr.csv",
            "masks/slr_1m.asc",
            "masks/slr_4m.geojson",
            "drivers/driver_stack.json",
            "change/transitions.csv",
            "model/model.json",
            "model/class_skill.csv",
            "model/influence_forced.csv",
            "markov/markov.csv",
            "lulc/predicted_2100.asc",
            "validation/validation_map.asc",
            "validation/summary.csv",
            "projections/quotas.csv",
            "pois.geojson",
            "boundary.geojson",
        ):
            assert os.path.exists(os.path.join(out, rel)), rel

    def test_rerun_skips_every_stage(self, fjord_catalog):
        report = run_pipeline(fjord_catalog["config"])
        assert report.stages_run == []
        assert len(report.stages_skipped) == 11

    def test_corrupt_intermediate_file_repairs(self, fjord_catalog):
        out = fjord_catalog["config"].output_dir
        stats_path = os.path.join(out, "stats.csv")
        with open(stats_path) as fh:
            original = fh.read()
        with open(stats_path, "w") as fh:
            fh.write("garbage\n")
        report = run_pipeline(fjord_catalog["config"])
        assert "stats" in report.stages_run
        with open(stats_path) as fh:
            assert fh.read() == original

    def test_catalog_layers_match_published_set(self, fjord_catalog):
        with open(fjord_catalog["catalog_path"]) as fh:
            doc = json.load(fh)
        ids = [layer["id"] for layer in doc["layers"]]
        assert ids == [
            "slr_1m",
            "slr_2m",
            "slr_3m",
            "slr_4m",
            "lulc_current",
            "boundary",
            "pois",
        ]
        kinds = {layer["id"]: layer["kind"] for layer in doc["layers"]}
        assert kinds["slr_1m"] == "raster_overlay"
        assert kinds["boundary"] == "vector"
        assert kinds["pois"] == "points"

    def test_catalog_checksums_verify(self, fjord_catalog):
        with open(fjord_catalog["catalog_path"]) as fh:
            doc = json.load(fh)
        out = fjord_catalog["config"].output_dir
        from coastrise.pipeline import file_sha256

        for rel, digest in doc["files"].items():
            assert file_sha256(os.path.join(out, rel)) == digest, rel

    def test_stats_csv_matches_catalog_rows(self, fjord_catalog):
        import csv

        out = fjord_catalog["config"].output_dir
        with open(fjord_catalog["catalog_path"]) as fh:
            doc = json.load(fh)
        with open(os.path.join(out, "stats.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(doc["stats"])
        for csv_row, cat_row in zip(rows, doc["stats"]):
            assert float(csv_row["area_km2"]) == cat_row["area_km2"]
            assert int(csv_row["inundated_cells"]) == cat_row["inundated_cells"]

    def test_masks_nest_and_connectivity_removed_isolated_lows(self, fjord_catalog):
        out = fjord_catalog["config"].output_dir
        masks = [
            read_grid(os.path.join(out, f"masks/slr_{h}m.asc")) for h in (1, 2, 3, 4)
        ]
        for a, b in zip(masks, masks[1:]):
            assert not ((a.cells == 1) & (b.cells != 1)).any()
        # the fixture's diked yard is below 2 m but has no water path
        yard = masks[3].cells[155:166, 17:42]
        assert (yard != 1).all()
        # the inland basin sits below 1 m but never floods either
        basin = masks[0].cells[50:55, 36:41]
        assert (basin != 1).all()

    def test_poi_flood_summaries_match_masks(self, fjord_catalog):
        with open(fjord_catalog["catalog_path"]) as fh:
            doc = json.load(fh)
        out = fjord_catalog["config"].output_dir
        dem = read_grid(os.path.join(out, "study/dem_clipped.asc"))
        assert len(doc["pois"]) == 9
        for poi in doc["pois"]:
            for label, entry in poi["flood_summary"].items():
                mask = read_grid(os.path.join(out, f"masks/slr_{label}m.asc"))
                wet = mask.value_at(poi["x"], poi["y"]) == 1
                assert entry["inundated"] == wet
                if wet:
                    expect = max(0.0, float(label) - poi["ground_elev_m"])
                    assert entry["depth_m"] == pytest.approx(expect, abs=1e-12)
                else:
                    assert entry["depth_m"] == 0.0

    def test_until_parameter_stops_early(self, fjord_dataset, tmp_path, monkeypatch):
        monkeypatch.setenv("COASTRISE_OUTPUT_DIR", str(tmp_path / "partial"))
        cfg = validate_config(fjord_dataset["config_path"])
        report = run_pipeline(cfg, until="stats")
        assert report.stages_run == ["ingest", "scenarios", "stats"]
        assert report.catalog_path is None
        assert os.path.exists(os.path.join(cfg.output_dir, "stats.csv"))
        assert not os.path.exists(os.path.join(cfg.output_dir, "catalog.json"))

    def test_class_skill_breakdown_names_the_transition(self, fjord_catalog):
        import csv

        out = fjord_catalog["config"].output_dir
        with open(os.path.join(out, "model", "class_skill.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["class"] == "Transition : Grassland to Buildings or Roads"
        assert rows[1]["class"] == "Persistence : Grassland"
        for row in rows:
            assert -1.0 <= float(row["skill_measure"]) <= 1.0

    def test_transition_filter_keeps_exactly_one(self, fjord_catalog):
        import csv

        out = fjord_catalog["config"].output_dir
        with open(os.path.join(out, "change/transitions.csv")) as fh:
            rows = list(csv.DictReader(fh))
        included = [r for r in rows if r["included"] == "1"]
        assert len(included) == 1
        assert (included[0]["from_class"], included[0]["to_class"]) == ("3", "4")
        assert int(included[0]["cells"]) >= 5000

    def test_validation_summary_partitions_valid_cells(self, fjord_catalog):
        out = fjord_catalog["config"].output_dir
        with open(fjord_catalog["catalog_path"]) as fh:
            doc = json.load(fh)
        summary = doc["validation"]["summary"]
        vmap = read_grid(os.path.join(out, "validation/validation_map.asc"))
        assert sum(summary.values()) == int(vmap.data_mask.sum())
