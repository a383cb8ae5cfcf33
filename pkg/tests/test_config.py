"""Pipeline configuration validation."""

import json
import os

import numpy as np
import pytest

from coastrise.config import validate_config
from coastrise.errors import ConfigError
from coastrise.gridio import write_grid
from coastrise.vector import box_polygon, write_geojson

from conftest import lulc_legend, make_class_grid, make_float_grid


@pytest.fixture()
def minimal_inputs(tmp_path):
    dem = make_float_grid(np.zeros((4, 4)), crs="t")
    write_grid(dem, str(tmp_path / "dem.asc"))
    lulc = make_class_grid(np.full((4, 4), 2, dtype=np.uint8), lulc_legend(), crs="t")
    for name in ("lulc.asc", "l91.asc", "l06.asc", "l11.asc"):
        write_grid(lulc, str(tmp_path / name))
    feature = make_class_grid(np.eye(4, dtype=np.uint8), crs="t")
    for name in ("rivers.asc", "roads.asc", "urban.asc", "dist.asc"):
        write_grid(feature, str(tmp_path / name))
    write_geojson(box_polygon(0, 0, 4, 4, crs_tag="t"), str(tmp_path / "coast.geojson"))
    write_geojson(box_polygon(0, 0, 4, 4, crs_tag="t"), str(tmp_path / "boundary.geojson"))

    def make(doc_overrides=None, **kwargs):
        doc = {
            "inputs": {
                "dem": "dem.asc",
                "coastline": "coast.geojson",
                "lulc": "lulc.asc",
                "lulc_series": {"1991": "l91.asc", "2006": "l06.asc", "2011": "l11.asc"},
                "drivers": {
                    "rivers": "rivers.asc",
                    "disturbance": "dist.asc",
                    "roads": "roads.asc",
                    "urban": "urban.asc",
                },
                "boundary": "boundary.geojson",
            },
            "calibration": {"t1": 1991, "t2": 2006, "t3": 2011},
        }
        doc.update(doc_overrides or {})
        doc.update(kwargs)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return str(path)

    return make


class TestValidateConfig:
    def test_minimal_config_gets_default_heights(self, minimal_inputs):
        cfg = validate_config(minimal_inputs())
        assert cfg.heights == (1.0, 2.0, 3.0, 4.0)
        assert cfg.connectivity == "four"
        assert cfg.transition_threshold == 5000
        assert cfg.mlp.samples_per_class == 6014
        assert cfg.mlp.lr_end == 0.0005

    def test_effective_config_echo_written(self, minimal_inputs):
        cfg = validate_config(minimal_inputs())
        echo = os.path.join(cfg.output_dir, "config_effective.json")
        assert os.path.exists(echo)
        with open(echo) as fh:
            doc = json.load(fh)
        assert doc["heights_m"] == [1.0, 2.0, 3.0, 4.0]

    def test_decreasing_heights_rejected(self, minimal_inputs):
        with pytest.raises(ConfigError, match="heights_m"):
            validate_config(minimal_inputs(heights_m=[2, 1]))

    def test_dangling_dem_path_names_the_key(self, minimal_inputs):
        path = minimal_inputs()
        with open(path) as fh:
            doc = json.load(fh)
        doc["inputs"]["dem"] = "missing.asc"
        with open(path, "w") as fh:
            json.dump(doc, fh)
        with pytest.raises(ConfigError, match="inputs.dem"):
            validate_config(path)

    def test_unknown_key_names_its_path(self, minimal_inputs):
        with pytest.raises(ConfigError, match="heigths_m"):
            validate_config(minimal_inputs(heigths_m=[1, 2]))

    def test_unknown_nested_key(self, minimal_inputs):
        path = minimal_inputs()
        with open(path) as fh:
            doc = json.load(fh)
        doc["inputs"]["demm"] = "dem.asc"
        with open(path, "w") as fh:
            json.dump(doc, fh)
        with pytest.raises(ConfigError, match="inputs.demm"):
            validate_config(path)

    def test_calibration_year_needs_lulc_entry(self, minimal_inputs):
        with pytest.raises(ConfigError, match="calibration.t3"):
            validate_config(
                minimal_inputs({"calibration": {"t1": 1991, "t2": 2006, "t3": 2020}})
            )

    def test_projection_target_height_must_be_published(self, minimal_inputs):
        with pytest.raises(ConfigError, match="projection_targets.2100"):
            validate_config(minimal_inputs(projection_targets={"2100": 9}))

    def test_projection_target_must_follow_calibration(self, minimal_inputs):
        with pytest.raises(ConfigError, match="projection_targets.2000"):
            validate_config(minimal_inputs(projection_targets={"2000": 1}))

    def test_duplicate_poi_ids_rejected(self, minimal_inputs):
        pois = [
            {"name": "Pier", "x": 1, "y": 1},
            {"name": "Pier", "x": 2, "y": 2},
        ]
        with pytest.raises(ConfigError, match="pois"):
            validate_config(minimal_inputs(pois=pois))

    def test_output_dir_env_override(self, minimal_inputs, tmp_path, monkeypatch):
        override = tmp_path / "elsewhere"
        monkeypatch.setenv("COASTRISE_OUTPUT_DIR", str(override))
        cfg = validate_config(minimal_inputs())
        assert cfg.output_dir == str(override)

    def test_mlp_overrides_applied(self, minimal_inputs):
        cfg = validate_config(minimal_inputs(mlp={"samples_per_class": 100, "max_iter": 50}))
        assert cfg.mlp.samples_per_class == 100
        assert cfg.mlp.max_iter == 50
        assert cfg.mlp.momentum == 0.5  # default kept

    def test_unknown_mlp_key_rejected(self, minimal_inputs):
        with pytest.raises(ConfigError, match="mlp.learning_rate"):
            validate_config(minimal_inputs(mlp={"learning_rate": 0.1}))
