"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test prints a single PASS/FAIL line (use ``pytest -s`` to see them all)
and asserts the criterion.  Derived expectations are recomputed here from
independent oracles: breadth-first flood fill, brute-force distance scans,
central finite differences, explicit matrix simulation, and triple loops.
"""

import json
import os
import time

import numpy as np
import pytest

from coastrise.classify import (
    BandStack,
    ConfusionMatrix,
    fit_signatures,
    maxlike_classify,
)
from coastrise.config import validate_config
from coastrise.drivers import distance_from, slope_deg
from coastrise.errors import NoSeedError
from coastrise.fixture import build_fixture
from coastrise.grid import MASK_LEGEND
from coastrise.inundation import (
    SlrScenario,
    build_scenarios,
    hydro_connect,
    scenario_stats,
    threshold_dem,
)
from coastrise.landchange import (
    MarkovMatrix,
    markov_from_crosstab,
    project_markov,
    validate_three_map,
)
from coastrise.mlp import (
    MlpHyperparams,
    gradients,
    init_model,
    loss,
    skill,
    train_mlp,
)
from coastrise.pipeline import file_sha256, run_pipeline

from conftest import binary_legend, lulc_legend, make_class_grid, make_float_grid
from test_drivers import edt_brute_force, horn_slope_scalar
from test_inundation import bfs_flood_fill, wet_mask_grid
from test_mlp import numeric_gradients, separable_training_set
from coastrise.vector import box_polygon

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), "data", "golden_catalog.json")


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}")
    assert ok, f"{name}: {detail}"


class TestAcceptance:
    def test_bathtub_nesting(self):
        """200 random DEMs: masks nested across heights 1<2<3<4, under 10 s."""
        rng = np.random.default_rng(8001)
        coast = box_polygon(2.0, 2.0, 62.0, 62.0, crs_tag="test")
        t0 = time.time()
        violations = 0
        for _ in range(200):
            dem = make_float_grid(rng.uniform(0.0, 5.0, (64, 64)), crs="test")
            scens = build_scenarios(dem, coast, [1.0, 2.0, 3.0, 4.0])
            for a, b in zip(scens, scens[1:]):
                if ((a.mask.cells == 1) & (b.mask.cells != 1)).any():
                    violations += 1
        elapsed = time.time() - t0
        report(
            "bathtub-nesting",
            violations == 0 and elapsed < 10.0,
            f"{violations} violations, {elapsed:.1f}s",
        )

    def test_connectivity_matches_bfs_oracle(self):
        """hydro_connect equals BFS flood fill bitwise, 100 random masks."""
        rng = np.random.default_rng(8002)
        mismatches = 0
        tested = 0
        while tested < 100:
            wet = rng.random((64, 64)) < rng.uniform(0.3, 0.7)
            seeds = rng.random((64, 64)) < 0.02
            if not seeds.any():
                continue
            tested += 1
            for connectivity in ("four", "eight"):
                ours = hydro_connect(wet_mask_grid(wet), seeds, connectivity)
                oracle = bfs_flood_fill(wet, seeds, connectivity)
                if not np.array_equal(ours.cells == 1, oracle):
                    mismatches += 1
        report(
            "connectivity-oracle",
            mismatches == 0,
            f"{mismatches} mismatches over {tested} masks x 2 connectivities",
        )

    def test_area_arithmetic(self):
        """780,000 one-metre cells over 150.06 km2: 0.78 km2 and 0.52 %."""
        cells = np.zeros((900, 900), dtype=np.uint8)
        cells.ravel()[:780000] = 1
        scen = SlrScenario(1.0, make_class_grid(cells, MASK_LEGEND, cell=1.0))
        st = scenario_stats(scen, study_area_cells=150060000)
        ok = (
            abs(st.area_km2 - 0.78) <= 1e-12 * 0.78
            and abs(st.study_area_km2 - 150.06) <= 1e-12 * 150.06
            and abs(st.pct_of_study_area - 100 * 0.78 / 150.06) <= 1e-12
            and round(st.pct_of_study_area, 2) == 0.52
        )
        report("area-arithmetic", ok, f"{st.area_km2} km2, {st.pct_of_study_area:.4f}%")

    def test_kappa_and_accuracy(self):
        """Fixed matrices exact; matrix metrics equal raw-point recomputation."""
        m = ConfusionMatrix((1, 2), np.array([[45, 5], [5, 45]]))
        exact = (
            m.overall_accuracy() == 0.90
            and m.expected_agreement() == 0.5
            and m.kappa() == pytest.approx(0.80, abs=0)
        )
        perfect = ConfusionMatrix((1, 2), np.array([[50, 0], [0, 50]]))
        exact = exact and perfect.overall_accuracy() == 1.0 and perfect.kappa() == 1.0

        rng = np.random.default_rng(8003)
        two_path_ok = True
        for _ in range(50):
            n = int(rng.integers(30, 300))
            refs = rng.integers(1, 5, n)
            preds = np.where(rng.random(n) < 0.6, refs, rng.integers(1, 5, n))
            matrix = ConfusionMatrix.from_pairs(refs, preds)
            p_o = float(np.mean(refs == preds))
            p_e = sum(
                float(np.mean(refs == c)) * float(np.mean(preds == c))
                for c in np.unique(np.concatenate([refs, preds]))
            )
            kappa = (p_o - p_e) / (1 - p_e)
            if abs(matrix.overall_accuracy() - p_o) > 1e-12 or abs(matrix.kappa() - kappa) > 1e-12:
                two_path_ok = False
        report("kappa-accuracy", exact and two_path_ok)

    def test_skill_formula(self):
        value = skill(0.6760, 2)
        report("skill-formula", abs(value - 0.3520) <= 5e-5, f"skill(0.676, 2) = {value}")

    def test_mlp_gradients(self):
        """Analytic vs central finite differences on 20 random 6-7-2 nets."""
        rng = np.random.default_rng(8004)
        worst = 0.0
        for _ in range(20):
            model = init_model(6, MlpHyperparams(), seed=int(rng.integers(1 << 31)))
            x = rng.uniform(0, 1, (6, 6))
            y = np.zeros((6, 2))
            y[np.arange(6), rng.integers(0, 2, 6)] = 1.0
            analytic = gradients(model, x, y)
            numeric = numeric_gradients(model, x, y, delta=1e-5)
            for a, n in zip(analytic, numeric):
                denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
                worst = max(worst, float((np.abs(a - n) / denom).max()))
        report("mlp-gradients", worst < 1e-4, f"max relative error {worst:.2e}")

    def test_mlp_learning(self):
        """Separable 6-D set, published hyperparameters: 95 % accuracy and
        non-increasing 100-iteration RMS windows, under 60 s."""
        rng = np.random.default_rng(8005)
        ts = separable_training_set(rng, per_class=6014)
        hp = MlpHyperparams(
            lr_start=0.01,
            lr_end=0.0005,
            momentum=0.5,
            sigmoid_c=1.0,
            max_iter=10000,
            target_rms=0.01,
            samples_per_class=6014,
        )
        t0 = time.time()
        model = train_mlp(ts, hp, seed=42)
        elapsed = time.time() - t0

        def window_means(series):
            arr = np.asarray(series)
            n = len(arr) // 100
            return arr[: n * 100].reshape(n, 100).mean(axis=1)

        train_ok = bool(np.all(np.diff(window_means(model.train_rms_history)) <= 1e-12))
        test_ok = bool(np.all(np.diff(window_means(model.test_rms_history)) <= 1e-12))
        ok = model.accuracy >= 0.95 and train_ok and test_ok and elapsed < 60.0
        report(
            "mlp-learning",
            ok,
            f"accuracy {model.accuracy:.4f}, windows monotone {train_ok}/{test_ok}, {elapsed:.1f}s",
        )

    def test_markov(self):
        """Row sums within 1e-9; identity means no change; two-step projection
        equals explicit simulation."""
        rng = np.random.default_rng(8006)
        rows_ok = True
        for _ in range(100):
            a = rng.integers(1, 6, (16, 16)).astype(np.uint8)
            b = rng.integers(1, 6, (16, 16)).astype(np.uint8)
            mm = markov_from_crosstab(
                make_class_grid(a, lulc_legend()), make_class_grid(b, lulc_legend()), 0, 1
            )
            if np.abs(mm.probabilities.sum(axis=1) - 1.0).max() > 1e-9:
                rows_ok = False

        identity = MarkovMatrix((1, 2, 3), np.eye(3), base_years=10.0)
        tq = project_markov(identity, {1: 5, 2: 7, 3: 9}, 2100, 2000)
        off_diag = tq.expected_cells - np.diag(np.diag(tq.expected_cells))
        identity_ok = float(np.abs(off_diag).max()) == 0.0

        p = np.array([[0.6, 0.4, 0.0], [0.2, 0.7, 0.1], [0.0, 0.3, 0.7]])
        mm = MarkovMatrix((1, 2, 3), p, base_years=7.0)
        counts = {1: 120.0, 2: 300.0, 3: 44.0}
        tq = project_markov(mm, counts, target_year=2014, base_year=2000)
        vec = np.array([counts[c] for c in mm.classes])
        explicit = vec[:, None] * (p @ p)
        two_step_ok = float(np.abs(tq.expected_cells - explicit).max()) <= 1e-9
        report("markov", rows_ok and identity_ok and two_step_ok)

    def test_euclidean_distance_transform(self):
        """distance_from equals the O(n^2) brute force on 50 random masks."""
        rng = np.random.default_rng(8007)
        worst = 0.0
        tested = 0
        while tested < 50:
            mask = rng.random((32, 32)) < rng.uniform(0.02, 0.2)
            if not mask.any():
                continue
            tested += 1
            grid = make_class_grid(mask.astype(np.uint8), binary_legend(), cell=1.5)
            ours = distance_from(grid, grid.header).cells
            oracle = edt_brute_force(mask, 1.5)
            worst = max(worst, float(np.abs(ours - oracle).max()))
        report("euclidean-distance", worst <= 1e-9, f"max abs error {worst:.2e} m")

    def test_slope(self):
        """Plane z=x at 1 m cells gives 45 deg; a flat plane gives 0 deg."""
        cols = np.tile(np.arange(16, dtype=float), (16, 1))
        plane = slope_deg(make_float_grid(cols, cell=1.0))
        interior = plane.cells[1:-1, 1:-1]
        plane_ok = float(np.abs(interior - 45.0).max()) <= 1e-6
        flat = slope_deg(make_float_grid(np.full((16, 16), 2.0)))
        flat_ok = float(np.abs(flat.cells[1:-1, 1:-1]).max()) == 0.0
        report("slope", plane_ok and flat_ok)

    def test_maxlike(self):
        """Three separated Gaussian classes recovered at 99 %, and a common
        affine band rescaling leaves the label map unchanged."""
        rng = np.random.default_rng(8008)
        shape = (80, 80)
        truth = rng.integers(1, 4, shape).astype(np.uint8)
        means = {1: (0.0, 0.0, 0.0), 2: (20.0, 20.0, 0.0), 3: (0.0, 20.0, 20.0)}
        bands = []
        for axis in range(3):
            b = np.zeros(shape)
            for cid, mu in means.items():
                b[truth == cid] = mu[axis]
            bands.append(b + rng.normal(0, 1.0, shape))
        stack = BandStack(("g", "r", "nir"), tuple(make_float_grid(b) for b in bands))
        training = make_class_grid(truth, lulc_legend(3))
        labels = maxlike_classify(stack, fit_signatures(stack, training))
        agreement = float(np.mean(labels.cells == truth))

        scaled = BandStack(
            ("g", "r", "nir"), tuple(make_float_grid(2.7 * b + 41.0) for b in bands)
        )
        labels_scaled = maxlike_classify(scaled, fit_signatures(scaled, training))
        invariant = bool(np.array_equal(labels.cells, labels_scaled.cells))
        report(
            "maxlike",
            agreement >= 0.99 and invariant,
            f"agreement {agreement:.4f}, affine-invariant {invariant}",
        )

    def test_three_map_validation(self):
        """Hit/miss/false-alarm counts equal the triple loop on 50 triples."""
        rng = np.random.default_rng(8009)
        all_ok = True
        for _ in range(50):
            a = rng.integers(1, 4, (10, 10)).astype(np.uint8)
            b = rng.integers(1, 4, (10, 10)).astype(np.uint8)
            c = rng.integers(1, 4, (10, 10)).astype(np.uint8)
            vm = validate_three_map(
                make_class_grid(a, lulc_legend(3)),
                make_class_grid(b, lulc_legend(3)),
                make_class_grid(c, lulc_legend(3)),
            )
            hits = misses = fas = crs = 0
            for r in range(10):
                for col in range(10):
                    obs = a[r, col] != c[r, col]
                    pred = a[r, col] != b[r, col]
                    if obs and pred:
                        hits += 1
                    elif obs:
                        misses += 1
                    elif pred:
                        fas += 1
                    else:
                        crs += 1
            if (vm.hits, vm.misses, vm.false_alarms, vm.correct_rejections) != (
                hits,
                misses,
                fas,
                crs,
            ):
                all_ok = False
            if vm.total != 100:
                all_ok = False
        report("three-map-validation", all_ok)

    def test_determinism(self, tmp_path):
        """Same config and seed: byte-identical catalogs; identical masks
        across 1, 4 and 8 worker threads."""
        src = tmp_path / "fixture"
        cfg_path = build_fixture(str(src))

        def run_into(sub, threads=1):
            os.environ["COASTRISE_OUTPUT_DIR"] = str(tmp_path / sub)
            try:
                cfg = validate_config(cfg_path)
                return run_pipeline(cfg, threads=threads).catalog_path
            finally:
                del os.environ["COASTRISE_OUTPUT_DIR"]

        cat1 = run_into("out_a")
        cat2 = run_into("out_b")
        with open(cat1, "rb") as fh:
            bytes1 = fh.read()
        with open(cat2, "rb") as fh:
            bytes2 = fh.read()
        catalogs_equal = bytes1 == bytes2
        files = json.loads(bytes1)["files"]
        files_equal = all(
            file_sha256(os.path.join(os.path.dirname(cat2), rel)) == digest
            for rel, digest in files.items()
        )

        from coastrise.gridio import read_grid
        from coastrise.vector import read_geojson

        dem = read_grid(str(src / "dem.asc"))
        coast = read_geojson(str(src / "coastline.geojson"))
        per_thread = []
        for threads in (1, 4, 8):
            scens = build_scenarios(dem, coast, [1, 2, 3, 4], threads=threads)
            per_thread.append([s.mask.cells.tobytes() for s in scens])
        threads_equal = per_thread[0] == per_thread[1] == per_thread[2]
        report(
            "determinism",
            catalogs_equal and files_equal and threads_equal,
            f"catalog {catalogs_equal}, files {files_equal}, threads {threads_equal}",
        )

    def test_end_to_end_fixture(self, tmp_path):
        """256x256 fixture: ingest to serve under 30 s, matching the
        committed golden checksums (created from oracle-verified runs)."""
        with open(GOLDEN_PATH, encoding="utf-8") as fh:
            golden = json.load(fh)

        t0 = time.time()
        src = tmp_path / "fixture"
        cfg_path = build_fixture(str(src))
        os.environ["COASTRISE_OUTPUT_DIR"] = str(tmp_path / "out")
        try:
            cfg = validate_config(cfg_path)
            report_obj = run_pipeline(cfg)
        finally:
            del os.environ["COASTRISE_OUTPUT_DIR"]

        from coastrise.catalog import load_catalog
        from coastrise.service import create_app
        from fastapi.testclient import TestClient

        catalog = load_catalog(report_obj.catalog_path)
        client = TestClient(create_app(catalog))
        served = client.get("/api/catalog")
        overlay = client.get("/api/scenario/4/overlay.png")
        elapsed = time.time() - t0

        with open(report_obj.catalog_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        checksum_ok = doc["checksum"] == golden["catalog_checksum"]
        files_ok = doc["files"] == golden["files"]
        mask_cells = {
            label: int((catalog.masks[label].cells == 1).sum())
            for label in catalog.masks
        }
        cells_ok = mask_cells == golden["mask_cells"]

        # re-anchor the goldens: the deepest mask still equals the BFS oracle
        from coastrise.inundation import coastline_seed_mask
        from coastrise.rasterops import clip_by_polygon
        from coastrise.gridio import read_grid
        from coastrise.vector import read_geojson

        dem = read_grid(str(src / "dem.asc"))
        coast = read_geojson(str(src / "coastline.geojson"))
        clipped = clip_by_polygon(dem, coast)
        seeds = coastline_seed_mask(dem, clipped)
        wet = threshold_dem(clipped, 4.0).cells == 1
        oracle = bfs_flood_fill(wet, seeds, "four")
        oracle_ok = bool(np.array_equal(catalog.masks["4"].cells == 1, oracle))

        ok = (
            served.status_code == 200
            and overlay.status_code == 200
            and elapsed < 30.0
            and checksum_ok
            and files_ok
            and cells_ok
            and oracle_ok
        )
        report(
            "end-to-end",
            ok,
            f"{elapsed:.1f}s, checksum {checksum_ok}, files {files_ok}, "
            f"cells {cells_ok}, bfs-oracle {oracle_ok}",
        )
