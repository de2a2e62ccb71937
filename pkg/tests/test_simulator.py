import json
import os

import numpy as np
import pytest

from stcmsense.cli import main
from stcmsense.config import (
    build_model,
    config_hash,
    dbm_to_watt,
    fixed_scene,
    grid_points,
    load_config,
    merge_config,
)
from stcmsense.errors import ConfigError
from stcmsense.experiments import (
    run_classification_mc,
    run_crb_map,
    run_detection_map,
    run_peb_map,
    run_ris_compare,
)
from stcmsense.validate import run_validate

COARSE = {"grid_res_m": 10.0, "n_trials": 1500, "classification_snr_db": [-5.0, 40.0]}


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh]
    return header, rows


class TestConfig:
    def test_defaults_reflect_reference_table(self):
        cfg = merge_config({})
        assert cfg["bs"]["antennas"] == 16
        assert cfg["panel"]["n_x"] * cfg["panel"]["n_y"] == 64
        assert cfg["code"]["length"] == 8
        assert cfg["code"]["period_s"] == 2e-6
        assert cfg["carrier_hz"] == 1e10
        assert cfg["noise_power_dbm"] == -120.0
        assert cfg["pilot_total_power_dbm"] == 12.0
        assert cfg["rcs_dbsm"] == {"human_like": 1.0, "object_like": 17.0}
        assert cfg["geometry"]["stcm_center"] == [0.0, 0.0, 100.0]

    def test_dbm_conversion(self):
        assert dbm_to_watt(12.0) == pytest.approx(10 ** (-1.8), rel=1e-14)
        assert dbm_to_watt(-120.0) == pytest.approx(1e-15, rel=1e-14)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            merge_config({"no_such_knob": 1})

    def test_load_file_with_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"harmonics": 4, "seed": 5}))
        cfg = load_config(path, {"seed": 9})
        assert cfg["harmonics"] == 4
        assert cfg["seed"] == 9

    def test_hash_is_stable_and_sensitive(self):
        a = config_hash(merge_config({}))
        b = config_hash(merge_config({}))
        c = config_hash(merge_config({"seed": 1}))
        assert a == b
        assert a != c

    def test_grid_covers_bounds(self, model):
        xs, zs = grid_points(model.geom, 1.0)
        assert len(xs) == 161 and len(zs) == 101
        assert xs[0] == -80.0 and xs[-1] == 80.0 and zs[-1] == 100.0

    def test_explicit_scene_ingestion(self, model):
        cfg = merge_config(
            {
                "scene": [
                    {"position": [10.0, 0.0, 20.0], "rcs_dbsm": 17.0, "kind": "object_like"},
                    {"position": [-5.0, 0.0, 70.0], "rcs_dbsm": 1.0, "kind": "human_like"},
                ]
            }
        )
        pts = fixed_scene(cfg, model)
        assert len(pts) == 2
        assert pts[0].rcs_sqrt == pytest.approx(10 ** 0.85)
        assert pts[1].kind.value == "human_like"

    def test_fixed_scenes(self, model):
        assert fixed_scene(merge_config({}), model) == []
        two = fixed_scene(merge_config({"n_targets": 2}), model)
        assert len(two) == 1
        assert np.allclose(two[0].position, [60.0, 0.0, 40.0])
        ten = fixed_scene(merge_config({"n_targets": 10}), model)
        assert len(ten) == 9
        angles = sorted(np.degrees(np.arctan2(p.position[0], p.position[2])) for p in ten)
        assert angles[0] == pytest.approx(-72.0)
        assert angles[-1] == pytest.approx(72.0)
        steps = np.diff(angles)
        assert np.allclose(steps, 18.0, atol=1e-9)
        assert all(np.linalg.norm(p.position) == pytest.approx(50.0) for p in ten)


class TestExperimentOutputs:
    def test_crb_map_row_count_and_mask_column(self, tmp_path):
        files = run_crb_map(merge_config(COARSE), str(tmp_path))
        header, rows = read_csv(files[0])
        assert header == ["x_m", "z_m", "crb_db", "masked"]
        xs, zs = grid_points(build_model(merge_config(COARSE)).geom, 10.0)
        assert len(rows) == len(xs) * len(zs)
        for r in rows:
            assert r[3] in ("true", "false")
            assert (r[2] == "") == (r[3] == "true")

    def test_manifest_checksums(self, tmp_path):
        files = run_peb_map(merge_config(COARSE), str(tmp_path))
        manifest = json.load(open(files[-1]))
        import hashlib

        for name, digest in manifest["outputs"].items():
            p = os.path.join(tmp_path, name)
            assert hashlib.sha256(open(p, "rb").read()).hexdigest() == digest
        assert manifest["config_sha256"] == config_hash(merge_config(COARSE))

    def test_detection_map_outputs_four_maps(self, tmp_path):
        files = run_detection_map(merge_config(COARSE), str(tmp_path))
        csvs = [f for f in files if f.endswith(".csv")]
        assert len(csvs) == 4
        for f in csvs:
            header, rows = read_csv(f)
            pd = np.array([float(r[2]) for r in rows if r[2]])
            assert np.all(pd >= 1e-4 - 1e-12) and np.all(pd <= 1.0)

    def test_classification_csv_schema(self, tmp_path):
        files = run_classification_mc(merge_config(COARSE), str(tmp_path))
        header, rows = read_csv(files[0])
        assert header == ["snr_db", "true_class", "p_h0", "p_h1", "p_h2", "n_trials", "seed"]
        assert len(rows) == 2 * 2  # two SNR points, two true classes
        for r in rows:
            total = float(r[2]) + float(r[3]) + float(r[4])
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_ris_compare_masked_everywhere(self, tmp_path):
        files = run_ris_compare(merge_config(COARSE), str(tmp_path))
        header, rows = read_csv(files[0])
        interior = [r for r in rows if r[5] == "false"]
        assert interior, "switching panel should be informative somewhere"
        assert all(r[3] == "true" for r in rows)

    def test_peb_axis_masked(self, tmp_path):
        files = run_peb_map(merge_config(COARSE), str(tmp_path))
        header, rows = read_csv(files[0])
        on_axis = [r for r in rows if float(r[0]) == 0.0]
        assert on_axis and all(r[3] == "true" for r in on_axis)
        off_axis = [r for r in rows if r[3] == "false"]
        assert off_axis

    def test_peb_grows_with_range_along_ray(self, tmp_path):
        # beyond the near-field dip (where the shrinking panel-target leg
        # still improves the panel-side bound), range loss dominates and the
        # bound grows monotonically outward
        files = run_peb_map(merge_config(COARSE), str(tmp_path))
        _, rows = read_csv(files[0])
        ray = sorted(
            (float(r[1]), float(r[2]))
            for r in rows
            if r[3] == "false" and float(r[0]) == float(r[1]) and float(r[1]) >= 30.0
        )
        assert len(ray) >= 4
        vals = [v for _, v in ray]
        assert vals == sorted(vals)
        assert vals[-1] > 2.0 * vals[0]

    def test_crb_xi_map_shape(self, tmp_path):
        # panel-side bound below 0 dB wherever that bearing is under 50 deg,
        # and rising steeply at wide bearings
        files = run_crb_map(merge_config(COARSE), str(tmp_path))
        _, rows = read_csv(files[1])
        lo, hi = [], []
        for r in rows:
            if r[3] == "true":
                continue
            x, z, v = float(r[0]), float(r[1]), float(r[2])
            bearing = abs(np.degrees(np.arctan2(x, 100.0 - z))) if z < 100 else 90.0
            if bearing < 50.0:
                lo.append(v)
            elif bearing > 70.0:
                hi.append(v)
        assert lo and hi
        assert max(lo) < 0.0
        assert np.mean(hi) > np.mean(lo) + 20.0

    def test_two_target_peb_degenerates_on_shared_ray(self, tmp_path):
        # fixed reflector at (60, 0, 40): probe cells on the same BS ray are
        # masked or useless (> 1 m), far cells stay finite
        cfg = merge_config({**COARSE, "n_targets": 2, "grid_res_m": 5.0})
        files = run_peb_map(cfg, str(tmp_path))
        _, rows = read_csv(files[0])
        ray, off = [], []
        for r in rows:
            x, z = float(r[0]), float(r[1])
            masked = r[3] == "true"
            if z > 0 and abs(x / z - 1.5) < 0.05 and 10 <= z <= 95:
                ray.append(masked or float(r[2]) > 1.0)
            elif not masked and x < 0:
                off.append(float(r[2]))
        assert len(ray) >= 5 and all(ray)
        assert off and np.isfinite(off).all()


class TestDeterminism:
    @pytest.mark.parametrize("runner", [run_crb_map, run_peb_map, run_detection_map,
                                        run_classification_mc, run_ris_compare])
    def test_byte_identical_reruns(self, tmp_path, runner):
        cfg = merge_config(COARSE)
        d1 = tmp_path / "a"
        d2 = tmp_path / "b"
        d1.mkdir()
        d2.mkdir()
        f1 = [f for f in runner(cfg, str(d1)) if f.endswith(".csv")]
        f2 = [f for f in runner(cfg, str(d2)) if f.endswith(".csv")]
        assert [os.path.basename(f) for f in f1] == [os.path.basename(f) for f in f2]
        for a, b in zip(f1, f2):
            assert open(a, "rb").read() == open(b, "rb").read()

    def test_threads_do_not_change_results(self, tmp_path):
        base = merge_config(COARSE)
        multi = merge_config({**COARSE, "threads": 2})
        d1 = tmp_path / "serial"
        d2 = tmp_path / "pool"
        d1.mkdir()
        d2.mkdir()
        f1 = run_crb_map(base, str(d1))
        f2 = run_crb_map(multi, str(d2))
        assert open(f1[0], "rb").read() == open(f2[0], "rb").read()
        assert open(f1[1], "rb").read() == open(f2[1], "rb").read()

    def test_seed_changes_monte_carlo(self, tmp_path):
        d1 = tmp_path / "s1"
        d2 = tmp_path / "s2"
        d1.mkdir()
        d2.mkdir()
        f1 = run_classification_mc(merge_config(COARSE), str(d1))
        f2 = run_classification_mc(merge_config({**COARSE, "seed": 777}), str(d2))
        assert open(f1[0]).read() != open(f2[0]).read()


class TestCli:
    def test_subcommands_write_outputs(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(COARSE))
        for cmd, expect in (
            ("crb-map", "crb_alpha_map.csv"),
            ("detect-map", "detect_map_human_like_all_ones.csv"),
        ):
            out = tmp_path / cmd
            rc = main([cmd, "--config", str(cfg_path), "--out", str(out)])
            assert rc == 0
            assert (out / expect).exists()

    def test_grid_res_flag_overrides(self, tmp_path):
        out = tmp_path / "o"
        rc = main(["crb-map", "--grid-res", "20", "--out", str(out)])
        assert rc == 0
        _, rows = read_csv(out / "crb_alpha_map.csv")
        assert len(rows) == 9 * 6

    def test_bad_config_fails(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"bogus": 1}))
        rc = main(["crb-map", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_validate_passes_on_defaults(self):
        assert main(["validate"]) == 0


def test_validate_suite_counts_failures(default_cfg):
    assert run_validate(default_cfg, printer=lambda *a, **k: None) == 0
