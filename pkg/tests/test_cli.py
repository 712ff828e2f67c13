import json
import os

import numpy as np
import pytest

from geogrowth import create_parser, main
from pipeline.runner import GeoGrowthRunner
from tests.conftest import make_panel
from util.errors import ConfigError, DataError, SingularityError

SIMULATE = ["simulate", "--n_countries", "10", "--n_years", "30", "--burn_in", "10", "--sim_seed", "5",
            "--n_majors", "2", "--irf_horizon", "8", "--measure_sigma", "0.5", "--noise", "0.5"]


def run_pipeline(root: str):
    sim, scores, lp, dec, acc = (os.path.join(root, name) for name in ("sim", "scores", "lp", "dec", "acc"))
    panel = os.path.join(sim, "panel.csv")
    steps = [
        [*SIMULATE, "--output_dir", sim],
        ["scores", "--events", os.path.join(sim, "events.jsonl"), "--weights", os.path.join(sim, "weights.csv"),
         "--majors", "USA", "CHN", "--output_dir", scores],
        ["lp", "--panel", panel, "--lags", "1", "--horizon_max", "4", "--fwl_outcome_offset", "2",
         "--n_bins", "10", "--output_dir", lp],
        ["decompose", "--panel", panel, "--lags", "1", "--irf_horizon", "8", "--output_dir", dec],
        ["account", "--panel", panel, "--transitory_irf", os.path.join(dec, "decomposition.csv"),
         "--permanent_horizon", "5", "--window", "8", "--decades", "1970", "1980", "--output_dir", acc],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    return {"sim": sim, "scores": scores, "lp": lp, "dec": dec, "acc": acc}


def read_outputs(dirs):
    contents = {}
    for key, directory in dirs.items():
        for name in sorted(os.listdir(directory)):
            if name != "manifest.json":
                with open(os.path.join(directory, name), "rb") as f:
                    contents[f"{key}/{name}"] = f.read()
    return contents


def read_manifest(directory):
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as f:
        return json.load(f)


def test_pipeline_is_reproducible(tmp_path):
    dirs = run_pipeline(str(tmp_path))
    first = read_outputs(dirs)
    first_manifests = {k: read_manifest(d) for k, d in dirs.items()}
    assert {"sim/panel.csv", "sim/events.jsonl", "sim/geo.csv", "sim/ground_truth.csv", "scores/geo.csv",
            "scores/pair_scores.csv", "lp/irf.csv", "lp/binscatter.csv", "dec/decomposition.csv",
            "acc/decade_effects.csv", "acc/counterfactuals.csv"} <= set(first)

    run_pipeline(str(tmp_path))
    assert read_outputs(dirs) == first
    for key, directory in dirs.items():
        again = read_manifest(directory)
        again.pop("timestamp")
        expected = dict(first_manifests[key])
        expected.pop("timestamp")
        assert again == expected


def test_scores_rebuild_the_simulated_measure(tmp_path):
    dirs = run_pipeline(str(tmp_path))
    first = read_outputs(dirs)
    assert first["scores/geo.csv"] == first["sim/geo.csv"]
    assert first["scores/geo_iv.csv"] == first["sim/geo_iv.csv"]


def test_manifest_contents(tmp_path):
    out = str(tmp_path / "sim")
    assert main([*SIMULATE, "--output_dir", out]) == 0
    manifest = read_manifest(out)
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 5
    assert len(manifest["config_sha256"]) == 64
    assert manifest["config"]["SimulationConfig"]["n_countries"] == 10
    assert "panel.csv" in manifest["outputs"]
    assert manifest["outputs"] == sorted(manifest["outputs"])
    assert np.isfinite(manifest["values"]["phi_inf"])
    assert "numpy" in manifest["versions"]


def test_lp_samples_are_logged(tmp_path):
    dirs = run_pipeline(str(tmp_path))
    samples = read_manifest(dirs["lp"])["samples"]
    assert [s["horizon"] for s in samples] == [0, 1, 2, 3, 4]
    assert all(s["stage"] == "lp" and s["n_countries"] > 0 for s in samples)
    assert "fwl_slope" in read_manifest(dirs["lp"])["values"]


@pytest.fixture
def collinear_panel(tmp_path, rng):
    x = rng.normal(size=60)
    frame = make_panel({"gdp": rng.normal(size=60), "x": x, "x2": 2.0 * x}, 6, 10)
    return frame.to_csv(str(tmp_path / "panel.csv"))


def test_exit_codes(tmp_path, collinear_panel):
    out = str(tmp_path / "out")
    assert main(["lp", "--output_dir", out]) == ConfigError.exit_code
    assert main(["lp", "--bogus_flag", "--output_dir", out]) == ConfigError.exit_code
    assert main(["lp", "--panel", collinear_panel, "--outcome", "missing", "--shocks", "x",
                 "--output_dir", out]) == DataError.exit_code
    assert main(["lp", "--panel", collinear_panel, "--shocks", "x", "--controls", "x2", "--lags", "0",
                 "--fixed_effects", "country", "--output_dir", out]) == SingularityError.exit_code

    corpus = tmp_path / "bad.jsonl"
    corpus.write_text("{broken\n")
    assert main(["stats", "--events", str(corpus), "--output_dir", out]) == DataError.exit_code
    corpus.write_bytes(b'{"country1": "\xff\xfe"}\n')
    assert main(["stats", "--events", str(corpus), "--output_dir", out]) == DataError.exit_code


def test_exit_code_values():
    assert (ConfigError.exit_code, DataError.exit_code, SingularityError.exit_code) == (1, 2, 3)


def test_runner_without_manifest_writes_none(tmp_path):
    *configs, args = create_parser().parse_args_into_dataclasses([*SIMULATE, "--output_dir", str(tmp_path)])
    written = GeoGrowthRunner(*configs).run(args.command)
    assert os.path.join(str(tmp_path), "panel.csv") in written
    assert not (tmp_path / "manifest.json").exists()
