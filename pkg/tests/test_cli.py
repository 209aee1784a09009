"""End-to-end tests for the command-line front end."""

import json
import re

import numpy as np
import pytest
import yaml

from bcts.cli import main
from bcts.config import (
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    parse_config,
    serialize_config,
)
from bcts.errors import ConfigurationError, ParameterError
from bcts.plotting import emit_plot
from bcts.runner import ResultTable

SMALL_MOVIE = {
    "scenario": "movie",
    "horizon": 100,
    "teaching_budgets": [200],
    "teaching_methods": ["random"],
    "sigma_grid": [0.0, 1.0],
    "n_folds": 2,
    "train_size": 40,
    "seeds": [0],
    "sampler": {"R": 0.05, "z": 1.0, "gamma": 0.5},
    "movie": {"n_users": 8, "n_movies": 200},
}


def write_config(tmp_path, doc, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def data_paths(out_dir):
    return sorted(p for p in out_dir.rglob("*") if p.is_file() and p.suffix == ".csv")


class TestParseConfig:
    def test_minimal_defaults(self, tmp_path):
        path = write_config(tmp_path, {"scenario": "movie", "horizon": 500})
        cfg = parse_config(path)
        assert cfg.n_folds == 5
        assert cfg.train_size == 200
        assert cfg.sampler.z == 0.5
        assert cfg.sampler.gamma == 0.1
        assert cfg.sampler.R == 1.0
        assert cfg.teaching_methods == ["random"]

    def test_sigma_out_of_range_names_key(self, tmp_path):
        doc = dict(SMALL_MOVIE, sigma_grid=[0.0, 1.5])
        path = write_config(tmp_path, doc)
        with pytest.raises(ConfigurationError, match=r"sigma_grid\[1\]"):
            parse_config(path)

    def test_unknown_key_rejected_with_path(self, tmp_path):
        path = write_config(tmp_path, dict(SMALL_MOVIE, horizons=10))
        with pytest.raises(ConfigurationError, match="horizons"):
            parse_config(path)
        path2 = write_config(tmp_path, dict(SMALL_MOVIE, movie={"n_userz": 3}), "c2.yaml")
        with pytest.raises(ConfigurationError, match="n_userz"):
            parse_config(path2)

    def test_round_trip(self, tmp_path):
        path = write_config(tmp_path, SMALL_MOVIE)
        cfg = parse_config(path)
        text = serialize_config(cfg)
        again = config_from_dict(yaml.safe_load(text))
        assert again == cfg
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            parse_config(tmp_path / "nope.yaml")

    def test_missing_required_key(self, tmp_path):
        path = write_config(tmp_path, {"scenario": "movie"})
        with pytest.raises(ConfigurationError, match="horizon"):
            parse_config(path)


class TestGenData:
    def test_movie_files_and_manifest(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "data"
        assert main(["gen-data", "--config", str(cfg_path), "--out", str(out)]) == 0
        for name in ("ratings.csv", "genres.csv", "constraints.txt"):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        listed = {p.split("/")[-1] for p in manifest["outputs"]}
        produced = {p.name for p in out.iterdir() if p.name != "manifest.json"}
        assert listed == produced

    def test_warfarin_file(self, tmp_path):
        doc = {
            "scenario": "warfarin",
            "horizon": 50,
            "n_folds": 2,
            "train_size": 30,
            "warfarin": {"num_patients": 120},
        }
        cfg_path = write_config(tmp_path, doc)
        out = tmp_path / "data"
        assert main(["gen-data", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "warfarin.csv").exists()

    def test_run_from_generated_data_matches_in_memory(self, tmp_path):
        """A full-density dataset written to disk reproduces the in-memory env."""
        doc = dict(SMALL_MOVIE)
        cfg_path = write_config(tmp_path, doc)
        data_dir = tmp_path / "data"
        main(["gen-data", "--config", str(cfg_path), "--out", str(data_dir)])

        out_mem = tmp_path / "mem"
        main(["run", "--config", str(cfg_path), "--out", str(out_mem)])

        doc_disk = dict(doc, data_dir=str(data_dir))
        cfg_disk = write_config(tmp_path, doc_disk, "disk.yaml")
        out_disk = tmp_path / "disk"
        main(["run", "--config", str(cfg_disk), "--out", str(out_disk)])

        assert (out_mem / "summary.csv").read_bytes() == (
            out_disk / "summary.csv"
        ).read_bytes()


class TestRunPipeline:
    def test_byte_identical_reruns(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg_path), "--out", str(out_a)]) == 0
        assert main(["run", "--config", str(cfg_path), "--out", str(out_b)]) == 0
        files_a = data_paths(out_a)
        files_b = data_paths(out_b)
        assert [p.relative_to(out_a) for p in files_a] == [
            p.relative_to(out_b) for p in files_b
        ]
        assert files_a  # not empty
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_manifest_lists_every_output(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        listed = {str(p) for p in manifest["outputs"]}
        on_disk = {
            str(p)
            for p in out.rglob("*")
            if p.is_file() and p.name != "manifest.json"
        }
        assert listed == on_disk

    def test_seed_flag_and_env_fallback(self, tmp_path, monkeypatch):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out_flag = tmp_path / "flag"
        out_env = tmp_path / "env"
        main(["run", "--config", str(cfg_path), "--seed", "99", "--out", str(out_flag)])
        monkeypatch.setenv("BCTS_SEED", "99")
        main(["run", "--config", str(cfg_path), "--out", str(out_env)])
        assert (out_flag / "summary.csv").read_bytes() == (
            out_env / "summary.csv"
        ).read_bytes()

    def test_learn_then_run_consumes_policy_readonly(self, tmp_path):
        doc = dict(SMALL_MOVIE, sigma_grid=[0.0])
        cfg_path = write_config(tmp_path, doc)
        out = tmp_path / "out"
        assert main(["learn", "--config", str(cfg_path), "--out", str(out)]) == 0
        policy_path = out / "policy.json"
        assert policy_path.exists()
        before = policy_path.read_bytes()

        doc_run = dict(doc, policy_path=str(policy_path))
        cfg_run = write_config(tmp_path, doc_run, "run.yaml")
        assert main(["run", "--config", str(cfg_run), "--out", str(out / "run")]) == 0
        assert policy_path.read_bytes() == before

        table = ResultTable.from_csv(out / "run" / "summary.csv")
        assert {r.N for r in table.rows if r.sigma is not None} == {200}


class TestReport:
    def test_reproduces_aggregates(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        assert main(["report", "--out", str(out)]) == 0
        shown = capsys.readouterr().out
        assert "mask" in shown and "teaching=random" in shown

    def test_detects_tampered_aggregate(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        summary = out / "summary.csv"
        lines = summary.read_text().splitlines()
        for i, line in enumerate(lines):
            if ",AGG," in line:
                cells = line.split(",")
                cells[-1] = "12345.0"
                lines[i] = ",".join(cells)
                break
        summary.write_text("\n".join(lines) + "\n")
        assert main(["report", "--out", str(out)]) == 1

    def test_missing_summary(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == 1


class TestPlot:
    def test_charts_created(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        assert main(["plot", "--out", str(out)]) == 0
        for name in ("regret.svg", "error.svg"):
            text = (out / name).read_text()
            assert "<svg" in text

    def test_single_run_polyline_vertex_count(self, tmp_path):
        cfg_path = write_config(tmp_path, dict(SMALL_MOVIE, sigma_grid=[0.5], n_folds=2))
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        traj = sorted((out / "trajectories").glob("*sigma0.5*fold0*.csv"))[0]
        svg = emit_plot(traj, "regret", tmp_path / "one.svg")
        text = svg.read_text()
        data_paths_d = re.findall(r'<path d="([^"]+)" clip-path=', text)
        assert len(data_paths_d) == 1
        vertices = re.findall(r"[-\d.e]+ [-\d.e]+", data_paths_d[0])
        assert len(vertices) == SMALL_MOVIE["horizon"]

    def test_mask_error_curve_is_flat_zero(self, tmp_path):
        from bcts.plotting import read_trajectory_csv

        cfg_path = write_config(tmp_path, SMALL_MOVIE)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg_path), "--out", str(out)])
        mask_files = sorted((out / "trajectories").glob("traj_*mask*.csv"))
        assert mask_files
        for path in mask_files:
            data = read_trajectory_csv(path)
            assert (data["cum_error"] == 0).all()

    def test_empty_csv_rejected_without_output(self, tmp_path):
        empty = tmp_path / "traj_empty.csv"
        empty.write_text("t,arm,reward,best_reward,violation,cum_avg_regret,cum_error\n")
        target = tmp_path / "never.svg"
        with pytest.raises(ParameterError, match="no steps"):
            emit_plot(empty, "regret", target)
        assert not target.exists()

    def test_schema_mismatch_lists_missing_columns(self, tmp_path):
        bad = tmp_path / "traj_bad.csv"
        bad.write_text("t,arm,reward\n1,0,0.5\n")
        with pytest.raises(ParameterError, match="best_reward"):
            emit_plot(bad, "error", tmp_path / "x.svg")


class TestCliDiagnostics:
    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        path = write_config(tmp_path, {"scenario": "bogus", "horizon": 10})
        assert main(["run", "--config", str(path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
