"""Command-line workflows: artifact emission, determinism, error paths."""

import json
import os
import subprocess
import sys

import pytest

from gib.cli import main
from gib.graphs import load_mask_sidecar, load_tu_dataset
from gib.subgraph import parse_selections

FAST_TRAIN = (
    "[train]\n"
    "outer_steps = 3\n"
    "inner_steps = 3\n"
    "batch_size = 8\n"
    "patience = 5\n"
    "[data]\n"
    "split_train = 0.7\n"
    "split_val = 0.1\n"
    "split_test = 0.2\n"
)


@pytest.fixture()
def motif_dir(tmp_path):
    out = str(tmp_path / "data")
    assert main(["gen-motif", "--out", out, "--name", "TOY", "--num-graphs", "20",
                 "--n-min", "8", "--n-max", "11", "--seed", "3"]) == 0
    return out


@pytest.fixture()
def config_file(tmp_path):
    path = str(tmp_path / "fast.ini")
    with open(path, "w") as fh:
        fh.write(FAST_TRAIN)
    return path


class TestTrainCommand:
    def test_artifacts_written(self, tmp_path, motif_dir, config_file):
        out = str(tmp_path / "run")
        code = main(["train", "--config", config_file, "--data", motif_dir,
                     "--name", "TOY", "--seed", "7", "--out", out])
        assert code == 0
        for artifact in ("manifest.json", "metrics.csv", "mi_trace.csv", "checkpoint.bin"):
            assert os.path.exists(os.path.join(out, artifact))
        manifest = json.load(open(os.path.join(out, "manifest.json")))
        assert manifest["seed"] == 7
        assert manifest["dataset"]["hash"]
        assert manifest["config"]["train.outer_steps"] == 3

    def test_identical_invocations_emit_identical_metrics(self, tmp_path, motif_dir, config_file):
        outs = [str(tmp_path / f"run{i}") for i in (1, 2)]
        for out in outs:
            assert main(["train", "--config", config_file, "--data", motif_dir,
                         "--name", "TOY", "--seed", "7", "--out", out]) == 0
        blobs = [open(os.path.join(o, "metrics.csv"), "rb").read() for o in outs]
        assert blobs[0] == blobs[1]

    def test_unknown_flag_exits_2(self):
        result = subprocess.run(
            [sys.executable, "-m", "gib.cli", "train", "--does-not-exist"],
            capture_output=True,
        )
        assert result.returncode == 2

    def test_bad_config_key_named(self, tmp_path, motif_dir):
        cfg = str(tmp_path / "bad.ini")
        with open(cfg, "w") as fh:
            fh.write("[train]\nouter_stepz = 3\n")
        code = main(["train", "--config", cfg, "--data", motif_dir,
                     "--name", "TOY", "--out", str(tmp_path / "r")])
        assert code == 1

    def test_missing_dataset_fails_nonzero(self, tmp_path, config_file):
        code = main(["train", "--config", config_file, "--data", str(tmp_path),
                     "--name", "GHOST", "--out", str(tmp_path / "r")])
        assert code == 1


class TestGenNoise:
    def test_mask_sidecar_consistent(self, tmp_path, motif_dir):
        out = str(tmp_path / "noisy")
        assert main(["gen-noise", "--data", motif_dir, "--name", "TOY",
                     "--fraction", "0.3", "--seed", "1", "--out", out]) == 0
        noisy = load_tu_dataset(out, "TOY_NOISY")
        masks = load_mask_sidecar(out, "TOY_NOISY")
        clean = load_tu_dataset(motif_dir, "TOY")
        assert len(noisy.graphs) == len(clean.graphs)
        for g_clean, g_noisy, mask in zip(clean.graphs, noisy.graphs, masks):
            edges = g_noisy.edges()
            real = {edges[k] for k in mask}
            assert real == set(g_clean.edges())


class TestDenoiseCommand:
    def test_table_emitted(self, tmp_path, motif_dir, config_file):
        noisy_dir = str(tmp_path / "noisy")
        main(["gen-noise", "--data", motif_dir, "--name", "TOY",
              "--fraction", "0.3", "--seed", "1", "--out", noisy_dir])
        out = str(tmp_path / "denoise")
        code = main(["denoise", "--config", config_file, "--data", noisy_dir,
                     "--name", "TOY_NOISY", "--seed", "2", "--out", out])
        assert code == 0
        table = open(os.path.join(out, "denoise_table.csv")).read().splitlines()
        assert table[0] == "method,recall,precision,accuracy"
        methods = [line.split(",")[0] for line in table[1:]]
        assert methods == ["GCN", "GCN+Att05", "GCN+Att07", "GCN+GIB"]
        gcn_row = table[1].split(",")
        assert gcn_row[1] == "-" and gcn_row[2] == "-"  # structure metrics only
        assert os.path.exists(os.path.join(out, "denoise_table.txt"))

    def test_seed_sweep_reports_mean_and_spread(self, tmp_path, motif_dir, config_file):
        noisy_dir = str(tmp_path / "noisy")
        main(["gen-noise", "--data", motif_dir, "--name", "TOY",
              "--fraction", "0.3", "--seed", "1", "--out", noisy_dir])
        out = str(tmp_path / "sweep")
        code = main(["denoise", "--config", config_file, "--data", noisy_dir,
                     "--name", "TOY_NOISY", "--seed", "2", "--seeds", "2", "--out", out])
        assert code == 0
        table = open(os.path.join(out, "denoise_table.csv")).read().splitlines()
        gib_row = table[-1].split(",")
        assert "+-" in gib_row[1]  # mean +- std over the seed sweep

    def test_missing_mask_sidecar_fails(self, tmp_path, motif_dir, config_file):
        bare = str(tmp_path / "bare")
        os.makedirs(bare)
        for name in os.listdir(motif_dir):
            if "mask" not in name:
                with open(os.path.join(motif_dir, name)) as src, open(
                    os.path.join(bare, name), "w"
                ) as dst:
                    dst.write(src.read())
        code = main(["denoise", "--config", config_file, "--data", bare,
                     "--name", "TOY", "--seed", "2", "--out", str(tmp_path / "x")])
        assert code == 1


class TestInterpretCommand:
    @pytest.fixture()
    def continuous_dir(self, tmp_path):
        out = str(tmp_path / "contdata")
        assert main(["gen-motif", "--out", out, "--name", "CONT", "--num-graphs", "20",
                     "--motif-kinds", "clique", "--motif-sizes", "4,5",
                     "--n-min", "8", "--n-max", "11", "--continuous", "--seed", "5"]) == 0
        return out

    def test_tables_and_dump(self, tmp_path, continuous_dir, config_file):
        out = str(tmp_path / "interp")
        code = main(["interpret", "--config", config_file, "--data", continuous_dir,
                     "--name", "CONT", "--seed", "3", "--out", out, "--no-baselines"])
        assert code == 0
        table = open(os.path.join(out, "interpret_table.csv")).read().splitlines()
        methods = [line.split(",")[0] for line in table[1:]]
        assert methods == ["GCN+GIB w/o con", "GCN+GIB w/o mi", "GCN+GIB"]
        records = parse_selections(os.path.join(out, "subgraphs.jsonl"))
        assert records and all("node_mask" in r for r in records)

    def test_double_ablation_gives_plain_run(self, tmp_path, continuous_dir, config_file):
        out = str(tmp_path / "interp2")
        code = main(["interpret", "--config", config_file, "--data", continuous_dir,
                     "--name", "CONT", "--seed", "3", "--out", out,
                     "--no-baselines", "--no-con", "--no-mi"])
        assert code == 0
        table = open(os.path.join(out, "interpret_table.csv")).read().splitlines()
        assert len(table) == 2 and "no con, no mi" in table[1]

    def test_categorical_dataset_rejected(self, tmp_path, motif_dir, config_file):
        code = main(["interpret", "--config", config_file, "--data", motif_dir,
                     "--name", "TOY", "--seed", "3",
                     "--out", str(tmp_path / "x"), "--no-baselines"])
        assert code == 1


class TestCaseStudyCommand:
    def test_trace_csv_shape(self, tmp_path):
        out = str(tmp_path / "case")
        cfg = str(tmp_path / "cs.ini")
        with open(cfg, "w") as fh:
            fh.write("[case_study]\nepochs = 2\ninner_steps = 5\n"
                     "samples_per_epoch = 1000\n")
        code = main(["case-study", "--config", cfg, "--seed", "1", "--out", out])
        assert code == 0
        lines = open(os.path.join(out, "case_study_trace.csv")).read().splitlines()
        assert lines[0] == "epoch,mi_estimate,oracle_mi,sigma2"
        assert len(lines) == 3

    def test_seeded_reruns_identical(self, tmp_path):
        cfg = str(tmp_path / "cs.ini")
        with open(cfg, "w") as fh:
            fh.write("[case_study]\nepochs = 2\ninner_steps = 5\n"
                     "samples_per_epoch = 1000\n")
        blobs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert main(["case-study", "--config", cfg, "--seed", "9", "--out", out]) == 0
            blobs.append(open(os.path.join(out, "case_study_trace.csv"), "rb").read())
        assert blobs[0] == blobs[1]

    def test_sigma2_fixed_single_epoch(self, tmp_path):
        cfg = str(tmp_path / "cs.ini")
        with open(cfg, "w") as fh:
            fh.write("[case_study]\ninner_steps = 5\nsamples_per_epoch = 1000\n")
        out = str(tmp_path / "fixed")
        assert main(["case-study", "--config", cfg, "--seed", "2", "--out", out,
                     "--sigma2-fixed", "1.0", "--epochs", "1"]) == 0
        lines = open(os.path.join(out, "case_study_trace.csv")).read().splitlines()
        assert len(lines) == 2 and lines[1].split(",")[3] == "1.0"
