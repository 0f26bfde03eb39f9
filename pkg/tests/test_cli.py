"""CLI surface: subcommands, config precedence, artifact determinism."""

import numpy as np
import pytest

from pdegnn.cli import (ConfigError, build_parser, main, parse_config_file,
                        resolve_config, resolve_dataset_path)
from pdegnn.data import make_toy_bundle, save_bundle


@pytest.fixture(scope="module")
def toy_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "toy"
    save_bundle(make_toy_bundle(n_per_class=25, classes=2, f_in=4, seed=7),
                out)
    return out


FAST = ["--max-epochs", "15", "--patience", "15", "--channels", "8",
        "--lr", "0.02", "--weight-decay", "0.0005", "--dropout", "0.1",
        "--h", "0.3", "--split", "full"]


class TestConfigResolution:
    def test_file_parsing(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("block = advection  # transport\n"
                            "depths = 2,4\n\n"
                            "lr=0.005\n")
        values = parse_config_file(cfg_file)
        assert values == {"block": "advection", "depths": "2,4",
                          "lr": "0.005"}

    def test_bad_line_rejected(self, tmp_path):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("this is not a pair\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_file(cfg_file)

    def test_cli_beats_file(self, tmp_path, toy_dir):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(f"dataset={toy_dir}\nlr=0.005\nblock=burgers\n")
        parser = build_parser()
        args = parser.parse_args(["train", "--config", str(cfg_file),
                                  "--lr", "0.5"])
        cfg = resolve_config(args)
        assert cfg.lr == 0.5          # CLI wins
        assert cfg.block == "burgers"  # file fills the rest

    def test_unknown_config_key(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("dataset=x\nbogus=1\n")
        parser = build_parser()
        args = parser.parse_args(["train", "--config", str(cfg_file)])
        with pytest.raises(ConfigError, match="bogus"):
            resolve_config(args)

    def test_dataset_defaults_applied_by_name(self):
        parser = build_parser()
        args = parser.parse_args(["train", "--dataset", "/data/cora"])
        cfg = resolve_config(args)
        assert cfg.lr == 4.6e-5 and cfg.channels == 64 and cfg.h == 0.6

    def test_explicit_flag_beats_dataset_default(self):
        parser = build_parser()
        args = parser.parse_args(["train", "--dataset", "/data/cora",
                                  "--channels", "16"])
        cfg = resolve_config(args)
        assert cfg.channels == 16 and cfg.lr == 4.6e-5

    def test_missing_dataset_is_config_error(self):
        parser = build_parser()
        args = parser.parse_args(["train"])
        with pytest.raises(ConfigError, match="dataset"):
            resolve_config(args)

    def test_env_root_resolution(self, toy_dir, monkeypatch):
        monkeypatch.setenv("PDEGNN_DATA", str(toy_dir.parent))
        assert resolve_dataset_path("toy") == toy_dir
        with pytest.raises(ConfigError, match="PDEGNN_DATA"):
            resolve_dataset_path("nope")


class TestCommands:
    def test_missing_dataset_exits_2(self, capsys):
        assert main(["train"]) == 2
        assert "dataset" in capsys.readouterr().err

    def test_train_writes_artifacts(self, toy_dir, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["train", "--dataset", str(toy_dir), "--block", "advection",
                   "--depth", "2", "--seed", "0", "--out", str(out)] + FAST)
        assert rc == 0
        assert (out / "results.csv").is_file()
        assert (out / "config_used.txt").is_file()
        assert (out / "training_curves.png").is_file()
        assert (out / "summary.txt").is_file()
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == ("dataset,block,depth,seed,best_val,test,epochs,"
                          "seconds,config_hash")

    def test_toy_train_completes_quickly(self, toy_dir, tmp_path):
        import time
        t0 = time.perf_counter()
        rc = main(["train", "--dataset", str(toy_dir), "--block", "mix_aw",
                   "--depth", "2", "--seed", "0", "--out",
                   str(tmp_path / "quick")] + FAST)
        assert rc == 0
        assert time.perf_counter() - t0 < 5.0

    def test_sweep_single_cell_single_row(self, toy_dir, tmp_path):
        out = tmp_path / "one"
        rc = main(["sweep-depth", "--dataset", str(toy_dir), "--block",
                   "diffusion", "--depth", "2", "--seed", "3", "--out",
                   str(out)] + FAST)
        assert rc == 0
        rows = (out / "results.csv").read_text().splitlines()
        assert len(rows) == 2  # header + exactly one row

    def test_train_deterministic_csv_modulo_seconds(self, toy_dir, tmp_path):
        rows = []
        for name in ("a", "b"):
            out = tmp_path / name
            main(["train", "--dataset", str(toy_dir), "--block", "advection",
                  "--depth", "2", "--seed", "1", "--out", str(out)] + FAST)
            line = (out / "results.csv").read_text().splitlines()[1].split(",")
            line[7] = "X"  # wall seconds
            rows.append(line)
        assert rows[0] == rows[1]

    def test_sweep_depth_artifacts(self, toy_dir, tmp_path):
        out = tmp_path / "sweep"
        rc = main(["sweep-depth", "--dataset", str(toy_dir), "--block",
                   "mix_ad", "--depth", "2,4", "--seed", "0,1", "--out",
                   str(out)] + FAST)
        assert rc == 0
        rows = (out / "results.csv").read_text().splitlines()
        assert len(rows) == 1 + 4  # header + 2 depths x 2 seeds
        table = (out / "sweep_table.csv").read_text().splitlines()
        assert table[0] == "block,2,4"
        assert table[1].startswith("mix_ad,")
        assert (out / "accuracy_vs_depth.png").is_file()
        assert (out / "smoothing_profiles.png").is_file()
        smoothing = (out / "smoothing.csv").read_text().splitlines()
        assert smoothing[0] == "depth,seed,layer,variance"
        # depth-2 profile has 3 layers (input + 2), depth-4 has 5, per seed
        assert len(smoothing) == 1 + 2 * 3 + 2 * 5

    def test_sweep_depth_parallel_matches_serial(self, toy_dir, tmp_path):
        outs = []
        for name, jobs in (("serial", "1"), ("parallel", "2")):
            out = tmp_path / name
            main(["sweep-depth", "--dataset", str(toy_dir), "--block",
                  "advection", "--depth", "2,4", "--seed", "0,1", "--jobs",
                  jobs, "--out", str(out)] + FAST)
            lines = (out / "results.csv").read_text().splitlines()
            outs.append([l.split(",")[:7] for l in lines[1:]])
        assert outs[0] == outs[1]

    def test_verify_fast_passes(self, capsys, tmp_path):
        report = tmp_path / "verify.txt"
        rc = main(["verify", "--trials", "30", "--graphs", "5", "--out",
                   str(report)])
        assert rc == 0
        text = report.read_text()
        assert "PASS" in text and "FAIL" not in text

    def test_verify_exits_nonzero_on_failure(self, monkeypatch, capsys):
        import pdegnn.oracle as oracle
        monkeypatch.setattr(
            oracle, "run_verification",
            lambda trials, graphs: [oracle.CheckResult("planted", False,
                                                       "injected fault")])
        rc = main(["verify", "--trials", "1", "--graphs", "1"])
        assert rc == 1
        assert "FAIL planted" in capsys.readouterr().out

    def test_inspect_bundle(self, toy_dir, capsys):
        rc = main(["inspect-bundle", "--dataset", str(toy_dir)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "nodes:    50" in out

    def test_inspect_bundle_missing(self, capsys, tmp_path):
        rc = main(["inspect-bundle", "--dataset", str(tmp_path / "ghost")])
        assert rc == 1


def test_f64_flag_changes_dtype(toy_dir, tmp_path):
    out = tmp_path / "f64run"
    rc = main(["train", "--dataset", str(toy_dir), "--block", "diffusion",
               "--depth", "2", "--seed", "0", "--out", str(out), "--f64"]
              + FAST)
    assert rc == 0
    cfg_echo = (out / "config_used.txt").read_text()
    assert "f64=True" in cfg_echo
