"""Command line contract: flags, exit codes, output streams, determinism."""
import json

import numpy as np
import pytest

from xbarsim.cli import main
from xbarsim.devices import BinarizedModel
from xbarsim.training import save_model

pytestmark = pytest.mark.usefixtures("model_file")


@pytest.fixture(scope="module")
def model_file(tmp_path_factory):
    rng = np.random.default_rng(0)
    dims = (400, 120, 84, 10)
    weights = [rng.choice([-1, 1], size=(dims[k], dims[k + 1])).astype(np.int8)
               for k in range(3)]
    path = tmp_path_factory.mktemp("weights") / "model.imacw"
    save_model(BinarizedModel(layer_dims=list(dims), weights=weights), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_map_tile_counts(capsys, model_file):
    code, out, _ = run(capsys, "map", "--weights", model_file,
                       "--subarray", "32x32")
    assert code == 0
    tiles = [ln for ln in out.splitlines() if not ln.startswith("#")]
    per_layer = [sum(1 for t in tiles if t.startswith(f"{k} ")) for k in range(3)]
    assert per_layer == [104, 24, 3]


def test_map_256(capsys, model_file):
    code, out, _ = run(capsys, "map", "--weights", model_file,
                       "--subarray", "256")
    assert code == 0
    tiles = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert len(tiles) == 4


def test_map_odd_columns_exit_2(capsys, model_file):
    code, _, err = run(capsys, "map", "--weights", model_file,
                       "--subarray", "32x31")
    assert code == 2
    assert "even" in err


def test_map_bad_weight_file_exit_2(capsys, tmp_path):
    bad = tmp_path / "junk.imacw"
    bad.write_bytes(b"NOTMAGIC" + b"\x00" * 20)
    code, _, err = run(capsys, "map", "--weights", bad, "--subarray", "32")
    assert code == 2
    assert "magic" in err


def test_train_and_infer_roundtrip(capsys, tmp_path, data_dir):
    out_file = tmp_path / "trained.imacw"
    code, out, err = run(capsys, "train", "--data", data_dir,
                         "--out", out_file, "--epochs", 2, "--seed", 1)
    assert code == 0
    assert out_file.is_file()
    assert "digital test accuracy" in out
    accuracy = float(out.split()[-1])

    code, out, err = run(capsys, "infer", "--weights", out_file,
                         "--data", data_dir, "--subarray", "64x64",
                         "--tech", "MRAM", "--no-parasitics",
                         "--images", 400, "--seed", 3,
                         "--config", _quiet_config(tmp_path))
    assert code == 0
    header, row = out.strip().splitlines()
    cells = dict(zip(header.split(","), row.split(",")))
    # ideal mode with zero noise equals the digital oracle on this split
    assert float(cells["accuracy"]) == pytest.approx(accuracy, abs=0.05)
    assert "resolved:" in err


def _quiet_config(tmp_path):
    path = tmp_path / "quiet.json"
    path.write_text(json.dumps({"technology": {"sigma_noise": 0.0}}))
    return path


def test_train_missing_data_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--data", tmp_path / "nowhere",
                       "--out", tmp_path / "m.imacw")
    assert code == 2
    assert "dataset" in err


def test_infer_deterministic_bytes(capsys, model_file, data_dir):
    args = ("infer", "--weights", model_file, "--data", data_dir,
            "--subarray", "32x32", "--tech", "MRAM", "--bitcell", "1T1R",
            "--images", 48, "--seed", 5)
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_infer_jobs_invariant(capsys, model_file, data_dir):
    base = ("infer", "--weights", model_file, "--data", data_dir,
            "--subarray", "64x64", "--tech", "CBRAM", "--images", 130,
            "--seed", 7)
    _, out1, _ = run(capsys, *base, "--jobs", 1)
    _, out4, _ = run(capsys, *base, "--jobs", 4)
    assert out1 == out4


def test_config_fabric_section_applies(capsys, tmp_path):
    cfg = tmp_path / "fab.json"
    cfg.write_text(json.dumps({"fabric": {"subarray_rows": 16,
                                          "subarray_cols": 16}}))
    code, out, _ = run(capsys, "snr", "--tech", "MRAM", "--config", cfg)
    assert code == 0
    assert out.splitlines()[1].startswith("16x16,")
    # an explicit flag beats the config value
    code, out, _ = run(capsys, "snr", "--tech", "MRAM", "--config", cfg,
                       "--subarray", "8x8")
    assert out.splitlines()[1].startswith("8x8,")


def test_snr_closed_form(capsys, tmp_path):
    cfg = tmp_path / "sigma.json"
    cfg.write_text(json.dumps({"technology": {"sigma_noise": 0.5e-3}}))
    code, out, _ = run(capsys, "snr", "--subarray", "32x32", "--tech", "MRAM",
                       "--bitcell", "0T1R", "--no-parasitics",
                       "--config", cfg)
    assert code == 0
    header, row = out.strip().splitlines()
    cells = dict(zip(header.split(","), row.split(",")))
    assert float(cells["snr"]) == pytest.approx(113.78, rel=1e-4)
    assert float(cells["signal_v"]) == pytest.approx(56.889e-3, rel=1e-4)


def test_sweep_row_count_and_determinism(capsys):
    args = ("sweep", "--sizes", "8,16", "--techs", "MRAM,CBRAM",
            "--bitcells", "0T1R", "--seed", 0)
    code, out1, _ = run(capsys, *args)
    assert code == 0
    assert len(out1.strip().splitlines()) == 1 + 4
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_sweep_csv_goes_to_stdout_only(capsys):
    code, out, err = run(capsys, "sweep", "--sizes", "8", "--techs", "MRAM",
                         "--bitcells", "0T1R")
    assert code == 0
    assert out.splitlines()[0].startswith("size,tech,bitcell")
    assert "resolved" in err


def test_sweep_full_axes_24_rows(capsys):
    # the full size x technology x bitcell grid, ideal mode for speed
    code, out, _ = run(capsys, "sweep", "--sizes", "32,64,128,256",
                       "--techs", "MRAM,CBRAM,PCM", "--bitcells", "0T1R,1T1R",
                       "--no-parasitics")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1 + 24
    # the first point is the normalization baseline, so its value is 1.0
    first = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert first["size"] == "32x32" and first["tech"] == "MRAM"
    assert float(first["snr_norm"]) == pytest.approx(1.0)


def test_train_zero_epochs_prints_chance_accuracy(capsys, tmp_path, data_dir):
    out_file = tmp_path / "blank.imacw"
    code, out, _ = run(capsys, "train", "--data", data_dir, "--out", out_file,
                       "--epochs", 0, "--seed", 2)
    assert code == 0
    accuracy = float(out.split()[-1])
    assert 0.03 <= accuracy <= 0.25


def test_solver_failure_exit_3(capsys, model_file, data_dir, monkeypatch):
    from xbarsim.circuit import SolverDivergenceError

    def boom(self, layer, tile_index):
        raise SolverDivergenceError(f"tile (layer {layer}) failed", 1.0)

    monkeypatch.setattr("xbarsim.pipeline.DeployedNetwork.operator", boom)
    code, _, err = run(capsys, "infer", "--weights", model_file,
                       "--data", data_dir, "--subarray", "32x32",
                       "--tech", "MRAM", "--images", 4, "--seed", 0)
    assert code == 3
    assert "tile" in err
