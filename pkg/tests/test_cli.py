import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from aicodec.cli import main
from aicodec.decode import decode_noisy
from aicodec.encode import deserialize_codeword
from aicodec.experiments import CSV_COLUMNS, config_from_dict
from aicodec.linalg import Ensemble, EnsembleSpec, RngSpec

TINY = {
    "N": 60,
    "L": 10,
    "sweep": {"values": [20, 40]},
    "trials": 2,
    "signal": {"kind": "sparse", "k": 2},
}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(TINY))
    return path


def test_file_pipeline(tmp_path, config):
    out = tmp_path / "run"
    common = ["--config", str(config), "--out", str(out)]
    assert main(["gen", *common, "--m", "40"]) == 0
    sig = json.loads((out / "signal.json").read_text())
    assert len(sig["y"]) == 40 and np.abs(sig["y"]).max() <= 0.6
    assert main(["quantize", *common]) == 0
    qd = json.loads((out / "quantized.json").read_text())
    assert qd["stable"] and qd["r"] == 2
    assert main(["encode", *common]) == 0
    code = deserialize_codeword((out / "codeword.aicc").read_bytes())
    assert (code.L, code.m, code.r) == (10, 40, 2)
    assert main(["decode", *common]) == 0
    dec = json.loads((out / "decoded.json").read_text())
    assert dec["converged"] and len(dec["x_hat"]) == 60
    # the file round trip must agree with decoding the quantized samples directly
    cfg = config_from_dict(TINY)
    ens = Ensemble(EnsembleSpec(60, 40, 10, phi_seed=RngSpec(cfg.phi_seed), b_seed=RngSpec(cfg.b_seed)))
    direct = decode_noisy(ens.phi(40), ens.encoder(40, 10), np.asarray(qd["q"]), 2, qd["gamma"], 0.0)
    np.testing.assert_allclose(dec["x_hat"], direct.x_hat, atol=1e-9)


def test_exp1_writes_csv_and_manifest(tmp_path, config, capsys):
    out = tmp_path / "e1"
    assert main(["exp1", "--config", str(config), "--out", str(out), "--threads", "2"]) == 0
    with open(out / "exp1.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["experiment"] == "exp1" and man["sweep"] == [20, 40]
    assert "m,L,rate_bits" in capsys.readouterr().out


def test_exp3_writes_reference_csv(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**TINY, "noise": {"dist": "uniform", "epsilon": 0.05}, "aggregation": "max"}))
    out = tmp_path / "e3"
    assert main(["exp3", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "exp3.csv").exists() and (out / "exp3_noiseless.csv").exists()


def test_seed_flag_changes_output(tmp_path, config):
    main(["exp1", "--config", str(config), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["exp1", "--config", str(config), "--out", str(tmp_path / "b"), "--seed", "2"])
    main(["exp1", "--config", str(config), "--out", str(tmp_path / "c"), "--seed", "1"])
    a, b, c = ((tmp_path / d / "exp1.csv").read_bytes() for d in "abc")
    assert a == c and a != b


@pytest.mark.parametrize(
    "bad",
    [{"trials": 0}, {"unknown": 1}, {"sweep": {"values": [5]}, "L": 10}],
)
def test_config_errors_exit_2(tmp_path, bad):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(bad))
    assert main(["exp1", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_unreadable_inputs_exit_2(tmp_path):
    assert main(["exp1", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    (tmp_path / "codeword.aicc").write_bytes(b"garbage")
    assert main(["decode", "--out", str(tmp_path)]) == 2
    assert main(["gen", "--out", str(tmp_path), "--seed", str(2**64)]) == 2


def test_verify_sigma_reports(tmp_path, capsys):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"sigma": {"m": 40, "L": 5, "r": [1], "seeds": 3}}))
    assert main(["verify-sigma", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_sigma.json").read_text())
    assert len(rep["reports"]) == 1 and len(rep["reports"][0]["sigmas"]) == 3
    assert "successes=" in capsys.readouterr().out


def test_console_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "aicodec.cli", "--help"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    for name in ("gen", "quantize", "encode", "decode", "exp1", "exp2", "exp3", "verify-sigma"):
        assert name in proc.stdout
