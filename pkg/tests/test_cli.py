import json

import pandas as pd
import pytest

from modescope.cli import main, parse_grid
from modescope.export import SCORE_COLUMNS, SWEEP_COLUMNS
from modescope.selection import Method
from modescope.signal_gen import SignalSpec

SMALL = {"m": 2, "D": 12, "N": 60, "L": 8, "M": 6, "rho": 0.98, "delta_theta": 0.5, "snr_db": 20.0,
         "trials": 2, "master_seed": 1}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def _sweep(config_file, out, *extra):
    main(["sweep", "--config", str(config_file), "--param", "snr", "--grid", "0:20:3", "--out", str(out),
          "--workers", "1", *extra])


# ── parse_grid ──

@pytest.mark.parametrize("text, expected", [
    ("0:20:3", [0.0, 10.0, 20.0]),
    ("2,8,32", [2.0, 8.0, 32.0]),
    ("5", [5.0]),
    ("-10:-10:1", [-10.0]),
])
def test_parse_grid(text, expected):
    assert parse_grid(text) == expected


@pytest.mark.parametrize("text", ["a:b:3", "0:1", "0:1:0", "1,x"])
def test_parse_grid_rejects_malformed_text(text):
    with pytest.raises(ValueError, match="Malformed grid"):
        parse_grid(text)


# ── make-spec ──

def test_make_spec_writes_fixture(tmp_path, capsys):
    out = tmp_path / "spec.json"
    main(["make-spec", "--m", "2", "--D", "3", "--N", "12", "--dtheta", "0.4", "--kappa", "2", "--out", str(out)])
    spec = SignalSpec.load(out)
    assert (spec.m, spec.D, spec.N) == (2, 3, 12)
    assert set(json.loads(out.read_text())) >= {"m", "D", "N", "rho", "theta", "modes_re", "modes_im",
                                                 "amp_re", "amp_im"}
    assert "-- Spec --" in capsys.readouterr().out


def test_make_spec_rejects_bad_parameters(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["make-spec", "--m", "3", "--dtheta", "3.0", "--out", str(tmp_path / "spec.json")])
    assert exc.value.code == 2
    assert "delta_theta" in capsys.readouterr().err


# ── sweep ──

def test_sweep_writes_outputs(config_file, tmp_path, capsys, log_dir):
    out = tmp_path / "run"
    _sweep(config_file, out)
    frame = pd.read_csv(out / "sweep.csv")
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 3 * 8
    assert (frame["trials"] == 2).all()
    assert frame["hit_prob"].between(0.0, 1.0).all()
    assert list(pd.read_csv(out / "auc.csv").columns) == ["method", "auc"]
    assert (out / "sweep.svg").read_text().lstrip().startswith("<?xml")
    assert not (out / "scores.csv").exists()

    printed = capsys.readouterr().out
    assert "-- Hit Probability --" in printed and "-- Normalized AUC --" in printed

    logged = [json.loads(line) for p in log_dir.glob("*/runs/sweep.jsonl") for line in p.read_text().splitlines()]
    assert logged[-1]["parameter"] == "snr"
    assert logged[-1]["grid"] == [0.0, 10.0, 20.0]
    assert set(logged[-1]["auc"]) == set(logged[-1]["hit_prob"])


def test_sweep_outputs_are_byte_identical(config_file, tmp_path):
    _sweep(config_file, tmp_path / "a")
    _sweep(config_file, tmp_path / "b")
    for name in ("sweep.csv", "auc.csv", "sweep.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_sweep_scores_export(config_file, tmp_path):
    out = tmp_path / "run"
    _sweep(config_file, out, "--scores", "--no-plot", "--methods", "EsrEnergy,Bic")
    scores = pd.read_csv(out / "scores.csv")
    assert list(scores.columns) == SCORE_COLUMNS
    assert set(scores["method"]) == {"EsrEnergy"}
    assert len(scores) == 3 * 2 * SMALL["M"]
    assert set(scores["label"]) <= {"true", "spurious"}
    assert not (out / "sweep.svg").exists()


def test_single_point_sweep_skips_auc(config_file, tmp_path):
    out = tmp_path / "run"
    main(["sweep", "--config", str(config_file), "--param", "snr", "--grid", "10", "--out", str(out), "--no-plot"])
    assert (out / "sweep.csv").exists()
    assert not (out / "auc.csv").exists()


@pytest.mark.parametrize("param, grid, message", [
    ("bogus", "0:20:3", "Unknown sweep parameter"),
    ("snr", "a:b", "Malformed grid"),
    ("snr", "20,10", "strictly increasing"),
    ("M", "2,3", "M must exceed m"),
])
def test_sweep_invalid_input_exits_with_status_2(config_file, tmp_path, capsys, param, grid, message):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", str(config_file), "--param", param, "--grid", grid, "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert message in capsys.readouterr().err


def test_unknown_config_key_exits_with_status_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**SMALL, "snr": 3.0}))
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", str(path), "--param", "snr", "--grid", "0,10", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "snr" in capsys.readouterr().err


# ── auc ──

def test_auc_recomputes_sweep_auc(config_file, tmp_path, capsys):
    out = tmp_path / "run"
    _sweep(config_file, out, "--no-plot")
    main(["auc", "--in", str(out / "sweep.csv"), "--out", str(tmp_path / "auc.csv")])
    pd.testing.assert_frame_equal(pd.read_csv(tmp_path / "auc.csv"), pd.read_csv(out / "auc.csv"))
    assert "-- Normalized AUC --" in capsys.readouterr().out


def test_auc_missing_file_exits_with_status_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["auc", "--in", str(tmp_path / "missing.csv")])
    assert exc.value.code == 2


# ── verify ──

def test_verify_passes(config_file, capsys):
    main(["verify", "--config", str(config_file), "--seeds", "2"])
    printed = capsys.readouterr().out
    assert "All" in printed and "checks passed" in printed
    assert "companion_residual" in printed


def test_verify_negative_control_exits_with_status_1(config_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--config", str(config_file), "--seeds", "2", "--perturb", "1e-3"])
    assert exc.value.code == 1
    assert "FAIL" in capsys.readouterr().out


# ── decompose ──

def test_decompose_exports_one_instance(config_file, tmp_path, log_dir):
    out = tmp_path / "one"
    main(["decompose", "--config", str(config_file), "--trial", "3", "--out", str(out), "--save-spec"])

    data = json.loads((out / "decomposition.json").read_text())
    assert (data["L"], data["D"], data["M"]) == (8, 12, 6)
    assert len(data["eigenvalues_re"]) == 6
    assert len(data["exact_modes_re"]) == 12 * 8
    assert set(data["m_hat"]) == {m.value for m in Method}
    assert len(pd.read_csv(out / "eigenvalues.csv")) == 6
    assert list(pd.read_csv(out / "scores.csv").columns) == SCORE_COLUMNS
    assert SignalSpec.load(out / "spec.json").m == 2

    logged = [json.loads(line) for p in log_dir.glob("*/runs/decompose.jsonl") for line in p.read_text().splitlines()]
    assert logged[-1]["seed"] == 3


# ── cdf-spur ──

def test_cdf_spur_writes_long_table(config_file, tmp_path, capsys, log_dir):
    out = tmp_path / "cdf"
    main(["cdf-spur", "--config", str(config_file), "--methods", "EsrEnergy", "--L-grid", "2,8",
          "--out", str(out), "--workers", "1"])
    frame = pd.read_csv(out / "cdf.csv")
    assert list(frame.columns) == ["L", "magnitude", "cdf"]
    assert sorted(frame["L"].unique()) == [2, 8]
    assert len(frame) == 2 * 512
    assert (out / "cdf.svg").exists()
    assert "-- Spurious Eigenvalue CDF --" in capsys.readouterr().out
    assert list(log_dir.glob("*/runs/cdf.jsonl"))


def test_cdf_spur_with_every_method_starts_below_their_minimum_L(config_file, tmp_path):
    out = tmp_path / "cdf"
    main(["cdf-spur", "--config", str(config_file), "--L-grid", "2,8", "--out", str(out), "--workers", "1",
          "--no-plot"])
    assert sorted(pd.read_csv(out / "cdf.csv")["L"].unique()) == [2, 8]


def test_no_command_prints_help(capsys):
    main([])
    assert "usage" in capsys.readouterr().out.lower()
