import json

import pytest

from stoch_euler.cli import main


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    # smooth positive datum: the spectral positivity check is meaningful on it
    p.write_text("[sim]\nT = 0.01\nparticles = 36\n[spectral]\nresolution = 32\n"
                 "[init]\nkind = blob_grid\namplitude = 0.5\nepsilon = 0.3\n"
                 "[output]\nevery = 5\n")
    return p


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_config_names_file(capsys):
    assert main(["simulate", "--config", "missing.cfg"]) == 2
    assert "missing.cfg" in capsys.readouterr().err


def test_invalid_config_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[noise]\nbeta = 2.5\n")
    assert main(["ensemble", "--config", str(p)]) == 2
    assert "beta" in capsys.readouterr().err


def test_simulate_and_ensemble(tmp_path, small_cfg):
    assert main(["simulate", "--config", str(small_cfg), "--solver", "both", "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "member_0000" / "cross.csv").exists()
    assert main(["ensemble", "--config", str(small_cfg), "--members", "3", "--seed", "4",
                 "--solver", "spectral", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "summary_spectral.csv").exists()


def test_failing_check_exits_one(tmp_path):
    p = tmp_path / "hot.cfg"
    p.write_text("[sim]\ndt = 0.05\nT = 0.1\nparticles = 32\n[init]\nmass = 1e4\nmass_bound = 1e4\n"
                 "[spectral]\nenabled = false\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 1


def test_kernel_table_emit_and_load(tmp_path, capsys):
    path = tmp_path / "k.sekt"
    assert main(["kernel-table", "--resolution", "128", "--cutoff", "8", "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["kernel-table", "--load", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["resolution"] == 128 and info["max_interp_error_far_field"] < 1e-4
    assert main(["kernel-table", "--load", str(tmp_path / "nope.sekt")]) == 2


def test_init_preview(tmp_path, small_cfg, capsys):
    assert main(["init-preview", "--config", str(small_cfg), "--out", str(tmp_path / "p")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["atoms"] == 36 and info["mass"] == pytest.approx(1.0)
    assert (tmp_path / "p" / "init_particles.jsonl").exists()
    assert (tmp_path / "p" / "init_grid.bin").exists()


def test_verify_quick_passes(tmp_path, capsys):
    assert main(["verify", "--quick", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for name in ("properties.csv", "nonlinear.csv", "apriori.csv"):
        assert name in out and (tmp_path / name).exists()


def test_verify_nonlinear_report_columns(tmp_path):
    assert main(["verify", "nonlinear", "--quick", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "nonlinear.csv").read_text().splitlines()[0]
    assert header == "case,metric,value,tolerance,pass"
