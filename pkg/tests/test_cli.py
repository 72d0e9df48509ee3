"""End-to-end tests of the command line interface.

Everything runs in-process through ``main(argv)`` for speed; one subprocess
test checks the installed console script.
"""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from censorbounds.cli import main


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    """One small simulated dataset shared by the read-only CLI tests."""
    out = tmp_path_factory.mktemp("sim")
    rc = main(["simulate", "--xi", "0.4", "--n", "100", "--seed", "3",
               "--out", str(out)])
    assert rc == 0
    return out


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_writes_dataset_and_truth(sim_dir):
    rows = _read_csv(sim_dir / "data.csv")
    assert len(rows) == 100
    assert set(rows[0]) == {"x1", "a", "t_obs", "censored"}
    latent = _read_csv(sim_dir / "latent.csv")
    assert len(latent) == 100
    assert "oracle_cate_lower" in latent[0]
    meta = json.loads((sim_dir / "meta.json").read_text())
    assert meta["family"] == "sin" and meta["n"] == 100
    assert meta["t_max"] == 159.38068327983208
    eff = json.loads((sim_dir / "effective_config.json").read_text())
    assert eff["subcommand"] == "simulate" and eff["xi"] == 0.4


def test_simulate_requires_xi(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == 2
    assert "--xi" in capsys.readouterr().err


def test_flag_beats_config_overlay(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"xi": 0.3, "n": 30}))
    out = tmp_path / "out"
    rc = main(["simulate", "--config", str(cfg), "--xi", "0.5",
               "--out", str(out)])
    assert rc == 0
    eff = json.loads((out / "effective_config.json").read_text())
    assert eff["xi"] == 0.5 and eff["n"] == 30


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert main(["simulate", "--xi", "0.2", "--config", str(cfg),
                 "--out", str(tmp_path)]) == 2
    assert "bogus_key" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    rc = main(["fit", "--data", str(sim_dir / "data.csv"), "--learner", "plugin",
               "--model", "knn", "--seed", "5", "--out", str(out)])
    assert rc == 0
    return out


def test_fit_writes_bounds_and_model(fit_dir):
    rows = _read_csv(fit_dir / "bounds.csv")
    assert len(rows) == 100
    lo = np.array([float(r["lower"]) for r in rows])
    up = np.array([float(r["upper"]) for r in rows])
    assert np.all(lo <= up)
    assert (fit_dir / "model.bin").exists()
    meta = json.loads((fit_dir / "fit_meta.json").read_text())
    assert meta["learner"] == "plugin" and meta["arms"] == [1, 0]
    assert meta["crossing_count"] >= 0


def test_fit_picks_tmax_from_sibling_meta(fit_dir):
    # no --tmax was passed; the horizon must come from the dataset's meta.json
    meta = json.loads((fit_dir / "fit_meta.json").read_text())
    assert meta["t_max"] == 159.38068327983208


def test_fit_missing_data_file(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path)]) == 3
    assert "error" in capsys.readouterr().err


def test_fit_domain_needs_gamma(sim_dir, tmp_path, capsys):
    rc = main(["fit", "--data", str(sim_dir / "data.csv"), "--case", "domain",
               "--model", "knn", "--out", str(tmp_path)])
    assert rc == 2
    assert "gamma" in capsys.readouterr().err


def test_fit_rejects_bad_propensity(sim_dir, tmp_path):
    rc = main(["fit", "--data", str(sim_dir / "data.csv"), "--model", "knn",
               "--propensity", "guess", "--out", str(tmp_path)])
    assert rc == 2


def test_fit_known_propensity_runs(sim_dir, tmp_path):
    rc = main(["fit", "--data", str(sim_dir / "data.csv"), "--learner", "plugin",
               "--model", "knn", "--propensity", "known:0.5",
               "--out", str(tmp_path)])
    assert rc == 0


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def test_replay_reproduces_fit_bitwise(fit_dir, tmp_path):
    rc = main(["replay", "--config", str(fit_dir / "effective_config.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "bounds.csv").read_bytes() == \
        (fit_dir / "bounds.csv").read_bytes()


def test_replay_rejects_foreign_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"hello": "world"}))
    assert main(["replay", "--config", str(cfg)]) == 2


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def test_evaluate_scores_a_saved_model(fit_dir, tmp_path):
    rc = main(["evaluate", "--model", str(fit_dir), "--xi", "0.4",
               "--family", "sin", "--grid", "50", "--out", str(tmp_path)])
    assert rc == 0
    rep = json.loads((tmp_path / "eval_report.json").read_text())
    assert rep["mode"] == "model" and rep["grid_size"] == 50
    assert rep["rmse_joint"] > 0
    assert rep["rmse_joint"] == pytest.approx(
        np.sqrt((rep["rmse_lower"] ** 2 + rep["rmse_upper"] ** 2) / 2.0))


def test_evaluate_model_mode_needs_single_xi(fit_dir, tmp_path):
    assert main(["evaluate", "--model", str(fit_dir), "--xi", "0.2,0.4",
                 "--out", str(tmp_path)]) == 2


def test_evaluate_benchmark_mode(tmp_path):
    rc = main(["evaluate", "--family", "sin", "--xi", "0.4", "--seeds", "1",
               "--n", "250", "--grid", "50", "--out", str(tmp_path)])
    assert rc == 0
    rep = json.loads((tmp_path / "eval_report.json").read_text())
    assert rep["mode"] == "benchmark"
    cell = rep["cells"]["sin"]["0.4"]
    assert set(cell) == {"domain", "conservative"}
    assert cell["conservative"]["survb"]["rmse_joint_mean"] > 0


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


def test_audit_writes_full_report(sim_dir, tmp_path):
    rc = main(["audit", "--data", str(sim_dir / "data.csv"), "--learner",
               "plugin", "--model", "knn", "--bootstrap", "50",
               "--grid", "40", "--out", str(tmp_path)])
    assert rc == 0
    for name in ("bounds.csv", "fractions.csv", "pairs.csv", "subgroups.json",
                 "bootstrap.csv", "curves.csv", "curves.svg",
                 "effective_config.json"):
        assert (tmp_path / name).exists(), name

    fractions = _read_csv(tmp_path / "fractions.csv")
    assert fractions[0]["covariate"] == "overall"
    assert 0.0 <= float(fractions[0]["percent_lb_positive"]) <= 100.0

    boot = _read_csv(tmp_path / "bootstrap.csv")
    assert [r["selection"] for r in boot] == ["all", "best_leaf"]
    assert float(boot[0]["bootstrap_sd"]) >= 0.0

    curves = _read_csv(tmp_path / "curves.csv")
    assert len(curves) == 40
    p_lo = [float(r["p_lower"]) for r in curves]
    assert all(a >= b for a, b in zip(p_lo, p_lo[1:]))

    svg = (tmp_path / "curves.svg").read_text(encoding="utf-8")
    assert svg.count("<polyline") == 3 and "lower bound" in svg

    tree = json.loads((tmp_path / "subgroups.json").read_text())
    assert tree["root"]["n"] == 100


# ---------------------------------------------------------------------------
# gmsm
# ---------------------------------------------------------------------------


def test_gmsm_table_and_gamma_one_identity(sim_dir, tmp_path):
    rc = main(["gmsm", "--data", str(sim_dir / "data.csv"), "--model", "knn",
               "--cells", "x1:3", "--gamma-confounding", "1,2",
               "--out", str(tmp_path)])
    assert rc == 0
    rows = _read_csv(tmp_path / "gmsm.csv")
    assert len(rows) == 6            # 3 cells x 2 arms
    for r in rows:
        assert r["lower_G1"] == r["plugin_lower"]
        assert r["upper_G1"] == r["plugin_upper"]
        assert float(r["lower_G2"]) <= float(r["lower_G1"])
        assert float(r["upper_G2"]) >= float(r["upper_G1"])


def test_gmsm_small_cells_become_blank_rows(sim_dir, tmp_path, capsys):
    rc = main(["gmsm", "--data", str(sim_dir / "data.csv"), "--model", "knn",
               "--cells", "x1:12", "--gamma-confounding", "2",
               "--out", str(tmp_path)])
    assert rc == 0
    assert "skipped" in capsys.readouterr().err
    rows = _read_csv(tmp_path / "gmsm.csv")
    blanks = [r for r in rows if r["lower_G2"] == ""]
    assert blanks and all(int(r["n"]) < 10 for r in blanks)


def test_gmsm_rejects_confounding_below_one(sim_dir, tmp_path):
    assert main(["gmsm", "--data", str(sim_dir / "data.csv"), "--model", "knn",
                 "--cells", "x1:2", "--gamma-confounding", "0.5",
                 "--out", str(tmp_path)]) == 2


def test_gmsm_rejects_unknown_covariate(sim_dir, tmp_path):
    assert main(["gmsm", "--data", str(sim_dir / "data.csv"), "--model", "knn",
                 "--cells", "zz:2", "--gamma-confounding", "2",
                 "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------------------
# console script
# ---------------------------------------------------------------------------


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "censorbounds.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("simulate", "fit", "evaluate", "audit", "gmsm", "replay"):
        assert sub in proc.stdout
