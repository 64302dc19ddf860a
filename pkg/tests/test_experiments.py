import json
import math

import numpy as np
import pytest

from oracles import ar1_stationary_variance
from specdegen import experiments
from specdegen.cli import EXIT_CONFIG, EXIT_OK, main, run_selftest
from specdegen.experiments import (
    ExperimentConfig,
    emit_curves,
    emit_paths,
    gen_gaussian_path,
    read_sequence_csv,
    run_gamma_table,
    run_recovery_demo,
    summarize,
    write_gamma_table,
    write_sequence_csv,
)
from specdegen.kernels import GapSpec, gap_mask
from specdegen.spectral import Sequence, make_grid

SMALL = dict(grid=2**12, gammas=(3.0, 10.0))


# -- Gaussian paths -------------------------------------------------------------


def test_path_is_deterministic():
    a = gen_gaussian_path(50, 7)
    b = gen_gaussian_path(50, 7)
    assert a.max_abs_diff(b) == 0.0
    assert (a.start, a.stop) == (-50, 50)
    assert not np.any(a.samples.imag)
    assert gen_gaussian_path(50, 8).max_abs_diff(a) > 0


def test_path_statistics_over_seeds():
    T = 250
    paths = np.array([gen_gaussian_path(T, s).samples.real for s in range(100)])
    assert abs(paths.mean()) <= 4 / math.sqrt(T)
    assert paths.var() == pytest.approx(ar1_stationary_variance(0.5), rel=0.2)


def test_white_path_and_rejections():
    w = gen_gaussian_path(300, 3, "white")
    assert w.samples.real.var() == pytest.approx(1.0, rel=0.2)
    with pytest.raises(ValueError):
        gen_gaussian_path(4, 1)
    with pytest.raises(ValueError):
        gen_gaussian_path(20, 1, "pink")


# -- gamma table ------------------------------------------------------------------


def test_gamma_table_rows_and_summary():
    cfg = ExperimentConfig(seeds=3, **SMALL)
    recs = run_gamma_table(cfg)
    assert len(recs) == 6
    assert all(math.isfinite(r.E) for r in recs)
    summ = summarize(recs)
    assert [s["gamma"] for s in summ] == [3.0, 10.0]
    assert all(s["count"] == 3 for s in summ)
    assert summ[0]["log10_sup_norm"] < summ[1]["log10_sup_norm"]


def test_gamma_table_zero_path_is_flagged(monkeypatch):
    monkeypatch.setattr(experiments, "gen_gaussian_path", lambda T, *a: Sequence.zeros(-T, T))
    recs = run_gamma_table(ExperimentConfig(**SMALL))
    assert all(r.flag == "zero-signal" and math.isnan(r.E) for r in recs)
    assert math.isnan(summarize(recs)[0]["median_abs_E"])


def test_gamma_table_csv_is_deterministic(tmp_path):
    cfg = ExperimentConfig(seeds=2, **SMALL)
    a = write_gamma_table(cfg, run_gamma_table(cfg), tmp_path / "a")
    b = write_gamma_table(cfg, run_gamma_table(cfg), tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
        assert pa.read_text().startswith(f"# config_hash={cfg.hash()}\n")
    timing = json.loads((tmp_path / "a" / "gamma_timing.json").read_text())
    assert timing["config_hash"] == cfg.hash()


def test_observation_windows_differ():
    base = ExperimentConfig(**SMALL)
    E = {w: run_gamma_table(ExperimentConfig(window=w, **SMALL))[0].E for w in ("grid", "T", "past")}
    assert len(set(E.values())) == 3
    assert base.hash() != ExperimentConfig(window="past", **SMALL).hash()


def test_config_hash_ignores_output_dir():
    assert ExperimentConfig(out="a").hash() == ExperimentConfig(out="b").hash()
    assert ExperimentConfig(seed=1).hash() != ExperimentConfig(seed=2).hash()


# -- CSV ------------------------------------------------------------------------


def test_sequence_csv_round_trip(tmp_path, rng):
    x = Sequence(-3, rng.standard_normal(7) + 1j * rng.standard_normal(7))
    p = write_sequence_csv(tmp_path / "x.csv", x, "abc")
    assert p.read_text().splitlines()[0] == "# config_hash=abc"
    assert read_sequence_csv(p).max_abs_diff(x) <= 1e-11 * x.norm(np.inf)


# -- curves and paths -----------------------------------------------------------


def _read_curve(path):
    return np.loadtxt(path, delimiter=",", comments="#", skiprows=2)


def test_emit_curves(tmp_path):
    cfg = ExperimentConfig(grid=2**12, gammas=(3.0,), out=str(tmp_path))
    summ = emit_curves(cfg)
    full = _read_curve(tmp_path / "curve_full_gamma3.csv")
    masked = _read_curve(tmp_path / "curve_masked_gamma3.csv")
    gap = gap_mask(GapSpec(cfg.delta, cfg.m_nu, cfg.beta), make_grid(cfg.grid))
    assert np.all(masked[gap, 1] == 0)
    assert np.array_equal(masked[~gap, 1], full[~gap, 1])
    assert summ["3"]["max_interior"] < 1e-3 * summ["3"]["max_full"]
    for name in ("curve_full.svg", "curve_interior.svg", "curve_masked.svg"):
        assert (tmp_path / name).read_text().startswith("<svg")


def test_emit_paths(tmp_path):
    cfg = ExperimentConfig(grid=2**12, out=str(tmp_path / "a"))
    rep = emit_paths(cfg)
    again = emit_paths(ExperimentConfig(grid=2**12, out=str(tmp_path / "b")))
    assert (tmp_path / "a" / "path_x.csv").read_bytes() == (tmp_path / "b" / "path_x.csv").read_bytes()
    assert rep["norm_x"] == again["norm_x"]
    assert rep["norm_x"] <= rep["norm_g"]
    # outside the gaps rho^2 <= exp(2c / delta^q)
    bound = 2 * math.pi * math.exp(2 * 0.05 / cfg.delta**2) * rep["norm_g"] ** 2
    assert rep["membership_value"] <= bound


def test_recovery_demo_ladder(tmp_path):
    cfg = ExperimentConfig(grid=2**14, gammas=(3.0,), out=str(tmp_path))
    rep = run_recovery_demo(cfg)
    d = [r["relative_distance"] for r in rep["density_ladder"]]
    assert d[0] > d[1] > d[2]
    assert rep["recovery"][0]["status"] in {"ok", "span"}
    assert json.loads((tmp_path / "recovery.json").read_text())["config_hash"] == cfg.hash()


# -- CLI ------------------------------------------------------------------------


def test_selftest_passes(capsys):
    assert all(ok for _, ok, _ in run_selftest())
    assert main(["selftest"]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["gamma-table", "--T", "4"],
        ["gamma-table", "--gamma", "0.5"],
        ["gamma-table", "--delta", "2.5"],
        ["curves", "--grid", "1000"],
        ["paths", "--n", "0"],
        ["gamma-table", "--seeds", "0"],
    ],
)
def test_cli_config_errors(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_gamma_table_twice_is_byte_identical(tmp_path, capsys):
    args = ["gamma-table", "--seed", "1", "--seeds", "2", "--grid", "4096", "--gamma", "3,10"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("gamma_table.csv", "gamma_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "median" in capsys.readouterr().out


def test_cli_curves_and_paths(tmp_path):
    assert main(["curves", "--grid", "4096", "--gamma", "3", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["paths", "--grid", "4096", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "path_g.csv").exists() and (tmp_path / "curve_masked_gamma3.csv").exists()


def test_cli_rejects_unknown_verb():
    with pytest.raises(SystemExit):
        main(["forecast"])
