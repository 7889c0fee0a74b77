import json

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from gaplab import harness
from gaplab.acceptance import theorem1_report

SMALL = {
    "name": "small",
    "m": 1,
    "alpha": 0.0,
    "K": 40,
    "n_max": 12,
    "window": [4, 12],
    "quad_nodes": 32,
    "potential": {"profile": "random-decay"},
    "checks": {"bounds": False, "decay": False, "localization": False},
}


def test_defaults_materialized():
    cfg = harness.ExperimentConfig.from_dict({"m": 2, "alpha": 0.25, "potential": {"profile": "zero"}})
    assert cfg.n_max == 32 and cfg.K == 136 and cfg.window == (8, 32)
    assert cfg.tolerances == harness.DEFAULT_TOLERANCES and cfg.C == 4.0


def test_yaml_round_trip_lossless():
    cfg = harness.ExperimentConfig.from_dict(SMALL)
    again = harness.ExperimentConfig.from_yaml(cfg.to_yaml())
    assert again == cfg and again.to_yaml() == cfg.to_yaml()


@given(st.integers(1, 3), st.sampled_from([0.0, 0.25, 0.5]), st.integers(0, 1000), st.integers(2, 20),
       st.floats(2.01, 10), st.booleans())
@settings(max_examples=25, deadline=None)
def test_round_trip_property(m, alpha, seed, n_max, C, op):
    raw = {"m": m, "alpha": alpha, "seed": seed, "n_max": n_max, "C": C,
           "potential": {"profile": "random-decay", "one_periodic": op}}
    cfg = harness.ExperimentConfig.from_dict(raw)
    assert harness.ExperimentConfig.from_yaml(cfg.to_yaml()) == cfg


@pytest.mark.parametrize("patch, match", [
    ({"C": 2.0}, "C"),
    ({"m": 0}, "m"),
    ({"alpha": 1.0}, "alpha"),
    ({"quad_nodes": 15}, "quad_nodes"),
    ({"window": [3, 50]}, "window"),
    ({"K": 5}, "K="),
    ({"bogus": 1}, "bogus"),
    ({"potential": {"profile": "explicit", "coeffs": [[1, 1.0, 0.0]], "one_periodic": True}}, "potential"),
    ({"convergence": {"K_list": [60, 40]}}, "ascending"),
])
def test_invalid_configs_rejected(patch, match):
    raw = {**SMALL, **patch}
    with pytest.raises(harness.ConfigError, match=match):
        harness.ExperimentConfig.from_dict(raw)


def test_R_is_weighted_norm():
    cfg = harness.ExperimentConfig.from_dict({**SMALL, "potential": {
        "profile": "explicit", "coeffs": [[2, 3.0, 0.0], [-1, 0.0, 4.0]]}})
    assert cfg.R == pytest.approx(5.0)


def test_bundled_configs_load():
    names = harness.bundled_config_names()
    assert {"theorem1-alpha0", "zero", "trig-m1", "mathieu", "even-power"} <= set(names)
    for n in names:
        harness.load_bundled(n)
    with pytest.raises(harness.ConfigError):
        harness.load_bundled("nope")


def test_zero_config_exact(tmp_path):
    rep = harness.run_experiment(harness.load_bundled("zero"), out_dir=tmp_path)
    assert rep.fatal_ok
    for s in rep.residuals.values():
        assert not np.any(s.values)
    for r in rep.pairs["eig"]:
        assert r.gamma == 0 and r.tau_shift == 0
    # empty fits give header-plus-data CSV with blank fit columns and a null sidecar
    assert (tmp_path / "plot_tau.fit.json").read_text() == "null\n"


def test_outputs_and_determinism(tmp_path):
    cfg = harness.ExperimentConfig.from_dict(SMALL)
    harness.run_experiment(cfg, out_dir=tmp_path / "a")
    harness.run_experiment(cfg, out_dir=tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    for required in ("pairs_eig.csv", "pairs_projector.csv", "residuals_tau.csv", "residuals_tau.csv.fit.json",
                     "bounds_ledger.json", "report.json", "plot_tau.csv"):
        assert required in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["config"] == cfg.to_dict()
    assert all({"id", "passed", "values", "fatal"} <= set(c) for c in report["checks"])


def test_plot_csv_shape(tmp_path):
    cfg = harness.ExperimentConfig.from_dict(SMALL)
    rep = harness.run_experiment(cfg, write=False)
    files = harness.emit_plots_data(rep, tmp_path)
    lines = (tmp_path / "plot_tau.csv").read_text().splitlines()
    lo, hi = cfg.window
    assert len(lines) == hi - lo + 2 and lines[0] == "n,log_n,value,log_value,fit_log_value"
    assert tmp_path / "plot_tau.fit.json" in files


def test_empty_series_header_only(tmp_path):
    cfg = harness.ExperimentConfig.from_dict(SMALL)
    rep = harness.run_experiment(cfg, write=False)
    rep.residuals.clear()
    harness.emit_plots_data(rep, tmp_path)
    assert (tmp_path / "plot_tau.csv").read_text() == "n,log_n,value,log_value,fit_log_value\n"


def test_seed_changes_output():
    a = harness.ExperimentConfig.from_dict(SMALL)
    b = a.replace(seed=1)
    assert a.build_potential() != b.build_potential()


def test_module_errors_carry_context(monkeypatch):
    from gaplab import spectrum

    def boom(*a, **k):
        raise spectrum.EigensolverError("backward error too large at index 7")

    monkeypatch.setattr(spectrum, "eigs_truncated", boom)
    with pytest.raises(harness.ExperimentError, match=r"spectrum\.eigs_truncated.*index 7"):
        harness.run_experiment(harness.ExperimentConfig.from_dict(SMALL), write=False)


def test_flagged_projector_rows_are_recorded():
    # large low modes push n_star up: the projector path starts there and the gap is recorded, not fatal
    cfg = harness.ExperimentConfig.from_dict({**SMALL, "potential": {
        "profile": "explicit", "coeffs": [[1, 40.0, 0.0], [-1, 35.0, 0.0], [2, 30.0, 0.0]]}})
    rep = harness.run_experiment(cfg, write=False)
    n_star = rep.thresholds.n_star
    assert n_star > 1
    assert all(r.n >= n_star for r in rep.pairs["projector"])
    if n_star > cfg.window[0]:
        c = rep.check("residual:window")
        assert not c.passed and not c.fatal


def test_convergence_study_zero():
    cfg = harness.load_bundled("zero")
    rows = harness.convergence_study(cfg, [20, 30, 40])
    assert all(r["eig_delta"] == 0 and r["tau_shift_delta"] == 0 and r["gamma_delta"] == 0 for r in rows)
    assert rows[1]["non_increasing"]
    text = harness.convergence_csv(rows)
    assert text.count("\n") == 3
    with pytest.raises(ValueError):
        harness.convergence_study(cfg, [40])


def test_convergence_study_trig_decreases():
    cfg = harness.load_bundled("trig-m1").replace(n_max=12, window=[4, 12])
    rows = harness.convergence_study(cfg, [32, 48, 64])
    assert rows[-1]["tau_shift_delta"] <= 1e-8 and rows[-1]["gamma_delta"] <= 1e-8


def test_theorem1_config_tau_slope_recorded():
    rep = theorem1_report(0.3)
    c = rep.check("residual:tau")
    assert c.passed and c.values["slope"] <= -1 + 0.3
    assert rep.fatal_ok
