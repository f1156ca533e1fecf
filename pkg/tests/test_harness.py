import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtwave.dynamics import ModelConfig
from rmtwave.harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    StatisticalPowerError,
    WindowError,
    delta_limit_check,
    ik_consistency,
    lot_expansion,
    load_config,
    parse_config,
    phi_kernel,
    theorem_experiment,
    theorem_window,
)
from rmtwave.harness.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_OUTPUT, main
from rmtwave.kwe import kinetic_time


# --- configuration -------------------------------------------------------------------


def test_defaults_round_trip():
    cfg = parse_config("")
    assert cfg == ExperimentConfig(source="")
    assert cfg.kind == "lot" and cfg.time_unit == "kinetic" and cfg.times == (1.0,)
    assert cfg.ensemble.replicas == 8 and cfg.kwe.floor == 0.1


def test_parse_all_sections():
    text = """
[experiment]
kind = theorem
times = 0.5, 1.5
time_unit = absolute
sweep = 8, 16
[model]
N = 12
beta = 0.3
profile = gaussian
profile.width = 0.25
[integrator]
dt = 0.01
nodes = 8
[ensemble]
size = 100
seed = 7
threads = 3
replicas = 2
[kwe]
grid = 33
interpolation = linear
conservative = no
floor = 0.0
[output]
dir = elsewhere
prefix = run1
"""
    cfg = parse_config(text)
    assert cfg.kind == "theorem" and cfg.times == (0.5, 1.5) and cfg.sweep == (8, 16)
    assert cfg.time_unit == "absolute"
    assert cfg.model.N == 12 and cfg.model.beta == 0.3 and cfg.model.profile_params == {"width": 0.25}
    assert cfg.model.dt == 0.01 and cfg.integrator.nodes == 8
    assert (cfg.ensemble.size, cfg.ensemble.seed, cfg.ensemble.threads, cfg.ensemble.replicas) == (100, 7, 3, 2)
    assert cfg.kwe.grid == 33 and cfg.kwe.collision.interpolation == "linear"
    assert not cfg.kwe.collision.conservative and cfg.kwe.floor == 0.0
    assert str(cfg.out_dir) == "elsewhere" and cfg.name == "run1"


@pytest.mark.parametrize(
    "text,field",
    [
        ("[model]\nbeta = 0.6", "model.beta"),
        ("[model]\nbeta = 0.25", "model.beta"),
        ("[model]\nN = x", "model.N"),
        ("[model]\nprofile = square", "model.profile"),
        ("[integrator]\ndt = 0.5", "integrator.dt"),
        ("[ensemble]\nseed = -1", "ensemble.seed"),
        ("[ensemble]\nsize = 1", "ensemble.size"),
        ("[kwe]\ninterpolation = spline", "kwe.interpolation"),
        ("[kwe]\norder = 8", "kwe.order"),
        ("[kwe]\nfloor = -0.1", "kwe.floor"),
        ("[kwe]\nconservative = maybe", "kwe.conservative"),
        ("[experiment]\nkind = nope", "experiment.kind"),
        ("[experiment]\ntime_unit = hours", "experiment.time_unit"),
        ("[experiment]\ntimes = -1", "experiment.times"),
        ("[bogus]\nx = 1", "[bogus]"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.").replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_beta_message_states_the_range():
    with pytest.raises(ConfigError, match=r"model\.beta=0\.6 outside the valid range \(1/4, 1/2\)"):
        parse_config("[model]\nbeta = 0.6")


def test_overrides_and_missing_file(tmp_path):
    cfg = parse_config("").with_overrides(seed=5, threads=2, out_dir=tmp_path)
    assert cfg.ensemble.seed == 5 and cfg.ensemble.threads == 2 and cfg.out_dir == tmp_path
    with pytest.raises(ConfigError):
        cfg.with_overrides(threads=0)
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=2**64)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.ini")


# --- reports ---------------------------------------------------------------------------


def test_report_json_and_summary():
    rep = ExperimentReport("demo", {"N": np.int64(4), "x": np.array([1.0, 2.0])})
    rep.add("a", np.float64(0.5), "<= 1", True)
    rep.add("b", 2.0)
    assert rep.all_passed
    data = json.loads(rep.to_json())
    assert data["inputs"] == {"N": 4, "x": [1.0, 2.0]}
    assert [m["name"] for m in data["metrics"]] == ["a", "b"]
    assert rep.summary() == {"kind": "demo", "passed": True, "checks": {"a": True}}
    rep.add("c", 3.0, "<= 1", False)
    assert not rep.all_passed
    assert rep.metric("c").value == 3.0
    with pytest.raises(KeyError):
        rep.metric("missing")


# --- resonance kernel and delta limit ---------------------------------------------------


@settings(max_examples=50)
@given(st.floats(-1e-3, 1e-3))
def test_phi_kernel_is_smooth_at_origin(x):
    ref = 0.25 - x * x / 48 + x**4 / 1440 - x**6 / 161280
    assert phi_kernel(x) == pytest.approx(ref, rel=1e-12, abs=1e-16)


def test_phi_kernel_values():
    x = np.array([0.0, 1.0, np.pi, 2 * np.pi])
    np.testing.assert_allclose(phi_kernel(x), [0.25, np.sin(0.5) ** 2, 1 / np.pi**2, 0.0], atol=1e-16)


def test_delta_limit_rate():
    rep = delta_limit_check(lambda x: np.exp(-x * x))
    assert rep.line_integral == pytest.approx(np.pi / 2, rel=1e-10)
    assert rep.slope <= -1.4
    assert np.all(rep.errors <= rep.fitted_constant * rep.times**-1.5 * (1 + 1e-12))
    with pytest.raises(ValueError):
        delta_limit_check(np.cos, times=[0.5])


# --- I_k three ways -----------------------------------------------------------------------


def test_ik_forms_agree_and_approach_each_other():
    gaps = []
    for N in (6, 12):
        c = ik_consistency(ModelConfig(N=N), 4.0, n_spectra=4)
        gaps.append((c.gap_eigen_deterministic, c.gap_deterministic_continuum))
    assert gaps[1][0] < gaps[0][0] and gaps[1][1] < gaps[0][1]
    with pytest.raises(ValueError):
        ik_consistency(ModelConfig(N=65), 1.0)


# --- leading-order expansion ----------------------------------------------------------------


def test_lot_requires_statistical_power():
    with pytest.raises(StatisticalPowerError):
        lot_expansion(ModelConfig(N=4), [0.5], 63, 0)


def test_lot_is_independent_of_threads():
    cfg = ModelConfig(N=3)
    one = lot_expansion(cfg, [0.0, 0.5], 64, 11, threads=1, replicas=2)
    two = lot_expansion(cfg, [0.0, 0.5], 64, 11, threads=3, replicas=2)
    np.testing.assert_array_equal(one.parts, two.parts)
    np.testing.assert_array_equal(one.expansion_stderr, two.expansion_stderr)
    # at t = 0 every correction vanishes
    assert not np.any(one.parts[0]) and one.scaled_distance()[0] == 0
    np.testing.assert_allclose(one.expansion[0], one.intensity)
    assert one.t_kin == pytest.approx(kinetic_time(3, cfg.mu))


def test_lot_cross_term_has_zero_mean():
    res = lot_expansion(ModelConfig(N=4), [0.5], 64, 3, replicas=2)
    assert res.cancellation_z()[0] <= 4.0


# --- full-dynamics experiment ----------------------------------------------------------------


def test_theorem_window():
    lo, hi = theorem_window(32, 0.4, 0.05)
    assert lo == pytest.approx(32**0.05)
    assert hi == pytest.approx(32**-0.05 * kinetic_time(32, 32**0.4) ** (2 / 3))


def test_theorem_experiment_rejects_time_outside_window():
    cfg = parse_config("[experiment]\nkind = theorem\nsweep = 8\n[ensemble]\nsize = 2")
    with pytest.raises(WindowError, match="N=8"):
        theorem_experiment(cfg)


def test_theorem_experiment_small_run():
    cfg = parse_config("[experiment]\nkind = theorem\nsweep = 32, 48\n[ensemble]\nsize = 4\nreplicas = 1")
    rep, points = theorem_experiment(cfg)
    assert [p.N for p in points] == [32, 48]
    assert rep.metric("wick_frame_gap_N32").passed
    assert np.isfinite(rep.metric("normalized_residual_N48").value)


# --- command line ------------------------------------------------------------------------------


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_cli_exit_ok_and_files(tmp_path, capsys):
    out = tmp_path / "w"
    assert main(["weingarten-validate", "--out", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["weingarten-validate_report.json", "weingarten-validate_summary.json", "weingarten-validate_tables.json"]
    summary = json.loads((out / "weingarten-validate_summary.json").read_text())
    assert summary["passed"] is True
    report = json.loads((out / "weingarten-validate_report.json").read_text())
    assert report["provenance"].startswith("rmtwave ")
    assert "PASS" in capsys.readouterr().out


def test_cli_exit_failed(tmp_path):
    cfg = write(tmp_path, "k.ini", "[experiment]\nkind = kwe\n[kwe]\ngrid = 33\nconservative = false\nt_end = 0.2\n")
    out = tmp_path / "k"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_FAILED
    assert json.loads((out / "kwe_summary.json").read_text())["checks"]["mass_drift"] is False
    assert (out / "kwe_density.csv").read_text().startswith("t,k,rho\n")


def test_cli_exit_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.ini", "[model]\nbeta = 0.6\n")
    assert main(["lot", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "model.beta" in capsys.readouterr().err
    small = write(tmp_path, "small.ini", "[experiment]\nsweep = 4\n[ensemble]\nsize = 10\n")
    assert main(["lot", "--config", str(small), "--out", str(tmp_path / "s")]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["lot", "--seed", "-3"])


def test_cli_exit_output(tmp_path):
    blocker = write(tmp_path, "file", "")
    assert main(["kwe", "--out", str(blocker / "sub")]) == EXIT_OUTPUT


def test_cli_lot_csv_is_identical_across_threads(tmp_path):
    cfg = write(
        tmp_path,
        "lot.ini",
        "[experiment]\nsweep = 3, 4\ntimes = 0.0, 0.5\ntime_unit = absolute\n[ensemble]\nsize = 64\nreplicas = 1\n",
    )
    outs = []
    for threads in (1, 2):
        out = tmp_path / f"t{threads}"
        assert main(["run", str(cfg), "--threads", str(threads), "--seed", "9", "--out", str(out)]) in (EXIT_OK, EXIT_FAILED)
        outs.append(out)
    for name in ("lot_N3.csv", "lot_N4.csv"):
        a = (outs[0] / name).read_bytes()
        assert a == (outs[1] / name).read_bytes()
        assert a.startswith(b"t,k,expansion,stderr,prediction,mu2_mean,mu2_stderr\n")


def test_cli_rigidity_artifacts(tmp_path):
    cfg = write(tmp_path, "r.ini", "[experiment]\nkind = rigidity\nsweep = 8, 16\n[ensemble]\nsize = 4\n")
    out = tmp_path / "r"
    assert main(["run", str(cfg), "--out", str(out)]) in (EXIT_OK, EXIT_FAILED)
    lines = (out / "rigidity_rigidity.csv").read_text().splitlines()
    assert lines[0] == "N,l1,p50,p90,p99,bulk_count,bulk_predicted" and len(lines) == 3
