import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from rmtwave.dynamics import (
    PROFILES,
    EnsembleError,
    ModelConfig,
    cubic_nonlinearity,
    ensemble_expectation,
    evolve,
    initial_data,
    make_profile,
    moments_to_json,
    observables,
    run_ensemble,
    sample_seed,
    wick_nonlinearity,
    write_moments_csv,
)
from rmtwave.rmt import sample_gue, spectral_decompose


def spectrum(N, seed=0):
    return spectral_decompose(sample_gue(N, np.random.default_rng(seed)))


def physical_frame_oracle(cfg, spec, a0, t):
    """Integrate i u' = H u + mu^2 |u|^2 u - (2 mu^2 |u|^2 / d) u with DOP853."""
    N = cfg.N
    H = spec.matrix()
    mu2 = cfg.mu**2
    u0 = spec.psi @ a0 / np.sqrt(N)

    def rhs(_, y):
        u = y[: spec.dim] + 1j * y[spec.dim :]
        du = -1j * (H @ u + mu2 * np.abs(u) ** 2 * u - 2 * mu2 * np.vdot(u, u).real / spec.dim * u)
        return np.concatenate([du.real, du.imag])

    sol = solve_ivp(rhs, (0, t), np.concatenate([u0.real, u0.imag]), method="DOP853", rtol=1e-12, atol=1e-13)
    u = sol.y[: spec.dim, -1] + 1j * sol.y[spec.dim :, -1]
    return np.sqrt(N) * spec.psi.conj().T @ u


# --- configuration -------------------------------------------------------------


def test_model_config_defaults():
    cfg = ModelConfig(N=32)
    assert cfg.d == 65
    assert cfg.mu == pytest.approx(32**0.4, rel=1e-12)
    assert cfg.t_kin == pytest.approx(32**2 / cfg.mu**4)
    assert 1e-4 <= cfg.step <= 0.05


@pytest.mark.parametrize(
    "kwargs",
    [
        {"N": 0},
        {"N": 8, "beta": 0.6},
        {"N": 8, "beta": 0.25},
        {"N": 8, "dt": 0.2},
        {"N": 8, "dt": 0.0},
        {"N": 8, "t_end": -1},
        {"N": 8, "mu_scale": -1},
        {"N": 8, "profile": "square"},
    ],
)
def test_model_config_rejects(kwargs):
    with pytest.raises(ValueError):
        ModelConfig(**kwargs)


def test_linear_limit_has_infinite_kinetic_time():
    cfg = ModelConfig(N=4, mu_scale=0.0)
    assert cfg.mu == 0 and cfg.t_kin == float("inf")


def test_replace_keeps_other_fields():
    cfg = ModelConfig(N=4, profile="gaussian", profile_params={"width": 0.3})
    new = cfg.replace(N=8)
    assert new.N == 8 and new.profile_params == {"width": 0.3}


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_profiles_are_complex_arrays(name):
    x = np.linspace(-1, 1, 9)
    y = make_profile(name)(x)
    assert y.shape == x.shape and np.iscomplexobj(y)


def test_unknown_profile():
    with pytest.raises(ValueError):
        make_profile("nope")


def test_initial_data_samples_profile():
    cfg = ModelConfig(N=4, profile="bump")
    k = np.arange(-4, 5)
    np.testing.assert_allclose(initial_data(cfg), 1 - (k / 4) ** 2)


# --- vector field --------------------------------------------------------------


def test_wick_correction_term():
    spec = spectrum(3)
    a = np.random.default_rng(1).standard_normal(7) + 0j
    diff = cubic_nonlinearity(a, spec, 1.3) - wick_nonlinearity(a, spec, 1.3)
    np.testing.assert_allclose(diff, (1.3**2 / 3) * 2 * np.vdot(a, a).real / 7 * a, rtol=1e-12)


def test_nonlinearity_shape_checks():
    spec = spectrum(2)
    with pytest.raises(ValueError):
        wick_nonlinearity(np.ones(4), spec, 1.0)


# --- integration -----------------------------------------------------------------


def test_evolve_matches_physical_frame_oracle():
    cfg = ModelConfig(N=4, profile="phase-bump", dt=0.005)
    spec = spectrum(4, 2)
    a0 = initial_data(cfg)
    traj = evolve(cfg, spec, a0, [1.5])
    ref = physical_frame_oracle(cfg, spec, a0, 1.5)
    np.testing.assert_allclose(traj.states[0], ref, atol=1e-9)


def test_linear_evolution_is_exact():
    cfg = ModelConfig(N=5, mu_scale=0.0)
    spec = spectrum(5)
    a0 = initial_data(cfg)
    traj = evolve(cfg, spec, a0, [0.0, 2.0, 7.0])
    for t, a in zip(traj.times, traj.states):
        np.testing.assert_allclose(a, np.exp(-1j * t * spec.lam) * a0, atol=1e-14)


def test_wick_ordering_is_a_global_phase():
    cfg = ModelConfig(N=4, dt=0.005)
    spec = spectrum(4, 3)
    a0 = initial_data(cfg)
    t = 2.0
    wick = evolve(cfg, spec, a0, [t]).states[0]
    plain = evolve(cfg, spec, a0, [t], wick=False).states[0]
    c = cfg.mu**2 / cfg.N * 2 * np.vdot(a0, a0).real / cfg.d
    np.testing.assert_allclose(plain, np.exp(-1j * c * t) * wick, atol=1e-10)


def test_backward_evolution_returns_to_start():
    cfg = ModelConfig(N=4, dt=0.01)
    spec = spectrum(4, 4)
    a0 = initial_data(cfg)
    a1 = evolve(cfg, spec, a0, [1.0]).states[0]
    back = evolve(cfg, spec, a1, [-1.0]).states[0]
    np.testing.assert_allclose(back, a0, atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(PROFILES)))
def test_mass_and_energy_are_conserved(seed, profile):
    cfg = ModelConfig(N=6, profile=profile, t_end=3.0, dt=0.002)
    spec = spectrum(6, seed)
    traj = evolve(cfg, spec)
    m = traj.step_mass
    assert np.max(np.abs(m - m[0])) <= 1e-8 * m[0]
    h = traj.hamiltonian
    assert abs(h[-1] - h[0]) <= 1e-6 * abs(h[0])


def test_evolve_argument_checks():
    cfg = ModelConfig(N=3)
    spec = spectrum(3)
    with pytest.raises(ValueError):
        evolve(cfg, spectrum(4))
    with pytest.raises(ValueError):
        evolve(cfg, spec, sample_times=[1.0, 0.5])
    with pytest.raises(ValueError):
        evolve(cfg, spec, sample_times=[])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_evolve_reports_blow_up():
    cfg = ModelConfig(N=2, dt=0.1)
    spec = spectrum(2)
    with pytest.raises(FloatingPointError, match="t="):
        evolve(cfg, spec, a0=np.full(5, 1e120 + 0j), sample_times=[1.0])


def test_observables_frames():
    spec = spectrum(3)
    a = initial_data(ModelConfig(N=3))
    mass_a, mass_u, ham = observables(a, spec, 1.0)
    assert mass_u == pytest.approx(mass_a / 3)
    u = spec.psi @ a / np.sqrt(3)
    direct = np.vdot(u, spec.matrix() @ u).real + 0.5 * np.sum(np.abs(u) ** 4)
    assert ham == pytest.approx(direct, rel=1e-12)


# --- ensembles -------------------------------------------------------------------


def test_sample_seed_is_stable_and_distinct():
    assert sample_seed(0, 1) == sample_seed(0, 1)
    assert len({sample_seed(s, i) for s in range(3) for i in range(50)}) == 150
    assert 0 <= sample_seed(2**64 - 1, 7) < 2**64


def test_run_ensemble_is_independent_of_workers():
    def task(i, rng):
        return rng.standard_normal(3)

    one = run_ensemble(task, 20, 42, workers=1)
    four = run_ensemble(task, 20, 42, workers=4)
    np.testing.assert_array_equal(np.array(one), np.array(four))


def test_run_ensemble_aborts_on_failure():
    def task(i, rng):
        if i == 3:
            raise ValueError("boom")
        return i

    with pytest.raises(EnsembleError, match="sample 3"):
        run_ensemble(task, 5, 0)
    with pytest.raises(ValueError):
        run_ensemble(task, 0, 0)


def test_ensemble_expectation_and_outputs(tmp_path):
    cfg = ModelConfig(N=3, dt=0.01)
    moments = ensemble_expectation(cfg, 4, 7, [0.0, 0.5], workers=2)
    assert len(moments) == 2 and moments[0].N == 3
    np.testing.assert_allclose(moments[0].mean, np.abs(initial_data(cfg)) ** 2)
    np.testing.assert_allclose(moments[0].stderr, 0, atol=1e-15)
    path = tmp_path / "m.csv"
    write_moments_csv(path, moments)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,k,mean,stderr" and len(lines) == 1 + 2 * 7
    assert float(lines[-1].split(",")[2]) == moments[1].mean[-1]
    data = json.loads(moments_to_json(moments))
    assert data[1]["t"] == 0.5 and len(data[1]["mean"]) == 7
    with pytest.raises(ValueError):
        ensemble_expectation(cfg, 1, 0, [0.1])
