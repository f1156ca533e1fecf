import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from rmtwave.rmt import (
    SpectralData,
    histogram_l1_distance,
    local_law_count,
    nu,
    nu_inverse,
    nu_prime,
    resolvent_sum,
    rigidity_residuals,
    sample_gue,
    sample_haar_unitary,
    semicircle_cdf,
    semicircle_density,
    spectral_decompose,
)


@pytest.fixture
def spec():
    return spectral_decompose(sample_gue(6, np.random.default_rng(3)))


def test_gue_is_hermitian_with_odd_size():
    h = sample_gue(5, np.random.default_rng(0))
    assert h.shape == (11, 11)
    np.testing.assert_allclose(h, h.conj().T, atol=0)
    assert np.all(np.diag(h).imag == 0)


def test_gue_entry_variance():
    rng = np.random.default_rng(1)
    d = 21
    off = []
    diag = []
    for _ in range(200):
        h = sample_gue(10, rng) * np.sqrt(d)
        off.append(h[np.triu_indices(d, 1)])
        diag.append(np.diag(h).real)
    off = np.concatenate(off)
    diag = np.concatenate(diag)
    assert abs(np.mean(np.abs(off) ** 2) - 1.0) < 0.02
    assert abs(np.var(diag) - 1.0) < 0.05


def test_gue_rejects_negative_size():
    with pytest.raises(ValueError):
        sample_gue(-1, np.random.default_rng(0))


def test_haar_unitary_is_unitary():
    u = sample_haar_unitary(7, np.random.default_rng(2))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(7), atol=1e-13)


def test_haar_unitary_first_entry_moments():
    rng = np.random.default_rng(4)
    d = 4
    x = np.array([abs(sample_haar_unitary(d, rng)[0, 0]) ** 2 for _ in range(20000)])
    assert abs(x.mean() - 1 / d) < 5 * x.std() / np.sqrt(x.size)


def test_spectral_decompose_reconstructs(spec):
    h = spec.matrix()
    np.testing.assert_allclose(spec.psi.conj().T @ spec.psi, np.eye(spec.dim), atol=1e-12)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)
    assert np.all(np.diff(spec.lam) >= 0)
    np.testing.assert_array_equal(spec.k, np.arange(-6, 7))


def test_spectral_decompose_phase_convention(spec):
    idx = np.argmax(np.abs(spec.psi), axis=0)
    pivots = spec.psi[idx, np.arange(spec.dim)]
    np.testing.assert_allclose(pivots.imag, 0, atol=1e-14)
    assert np.all(pivots.real > 0)


def test_spectral_decompose_rejects_even_size():
    with pytest.raises(ValueError):
        spectral_decompose(np.eye(4))


def test_spectral_data_validation():
    with pytest.raises(ValueError):
        SpectralData(1, np.array([0.0, 1.0]), np.eye(3))
    with pytest.raises(ValueError):
        SpectralData(1, np.array([1.0, 0.0, 2.0]), np.eye(3))


def test_spectral_data_is_read_only(spec):
    with pytest.raises(ValueError):
        spec.lam[0] = 1.0


@pytest.mark.parametrize("suffix", [".json", ".npz"])
def test_spectral_data_round_trip(spec, tmp_path, suffix):
    path = tmp_path / f"spec{suffix}"
    spec.save(path)
    back = SpectralData.load(path)
    np.testing.assert_array_equal(back.lam, spec.lam)
    np.testing.assert_array_equal(back.psi, spec.psi)


def test_spectral_json_layout(spec):
    data = spec.to_dict()
    assert data["dim"] == 13 and data["half_size"] == 6
    assert len(data["psi"]) == 2 * 13 * 13
    assert data["psi"][0] == spec.psi[0, 0].real and data["psi"][1] == spec.psi[0, 0].imag


def test_from_dict_rejects_bad_payload(spec):
    data = spec.to_dict()
    data["psi"] = data["psi"][:-2]
    with pytest.raises(ValueError):
        SpectralData.from_dict(data)


def test_semicircle_density_normalized():
    total, _ = integrate.quad(semicircle_density, -2, 2)
    assert abs(total - 1.0) < 1e-10
    assert semicircle_density(3.0) == 0.0


@given(st.floats(-2.5, 2.5))
def test_semicircle_cdf_matches_quadrature(x):
    ref, _ = integrate.quad(semicircle_density, -2, min(max(x, -2), 2))
    assert abs(semicircle_cdf(x) - ref) < 1e-9


def test_nu_endpoints():
    assert nu(0.0) == 0.0
    assert nu(1.0) == 2.0 and nu(-1.0) == -2.0


@settings(max_examples=50)
@given(st.floats(-0.999, 0.999))
def test_nu_solves_cdf_equation(kappa):
    ref = optimize.brentq(lambda x: semicircle_cdf(x) - 0.5 - kappa / 2, -2, 2, xtol=1e-14)
    assert abs(nu(kappa) - ref) < 1e-10


@settings(max_examples=50)
@given(st.floats(-1, 1))
def test_nu_inverse_round_trip(kappa):
    assert abs(nu_inverse(nu(kappa)) - kappa) < 1e-10


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=8))
def test_nu_is_odd_and_monotone(ks):
    ks = np.sort(np.array(ks))
    v = nu(ks)
    assert np.all(np.diff(v) >= 0)
    np.testing.assert_allclose(nu(-ks), -v, atol=1e-12)


def test_nu_prime_matches_finite_difference():
    k = np.linspace(-0.9, 0.9, 7)
    h = 1e-6
    fd = (nu(k + h) - nu(k - h)) / (2 * h)
    np.testing.assert_allclose(nu_prime(k), fd, rtol=1e-6)


def test_nu_domain_checks():
    with pytest.raises(ValueError):
        nu(1.5)
    with pytest.raises(ValueError):
        nu_inverse(2.5)


def test_rigidity_residuals_vanish_on_deterministic_spectrum():
    N = 5
    k = np.arange(-N, N + 1)
    s = SpectralData(N, nu(k / N), np.eye(2 * N + 1))
    np.testing.assert_allclose(rigidity_residuals(s), 0, atol=1e-12)


def test_local_law_count(spec):
    count, pred = local_law_count(spec, (-2.0, 2.0))
    assert pred == pytest.approx(spec.dim)
    assert count == np.count_nonzero(np.abs(spec.lam) <= 2)
    with pytest.raises(ValueError):
        local_law_count(spec, (1.0, 0.0))


def test_resolvent_sum(spec):
    val = resolvent_sum(spec, 0.3, 4.0)
    assert val == pytest.approx(np.sum(1 / (0.25 + np.abs(spec.lam - 0.3))))
    with pytest.raises(ValueError):
        resolvent_sum(spec, 0.0, 0.5)


def test_histogram_distance_limits():
    # stratified quantiles of the semicircle law
    u = (np.arange(4000) + 0.5) / 4000
    x = np.array([optimize.brentq(lambda y: semicircle_cdf(y) - p, -2, 2) for p in u])
    assert histogram_l1_distance(x) < 1e-2
    assert histogram_l1_distance(np.full(10, 3.0)) == pytest.approx(2.0)
    assert histogram_l1_distance(np.zeros(10)) == pytest.approx(2.0 - 2 * np.diff(semicircle_cdf([-0.1, 0.0]))[0], rel=1e-12)
