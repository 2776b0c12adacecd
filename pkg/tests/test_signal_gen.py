import math

import numpy as np
import pytest

from modescope.dmd_core import delay_embed
from modescope.harness import data_side_kv_error
from modescope.signal_gen import (
    TWO_PI,
    NoiseSpec,
    SignalSpec,
    add_noise,
    generate_clean,
    make_spec,
    measure_delta_theta,
)


def _single_mode(lam: complex, D: int = 3, N: int = 10) -> SignalSpec:
    phi = np.zeros(D, dtype=complex)
    phi[0] = 1.0
    return SignalSpec(m=1, rho=[abs(lam)], theta=[np.angle(lam) % TWO_PI], modes=phi[:, None],
                      amplitudes=[1.0], D=D, N=N)


# ── make_spec ──

def test_make_spec_single_mode():
    spec = make_spec(m=1, D=3, N=10, rho_common=1.0, delta_theta=0.7, kappa_b=1.0, seed=0)
    assert spec.m == 1
    np.testing.assert_array_equal(spec.amplitudes, [1.0])
    assert spec.theta.shape == (1,)
    assert 0.0 <= spec.theta[0] < TWO_PI


def test_make_spec_working_point():
    spec = make_spec(m=3, D=45, N=200, rho_common=0.98, delta_theta=0.01, kappa_b=1.0, seed=11)
    np.testing.assert_allclose(spec.rho, 0.98)
    np.testing.assert_allclose(np.linalg.norm(spec.modes, axis=0), 1.0, atol=1e-12)
    assert abs(measure_delta_theta(spec.theta) - 0.01) < 1e-12
    assert spec.modes.shape == (45, 3)


def test_make_spec_amplitude_ratio():
    spec = make_spec(m=2, D=4, N=20, rho_common=0.9, delta_theta=0.3, kappa_b=4.0, seed=3)
    np.testing.assert_allclose(np.abs(spec.amplitudes), [1.0, 4.0])
    assert spec.kappa_b == pytest.approx(4.0)


def test_make_spec_is_seeded():
    a = make_spec(3, 5, 30, 0.95, 0.2, 2.0, seed=5)
    b = make_spec(3, 5, 30, 0.95, 0.2, 2.0, seed=5)
    np.testing.assert_array_equal(a.modes, b.modes)
    np.testing.assert_array_equal(a.theta, b.theta)


@pytest.mark.parametrize("kwargs", [
    {"m": 0},
    {"D": 0},
    {"N": 1},
    {"rho_common": 0.0},
    {"rho_common": 1.5},
    {"delta_theta": 0.0},
    {"delta_theta": 3.0},
    {"kappa_b": 0.5},
])
def test_make_spec_rejects_bad_parameters(kwargs):
    params = {"m": 3, "D": 4, "N": 20, "rho_common": 0.9, "delta_theta": 0.1, "kappa_b": 1.0, "seed": 0}
    params.update(kwargs)
    with pytest.raises(ValueError):
        make_spec(**params)


def test_signal_spec_rejects_non_unit_modes():
    with pytest.raises(ValueError, match="unit norm"):
        SignalSpec(m=1, rho=[0.9], theta=[0.1], modes=[[2.0]], amplitudes=[1.0], D=1, N=5)


def test_signal_spec_fixture_file(tmp_path):
    spec = make_spec(2, 3, 12, 0.9, 0.4, 2.0, seed=9)
    path = tmp_path / "spec.json"
    spec.save(path)
    loaded = SignalSpec.load(path)
    np.testing.assert_array_equal(loaded.modes, spec.modes)
    np.testing.assert_array_equal(loaded.amplitudes, spec.amplitudes)
    assert (loaded.m, loaded.D, loaded.N) == (2, 3, 12)


# ── generate_clean ──

def test_generate_clean_identity_eigenvalue():
    clean = generate_clean(_single_mode(1.0))
    np.testing.assert_allclose(clean, np.tile([[1.0], [0.0], [0.0]], (1, 10)), atol=1e-15)


def test_generate_clean_geometric_decay():
    clean = generate_clean(_single_mode(0.5))
    np.testing.assert_allclose(clean[0], 0.5 ** np.arange(10))
    np.testing.assert_array_equal(clean[1:], 0.0)


def test_generate_clean_follows_linear_propagator():
    spec = make_spec(2, 5, 30, 0.95, 0.8, 3.0, seed=2)
    clean = generate_clean(spec)
    A = spec.modes @ np.diag(spec.eigenvalues) @ np.linalg.pinv(spec.modes)
    assert np.abs(A @ clean[:, :-1] - clean[:, 1:]).max() < 1e-10


def test_clean_embedding_has_rank_m():
    spec = make_spec(3, 6, 80, 0.97, 0.3, 2.0, seed=4)
    sigma = np.linalg.svd(delay_embed(generate_clean(spec), 8)[:, :-1], compute_uv=False)
    assert sigma[3] < 1e-10 * sigma[0]
    assert sigma[2] > 1e-6 * sigma[0]


@pytest.mark.parametrize("L", [1, 8, 64])
def test_data_side_kv_identity(L):
    spec = make_spec(1, 4, 200, 0.99, 0.1, 1.0, seed=L)
    assert data_side_kv_error(spec, L) < 1e-12


# ── add_noise ──

def test_add_noise_disabled_returns_input():
    clean = generate_clean(make_spec(2, 3, 20, 0.9, 0.5, 1.0, seed=1))
    noisy = add_noise(clean, NoiseSpec(snr_db=math.inf, seed=0))
    np.testing.assert_array_equal(noisy, clean)
    assert noisy is not clean


def test_add_noise_is_deterministic():
    clean = np.ones((4, 50), dtype=complex)
    a = add_noise(clean, NoiseSpec(snr_db=5.0, seed=42))
    b = add_noise(clean, NoiseSpec(snr_db=5.0, seed=42))
    np.testing.assert_array_equal(a, b)


def test_add_noise_hits_requested_snr():
    clean = np.ones((50, 400), dtype=complex)
    noisy = add_noise(clean, NoiseSpec(snr_db=10.0, seed=7))
    noise = noisy - clean
    realized = 10.0 * np.log10(np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2))
    assert abs(realized - 10.0) < 0.5


def test_add_noise_uses_reference_power():
    clean = np.full((50, 400), 10.0, dtype=complex)
    noisy = add_noise(clean, NoiseSpec(snr_db=10.0, seed=7, reference_power=1.0))
    variance = np.mean(np.abs(noisy - clean) ** 2)
    assert variance == pytest.approx(0.1, rel=0.05)


@pytest.mark.parametrize("reference", [0.0, -1.0])
def test_noise_spec_rejects_nonpositive_reference_power(reference):
    with pytest.raises(ValueError, match="reference_power"):
        NoiseSpec(snr_db=10.0, seed=0, reference_power=reference)


def test_add_noise_real_variant():
    clean = np.ones((3, 100), dtype=complex)
    noisy = add_noise(clean, NoiseSpec(snr_db=0.0, seed=3, real=True))
    np.testing.assert_array_equal((noisy - clean).imag, 0.0)


def test_add_noise_rejects_zero_signal():
    with pytest.raises(ValueError, match="all-zero"):
        add_noise(np.zeros((2, 5)), NoiseSpec(snr_db=10.0, seed=0))


def test_add_noise_rejects_empty_signal():
    with pytest.raises(ValueError, match="empty"):
        add_noise(np.zeros((0, 5)), NoiseSpec(snr_db=10.0, seed=0))


@pytest.mark.parametrize("snr", [math.nan, -math.inf])
def test_noise_spec_rejects_undefined_snr(snr):
    with pytest.raises(ValueError):
        NoiseSpec(snr_db=snr, seed=0)


def test_noise_spec_rejects_negative_seed():
    with pytest.raises(ValueError, match="64-bit"):
        NoiseSpec(snr_db=10.0, seed=-1)


# ── measure_delta_theta ──

@pytest.mark.parametrize("theta, expected", [
    ([0.0, math.pi], math.pi),
    ([0.0, 0.01, 3.0], 0.01),
    ([6.28, 0.01], TWO_PI - 6.28 + 0.01),
])
def test_measure_delta_theta(theta, expected):
    assert measure_delta_theta(theta) == pytest.approx(expected, abs=1e-12)


def test_measure_delta_theta_wraparound_value():
    assert measure_delta_theta([6.28, 0.01]) == pytest.approx(0.013185, abs=1e-6)


def test_measure_delta_theta_needs_two_phases():
    with pytest.raises(ValueError):
        measure_delta_theta([0.5])
