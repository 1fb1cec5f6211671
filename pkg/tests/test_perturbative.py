import math
import warnings

import numpy as np
import pytest
from scipy.special import ellipe

from qkrfid import (
    ParameterError,
    alpha_coefficients,
    derive_params,
    elliptic_E,
    momentum_eigenstate,
    perturbative_energy,
    perturbative_fidelity,
    perturbative_spectrum,
    state_from_amplitudes,
    wkb_energy,
)

K1 = 0.6 * math.pi
K2 = 0.8 * math.pi

# Taylor coefficients of E_ell(kappa) in kappa**2 (Legendre series)
SERIES = (1.0, -1.0 / 4.0, -3.0 / 64.0, -5.0 / 256.0, -175.0 / 16384.0)


def _series_value(m):
    return 0.5 * math.pi * sum(c * m**j for j, c in enumerate(SERIES))


def test_elliptic_at_zero_modulus():
    assert elliptic_E(0.0) == pytest.approx(math.pi / 2.0, abs=1e-14)


@pytest.mark.parametrize("m", [0.05, -0.05, 0.1, -0.2])
def test_elliptic_matches_taylor_series(m):
    # truncation error of the 5-term series is O(kappa**10)
    bound = 0.5 * math.pi * 0.05 * abs(m) ** 5
    assert abs(elliptic_E(m) - _series_value(m)) < bound + 1e-13


def test_elliptic_negative_modulus_squared():
    m = -0.5
    assert abs(elliptic_E(m) - _series_value(m)) < 0.5 * math.pi * 0.05 * abs(m) ** 5 * 3


@pytest.mark.parametrize("m", [-5.0, -1.0, -0.3, 0.0, 0.4, 0.9])
def test_elliptic_against_scipy(m):
    assert elliptic_E(m) == pytest.approx(ellipe(m), abs=1e-12)


def test_elliptic_rejects_modulus_of_one_or_more():
    with pytest.raises(ParameterError):
        elliptic_E(1.0)


def test_alpha_free_rotor_limit():
    p = derive_params(1e-14, 0.05, 0.3)
    a2, a3, a4 = alpha_coefficients(2, p)
    assert a2 == pytest.approx(0.5 * 2.3**2, rel=1e-12)
    assert abs(a3) < 1e-20 and abs(a4) < 1e-20
    e = perturbative_energy(2, p, 2)
    assert e == pytest.approx(0.5 * (p.xi + 2 * 0.05) ** 2, rel=1e-10)


def test_alpha_band_centre():
    # at m + beta = 0 the odd coefficient vanishes
    p = derive_params(K1, 0.05, 0.3)
    a2, a3, a4 = alpha_coefficients(-p.beta, p)
    assert a3 == 0.0
    assert a4 == pytest.approx((5.0 / 64.0) * p.k**4 / p.xi0**6, rel=1e-12)


def test_alpha3_sign_opposes_band_offset():
    rng = np.random.default_rng(11)
    for _ in range(50):
        beta = rng.uniform(0.05, 0.95)
        if abs(beta - 0.5) < 0.02:
            continue
        p = derive_params(rng.uniform(0.5, 3.0), rng.choice([-1, 1]) * rng.uniform(0.01, 0.1), beta)
        m = int(rng.integers(-3, 4))
        _, a3, _ = alpha_coefficients(m, p)
        if m + beta != 0.0:
            assert np.sign(a3) == -np.sign((m + beta) * np.sign(p.xi0))


def test_energy_orders_telescope():
    p = derive_params(K1, 0.05, 0.3)
    _, _, a4 = alpha_coefficients(1, p)
    diff = perturbative_energy(1, p, 4) - perturbative_energy(1, p, 3)
    assert diff == pytest.approx(a4 * 0.05**4, rel=1e-12)


def test_energy_difference_structure_at_random_points():
    # E_m(k2) - E_m(k1) has the closed form implied by the coefficients
    rng = np.random.default_rng(23)
    for _ in range(100):
        beta = rng.uniform(0.05, 0.95)
        if abs(2.0 * beta - 1.0) < 0.05:
            continue
        eps = rng.choice([-1, 1]) * rng.uniform(0.005, 0.1)
        k1 = rng.uniform(0.5, 3.0)
        k2 = rng.uniform(0.5, 3.0)
        m = int(rng.integers(-3, 4))
        p1 = derive_params(k1, eps, beta)
        p2 = derive_params(k2, eps, beta)
        got = perturbative_energy(m, p2, 4) - perturbative_energy(m, p1, 4)
        xi0 = p1.xi0
        ae = abs(eps)
        dk2 = k2**2 - k1**2
        expected = (
            dk2 * ae**2 / (4.0 * xi0**2)
            - (m + beta) * dk2 * ae**3 / (2.0 * xi0**3)
            + 0.75 * (m + beta) ** 2 * dk2 * ae**4 / xi0**4
            + (5.0 / 64.0) * (k2**4 - k1**4) * ae**4 / xi0**6
        )
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_order4_beats_order3_against_wkb():
    for m in (-1, 0, 1):
        p = derive_params(K1, 0.05, 0.3)
        e_wkb = wkb_energy(m, p)
        assert abs(perturbative_energy(m, p, 4) - e_wkb) < abs(perturbative_energy(m, p, 3) - e_wkb)


def test_residual_scaling_in_epsilon():
    # order-4 residual shrinks like eps**5, order-3 like eps**4
    r3, r4 = [], []
    for eps in (0.1, 0.05, 0.025, 0.0125):
        p = derive_params(K1, eps, 0.3)
        e_wkb = wkb_energy(0, p)
        r3.append(abs(perturbative_energy(0, p, 3) - e_wkb))
        r4.append(abs(perturbative_energy(0, p, 4) - e_wkb))
    for j in range(3):
        assert r4[j] / r4[j + 1] > r3[j] / r3[j + 1]


def test_resonant_quasimomentum_rejected():
    p = derive_params(K1, 0.05, 0.5)
    with pytest.raises(ParameterError):
        alpha_coefficients(0, p)
    with pytest.raises(ParameterError):
        perturbative_energy(0, p, 3)


def test_fidelity_equal_strengths_is_unity():
    p = derive_params(K1, 0.05, 0.3)
    psi0 = momentum_eigenstate(0, 64, 0.3, n_min=-32)
    trace = perturbative_fidelity(psi0, K1, K1, p, 4, 300)
    assert np.abs(trace.values - 1.0).max() < 1e-12


def test_fidelity_swap_and_phase_invariance():
    p = derive_params(K1, 0.05, 0.3)
    psi0 = momentum_eigenstate(0, 64, 0.3, n_min=-32)
    ab = perturbative_fidelity(psi0, K1, K2, p, 4, 300)
    ba = perturbative_fidelity(psi0, K2, K1, p, 4, 300)
    assert np.abs(ab.values - ba.values).max() < 1e-12
    rotated = state_from_amplitudes({0: np.exp(0.7j)}, 64, 0.3, n_min=-32)
    rb = perturbative_fidelity(rotated, K1, K2, p, 4, 300)
    assert np.abs(ab.values - rb.values).max() < 1e-12
    assert ab.values[0] == pytest.approx(1.0, abs=1e-14)


def test_island_regime_warns():
    p = derive_params(K2, 0.05, 0.45)
    psi0 = momentum_eigenstate(0, 64, 0.45, n_min=-32)
    with pytest.warns(UserWarning):
        perturbative_fidelity(psi0, K1, K2, p, 4, 10)


def test_spectrum_record():
    p = derive_params(K1, 0.05, 0.3)
    spec = perturbative_spectrum(range(-2, 3), p, 4)
    assert spec.levels.tolist() == [-2, -1, 0, 1, 2]
    for j, m in enumerate(spec.levels):
        assert spec.energies[j] == perturbative_energy(int(m), p, 4)
