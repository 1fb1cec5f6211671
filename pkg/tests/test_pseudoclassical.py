import math

import numpy as np
import pytest

from qkrfid import (
    ParameterError,
    PhasePoint,
    classical_action,
    derive_params,
    elliptic_E,
    map_orbit,
    map_step,
    orbit_kind,
    pendulum_energy,
    pendulum_flow,
    phase_portrait,
)
from qkrfid.pseudoclassical import default_time_step, max_time_step

# k_tilde = 0.08*pi, the quasi-integrable regime of the published portrait
PARAMS = derive_params(0.8 * math.pi, 0.1, 0.3)


def test_free_rotation_when_kick_vanishes():
    p = derive_params(1e-14, 0.1, 0.3)
    pt = PhasePoint(I=0.7, theta=1.0)
    for _ in range(5):
        new = map_step(pt, p)
        assert new.I == pytest.approx(0.7, abs=1e-13)
        assert new.theta == pytest.approx((pt.theta + 0.7 - math.pi + p.tau * p.beta) % (2 * math.pi), abs=1e-12)
        pt = new


def test_fixed_point_is_invariant():
    # sin(theta*) = 0 and sgn(eps)*I* - pi + tau*beta = 0 (mod 2*pi)
    i_star = math.pi - PARAMS.tau * PARAMS.beta
    pt = PhasePoint(I=i_star, theta=math.pi)
    new = map_step(pt, PARAMS)
    assert new.theta == pytest.approx(math.pi, abs=1e-12)
    assert new.I == pytest.approx(i_star, abs=1e-12)


def test_map_preserves_area():
    # Jacobian determinant of one step equals 1; finite differences
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(20):
        theta0 = rng.uniform(0.0, 2.0 * math.pi)
        i0 = rng.uniform(-2.0, 2.0)

        def step(theta, I):
            out = map_step(PhasePoint(I=I, theta=theta), PARAMS)
            return out.theta, out.I

        tp, ip = step(theta0 + h, i0)
        tm, im = step(theta0 - h, i0)
        tI, iI = step(theta0, i0 + h)
        tJ, iJ = step(theta0, i0 - h)
        d_tt = ((tp - tm + math.pi) % (2 * math.pi) - math.pi) / (2 * h)
        d_ti = ((tI - tJ + math.pi) % (2 * math.pi) - math.pi) / (2 * h)
        d_it = (ip - im) / (2 * h)
        d_ii = (iI - iJ) / (2 * h)
        det = d_tt * d_ii - d_ti * d_it
        assert det == pytest.approx(1.0, abs=1e-8)


def test_flow_stationary_at_stable_fixed_point():
    seed = PhasePoint(I=-PARAMS.xi, theta=math.pi)
    orbit = pendulum_flow(seed, PARAMS, steps=2000)
    assert np.abs(orbit[:, 1] - seed.I).max() < 1e-9


def test_flow_conserves_energy():
    seed = PhasePoint(I=0.0, theta=1.2)
    orbit = pendulum_flow(seed, PARAMS, steps=100_000)
    energy = 0.5 * (orbit[:, 1] + PARAMS.xi) ** 2 + PARAMS.k_tilde * np.cos(orbit[:, 0])
    e0 = pendulum_energy(seed, PARAMS)
    assert np.abs(energy - e0).max() / abs(e0) < 1e-8


def test_flow_rejects_unstable_step():
    with pytest.raises(ParameterError):
        pendulum_flow(PhasePoint(I=0.0, theta=1.0), PARAMS, dt=2.0 * max_time_step(PARAMS), steps=10)


def test_island_half_width_from_turning_points():
    # on the separatrix E = k_tilde the momentum excursion at theta = pi
    # follows from (I + xi)**2 / 2 = k_tilde * (1 - cos(theta))
    excursion = math.sqrt(2.0 * PARAMS.k_tilde * (1.0 - math.cos(math.pi)))
    assert excursion == pytest.approx(2.0 * math.sqrt(PARAMS.k_tilde), rel=1e-14)
    # a flow orbit just inside the separatrix reaches nearly that excursion
    seed = PhasePoint(I=-PARAMS.xi + 0.999 * 2.0 * math.sqrt(PARAMS.k_tilde), theta=math.pi)
    orbit = pendulum_flow(seed, PARAMS, steps=60_000)
    assert np.abs(orbit[:, 1] + PARAMS.xi).max() <= 2.0 * math.sqrt(PARAMS.k_tilde) * (1 + 1e-6)


def test_orbit_classification():
    inside = PhasePoint(I=-PARAMS.xi + 0.2, theta=math.pi)
    outside = PhasePoint(I=0.0, theta=1.0)
    assert orbit_kind(inside, PARAMS) == "librational"
    assert orbit_kind(outside, PARAMS) == "rotational"


def test_map_and_flow_orbit_curves_coincide():
    # quasi-integrable correspondence: the map orbit lies within 0.1 * DeltaI
    # of the pendulum orbit curve.  The map samples states right after the
    # kick, half a free drift away from the symmetric splitting point, so the
    # curves are compared at theta + p/2.
    delta_i = 2.0 * math.sqrt(PARAMS.k_tilde)
    for p0 in (-1.3, 1.5, -1.8, 2.0):
        seed = PhasePoint(I=p0 - PARAMS.xi, theta=math.pi)
        assert orbit_kind(seed, PARAMS) == "rotational"
        morb = map_orbit(seed, PARAMS, 1000)
        porb = pendulum_flow(seed, PARAMS, dt=1.0 / 64, steps=1000 * 64)[::64]
        order = np.argsort(porb[:, 0])
        momenta = morb[:, 1] + PARAMS.xi
        theta_mid = np.mod(morb[:, 0] + 0.5 * momenta, 2.0 * math.pi)
        i_curve = np.interp(theta_mid, porb[order, 0], porb[order, 1], period=2.0 * math.pi)
        assert np.abs(morb[:, 1] - i_curve).max() < 0.1 * delta_i


def test_portrait_runs_both_dynamics():
    seeds = [PhasePoint(I=0.0, theta=math.pi), PhasePoint(I=-PARAMS.xi, theta=2.0)]
    portrait = phase_portrait(PARAMS, seeds, steps=50)
    assert len(portrait.map_orbits) == len(portrait.pendulum_orbits) == 2
    assert portrait.map_orbits[0].shape == (51, 2)
    assert portrait.pendulum_orbits[0].shape == (51, 2)
    # vanishing kick: both dynamics keep I constant
    quiet = derive_params(1e-14, 0.1, 0.3)
    flat = phase_portrait(quiet, [PhasePoint(I=0.4, theta=0.5)], steps=40)
    assert np.abs(flat.map_orbits[0][:, 1] - 0.4).max() < 1e-12
    assert np.abs(flat.pendulum_orbits[0][:, 1] - 0.4).max() < 1e-9


def test_action_free_limit():
    p = derive_params(1e-14, 0.05, 0.3)
    energy = 0.9
    theta_i, theta = 0.3, 2.1
    expected = (math.sqrt(2.0 * energy) - p.xi) * (theta - theta_i)
    assert classical_action(theta_i, theta, energy, p) == pytest.approx(expected, abs=1e-10)


def test_action_vanishes_on_empty_path():
    assert classical_action(1.1, 1.1, 0.9, PARAMS) == 0.0


def test_action_full_circuit_matches_elliptic_form():
    # over one full revolution the pure integral equals
    # 4*sqrt(2*(E-kt)) * E_ell(i*sqrt(2*kt/(E-kt)))
    for energy in (0.5, 0.9, 1.7):
        circuit = classical_action(0.0, 2.0 * math.pi, energy, PARAMS)
        kt = PARAMS.k_tilde
        elliptic = 4.0 * math.sqrt(2.0 * (energy - kt)) * elliptic_E(-2.0 * kt / (energy - kt))
        assert circuit + 2.0 * math.pi * PARAMS.xi == pytest.approx(elliptic, abs=1e-10)


def test_action_rejects_turning_points():
    with pytest.raises(ParameterError):
        classical_action(0.0, 1.0, 0.5 * PARAMS.k_tilde, PARAMS)


def test_default_step_respects_bound():
    assert default_time_step(PARAMS) < max_time_step(PARAMS)
