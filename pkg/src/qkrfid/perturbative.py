"""Perturbative pendulum energies and the perturbative fidelity.

Rotational energy levels of the quantum pendulum admit an expansion in
the detuning,

    E_m = xi0**2/2 + xi0*(m+beta)*|eps| + a2*eps**2 + a3*|eps|**3 + a4*eps**4,

with coefficients obtained by matching the rotational quantization
condition through its elliptic-integral expansion:

    a2 = (m+beta)**2/2 + k**2/(4*xi0**2)
    a3 = -(m+beta)*k**2 / (2*xi0**3)
    a4 = 3*(m+beta)**2*k**2/(4*xi0**4) + 5*k**4/(64*xi0**6)

The perturbative fidelity evaluates the eigenbasis double sum of the
pendulum fidelity with these energies in the dynamical phases and with
eigenvectors kept at first order in the kick coupling: the lowest order
in the amplitudes that produces a nonconstant fidelity for a momentum
eigenstate.  Cross-basis overlaps are used in their first-order form,
which is proportional to ``k2 - k1`` and hence exactly diagonal when the
two kicking strengths coincide.  Each trace is normalized by its t=0
value so F(0) = 1; because the truncated first-order frame is not exactly
unitary, later values may overshoot 1 by a few percent.  That is a
property of the approximation, not a bug, and the exact pendulum fidelity
is the reference to compare against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError
from .evolution import MomentumState
from .params import EnsembleSpec, RotorParams, derive_params, island_half_width
from .trace import FidelityTrace

# levels contributing to the fidelity double sum: first-order amplitude
# cutoff plus one guard level per side
AMPLITUDE_CUTOFF = 1e-10


def elliptic_E(kappa_squared: float, epsabs: float = 1e-13) -> float:
    """Complete elliptic integral of the second kind, by adaptive quadrature.

    Accepts any ``kappa_squared < 1``; negative values (imaginary modulus)
    are handled natively through the real integrand
    ``sqrt(1 - kappa_squared * sin(t)**2)``.
    """
    if not kappa_squared < 1.0:
        raise ParameterError(f"elliptic_E requires kappa_squared < 1, got {kappa_squared!r}")
    m = kappa_squared

    def integrand(t: float) -> float:
        s = math.sin(t)
        return math.sqrt(1.0 - m * s * s)

    value, _ = quad(integrand, 0.0, 0.5 * math.pi, epsabs=epsabs, epsrel=1e-13, limit=200)
    return value


def _require_off_resonance(params: RotorParams) -> None:
    if params.xi0 == 0.0:
        raise ParameterError(
            "perturbative expansion is undefined at the resonant quasi-momentum (xi0 = 0)"
        )


def alpha_coefficients(m: int, params: RotorParams) -> tuple:
    """Expansion coefficients (alpha2, alpha3, alpha4) for level ``m``."""
    _require_off_resonance(params)
    mb = m + params.beta
    k2 = params.k**2
    xi0 = params.xi0
    alpha2 = 0.5 * mb**2 + k2 / (4.0 * xi0**2)
    alpha3 = -mb * k2 / (2.0 * xi0**3)
    alpha4 = 0.75 * mb**2 * k2 / xi0**4 + (5.0 / 64.0) * params.k**4 / xi0**6
    return alpha2, alpha3, alpha4


def perturbative_energy(m: int, params: RotorParams, order: int = 4) -> float:
    """Partial sum of the energy expansion through ``order`` in the detuning."""
    if order not in (2, 3, 4):
        raise ParameterError(f"order must be 2, 3 or 4, got {order!r}")
    _require_off_resonance(params)
    eps = abs(params.epsilon)
    alpha2, alpha3, alpha4 = alpha_coefficients(m, params)
    energy = 0.5 * params.xi0**2 + params.xi0 * (m + params.beta) * eps + alpha2 * eps**2
    if order >= 3:
        energy += alpha3 * eps**3
    if order >= 4:
        energy += alpha4 * eps**4
    return energy


@dataclass(frozen=True)
class PerturbativeSpectrum:
    """Perturbative energies and coefficients for a set of levels."""

    order: int
    levels: np.ndarray          # integer m values
    alpha2: np.ndarray
    alpha3: np.ndarray
    alpha4: np.ndarray
    energies: np.ndarray
    params: RotorParams


def perturbative_spectrum(
    levels: Sequence[int], params: RotorParams, order: int = 4
) -> PerturbativeSpectrum:
    """Spectrum record over ``levels`` at the requested expansion order."""
    levels = np.asarray(list(levels), dtype=int)
    coeffs = np.array([alpha_coefficients(int(m), params) for m in levels])
    energies = np.array([perturbative_energy(int(m), params, order) for m in levels])
    return PerturbativeSpectrum(
        order=order,
        levels=levels,
        alpha2=coeffs[:, 0],
        alpha3=coeffs[:, 1],
        alpha4=coeffs[:, 2],
        energies=energies,
        params=params,
    )


def _free_energies(levels: np.ndarray, params: RotorParams) -> np.ndarray:
    """Unperturbed pendulum energies ``(m*|eps| + xi)**2 / 2``."""
    return 0.5 * (levels * abs(params.epsilon) + params.xi) ** 2


def _first_order_couplings(levels: np.ndarray, params: RotorParams) -> tuple:
    """First-order mixing amplitudes to the m+1 and m-1 neighbours."""
    e0 = _free_energies(levels, params)
    e0_up = _free_energies(levels + 1, params)
    e0_dn = _free_energies(levels - 1, params)
    half_kt = 0.5 * params.k_tilde
    return half_kt / (e0 - e0_up), half_kt / (e0 - e0_dn)


def _state_on_levels(psi0: MomentumState, levels: np.ndarray) -> np.ndarray:
    """Amplitudes of psi0 on the given momentum indices (0 outside the window)."""
    amps = np.zeros(len(levels), dtype=complex)
    for j, m in enumerate(levels):
        idx = int(m) - psi0.n_min
        if 0 <= idx < psi0.basis_size:
            amps[j] = psi0.amplitudes[idx]
    return amps


def _level_window(psi0: MomentumState) -> np.ndarray:
    """Levels with nonzero first-order overlap with psi0, plus one guard each side."""
    probs = np.abs(psi0.amplitudes) ** 2
    populated = np.nonzero(probs > AMPLITUDE_CUTOFF**2)[0]
    if len(populated) == 0:
        raise ParameterError("initial state is numerically empty")
    lo = psi0.n_min + populated[0] - 2
    hi = psi0.n_min + populated[-1] + 2
    return np.arange(lo, hi + 1)


def _overlap_series(
    psi0: MomentumState,
    params1: RotorParams,
    params2: RotorParams,
    order: int,
    times: np.ndarray,
) -> np.ndarray:
    """Complex fidelity amplitude S(t)/S(0) for one beta value."""
    levels = _level_window(psi0)
    psi = _state_on_levels(psi0, levels)
    psi_up = _state_on_levels(psi0, levels + 1)
    psi_dn = _state_on_levels(psi0, levels - 1)

    c1_up, c1_dn = _first_order_couplings(levels, params1)
    c2_up, c2_dn = _first_order_couplings(levels, params2)
    # <phi_m(k)|psi0> at first order in the coupling
    amp1 = psi + c1_up * psi_up + c1_dn * psi_dn
    amp2 = psi + c2_up * psi_up + c2_dn * psi_dn

    # cross-basis overlap <phi_n(k2)|phi_m(k1)>: identity plus a first-order
    # nearest-neighbour band proportional to k_tilde1 - k_tilde2
    L = len(levels)
    e0 = _free_energies(levels, params1)
    omega = np.eye(L)
    dk = 0.5 * (params1.k_tilde - params2.k_tilde)
    for j in range(L - 1):
        omega[j + 1, j] = dk / (e0[j] - e0[j + 1])   # n = m+1
        omega[j, j + 1] = dk / (e0[j + 1] - e0[j])   # n = m-1
    weights = np.conj(amp2)[:, None] * omega * amp1[None, :]

    en1 = np.array([perturbative_energy(int(m), params1, order) for m in levels])
    en2 = np.array([perturbative_energy(int(m), params2, order) for m in levels])
    inv_eps = 1.0 / abs(params1.epsilon)
    phase2 = np.exp(1j * np.outer(times, en2) * inv_eps)
    phase1 = np.exp(-1j * np.outer(times, en1) * inv_eps)
    series = np.einsum("tn,nm,tm->t", phase2, weights, phase1)
    return series / series[0]


def _warn_if_island(params: RotorParams) -> None:
    if abs(params.beta - 0.5) < island_half_width(params):
        warnings.warn(
            "quasi-momentum lies inside the resonance island; the rotational "
            "perturbative fidelity is not meaningful there",
            stacklevel=3,
        )


def perturbative_fidelity(
    psi0: MomentumState,
    k1: float,
    k2: float,
    params: RotorParams,
    order: int = 4,
    kicks: int = 1000,
) -> FidelityTrace:
    """Perturbative single-rotor fidelity at expansion order 3 or 4.

    ``params`` supplies the detuning and quasi-momentum; the two kicking
    strengths are passed separately.
    """
    if order not in (3, 4):
        raise ParameterError(f"fidelity expansion order must be 3 or 4, got {order!r}")
    p1 = derive_params(k1, params.epsilon, params.beta)
    p2 = derive_params(k2, params.epsilon, params.beta)
    _require_off_resonance(p1)
    _warn_if_island(p2)
    if psi0.beta != params.beta:
        raise ParameterError("initial state beta tag does not match the rotor")
    times = np.arange(kicks + 1, dtype=float)
    values = np.abs(_overlap_series(psi0, p1, p2, order, times)) ** 2
    meta = {
        "method": "perturbative",
        "order": order,
        "k1": k1,
        "k2": k2,
        "epsilon": params.epsilon,
        "beta": params.beta,
        "kicks": kicks,
        "window": 0,
    }
    return FidelityTrace(kicks=np.arange(kicks + 1), values=values, metadata=meta)


def perturbative_fidelity_ensemble(
    psi0: MomentumState,
    k1: float,
    k2: float,
    epsilon: float,
    spec: EnsembleSpec,
    order: int = 4,
    kicks: int = 1000,
) -> FidelityTrace:
    """Perturbative ensemble fidelity: Riemann sum of complex amplitudes.

    Mirrors the exact ensemble contract: per-beta amplitudes (normalized to
    1 at t=0) are accumulated in ascending beta order and divided by the
    grid size before taking the modulus squared.
    """
    if order not in (3, 4):
        raise ParameterError(f"fidelity expansion order must be 3 or 4, got {order!r}")
    betas = spec.grid()
    if betas[-1] >= 1.0:
        raise ParameterError("ensemble grid reaches beta = 1; shrink the interval")
    times = np.arange(kicks + 1, dtype=float)
    overlap_sum = np.zeros(kicks + 1, dtype=complex)
    for beta in betas:
        p1 = derive_params(k1, epsilon, float(beta))
        p2 = derive_params(k2, epsilon, float(beta))
        _require_off_resonance(p1)
        overlap_sum += _overlap_series(psi0.with_beta(float(beta)), p1, p2, order, times)
    values = np.abs(overlap_sum / len(betas)) ** 2
    meta = {
        "method": "perturbative-ensemble",
        "order": order,
        "k1": k1,
        "k2": k2,
        "epsilon": epsilon,
        "beta1": spec.beta1,
        "delta_beta": spec.delta_beta,
        "n_beta": spec.n_beta,
        "kicks": kicks,
        "window": 0,
    }
    return FidelityTrace(kicks=np.arange(kicks + 1), values=values, metadata=meta)
