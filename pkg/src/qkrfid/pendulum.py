"""Exact quantum pendulum: truncated eigenproblem, fidelity, WKB energies.

The pendulum Hamiltonian ``(I + xi)**2/2 + k_tilde*cos(theta)`` with
``I = |epsilon| * N`` is real symmetric tridiagonal in the momentum
basis: diagonal ``(|epsilon|*n + xi)**2 / 2`` and nearest-neighbour
coupling ``k_tilde / 2``.  Eigen-decomposition on a window wide enough
that the relevant eigenvectors vanish at the boundary gives the exact
pendulum fidelity through the eigenbasis double sum, with dynamical
phases ``exp(i * t * (E_n - E_m) / |epsilon|)`` at integer kick counts.

Rotational WKB energies solve

    4*sqrt(2*(E - k_tilde)) * E_ell(i*sqrt(2*k_tilde/(E - k_tilde)))
        = 2*pi * |(m + beta)*|epsilon| + xi0|

by bisection; the absolute value selects the momentum branch the level
lives on (for beta < 1/2 the band near n = 0 has negative mean momentum
offset).  The left side decreases to the separatrix action
``8*sqrt(k_tilde)`` as ``E -> k_tilde``, so a root exists precisely when
the right side exceeds it; otherwise the level sits in or too close to
the island and :class:`BracketRootError` is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BracketRootError, ParameterError, WindowTooSmallError
from .evolution import MomentumState
from .params import RotorParams
from .perturbative import elliptic_E
from .trace import FidelityTrace

DEFAULT_WINDOW_HALF_WIDTH = 150
BOUNDARY_TOLERANCE = 1e-12
AMPLITUDE_CUTOFF = 1e-13


def build_pendulum_matrix(params: RotorParams, n_lo: int, n_hi: int) -> np.ndarray:
    """Dense symmetric pendulum Hamiltonian on the window ``n_lo..n_hi``."""
    diag, off = pendulum_bands(params, n_lo, n_hi)
    matrix = np.diag(diag)
    idx = np.arange(len(diag) - 1)
    matrix[idx, idx + 1] = off
    matrix[idx + 1, idx] = off
    return matrix


def pendulum_bands(params: RotorParams, n_lo: int, n_hi: int) -> tuple:
    """Diagonal and off-diagonal of the tridiagonal pendulum matrix."""
    if n_hi <= n_lo:
        raise ParameterError(f"empty basis window [{n_lo}, {n_hi}]")
    n = np.arange(n_lo, n_hi + 1)
    diag = 0.5 * (abs(params.epsilon) * n + params.xi) ** 2
    off = np.full(len(n) - 1, 0.5 * params.k_tilde)
    return diag, off


@dataclass
class PendulumEigensystem:
    """Eigen-decomposition of the truncated pendulum Hamiltonian.

    ``vectors[:, j]`` is the eigenvector of ``levels[j]`` in the momentum
    basis over ``n_lo..n_hi``; levels ascend.
    """

    params: RotorParams
    n_lo: int
    n_hi: int
    levels: np.ndarray
    vectors: np.ndarray

    @classmethod
    def build(cls, params: RotorParams, n_lo: int, n_hi: int) -> "PendulumEigensystem":
        diag, off = pendulum_bands(params, n_lo, n_hi)
        levels, vectors = eigh_tridiagonal(diag, off)
        return cls(params=params, n_lo=n_lo, n_hi=n_hi, levels=levels, vectors=vectors)

    def momentum_grid(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def boundary_weight(self, level_index: int) -> float:
        v = self.vectors[:, level_index]
        return max(abs(v[0]), abs(v[-1]))

    def check_boundary(self, level_indices) -> None:
        worst = max(self.boundary_weight(j) for j in level_indices)
        if worst > BOUNDARY_TOLERANCE:
            raise WindowTooSmallError(
                f"eigenvector boundary component {worst:.2e} exceeds "
                f"{BOUNDARY_TOLERANCE:.0e}; widen the window [{self.n_lo}, {self.n_hi}]"
            )

    def nearest_level(self, energy: float) -> int:
        """Index of the eigenvalue closest to ``energy``."""
        return int(np.argmin(np.abs(self.levels - energy)))


def free_rotor_energy(m: int, params: RotorParams) -> float:
    """Unperturbed level ``(m*|epsilon| + xi)**2 / 2`` used for pairing."""
    return 0.5 * (m * abs(params.epsilon) + params.xi) ** 2


def exact_energy(m: int, eigensystem: PendulumEigensystem) -> float:
    """Eigenvalue paired to winding number ``m`` by nearest free-rotor energy."""
    return float(eigensystem.levels[eigensystem.nearest_level(free_rotor_energy(m, eigensystem.params))])


def _project_initial_state(psi0: MomentumState, system: PendulumEigensystem) -> np.ndarray:
    grid = system.momentum_grid()
    amps = np.zeros(len(grid), dtype=complex)
    lo = psi0.n_min
    hi = psi0.n_min + psi0.basis_size - 1
    inside = (grid >= lo) & (grid <= hi)
    amps[inside] = psi0.amplitudes[grid[inside] - lo]
    outside_weight = psi0.norm() ** 2 - float(np.sum(np.abs(amps) ** 2))
    if outside_weight > 1e-12:
        raise ParameterError("initial state has weight outside the eigensystem window")
    return amps


def pendulum_fidelity(
    psi0: MomentumState,
    params1: RotorParams,
    params2: RotorParams,
    kicks: int,
    n_lo: int = None,
    n_hi: int = None,
) -> FidelityTrace:
    """Exact pendulum fidelity through the eigenbasis double sum.

    Both parameter sets must share ``beta`` and ``epsilon`` (hence ``xi``);
    the eigensystems are built on a common window, by default
    ``+- DEFAULT_WINDOW_HALF_WIDTH`` around n = 0.
    """
    if params1.beta != params2.beta or params1.epsilon != params2.epsilon:
        raise ParameterError("pendulum fidelity requires equal beta and epsilon")
    if psi0.beta != params1.beta:
        raise ParameterError("initial state beta tag does not match the rotors")
    if n_lo is None:
        n_lo = -DEFAULT_WINDOW_HALF_WIDTH
    if n_hi is None:
        n_hi = DEFAULT_WINDOW_HALF_WIDTH

    sys1 = PendulumEigensystem.build(params1, n_lo, n_hi)
    sys2 = PendulumEigensystem.build(params2, n_lo, n_hi)

    psi = _project_initial_state(psi0, sys1)
    amp1 = sys1.vectors.T @ psi        # <phi_m(k1)|psi0>, vectors are real
    amp2 = sys2.vectors.T @ psi
    keep1 = np.nonzero(np.abs(amp1) > AMPLITUDE_CUTOFF)[0]
    keep2 = np.nonzero(np.abs(amp2) > AMPLITUDE_CUTOFF)[0]
    sys1.check_boundary(keep1)
    sys2.check_boundary(keep2)

    overlap = sys2.vectors[:, keep2].T @ sys1.vectors[:, keep1]
    weights = np.conj(amp2[keep2])[:, None] * overlap * amp1[keep1][None, :]
    inv_eps = 1.0 / abs(params1.epsilon)
    times = np.arange(kicks + 1, dtype=float)
    phase2 = np.exp(1j * np.outer(times, sys2.levels[keep2]) * inv_eps)
    phase1 = np.exp(-1j * np.outer(times, sys1.levels[keep1]) * inv_eps)
    series = (phase2 @ weights * phase1).sum(axis=1)
    values = np.abs(series) ** 2

    meta = {
        "method": "pendulum",
        "k1": params1.k,
        "k2": params2.k,
        "epsilon": params1.epsilon,
        "beta": params1.beta,
        "kicks": kicks,
        "n_lo": n_lo,
        "n_hi": n_hi,
        "window": 0,
    }
    return FidelityTrace(kicks=np.arange(kicks + 1), values=values, metadata=meta)


def quantization_lhs(energy: float, params: RotorParams) -> float:
    """Left side of the rotational quantization condition at energy ``E``."""
    kt = params.k_tilde
    if energy <= kt:
        raise ParameterError(f"rotational quantization needs E > k_tilde, got E={energy}")
    return 4.0 * math.sqrt(2.0 * (energy - kt)) * elliptic_E(-2.0 * kt / (energy - kt))


def separatrix_action(params: RotorParams) -> float:
    """Action of the separatrix orbit, ``8*sqrt(k_tilde)``."""
    return 8.0 * math.sqrt(params.k_tilde)


def wkb_energy(
    m: int,
    params: RotorParams,
    residual_tol: float = 1e-12,
    bracket_eps: float = 1e-9,
) -> float:
    """Rotational WKB energy of level ``m`` by bracketed bisection.

    Raises :class:`BracketRootError` when the target action does not exceed
    the separatrix action, i.e. the level is not rotational.
    """
    if params.xi0 == 0.0:
        raise ParameterError("rotational WKB requires xi0 != 0")
    w = (m + params.beta) * abs(params.epsilon) + params.xi0
    if w == 0.0:
        raise BracketRootError(f"level m={m} sits exactly on the island centre")
    target = 2.0 * math.pi * abs(w)
    kt = params.k_tilde
    if target <= separatrix_action(params) * (1.0 + 1e-12):
        raise BracketRootError(
            f"level m={m}: quantized action {target:.6g} does not exceed the "
            f"separatrix action {separatrix_action(params):.6g}; not a rotational level"
        )

    lo = kt + bracket_eps
    hi = max(w * w, kt + 1.0)
    for _ in range(80):
        if quantization_lhs(hi, params) > target:
            break
        hi *= 2.0
    else:  # pragma: no cover - target always reachable since lhs ~ 2*pi*sqrt(2E)
        raise BracketRootError(f"no upper bracket found for level m={m}")
    if quantization_lhs(lo, params) > target:
        raise BracketRootError(f"level m={m} lies too close to the separatrix")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        residual = quantization_lhs(mid, params) - target
        if abs(residual) < residual_tol:
            return mid
        if residual < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    mid = 0.5 * (lo + hi)
    if abs(quantization_lhs(mid, params) - target) > 100.0 * residual_tol:
        raise BracketRootError(
            f"bisection stalled for level m={m}; residual above tolerance"
        )
    return mid
