"""Exact Floquet evolution of beta-rotors and fidelity computation.

One Floquet period consists of free rotation, diagonal in the
angular-momentum basis with phases ``exp(-i*(tau/2)*(n+beta)**2)``,
followed by the kick ``exp(-i*k*cos(theta))``, diagonal in the angle
representation.  States are complex amplitude vectors on a truncated
momentum window ``n_min ... n_min + N - 1``; the kick is applied by FFT
to an angle grid of the same size, which is exact as long as the state
does not touch the window boundary.  An edge-population guard turns
boundary contamination into an error instead of silent aliasing.

The free phases are evaluated with the splitting
``(tau/2)*(n+beta)**2 = pi*n**2 + 2*pi*n*beta + pi*beta**2
+ (epsilon/2)*(n+beta)**2`` and the first two terms reduced modulo 2*pi
in exact integer/fractional arithmetic.  At the resonance
``tau = 2*pi, beta = 1/2`` the phases then collapse to a global factor
to machine precision, which the resonance tests rely on.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.fft as sfft

from .errors import BasisOverflowError, ParameterError
from .params import EnsembleSpec, RotorParams, derive_params
from .trace import FidelityTrace

DEFAULT_BASIS_SIZE = 4096
DEFAULT_EDGE_THRESHOLD = 1e-12
EDGE_FRACTION = 0.02

_FFT_WORKERS = os.cpu_count() or 1
# rows per block in the batched ensemble evolution; keeps the working set
# cache-friendly on small machines
_CHUNK_ROWS = 512


@dataclass(eq=False)
class MomentumState:
    """Complex amplitudes over a truncated angular-momentum basis.

    Attributes
    ----------
    n_min : int
        Lowest basis index; amplitude ``j`` belongs to ``|n_min + j>``.
    amplitudes : ndarray of complex
        Amplitude vector, unit norm.
    beta : float
        Quasi-momentum tag of the rotor the state belongs to.
    """

    n_min: int
    amplitudes: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1 or self.amplitudes.size < 4:
            raise ParameterError("amplitudes must be a 1-d vector of size >= 4")

    @property
    def basis_size(self) -> int:
        return self.amplitudes.size

    def momentum_grid(self) -> np.ndarray:
        return self.n_min + np.arange(self.basis_size)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def edge_population(self) -> tuple:
        """Probability in the outermost ``EDGE_FRACTION`` of indices per side."""
        n_edge = _edge_width(self.basis_size)
        probs = np.abs(self.amplitudes) ** 2
        return float(probs[:n_edge].sum()), float(probs[-n_edge:].sum())

    def with_beta(self, beta: float) -> "MomentumState":
        return MomentumState(self.n_min, self.amplitudes.copy(), float(beta))


def momentum_eigenstate(
    n: int = 0,
    basis_size: int = DEFAULT_BASIS_SIZE,
    beta: float = 0.0,
    n_min: Optional[int] = None,
) -> MomentumState:
    """The angular-momentum eigenstate ``|n>`` on a window centred at ``n``."""
    if n_min is None:
        n_min = n - basis_size // 2
    idx = n - n_min
    if not 0 <= idx < basis_size:
        raise ParameterError(f"state |{n}> outside basis window starting at {n_min}")
    amps = np.zeros(basis_size, dtype=complex)
    amps[idx] = 1.0
    return MomentumState(n_min=n_min, amplitudes=amps, beta=float(beta))


def state_from_amplitudes(
    entries: dict,
    basis_size: int = DEFAULT_BASIS_SIZE,
    beta: float = 0.0,
    n_min: Optional[int] = None,
) -> MomentumState:
    """State from a finite ``{n: amplitude}`` mapping, normalized.

    The window is centred on the mean of the populated indices unless
    ``n_min`` is given.
    """
    if not entries:
        raise ParameterError("initial state needs at least one amplitude")
    ns = sorted(entries)
    if n_min is None:
        centre = int(round(sum(ns) / len(ns)))
        n_min = centre - basis_size // 2
    amps = np.zeros(basis_size, dtype=complex)
    for n, a in entries.items():
        idx = int(n) - n_min
        if not 0 <= idx < basis_size:
            raise ParameterError(f"state component |{n}> outside basis window")
        amps[idx] = complex(a)
    nrm = np.linalg.norm(amps)
    if nrm == 0.0:
        raise ParameterError("initial state has zero norm")
    return MomentumState(n_min=n_min, amplitudes=amps / nrm, beta=float(beta))


def _edge_width(basis_size: int) -> int:
    return max(1, int(round(EDGE_FRACTION * basis_size)))


def _check_edges(amplitudes: np.ndarray, threshold: float, context: str) -> None:
    n_edge = _edge_width(amplitudes.shape[-1])
    probs = np.abs(amplitudes) ** 2
    left = probs[..., :n_edge].sum(axis=-1).max()
    right = probs[..., -n_edge:].sum(axis=-1).max()
    if left > threshold or right > threshold:
        raise BasisOverflowError(
            f"edge population ({max(left, right):.3e}) above threshold "
            f"{threshold:.1e} {context}; increase the basis size"
        )


def free_phase_vector(n: np.ndarray, beta: float, tau: float) -> np.ndarray:
    """Diagonal free-evolution factors ``exp(-i*(tau/2)*(n+beta)**2)``.

    Reduced modulo 2*pi term by term so that huge quadratic phases do not
    lose precision; exact collapse at ``tau = 2*pi``.
    """
    if tau == 0.0:
        return np.ones(n.shape, dtype=complex)
    eps = tau - 2.0 * math.pi
    phase = (
        math.pi * (n % 2)
        + 2.0 * math.pi * np.mod(n * beta, 1.0)
        + math.pi * beta * beta
        + 0.5 * eps * (n + beta) ** 2
    )
    return np.exp(-1j * phase)


def kick_phase_vector(k: float, basis_size: int) -> np.ndarray:
    """Kick factors ``exp(-i*k*cos(theta_j))`` on the FFT angle grid."""
    theta = np.arange(basis_size) * (2.0 * math.pi / basis_size)
    return np.exp(-1j * k * np.cos(theta))


def _kick_inplace(amps2d: np.ndarray, kick_phase: np.ndarray) -> np.ndarray:
    """Kick applied to a batch of amplitude rows; returns a new array."""
    work = sfft.ifft(amps2d, axis=-1, workers=_FFT_WORKERS)
    work *= kick_phase
    return sfft.fft(work, axis=-1, workers=_FFT_WORKERS, overwrite_x=True)


def apply_kick(
    state: MomentumState,
    k: float,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> MomentumState:
    """Apply ``exp(-i*k*cos(theta))`` to a state.

    Implemented by FFT to the angle grid, pointwise phase multiplication,
    and transform back; the momentum offset ``n_min`` drops out of the
    round trip.  Raises :class:`BasisOverflowError` when the result
    populates the window edges beyond ``edge_threshold``.
    """
    if k == 0.0:
        return MomentumState(state.n_min, state.amplitudes.copy(), state.beta)
    out = _kick_inplace(state.amplitudes[None, :], kick_phase_vector(k, state.basis_size))[0]
    _check_edges(out, edge_threshold, f"after kick k={k}")
    return MomentumState(state.n_min, out, state.beta)


def apply_free(state: MomentumState, tau: float) -> MomentumState:
    """Free evolution over one period; exact diagonal operation."""
    phases = free_phase_vector(state.momentum_grid(), state.beta, tau)
    return MomentumState(state.n_min, state.amplitudes * phases, state.beta)


def floquet_step(
    state: MomentumState,
    params: RotorParams,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> MomentumState:
    """One Floquet period: free evolution first, then the kick."""
    if state.beta != params.beta:
        raise ParameterError(
            f"state beta {state.beta} does not match rotor beta {params.beta}"
        )
    return apply_kick(apply_free(state, params.tau), params.k, edge_threshold)


def kinetic_energy(state: MomentumState) -> float:
    """Kinetic energy ``sum |a_n|^2 (n + beta)^2 / 2`` of a state."""
    n = state.momentum_grid()
    return float(0.5 * np.sum(np.abs(state.amplitudes) ** 2 * (n + state.beta) ** 2))


def _require_same_rotor(params1: RotorParams, params2: RotorParams) -> None:
    if params1.beta != params2.beta or params1.epsilon != params2.epsilon:
        raise ParameterError(
            "fidelity compares rotors differing only in k; "
            f"got beta {params1.beta}/{params2.beta}, "
            f"epsilon {params1.epsilon}/{params2.epsilon}"
        )


def fidelity_single(
    psi0: MomentumState,
    params1: RotorParams,
    params2: RotorParams,
    kicks: int,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> FidelityTrace:
    """Single-rotor fidelity: squared overlap of one state evolved with k1 and k2.

    Parameters
    ----------
    psi0 : MomentumState
        Common initial state; its ``beta`` must match the parameter sets.
    params1, params2 : RotorParams
        Rotor parameters differing only in the kicking strength.
    kicks : int
        Number of Floquet periods T; the trace has T+1 entries.
    """
    _require_same_rotor(params1, params2)
    if psi0.beta != params1.beta:
        raise ParameterError("initial state beta tag does not match the rotors")
    if kicks < 0:
        raise ParameterError("kicks must be >= 0")

    n = psi0.momentum_grid()
    free = free_phase_vector(n, psi0.beta, params1.tau)
    kick1 = kick_phase_vector(params1.k, psi0.basis_size)
    kick2 = kick_phase_vector(params2.k, psi0.basis_size)

    a1 = psi0.amplitudes[None, :].copy()
    a2 = psi0.amplitudes[None, :].copy()
    values = np.empty(kicks + 1)
    values[0] = abs(np.vdot(a1, a2)) ** 2
    for t in range(1, kicks + 1):
        a1 *= free
        a1 = _kick_inplace(a1, kick1)
        a2 *= free
        a2 = _kick_inplace(a2, kick2)
        values[t] = abs(np.vdot(a1, a2)) ** 2
    _check_edges(a1, edge_threshold, f"after {kicks} kicks (k={params1.k})")
    _check_edges(a2, edge_threshold, f"after {kicks} kicks (k={params2.k})")

    meta = {
        "method": "qkr",
        "k1": params1.k,
        "k2": params2.k,
        "epsilon": params1.epsilon,
        "beta": params1.beta,
        "kicks": kicks,
        "basis_size": psi0.basis_size,
        "window": 0,
    }
    return FidelityTrace(kicks=np.arange(kicks + 1), values=values, metadata=meta)


def fidelity_ensemble(
    psi0: MomentumState,
    k1: float,
    k2: float,
    epsilon: float,
    spec: EnsembleSpec,
    kicks: int,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> FidelityTrace:
    """Ensemble fidelity over a quasi-momentum interval.

    The complex single-rotor overlaps are accumulated over the beta grid
    (ascending, fixed order) *before* taking the modulus squared, and the
    sum is divided by ``n_beta`` so that the trace starts at 1 and traces
    with different interval widths are comparable.

    ``psi0`` serves as the amplitude template for every beta value; its own
    beta tag is ignored.
    """
    betas = spec.grid()
    if betas[-1] >= 1.0:
        raise ParameterError("ensemble grid reaches beta = 1; shrink the interval")
    if kicks < 0:
        raise ParameterError("kicks must be >= 0")
    for kk in (k1, k2):
        derive_params(kk, epsilon, float(betas[0]))  # validates k and epsilon

    basis = psi0.basis_size
    tau = 2.0 * math.pi + epsilon
    n = psi0.momentum_grid()
    kick1 = kick_phase_vector(k1, basis)
    kick2 = kick_phase_vector(k2, basis)

    overlap_sum = np.zeros(kicks + 1, dtype=complex)
    for start in range(0, len(betas), _CHUNK_ROWS):
        chunk = betas[start : start + _CHUNK_ROWS]
        free = np.empty((len(chunk), basis), dtype=complex)
        for row, beta in enumerate(chunk):
            free[row] = free_phase_vector(n, float(beta), tau)
        a1 = np.broadcast_to(psi0.amplitudes, (len(chunk), basis)).copy()
        a2 = a1.copy()
        overlap_sum[0] += len(chunk) * np.vdot(psi0.amplitudes, psi0.amplitudes)
        for t in range(1, kicks + 1):
            a1 *= free
            a1 = _kick_inplace(a1, kick1)
            a2 *= free
            a2 = _kick_inplace(a2, kick2)
            overlap_sum[t] += np.vdot(a1, a2)
        _check_edges(a1, edge_threshold, f"in ensemble chunk at beta1={chunk[0]:.4f}")
        _check_edges(a2, edge_threshold, f"in ensemble chunk at beta1={chunk[0]:.4f}")

    values = np.abs(overlap_sum / len(betas)) ** 2
    meta = {
        "method": "qkr-ensemble",
        "k1": k1,
        "k2": k2,
        "epsilon": epsilon,
        "beta1": spec.beta1,
        "delta_beta": spec.delta_beta,
        "n_beta": spec.n_beta,
        "kicks": kicks,
        "basis_size": basis,
        "window": 0,
    }
    return FidelityTrace(kicks=np.arange(kicks + 1), values=values, metadata=meta)
