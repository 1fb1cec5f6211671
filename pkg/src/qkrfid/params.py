"""Parameter algebra for near-resonant kicked-rotor runs.

A rotor is specified by the kicking strength ``k``, the detuning
``epsilon`` of the kicking period from 2*pi, and the quasi-momentum
``beta``.  Everything else (rescaled kicking strength, momentum offsets,
island size) derives from those three numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RotorParams:
    """Physical and derived parameters of a single beta-rotor.

    Attributes
    ----------
    k : float
        Kicking strength, > 0.
    epsilon : float
        Detuning of the kicking period from 2*pi, nonzero.
    tau : float
        Kicking period, ``2*pi + epsilon``.
    beta : float
        Quasi-momentum in [0, 1).
    k_tilde : float
        Rescaled kicking strength ``|epsilon| * k``.
    xi : float
        Momentum offset ``sgn(epsilon) * (-pi + tau*beta)``.
    xi0 : float
        Leading part of the offset, ``sgn(epsilon) * (2*pi*beta - pi)``;
        satisfies ``xi == xi0 + |epsilon|*beta``.
    """

    k: float
    epsilon: float
    tau: float
    beta: float
    k_tilde: float
    xi: float
    xi0: float

    def with_k(self, k: float) -> "RotorParams":
        """Same rotor with a different kicking strength."""
        return derive_params(k, self.epsilon, self.beta)

    def with_beta(self, beta: float) -> "RotorParams":
        """Same rotor with a different quasi-momentum."""
        return derive_params(self.k, self.epsilon, beta)


def derive_params(k: float, epsilon: float, beta: float) -> RotorParams:
    """Build a :class:`RotorParams` record from the three base parameters.

    Parameters
    ----------
    k : float
        Kicking strength, must be positive.
    epsilon : float
        Detuning from the resonant period, must be nonzero (the
        pseudo-classical rescaling divides by ``|epsilon|``).
    beta : float
        Quasi-momentum, must lie in [0, 1).

    Returns
    -------
    RotorParams
    """
    if not (isinstance(k, (int, float)) and math.isfinite(k)) or k <= 0:
        raise ParameterError(f"kicking strength k must be positive and finite, got {k!r}")
    if not math.isfinite(epsilon) or epsilon == 0.0:
        raise ParameterError(f"detuning epsilon must be nonzero and finite, got {epsilon!r}")
    if not math.isfinite(beta) or not 0.0 <= beta < 1.0:
        raise ParameterError(f"quasi-momentum beta must lie in [0, 1), got {beta!r}")
    sign = 1.0 if epsilon > 0 else -1.0
    tau = TWO_PI + epsilon
    return RotorParams(
        k=float(k),
        epsilon=float(epsilon),
        tau=tau,
        beta=float(beta),
        k_tilde=abs(epsilon) * k,
        xi=sign * (-math.pi + tau * beta),
        xi0=sign * (TWO_PI * beta - math.pi),
    )


def island_half_width(params: RotorParams) -> float:
    """Half width of the resonance island in quasi-momentum units.

    The island of the pendulum approximation has half width
    ``2*sqrt(k*|epsilon|)`` in the rescaled momentum, i.e.
    ``sqrt(|epsilon|*k / pi**2)`` in quasi-momentum.
    """
    return math.sqrt(abs(params.epsilon) * params.k) / math.pi


def validity_upper_bound(epsilon: float, k: float) -> float:
    """Upper validity bound ``1/2 - island_half_width`` on the quasi-momentum.

    ``k`` is passed explicitly: the tabulated bounds use the larger of the
    two kicking strengths entering a fidelity comparison (k2 convention).
    """
    if k <= 0:
        raise ParameterError(f"kicking strength k must be positive, got {k!r}")
    if epsilon == 0.0:
        raise ParameterError("detuning epsilon must be nonzero")
    return 0.5 - math.sqrt(abs(epsilon) * k) / math.pi


@dataclass(frozen=True)
class EnsembleSpec:
    """Uniform discretization of a quasi-momentum interval.

    The ensemble fidelity integral over ``[beta1, beta1 + delta_beta]`` is
    approximated by a Riemann sum over ``n_beta`` uniformly spaced values
    (endpoints included; ``n_beta == 1`` degenerates to the single value
    ``beta1``).
    """

    beta1: float
    delta_beta: float
    n_beta: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta1) or self.beta1 < 0.0:
            raise ParameterError(f"beta1 must be >= 0, got {self.beta1!r}")
        if not math.isfinite(self.delta_beta) or self.delta_beta <= 0.0:
            raise ParameterError(f"delta_beta must be > 0, got {self.delta_beta!r}")
        if self.beta1 + self.delta_beta > 1.0:
            raise ParameterError(
                f"beta grid [{self.beta1}, {self.beta1 + self.delta_beta}] exceeds [0, 1]"
            )
        if not isinstance(self.n_beta, (int, np.integer)) or self.n_beta < 1:
            raise ParameterError(f"n_beta must be a positive integer, got {self.n_beta!r}")

    def grid(self) -> np.ndarray:
        """The beta values of the Riemann sum, ascending."""
        return np.linspace(self.beta1, self.beta1 + self.delta_beta, self.n_beta)
