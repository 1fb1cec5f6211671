"""Pseudo-classical map, pendulum flow, and phase portraits.

In the limit of small detuning the beta-rotor reduces to a classical
kicked rotor in the rescaled momentum ``I = |epsilon| * n`` with kicking
strength ``k_tilde = |epsilon| * k``.  Near a stable fixed point the map
is well approximated by the pendulum Hamiltonian
``H(I, theta) = (I + xi)**2 / 2 + k_tilde * cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError
from .params import RotorParams

TWO_PI = 2.0 * math.pi

# Suzuki/4th-order composition of leapfrog substeps: the plain second-order
# scheme misses the 1e-8 energy budget at the default step size.
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


@dataclass(frozen=True)
class PhasePoint:
    """One point of the rescaled phase space (cylinder)."""

    I: float
    theta: float


def default_time_step(params: RotorParams) -> float:
    """Default integrator step, a small fraction of the libration period."""
    return 1e-3 * TWO_PI / math.sqrt(params.k_tilde)


def max_time_step(params: RotorParams) -> float:
    """Documented stability bound for the symplectic integrator."""
    return 0.05 / math.sqrt(params.k_tilde)


def pendulum_energy(point: PhasePoint, params: RotorParams) -> float:
    """Pendulum Hamiltonian at a phase-space point."""
    return 0.5 * (point.I + params.xi) ** 2 + params.k_tilde * math.cos(point.theta)


def orbit_kind(point: PhasePoint, params: RotorParams) -> str:
    """Classify a seed as ``"librational"`` (inside the island) or ``"rotational"``."""
    return "librational" if pendulum_energy(point, params) < params.k_tilde else "rotational"


def map_step(point: PhasePoint, params: RotorParams) -> PhasePoint:
    """One step of the pseudo-classical standard map.

    The angle updates first with the old momentum, then the momentum kick
    uses the *new* angle:

        theta' = theta + sgn(epsilon)*I - pi + tau*beta   (mod 2*pi)
        I'     = I + k_tilde * sin(theta')
    """
    sign = 1.0 if params.epsilon > 0 else -1.0
    theta = (point.theta + sign * point.I - math.pi + params.tau * params.beta) % TWO_PI
    return PhasePoint(I=point.I + params.k_tilde * math.sin(theta), theta=theta)


def map_orbit(point: PhasePoint, params: RotorParams, steps: int) -> np.ndarray:
    """Iterate the map; returns an array of shape (steps+1, 2) as (theta, I)."""
    out = np.empty((steps + 1, 2))
    out[0] = (point.theta % TWO_PI, point.I)
    p = PhasePoint(I=point.I, theta=point.theta % TWO_PI)
    for t in range(1, steps + 1):
        p = map_step(p, params)
        out[t] = (p.theta, p.I)
    return out


def _leapfrog(theta: float, p: float, dt: float, k_tilde: float) -> tuple:
    """Kick-drift-kick step for H = p**2/2 + k_tilde*cos(theta), p = I + xi."""
    p += 0.5 * dt * k_tilde * math.sin(theta)
    theta += dt * p
    p += 0.5 * dt * k_tilde * math.sin(theta)
    return theta, p


def pendulum_flow(
    point: PhasePoint,
    params: RotorParams,
    dt: float = None,
    steps: int = 1000,
) -> np.ndarray:
    """Integrate the pendulum flow with a symplectic composition scheme.

    Parameters
    ----------
    point : PhasePoint
        Initial condition.
    params : RotorParams
        Supplies ``k_tilde`` and ``xi``.
    dt : float, optional
        Time step; defaults to :func:`default_time_step` and must satisfy
        ``dt <= 0.05 / sqrt(k_tilde)``.
    steps : int
        Number of steps; one map step corresponds to unit time.

    Returns
    -------
    ndarray of shape (steps+1, 2)
        Columns (theta mod 2*pi, I).
    """
    if dt is None:
        dt = default_time_step(params)
    if dt <= 0 or dt > max_time_step(params):
        raise ParameterError(
            f"time step {dt} outside (0, {max_time_step(params):.4g}] stability bound"
        )
    kt = params.k_tilde
    theta = float(point.theta)
    p = float(point.I + params.xi)
    out = np.empty((steps + 1, 2))
    out[0] = (theta % TWO_PI, point.I)
    for t in range(1, steps + 1):
        theta, p = _leapfrog(theta, p, _W1 * dt, kt)
        theta, p = _leapfrog(theta, p, _W0 * dt, kt)
        theta, p = _leapfrog(theta, p, _W1 * dt, kt)
        out[t] = (theta % TWO_PI, p - params.xi)
    return out


@dataclass
class PhasePortrait:
    """Orbit clouds of the map and the pendulum flow from common seeds."""

    map_orbits: list
    pendulum_orbits: list

    def to_csv(self, path_map, path_pendulum) -> None:
        """Write ``orbit_id,step,theta,I`` per dynamics type."""
        for path, orbits in ((path_map, self.map_orbits), (path_pendulum, self.pendulum_orbits)):
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write("orbit_id,step,theta,I\n")
                for oid, orbit in enumerate(orbits):
                    for step, (theta, I) in enumerate(orbit):
                        fh.write(f"{oid},{step},{theta:.17g},{I:.17g}\n")


def phase_portrait(
    params: RotorParams,
    seeds: Sequence[PhasePoint],
    steps: int,
    dt: float = None,
) -> PhasePortrait:
    """Run the map and the pendulum flow from the same seeds.

    Pendulum orbits are sampled at unit time (one sample per map step) so
    both clouds can be overlaid; the flow substeps internally with ``dt``.
    """
    if dt is None:
        dt = default_time_step(params)
    substeps = max(1, int(math.ceil(1.0 / dt)))
    map_orbits = [map_orbit(seed, params, steps) for seed in seeds]
    pendulum_orbits = []
    for seed in seeds:
        full = pendulum_flow(seed, params, dt=1.0 / substeps, steps=steps * substeps)
        pendulum_orbits.append(full[::substeps].copy())
    return PhasePortrait(map_orbits=map_orbits, pendulum_orbits=pendulum_orbits)


def classical_action(
    theta_i: float,
    theta: float,
    energy: float,
    params: RotorParams,
    epsabs: float = 1e-12,
) -> float:
    """Rotational-orbit action integral between two angles.

    Evaluates ``integral sqrt(2*(E - k_tilde*cos(phi))) dphi`` from
    ``theta_i`` to ``theta`` minus ``xi * (theta - theta_i)`` by adaptive
    quadrature.  Requires ``E > k_tilde`` so the integrand stays real
    (no turning point on the path).
    """
    if energy <= params.k_tilde:
        raise ParameterError(
            f"action requires the rotational regime E > k_tilde, got E={energy}, "
            f"k_tilde={params.k_tilde}"
        )
    kt = params.k_tilde

    def integrand(phi: float) -> float:
        return math.sqrt(2.0 * (energy - kt * math.cos(phi)))

    value, _ = quad(integrand, theta_i, theta, epsabs=epsabs, epsrel=1e-12, limit=200)
    return value - params.xi * (theta - theta_i)
