"""Fidelity of the near-resonant quantum kicked rotor.

Simulation library and batch CLI for the fidelity dynamics of beta-rotors
kicked close to the principal quantum resonance: exact Floquet evolution,
the pseudo-classical map and pendulum approximation, exact and WKB
pendulum spectra, perturbative rotational energies, and the analysis
pipeline (smoothing, maxima, deviation criteria, time-rescaling fits,
validity scans).
"""

from .analysis import (
    MaximaReport,
    ScalingResult,
    ValidityRow,
    deviation_measures,
    find_maxima,
    first_crossing,
    fit_scaling_factor,
    has_early_island_peaks,
    moving_average,
    rescaled_trace,
    scaling_fit,
    validity_table,
)
from .errors import (
    BasisOverflowError,
    BracketRootError,
    NumericalGuardError,
    ParameterError,
    QkrError,
    WindowTooSmallError,
)
from .evolution import (
    MomentumState,
    apply_free,
    apply_kick,
    fidelity_ensemble,
    fidelity_single,
    floquet_step,
    kinetic_energy,
    momentum_eigenstate,
    state_from_amplitudes,
)
from .params import (
    EnsembleSpec,
    RotorParams,
    derive_params,
    island_half_width,
    validity_upper_bound,
)
from .pendulum import (
    PendulumEigensystem,
    build_pendulum_matrix,
    exact_energy,
    pendulum_fidelity,
    quantization_lhs,
    wkb_energy,
)
from .perturbative import (
    PerturbativeSpectrum,
    alpha_coefficients,
    elliptic_E,
    perturbative_energy,
    perturbative_fidelity,
    perturbative_fidelity_ensemble,
    perturbative_spectrum,
)
from .pseudoclassical import (
    PhasePoint,
    PhasePortrait,
    classical_action,
    map_orbit,
    map_step,
    orbit_kind,
    pendulum_energy,
    pendulum_flow,
    phase_portrait,
)
from .trace import FidelityTrace, trace_from_csv

__version__ = "0.1.0"
