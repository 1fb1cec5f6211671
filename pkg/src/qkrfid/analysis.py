"""Measurement toolkit: smoothing, maxima, deviations, scaling, validity.

These operations implement the comparison machinery used on fidelity
traces: a centred moving average to cancel fast oscillations, prominence
based maxima detection, relative period/amplitude deviations between two
traces, the time-rescaling fit that collapses ensemble decays onto a
reference curve, and the validity scan that brackets where the pendulum
description works.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .errors import ParameterError
from .evolution import MomentumState, fidelity_ensemble, momentum_eigenstate
from .params import EnsembleSpec, validity_upper_bound
from .perturbative import perturbative_fidelity_ensemble
from .trace import FidelityTrace

DEFAULT_PROMINENCE = 0.02
ISLAND_PROMINENCE = 0.05
MAX_COMPARED_MAXIMA = 10


def moving_average(trace: FidelityTrace, window: int) -> FidelityTrace:
    """Centred moving average with symmetric shrinking windows at the edges.

    The half width is ``window // 2``; at index ``i`` the mean runs over
    ``i - h_i .. i + h_i`` with ``h_i = min(window // 2, i, N-1-i)``, so
    ``window = 1`` is the identity.  Returns a new trace with the raw
    values kept and the smoothed series attached.
    """
    n = len(trace)
    if window < 1 or window > n:
        raise ParameterError(f"window {window} outside [1, {n}]")
    half = window // 2
    values = trace.values
    if half == 0:
        return trace.with_smoothed(values.copy(), window)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    h = np.minimum(half, np.minimum(idx, n - 1 - idx))
    smoothed = (csum[idx + h + 1] - csum[idx - h]) / (2 * h + 1)
    return trace.with_smoothed(smoothed, window)


@dataclass
class MaximaReport:
    """Detected maxima of a smoothed trace.

    ``compared`` holds per-maximum relative deviations (period, amplitude)
    against a reference report once :func:`deviation_measures` has been
    evaluated with this report as the candidate.
    """

    positions: np.ndarray
    amplitudes: np.ndarray
    compared: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.positions)

    def mean_spacing(self) -> float:
        if len(self.positions) < 2:
            raise ParameterError("need at least two maxima for a period")
        return float(np.mean(np.diff(self.positions)))


def find_maxima(trace: FidelityTrace, min_prominence: float = DEFAULT_PROMINENCE) -> MaximaReport:
    """Local maxima with prominence at least ``min_prominence * (max - min)``.

    Uses the smoothed series when present.  For a smoothed trace the first
    and last ``window // 2`` kicks are excluded: there the shrinking edge
    windows have not yet cancelled the fast oscillations, so detections in
    that range are smoothing artifacts rather than pseudo-oscillation
    maxima.  An empty report is allowed.
    """
    series = trace.series()
    span = float(series.max() - series.min())
    if span == 0.0:
        return MaximaReport(positions=np.array([], dtype=int), amplitudes=np.array([]))
    peaks, _ = find_peaks(series, prominence=min_prominence * span)
    if trace.smoothed is not None and trace.window > 1:
        half = trace.window // 2
        peaks = peaks[(peaks >= half) & (peaks <= len(series) - 1 - half)]
    kicks = trace.kicks[peaks]
    return MaximaReport(positions=np.asarray(kicks, dtype=int), amplitudes=series[peaks])


def _align_first_maxima(report_a: MaximaReport, report_b: MaximaReport) -> tuple:
    """Start offsets pairing maxima that are visible in both reports.

    One trace may miss a shallow maximum the other resolves; leading
    unmatched maxima are skipped (advancing whichever report starts
    earlier) until the first pair agrees to within half a mean spacing.
    """
    spacing = report_a.mean_spacing()
    i, j = 0, 0
    while abs(report_a.positions[i] - report_b.positions[j]) > 0.5 * spacing:
        if report_a.positions[i] < report_b.positions[j]:
            i += 1
        else:
            j += 1
        if i >= len(report_a) or j >= len(report_b):
            raise ParameterError("maxima reports share no alignable maximum")
    return i, j


def deviation_measures(report_a: MaximaReport, report_b: MaximaReport) -> tuple:
    """Relative period and amplitude deviation of ``report_b`` from ``report_a``.

    Maxima are matched by order index after aligning the first maxima of
    the two reports.  Over the first ``MAX_COMPARED_MAXIMA`` matched
    maxima, the period deviation compares the mean inter-maximum spacings
    and the amplitude deviation is the maximum relative amplitude
    difference.  Per-maximum deviations are attached to
    ``report_b.compared``.
    """
    if len(report_a) < 2 or len(report_b) < 2:
        raise ParameterError("both reports need at least two maxima")
    i0, j0 = _align_first_maxima(report_a, report_b)
    n = min(len(report_a) - i0, len(report_b) - j0, MAX_COMPARED_MAXIMA)
    if n < 2:
        raise ParameterError("fewer than two matched maxima after alignment")
    pos_a = report_a.positions[i0 : i0 + n]
    pos_b = report_b.positions[j0 : j0 + n]
    spacing_a = float(np.mean(np.diff(pos_a)))
    spacing_b = float(np.mean(np.diff(pos_b)))
    period_dev = abs(spacing_b - spacing_a) / spacing_a

    amp_a = report_a.amplitudes[i0 : i0 + n]
    amp_b = report_b.amplitudes[j0 : j0 + n]
    amp_devs = np.abs(amp_b - amp_a) / np.abs(amp_a)
    pos_devs = np.zeros(n)
    span_a = pos_a - pos_a[0]
    span_b = pos_b - pos_b[0]
    nonzero = span_a != 0
    pos_devs[nonzero] = np.abs(span_b[nonzero] - span_a[nonzero]) / span_a[nonzero]
    report_b.compared = np.column_stack([pos_devs, amp_devs])
    return period_dev, float(amp_devs.max())


@dataclass
class ScalingResult:
    """Time-rescaling factors mapping ensemble traces onto a reference."""

    beta_ref: float
    factors: Dict[float, float]
    objectives: Dict[float, float] = field(default_factory=dict)


def _resample_objective(
    alpha: float,
    cand_vals: np.ndarray,
    ref_vals: np.ndarray,
    min_overlap: int = 16,
) -> float:
    """Mean squared difference between candidate(t) and reference(t/alpha)."""
    t = np.arange(len(cand_vals), dtype=float)
    s = t / alpha
    valid = s <= len(ref_vals) - 1
    if valid.sum() < min_overlap:
        raise ParameterError(
            f"fewer than {min_overlap} overlapping samples after rescaling by {alpha:.4g}"
        )
    ref = np.interp(s[valid], np.arange(len(ref_vals), dtype=float), ref_vals)
    diff = cand_vals[valid] - ref
    return float(np.mean(diff * diff))


def _golden_minimize(fun, lo: float, hi: float, rel_tol: float = 1e-4) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def fit_scaling_factor(
    candidate: FidelityTrace,
    reference: FidelityTrace,
    alpha_range: tuple = (0.1, 10.0),
    grid_points: int = 121,
) -> tuple:
    """Best time-rescaling factor for one candidate trace.

    Minimizes the L2 distance between the smoothed candidate and the
    smoothed reference resampled at ``t / alpha`` over a log-spaced grid
    refined by golden-section search.  Returns ``(alpha, objective)``.
    """
    cand = candidate.series()
    ref = reference.series()
    grid = np.geomspace(alpha_range[0], alpha_range[1], grid_points)
    objs = []
    for a in grid:
        try:
            objs.append(_resample_objective(a, cand, ref))
        except ParameterError:
            objs.append(np.inf)
    best = int(np.argmin(objs))
    if not np.isfinite(objs[best]):
        raise ParameterError("no rescaling factor with sufficient overlap")
    lo = grid[max(0, best - 1)]
    hi = grid[min(len(grid) - 1, best + 1)]
    alpha = _golden_minimize(lambda a: _resample_objective(a, cand, ref), lo, hi)
    return alpha, _resample_objective(alpha, cand, ref)


def scaling_fit(
    traces: Dict[float, FidelityTrace],
    beta_ref: float,
    alpha_range: tuple = (0.1, 10.0),
) -> ScalingResult:
    """Fit rescaling factors for a family of ensemble traces.

    All traces must share the comparison parameters; the reference gets
    ``alpha = 1`` exactly.
    """
    if beta_ref not in traces:
        raise ParameterError(f"reference beta1 {beta_ref} missing from the trace family")
    reference = traces[beta_ref]
    factors: Dict[float, float] = {}
    objectives: Dict[float, float] = {}
    for beta1 in sorted(traces):
        if beta1 == beta_ref:
            factors[beta1] = 1.0
            objectives[beta1] = 0.0
            continue
        alpha, obj = fit_scaling_factor(traces[beta1], reference, alpha_range)
        factors[beta1] = alpha
        objectives[beta1] = obj
    return ScalingResult(beta_ref=beta_ref, factors=factors, objectives=objectives)


def rescaled_trace(trace: FidelityTrace, alpha: float) -> FidelityTrace:
    """Candidate trace resampled onto the reference time axis.

    Under the scaling hypothesis candidate(alpha * s) matches the
    reference at kick ``s``; the returned trace holds those resampled
    values on the integer grid ``s = 0 .. floor(T / alpha)`` (capped at
    the original length).
    """
    t_max = min(len(trace) - 1, int(math.floor((len(trace) - 1) / alpha)))
    s = np.arange(t_max + 1, dtype=float)
    src = np.arange(len(trace), dtype=float)
    values = np.interp(alpha * s, src, trace.values)
    meta = dict(trace.metadata)
    meta["rescaled_by"] = alpha
    out = FidelityTrace(kicks=np.arange(t_max + 1), values=values, metadata=meta)
    if trace.smoothed is not None:
        out.smoothed = np.interp(alpha * s, src, trace.smoothed)
    return out


def first_crossing(trace: FidelityTrace, level: float) -> Optional[int]:
    """First kick at which the analysis series drops below ``level``."""
    below = np.nonzero(trace.series() < level)[0]
    return int(trace.kicks[below[0]]) if len(below) else None


def island_revival_period(k1: float, k2: float, epsilon: float) -> float:
    """Beat period of island revivals between the two kicking strengths.

    Inside the island the pendulum levels are nearly harmonic with spacing
    ``|epsilon| * sqrt(k_tilde)``, so the two evolutions rephase every
    ``2*pi / |sqrt(|eps|*k2) - sqrt(|eps|*k1)|`` kicks.
    """
    ae = abs(epsilon)
    gap = abs(math.sqrt(ae * k2) - math.sqrt(ae * k1))
    if gap == 0.0:
        raise ParameterError("island revivals need two distinct kicking strengths")
    return 2.0 * math.pi / gap


def has_early_island_peaks(
    trace: FidelityTrace,
    prominence: float = ISLAND_PROMINENCE,
    k1: float = None,
    k2: float = None,
    epsilon: float = None,
) -> bool:
    """Detect the short-period revival peaks that mark island onset.

    When the quasi-momentum window of an ensemble reaches into the
    resonance island, the raw fidelity shows small peaks recurring at the
    island beat period.  The detector searches the *raw* trace (a 100-kick
    average would smear the beat away) for maxima with prominence at least
    ``prominence * (max - min)`` within the first few beat periods,
    starting after half a period so the initial fast-oscillation transient
    is excluded.  Comparison parameters default to the trace metadata.
    """
    meta = trace.metadata
    k1 = k1 if k1 is not None else meta.get("k1")
    k2 = k2 if k2 is not None else meta.get("k2")
    epsilon = epsilon if epsilon is not None else meta.get("epsilon")
    if k1 is None or k2 is None or epsilon is None:
        raise ParameterError("island detection needs k1, k2 and epsilon")
    period = island_revival_period(k1, k2, epsilon)
    if trace.kicks[-1] < 1.2 * period:
        raise ParameterError(
            f"trace too short to detect island revivals (need > {1.2 * period:.0f} kicks)"
        )
    values = trace.values
    span = float(values.max() - values.min())
    if span == 0.0:
        return False
    peaks, _ = find_peaks(values, prominence=prominence * span)
    times = trace.kicks[peaks]
    lo = 0.5 * period
    hi = 3.5 * period
    return bool(np.any((times >= lo) & (times <= hi)))


@dataclass
class ValidityRow:
    """Measured validity interval for one detuning."""

    epsilon: float
    lower_lo: float
    lower_hi: float
    upper_lo: float
    upper_hi: float
    upper_theory: float


def _oscillation_agreement(
    qkr: FidelityTrace,
    pert: FidelityTrace,
    tol: float,
    prominence: float,
) -> bool:
    """Pseudo-oscillation width agreement between QKR and perturbative traces.

    Compares the mean maxima spacing when both traces expose at least two
    maxima, otherwise the width of the first decay (first crossing of 0.5).
    """
    rep_q = find_maxima(qkr, prominence)
    rep_p = find_maxima(pert, prominence)
    if len(rep_q) >= 2 and len(rep_p) >= 2:
        period_dev, _ = deviation_measures(rep_q, rep_p)
        return period_dev <= tol
    t_q = first_crossing(qkr, 0.5)
    t_p = first_crossing(pert, 0.5)
    if t_q is None or t_p is None or t_q == 0:
        return False
    return abs(t_p - t_q) / t_q <= tol


def validity_table(
    epsilons: Sequence[float],
    k1: float,
    k2: float,
    beta1_grid: Sequence[float],
    delta_beta: float = 0.06,
    n_beta: int = 1000,
    kicks: int = 2000,
    window: int = 100,
    basis_size: int = 1024,
    order: int = 4,
    agreement_tol: float = 0.10,
    psi0: Optional[MomentumState] = None,
) -> list:
    """Scan ensembles over ``beta1_grid`` and bracket the validity bounds.

    For each detuning, the lower bound interval brackets the onset of
    QKR/perturbative agreement (scanning beta1 upward) and the upper bound
    interval brackets the onset of island peaks in the QKR trace, reported
    in terms of ``beta2 = beta1 + delta_beta``.  ``nan`` marks an onset
    outside the scanned grid.
    """
    rows = []
    grid = sorted(beta1_grid)
    for eps in epsilons:
        agree = []
        island = []
        for beta1 in grid:
            spec = EnsembleSpec(beta1=beta1, delta_beta=delta_beta, n_beta=n_beta)
            template = psi0 if psi0 is not None else momentum_eigenstate(0, basis_size, beta1)
            qkr = moving_average(
                fidelity_ensemble(template, k1, k2, eps, spec, kicks), window
            )
            pert = moving_average(
                perturbative_fidelity_ensemble(template, k1, k2, eps, spec, order, kicks),
                window,
            )
            island.append(has_early_island_peaks(qkr))
            agree.append(_oscillation_agreement(qkr, pert, agreement_tol, DEFAULT_PROMINENCE))

        lower_lo = lower_hi = math.nan
        for i, ok in enumerate(agree):
            if ok:
                lower_hi = grid[i]
                lower_lo = grid[i - 1] if i > 0 else math.nan
                break
        upper_lo = upper_hi = math.nan
        for i, flagged in enumerate(island):
            if flagged:
                upper_hi = grid[i] + delta_beta
                upper_lo = grid[i - 1] + delta_beta if i > 0 else math.nan
                break
        if math.isnan(upper_hi) and grid:
            upper_lo = grid[-1] + delta_beta
        rows.append(
            ValidityRow(
                epsilon=eps,
                lower_lo=lower_lo,
                lower_hi=lower_hi,
                upper_lo=upper_lo,
                upper_hi=upper_hi,
                upper_theory=validity_upper_bound(eps, k2),
            )
        )
    return rows


def validity_rows_to_csv(rows: Sequence[ValidityRow], path) -> None:
    """Write the validity table as CSV mirroring the published layout."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("epsilon,lower_lo,lower_hi,upper_lo,upper_hi,upper_theory\n")
        for r in rows:
            fh.write(
                f"{r.epsilon:.17g},{r.lower_lo:.17g},{r.lower_hi:.17g},"
                f"{r.upper_lo:.17g},{r.upper_hi:.17g},{r.upper_theory:.17g}\n"
            )
