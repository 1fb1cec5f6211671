"""Fidelity time series and their CSV form.

A :class:`FidelityTrace` holds one fidelity value per kick, an optional
smoothed companion series, and a metadata record describing how the trace
was produced.  CSV files carry the columns ``kick,fidelity`` for raw
traces and ``kick,fidelity,smoothed`` once a smoothing window has been
applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ParameterError

VALUE_TOLERANCE = 1e-10


@dataclass
class FidelityTrace:
    """Fidelity per kick with provenance metadata.

    Attributes
    ----------
    kicks : ndarray of int
        Time axis 0 ... T.
    values : ndarray of float
        Raw fidelity values, one per kick.
    metadata : dict
        Parameter record; the key ``"window"`` holds the smoothing window
        (0 for a raw trace).
    smoothed : ndarray of float, optional
        Smoothed values, present once a moving average has been applied.
    """

    kicks: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    smoothed: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.kicks = np.asarray(self.kicks, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.kicks.shape != self.values.shape:
            raise ParameterError("kick axis and values must have equal length")
        if self.smoothed is not None:
            self.smoothed = np.asarray(self.smoothed, dtype=float)
            if self.smoothed.shape != self.values.shape:
                raise ParameterError("smoothed series must match the raw length")
        self.metadata.setdefault("window", 0)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def window(self) -> int:
        return int(self.metadata.get("window", 0))

    def series(self) -> np.ndarray:
        """Series used for analysis: smoothed when available, else raw."""
        return self.smoothed if self.smoothed is not None else self.values

    def validate(self, atol: float = VALUE_TOLERANCE) -> None:
        """Check the fidelity range contract; raises on violation."""
        if np.any(self.values < -atol) or np.any(self.values > 1.0 + atol):
            raise ParameterError("fidelity values outside [0, 1 + tolerance]")

    def with_smoothed(self, smoothed: np.ndarray, window: int) -> "FidelityTrace":
        meta = dict(self.metadata)
        meta["window"] = int(window)
        return replace(self, metadata=meta, smoothed=np.asarray(smoothed, dtype=float))

    def to_csv(self, path) -> None:
        """Write ``kick,fidelity[,smoothed]`` with full float precision."""
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            if self.smoothed is None:
                fh.write("kick,fidelity\n")
                for t, v in zip(self.kicks, self.values):
                    fh.write(f"{t},{v:.17g}\n")
            else:
                fh.write("kick,fidelity,smoothed\n")
                for t, v, s in zip(self.kicks, self.values, self.smoothed):
                    fh.write(f"{t},{v:.17g},{s:.17g}\n")


def trace_from_csv(path) -> FidelityTrace:
    """Read a trace written by :meth:`FidelityTrace.to_csv`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header not in (["kick", "fidelity"], ["kick", "fidelity", "smoothed"]):
        raise ParameterError(f"unexpected trace header {header!r} in {path}")
    if not rows:
        raise ParameterError(f"empty trace file {path}")
    kicks = np.array([int(r[0]) for r in rows])
    values = np.array([float(r[1]) for r in rows])
    smoothed = None
    if len(header) == 3:
        smoothed = np.array([float(r[2]) for r in rows])
    return FidelityTrace(kicks=kicks, values=values, smoothed=smoothed)
