"""Fringe fitting, correlation coefficients and CHSH S-parameters.

Fringes are fitted with N(phi) = A * (1 + V * cos(phi + phi0)) so the
visibility V carries its own covariance entry. Weights are 1/max(N, 1)
per point (Poissonian counting errors, guarded against empty bins).
Correlations measured at distinct phase settings are independent
acquisitions, so the S uncertainty is the quadrature sum of the four
correlation uncertainties.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import csvio
from .errors import DataError, NumericalError
from .states import OUTCOME_DETECTORS, OUTCOMES

#: Canonical CHSH settings (phi_s, phi_i) and the sign of each term in S.
#: With these signs the ideal maximally entangled state reaches +2*sqrt(2).
CHSH_SETTINGS = (
    (0.0, math.pi / 4),
    (0.0, 3 * math.pi / 4),
    (-math.pi / 2, math.pi / 4),
    (-math.pi / 2, 3 * math.pi / 4),
)
CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


@dataclass(eq=False)
class FringeScan:
    """Coincidence counts of one detector pair versus the scanned phase."""

    detector_pair: tuple[str, str]
    phase_rad: np.ndarray
    counts: np.ndarray
    acquisition_time_per_point_s: float

    def __post_init__(self):
        phases = np.asarray(self.phase_rad, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if phases.ndim != 1 or counts.shape != phases.shape:
            raise ValueError("phase_rad and counts must be matching 1-d arrays")
        if phases.size < 5:
            raise ValueError("a fringe scan needs at least 5 points")
        span = phases.max() - phases.min()
        # Endpoint-exclusive uniform scans over one period are accepted.
        if span < 2.0 * math.pi * (1.0 - 1.0 / phases.size) - 1e-9:
            raise ValueError("fringe scan must span at least one period")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if self.acquisition_time_per_point_s <= 0.0:
            raise ValueError("acquisition_time_per_point_s must be positive")
        self.phase_rad = phases
        self.counts = counts


@dataclass(frozen=True)
class VisibilityFit:
    """Result of a sinusoidal fringe fit.

    ``clipped`` flags an unconstrained visibility above 1 that was
    clipped back to the physical range. ``visibility_sigma`` comes from
    the weighted-fit covariance and degenerates to ~0 on noiseless data.
    """

    visibility: float
    visibility_sigma: float
    mean_level: float
    phase_offset_rad: float
    chi2_per_dof: float
    clipped: bool = False


@dataclass(frozen=True)
class CorrelationPoint:
    """Correlation coefficient measured at one pair of phase settings."""

    phi_s: float
    phi_i: float
    value: float
    sigma: float


@dataclass(frozen=True)
class ChshResult:
    S: float
    S_sigma: float
    correlations: tuple[CorrelationPoint, ...]
    mode: str  # "raw" | "net"

    def __post_init__(self):
        if self.mode not in ("raw", "net"):
            raise ValueError("mode must be 'raw' or 'net'")
        if len(self.correlations) != 4:
            raise ValueError("CHSH needs exactly 4 correlations")
        if abs(self.S) > 4.0 + 1e-9:
            raise ValueError("|S| cannot exceed 4")

    def standard_deviations_above_2(self) -> float:
        return (abs(self.S) - 2.0) / self.S_sigma if self.S_sigma > 0 else math.inf


def _fringe_model(phi, amplitude, visibility, phase_offset):
    return amplitude * (1.0 + visibility * np.cos(phi + phase_offset))


def _fringe_jacobian(phi, amplitude, visibility, phase_offset):
    cos_term = np.cos(phi + phase_offset)
    sin_term = np.sin(phi + phase_offset)
    return np.column_stack(
        (1.0 + visibility * cos_term, amplitude * cos_term, -amplitude * visibility * sin_term)
    )


def fit_fringe(scan: FringeScan, max_evaluations: int = 10000) -> VisibilityFit:
    """Weighted least-squares fit of A*(1 + V*cos(phi + phi0)).

    Deterministic initialization: A from the mean count, V from the
    count contrast and phi0 from the discrete Fourier component at the
    known unit period. The covariance is scaled by the reduced
    chi-square, so exact data reports a vanishing uncertainty.
    """
    counts = scan.counts
    if not counts.any():
        raise DataError("no signal: all fringe counts are zero")
    sigma = np.sqrt(np.maximum(counts, 1.0))

    mean_level = float(counts.mean())
    contrast = float((counts.max() - counts.min()) / (counts.max() + counts.min()))
    fourier = np.sum((counts - mean_level) * np.exp(-1j * scan.phase_rad))
    phase0 = float(np.angle(fourier)) if abs(fourier) > 0 else 0.0
    p0 = (mean_level, contrast, phase0)

    try:
        with warnings.catch_warnings():
            # Exact data converges at p0; scipy then cannot estimate the
            # covariance and the analytic Jacobian below takes over.
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                _fringe_model,
                scan.phase_rad,
                counts,
                p0=p0,
                sigma=sigma,
                absolute_sigma=False,
                maxfev=max_evaluations,
            )
    except RuntimeError as exc:
        raise NumericalError(f"fit failed: {exc} (p0={p0!r})") from exc

    amplitude, visibility, phase_offset = (float(v) for v in popt)

    residuals = counts - _fringe_model(scan.phase_rad, amplitude, visibility, phase_offset)
    dof = max(counts.size - 3, 1)
    chi2_per_dof = float(np.sum((residuals / sigma) ** 2) / dof)

    visibility_sigma = float(np.sqrt(pcov[1, 1]))
    if not math.isfinite(visibility_sigma):
        jacobian = _fringe_jacobian(scan.phase_rad, amplitude, visibility, phase_offset) / sigma[:, None]
        pcov = np.linalg.pinv(jacobian.T @ jacobian) * chi2_per_dof
        visibility_sigma = float(np.sqrt(max(pcov[1, 1], 0.0)))

    if visibility < 0.0:
        visibility = -visibility
        phase_offset += math.pi
    phase_offset = math.remainder(phase_offset, 2.0 * math.pi)

    clipped = False
    if visibility > 1.0:
        visibility = 1.0
        clipped = True

    return VisibilityFit(
        visibility=visibility,
        visibility_sigma=visibility_sigma,
        mean_level=amplitude,
        phase_offset_rad=phase_offset,
        chi2_per_dof=chi2_per_dof,
        clipped=clipped,
    )


def expectation_from_counts(counts: Mapping[str, float]) -> tuple[float, float]:
    """Correlation E and its Poisson-propagated sigma from windowed counts.

    E = (N_VV + N_HH - N_VH - N_HV) / N_total; each count carries a
    variance equal to its value.
    """
    values = np.array([float(counts[o]) for o in OUTCOMES])
    if np.any(values < 0):
        raise ValueError("counts must be non-negative")
    total = values.sum()
    if total <= 0:
        raise DataError("no coincidences: total count is zero")
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    numerator = float(signs @ values)
    expectation = numerator / total
    partials = (signs * total - numerator) / total**2
    variance = float(np.sum(partials**2 * values))
    return expectation, math.sqrt(variance)


def chsh(correlations: Sequence[CorrelationPoint], mode: str = "raw") -> ChshResult:
    """Combine four correlations into the CHSH S-parameter.

    The points must be given in the canonical settings order; the signs
    (+, -, +, +) make the ideal state yield +2*sqrt(2).
    """
    if len(correlations) != 4:
        raise ValueError("chsh needs exactly 4 correlation points")
    s_value = sum(sign * point.value for sign, point in zip(CHSH_SIGNS, correlations))
    s_sigma = math.sqrt(sum(point.sigma**2 for point in correlations))
    return ChshResult(
        S=float(s_value), S_sigma=float(s_sigma), correlations=tuple(correlations), mode=mode
    )


def accidental_expectation(
    pair: tuple[str, str],
    dark_rates_hz: Mapping[str, float],
    singles_rates_hz: Mapping[str, float],
    window_ps: float,
    acquisition_time_s: float,
) -> float:
    """Expected accidental coincidences of one detector pair.

    Uncorrelated-rate model: dark1*singles2 + singles1*dark2 minus the
    doubly counted dark1*dark2 term, times window and acquisition time.
    """
    d1, d2 = (dark_rates_hz[det] for det in pair)
    s1, s2 = (singles_rates_hz[det] for det in pair)
    return (d1 * s2 + s1 * d2 - d1 * d2) * window_ps * 1e-12 * acquisition_time_s


def subtract_accidentals(
    counts: Mapping[str, float],
    dark_rates_hz: Mapping[str, float],
    window_ps: float,
    acquisition_time_s: float,
    singles_rates_hz: Mapping[str, float],
) -> dict[str, float]:
    """Windowed counts with the accidental expectation removed (clipped at 0)."""
    if window_ps <= 0.0:
        raise ValueError("window_ps must be positive")
    if acquisition_time_s <= 0.0:
        raise ValueError("acquisition_time_s must be positive")
    for rates in (dark_rates_hz, singles_rates_hz):
        if any(v < 0.0 for v in rates.values()):
            raise ValueError("rates must be non-negative")
    if any(float(counts[o]) < 0.0 for o in OUTCOMES):
        raise ValueError("counts must be non-negative")
    corrected = {}
    for outcome in OUTCOMES:
        pair = OUTCOME_DETECTORS[outcome]
        accidental = accidental_expectation(
            pair, dark_rates_hz, singles_rates_hz, window_ps, acquisition_time_s
        )
        corrected[outcome] = max(0.0, float(counts[outcome]) - accidental)
    return corrected


def write_fringe_csv(path, scan: FringeScan) -> None:
    csvio.write_rows(
        path,
        ("phase_rad", "count"),
        zip(scan.phase_rad.tolist(), [int(c) if float(c).is_integer() else float(c) for c in scan.counts]),
    )


def read_fringe_csv(path, detector_pair: tuple[str, str], acquisition_time_per_point_s: float) -> FringeScan:
    rows = csvio.read_rows(path, ("phase_rad", "count"))
    phases = np.array([float(r[0]) for r in rows])
    counts = np.array([float(r[1]) for r in rows])
    return FringeScan(
        detector_pair=detector_pair,
        phase_rad=phases,
        counts=counts,
        acquisition_time_per_point_s=acquisition_time_per_point_s,
    )


def chsh_result_to_dict(result: ChshResult) -> dict:
    return {
        "S": result.S,
        "S_sigma": result.S_sigma,
        "mode": result.mode,
        "correlations": [
            {"phi_s": p.phi_s, "phi_i": p.phi_i, "E": p.value, "sigma": p.sigma}
            for p in result.correlations
        ],
    }


def write_chsh_json(path, result: ChshResult) -> None:
    Path(path).write_text(
        json.dumps(chsh_result_to_dict(result), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
