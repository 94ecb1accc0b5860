"""Chromatic-dispersion metrology from fringe-visibility measurements.

A calibrated visibility-versus-delay ruler translates measured fringe
visibilities into temporal delays. Adding fibre of length dL to one arm
delays that contribution by dt = R * dL; fitting R against the ruler by
least squares and normalising by the signal-idler wavelength separation
gives the dispersion coefficient D = 1e3 * R / delta_lambda in
ps/(nm km).

The quoted R uncertainty follows the sum-of-squares-doubling
convention: the offsets (left and right of the minimum) at which the SSE
reaches twice its minimal value, symmetrized as their mean. Both
one-sided offsets are reported alongside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import csvio
from .errors import DataError
from .spectral import BiphotonSpectrum, coherence_function, delay_from_fibre

#: Coarse scan used to bracket the SSE minimum before refinement.
GRID_CANDIDATES = 20
GRID_DECADES = 3.0


@dataclass(eq=False)
class RulerCurve:
    """Ordered (delay ps, visibility) samples starting at zero delay."""

    delta_t_ps: np.ndarray
    visibility: np.ndarray

    def __post_init__(self):
        dts = np.asarray(self.delta_t_ps, dtype=float)
        vis = np.asarray(self.visibility, dtype=float)
        if dts.ndim != 1 or vis.shape != dts.shape or dts.size < 1:
            raise ValueError("delta_t_ps and visibility must be matching 1-d arrays")
        if abs(dts[0]) > 1e-12:
            raise ValueError("ruler must start at zero delay")
        if dts.size > 1 and not np.all(np.diff(dts) > 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(vis < 0.0) or np.any(vis > 1.0 + 1e-9):
            raise ValueError("visibilities must lie in [0, 1]")
        if vis[0] < vis.max() - 1e-12:
            raise ValueError("zero-delay visibility must be the maximum sample")
        self.delta_t_ps = dts
        self.visibility = vis

    def max_delay_ps(self) -> float:
        return float(self.delta_t_ps[-1])

    def value(self, delta_t_ps) -> np.ndarray | float:
        """Linear interpolation; exact at the sample points."""
        dts = np.asarray(delta_t_ps, dtype=float)
        if np.any(dts < -1e-12):
            raise ValueError("delays must be non-negative")
        if np.any(dts > self.max_delay_ps() + 1e-12):
            raise DataError(
                f"ruler too short: requested {float(np.max(dts)):.3f} ps, "
                f"ruler ends at {self.max_delay_ps():.3f} ps"
            )
        out = np.interp(dts, self.delta_t_ps, self.visibility)
        return float(out) if np.ndim(delta_t_ps) == 0 else out


@dataclass(eq=False)
class LengthScan:
    """Measured visibilities for a set of added fibre lengths."""

    delta_l_m: np.ndarray
    visibility: np.ndarray
    visibility_sigma: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.delta_l_m, dtype=float)
        vis = np.asarray(self.visibility, dtype=float)
        sig = np.asarray(self.visibility_sigma, dtype=float)
        if lengths.ndim != 1 or vis.shape != lengths.shape or sig.shape != lengths.shape:
            raise ValueError("scan columns must be matching 1-d arrays")
        if np.any(lengths < 0.0):
            raise ValueError("fibre lengths must be non-negative")
        if np.any(sig <= 0.0):
            raise ValueError("visibility sigmas must be positive")
        self.delta_l_m = lengths
        self.visibility = vis
        self.visibility_sigma = sig


@dataclass(frozen=True)
class ScalingFit:
    """Delay-per-metre scaling factor with its SSE-doubling uncertainty."""

    scaling_ps_per_m: float
    scaling_sigma_ps_per_m: float
    one_sided_ps_per_m: tuple[float, float]
    residual_sse: float


@dataclass(frozen=True)
class DispersionFitResult:
    scaling_ps_per_m: float
    scaling_sigma_ps_per_m: float
    dispersion_ps_nm_km: float
    dispersion_sigma_ps_nm_km: float
    delta_lambda_nm: float
    residual_sse: float
    one_sided_sigmas_ps_per_m: tuple[float, float]


def build_ruler(
    spectrum: BiphotonSpectrum,
    max_delay_ps: float,
    n_samples: int,
    zero_delay_visibility: float = 1.0,
) -> RulerCurve:
    """Sample V_max * gamma(dt) on a uniform delay grid including zero.

    ``max_delay_ps = 0`` degenerates to the single sample (0, V_max).
    """
    if max_delay_ps < 0.0:
        raise ValueError("max_delay_ps must be non-negative")
    if not 0.0 < zero_delay_visibility <= 1.0:
        raise ValueError("zero_delay_visibility must lie in (0, 1]")
    if max_delay_ps == 0.0:
        return RulerCurve(np.array([0.0]), np.array([zero_delay_visibility]))
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    dts = np.linspace(0.0, max_delay_ps, n_samples)
    vis = zero_delay_visibility * np.asarray(coherence_function(spectrum, dts))
    vis = np.clip(vis, 0.0, zero_delay_visibility)
    return RulerCurve(dts, vis)


def _sse_profile(scan: LengthScan, ruler: RulerCurve):
    lengths = scan.delta_l_m
    measured = scan.visibility

    def sse(scaling: float) -> float:
        return float(np.sum((measured - ruler.value(scaling * lengths)) ** 2))

    return sse


def fit_scaling_factor(scan: LengthScan, ruler: RulerCurve) -> ScalingFit:
    """Least-squares delay-per-metre scaling against the ruler.

    Coarse bracket from 20 log-spaced candidates, golden-section
    refinement, then the SSE-doubling offsets for the uncertainty.
    """
    if scan.delta_l_m.size < 3:
        raise ValueError("a length scan needs at least 3 points")
    max_length = scan.delta_l_m.max()
    if max_length <= 0.0:
        raise DataError("unidentifiable: all fibre lengths are zero")
    if ruler.max_delay_ps() <= 0.0:
        raise DataError("ruler too short: single-point ruler cannot be scanned")

    sse = _sse_profile(scan, ruler)
    r_hi = ruler.max_delay_ps() / max_length
    r_lo = r_hi * 10.0**-GRID_DECADES
    candidates = np.geomspace(r_lo, r_hi, GRID_CANDIDATES)
    values = np.array([sse(r) for r in candidates])

    spread = values.max() - values.min()
    if spread <= 1e-12 * max(values.max(), 1.0):
        raise DataError("unidentifiable: objective is flat over the search range")

    best = int(np.argmin(values))
    if best == len(candidates) - 1:
        raise DataError(
            "ruler too short: best scaling sits at the ruler boundary; "
            "extend the ruler or shorten the scan"
        )
    if best == 0:
        # True scaling below the log grid; walk the lower edge down.
        while best == 0 and r_lo > 1e-12 * r_hi:
            r_lo *= 0.1
            candidates = np.geomspace(r_lo, r_hi, GRID_CANDIDATES)
            values = np.array([sse(r) for r in candidates])
            best = int(np.argmin(values))
        if best == 0:
            raise DataError("unidentifiable: no interior minimum in the search range")

    bracket = (candidates[best - 1], candidates[best], candidates[best + 1])
    result = minimize_scalar(sse, bracket=bracket, method="golden", options={"xtol": 1e-12})
    scaling = float(result.x)
    sse_min = float(result.fun)

    target = 2.0 * max(sse_min, 5e-324)

    def crossing(value: float) -> float:
        return sse(value) - target

    if crossing(r_hi) > 0.0:
        right = brentq(crossing, scaling, r_hi) - scaling
    else:
        right = r_hi - scaling  # doubling not reached before the ruler ends
    left_floor = min(scaling * 1e-6, r_lo)
    if crossing(left_floor) > 0.0:
        left = scaling - brentq(crossing, left_floor, scaling)
    else:
        left = scaling - left_floor

    return ScalingFit(
        scaling_ps_per_m=scaling,
        scaling_sigma_ps_per_m=0.5 * (left + right),
        one_sided_ps_per_m=(float(left), float(right)),
        residual_sse=sse_min,
    )


def dispersion_coefficient(
    scaling_ps_per_m: float, scaling_sigma_ps_per_m: float, delta_lambda_nm: float
) -> tuple[float, float]:
    """D = 1e3 * R / delta_lambda, with the uncertainty scaled alike."""
    if delta_lambda_nm <= 0.0:
        raise ValueError("delta_lambda_nm must be positive")
    factor = 1e3 / delta_lambda_nm
    return scaling_ps_per_m * factor, scaling_sigma_ps_per_m * factor


def fit_dispersion(scan: LengthScan, ruler: RulerCurve, delta_lambda_nm: float) -> DispersionFitResult:
    scaling = fit_scaling_factor(scan, ruler)
    disp, disp_sigma = dispersion_coefficient(
        scaling.scaling_ps_per_m, scaling.scaling_sigma_ps_per_m, delta_lambda_nm
    )
    return DispersionFitResult(
        scaling_ps_per_m=scaling.scaling_ps_per_m,
        scaling_sigma_ps_per_m=scaling.scaling_sigma_ps_per_m,
        dispersion_ps_nm_km=disp,
        dispersion_sigma_ps_nm_km=disp_sigma,
        delta_lambda_nm=delta_lambda_nm,
        residual_sse=scaling.residual_sse,
        one_sided_sigmas_ps_per_m=scaling.one_sided_ps_per_m,
    )


@dataclass(frozen=True)
class SensitivityRow:
    delta_lambda_nm: float
    delta_t_ps: float
    visibility: float


def sensitivity_report(
    spectrum: BiphotonSpectrum,
    delta_lambda_options_nm,
    fibre_length_m: float,
    dispersion_assumed_ps_nm_km: float,
    zero_delay_visibility: float = 1.0,
) -> list[SensitivityRow]:
    """Expected delay and visibility per candidate wavelength separation.

    Rows are ordered by increasing separation. The visibility is the
    exact ruler value V_max * gamma(dt) for the given spectrum.
    """
    options = sorted(float(x) for x in delta_lambda_options_nm)
    if not options:
        raise ValueError("delta_lambda_options_nm must be non-empty")
    rows = []
    for delta_lambda in options:
        dt = delay_from_fibre(fibre_length_m, delta_lambda, dispersion_assumed_ps_nm_km)
        vis = zero_delay_visibility * float(coherence_function(spectrum, dt))
        rows.append(SensitivityRow(delta_lambda, dt, vis))
    return rows


def write_ruler_csv(path, ruler: RulerCurve) -> None:
    csvio.write_rows(
        path, ("delta_t_ps", "visibility"), zip(ruler.delta_t_ps.tolist(), ruler.visibility.tolist())
    )


def read_ruler_csv(path) -> RulerCurve:
    rows = csvio.read_rows(path, ("delta_t_ps", "visibility"))
    dts = np.array([float(r[0]) for r in rows])
    vis = np.array([float(r[1]) for r in rows])
    return RulerCurve(dts, vis)


def write_scan_csv(path, scan: LengthScan) -> None:
    csvio.write_rows(
        path,
        ("delta_L_m", "visibility", "sigma"),
        zip(scan.delta_l_m.tolist(), scan.visibility.tolist(), scan.visibility_sigma.tolist()),
    )


def read_scan_csv(path) -> LengthScan:
    rows = csvio.read_rows(path, ("delta_L_m", "visibility", "sigma"))
    return LengthScan(
        delta_l_m=np.array([float(r[0]) for r in rows]),
        visibility=np.array([float(r[1]) for r in rows]),
        visibility_sigma=np.array([float(r[2]) for r in rows]),
    )


def write_fit_json(path, result: DispersionFitResult) -> None:
    payload = {
        "R": result.scaling_ps_per_m,
        "R_sigma": result.scaling_sigma_ps_per_m,
        "D": result.dispersion_ps_nm_km,
        "D_sigma": result.dispersion_sigma_ps_nm_km,
        "delta_lambda": result.delta_lambda_nm,
        "residual_sse": result.residual_sse,
        "one_sided_sigmas": list(result.one_sided_sigmas_ps_per_m),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
