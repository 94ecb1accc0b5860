"""Filtered biphoton spectrum and the coherence (indistinguishability) factor.

With a cw pump, only the *differential* signal-idler delay is observable
(the pump coherence length of hundreds of metres makes common delays
irrelevant). The coherence factor is therefore the modulus of the
Fourier transform of the normalized filtered spectral density as a
function of that differential delay:

    gamma(dt) = | integral density(Omega) * exp(i * Omega * dt) dOmega |

Energy conservation ties the idler detuning to minus the signal
detuning; the filter profiles are evaluated as centred on conjugate
frequencies, and a residual centre mismatch (the stated filter centres
need not satisfy energy conservation exactly) is absorbed as long as the
passbands still overlap on the energy-conservation line. Frequency and
wavelength widths are related by d_nu = c * d_lambda / lambda^2 at the
filter centre, which is accurate to better than 0.1% at nm bandwidths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import csvio
from .errors import DataError

SPEED_OF_LIGHT_NM_S = 2.99792458e17  # nm / s

FILTER_SHAPES = ("gaussian", "rectangular", "supergaussian")

#: Detuning grid half-span in units of the narrower filter FWHM.
GRID_SPAN_FWHM = 4.0

DEFAULT_GRID_POINTS = 2049


@dataclass(frozen=True)
class SpectralFilter:
    """Bandpass filter described by centre, FWHM and passband shape.

    ``supergaussian`` of order 1 is a Gaussian; the shape approaches a
    rectangle as the order grows. Order 4 approximates the smooth-edged
    flat-top of real tunable bandpass filters and is the default.
    """

    center_nm: float
    fwhm_nm: float
    shape: str = "supergaussian"
    order: int = 4

    def __post_init__(self):
        if self.center_nm <= 0.0:
            raise ValueError("center_nm must be positive")
        if self.fwhm_nm <= 0.0:
            raise ValueError("fwhm_nm must be positive")
        if self.shape not in FILTER_SHAPES:
            raise ValueError(f"unknown filter shape {self.shape!r}")
        if self.shape == "supergaussian" and (self.order < 1 or self.order != int(self.order)):
            raise ValueError("supergaussian order must be an integer >= 1")

    def fwhm_rad_s(self) -> float:
        """Intensity FWHM converted to angular frequency."""
        return 2.0 * math.pi * SPEED_OF_LIGHT_NM_S * self.fwhm_nm / self.center_nm**2

    def center_rad_s(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT_NM_S / self.center_nm

    def transmission(self, detuning_rad_s: np.ndarray) -> np.ndarray:
        """Intensity transmission as a function of detuning from the filter centre."""
        w = self.fwhm_rad_s()
        x = np.asarray(detuning_rad_s, dtype=float)
        if self.shape == "rectangular":
            return (np.abs(x) <= 0.5 * w).astype(float)
        order = 1 if self.shape == "gaussian" else self.order
        return np.exp(-math.log(2.0) * (2.0 * x / w) ** (2 * order))


@dataclass(eq=False)
class BiphotonSpectrum:
    """Normalized spectral density on a signal-side detuning grid.

    ``density`` integrates to one (trapezoid rule on the grid); the grid
    is uniform and symmetric about zero detuning.
    """

    signal_filter: SpectralFilter
    idler_filter: SpectralFilter
    pump_wavelength_nm: float
    detuning_rad_s: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.detuning_rad_s, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or dens.shape != grid.shape:
            raise ValueError("grid and density must be matching 1-d arrays")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("detuning grid must be strictly increasing")
        if np.any(dens < 0.0):
            raise ValueError("spectral density must be non-negative")
        integral = np.trapezoid(dens, grid)
        if abs(integral - 1.0) > 1e-9:
            raise ValueError(f"spectral density must integrate to 1, got {integral!r}")
        self.detuning_rad_s = grid
        self.density = dens


def center_mismatch_rad_s(
    signal_filter: SpectralFilter, idler_filter: SpectralFilter, pump_wavelength_nm: float
) -> float:
    """Angular-frequency offset of the filter centres from energy conservation."""
    omega_p = 2.0 * math.pi * SPEED_OF_LIGHT_NM_S / pump_wavelength_nm
    return omega_p - signal_filter.center_rad_s() - idler_filter.center_rad_s()


def build_biphoton_spectrum(
    signal_filter: SpectralFilter,
    idler_filter: SpectralFilter,
    pump_wavelength_nm: float,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> BiphotonSpectrum:
    """Product density of the two filters along the energy-conservation line.

    density(Omega) is proportional to T_s(+Omega) * T_i(-Omega) where
    Omega is the signal detuning; the idler is detuned by -Omega. Raises
    DataError when the passbands do not overlap on the line, i.e. when
    the centre mismatch exceeds half the sum of the FWHMs.
    """
    if pump_wavelength_nm <= 0.0:
        raise ValueError("pump_wavelength_nm must be positive")
    if grid_points < 64:
        raise ValueError("grid_points must be at least 64")

    w_s = signal_filter.fwhm_rad_s()
    w_i = idler_filter.fwhm_rad_s()
    mismatch = center_mismatch_rad_s(signal_filter, idler_filter, pump_wavelength_nm)
    if abs(mismatch) > 0.5 * (w_s + w_i):
        raise DataError(
            "empty spectrum: filter passbands do not overlap under energy "
            f"conservation (centre mismatch {mismatch / (2 * math.pi * 1e9):.1f} GHz, "
            f"passband half-sum {0.5 * (w_s + w_i) / (2 * math.pi * 1e9):.1f} GHz)"
        )

    half_span = GRID_SPAN_FWHM * min(w_s, w_i)
    grid = np.linspace(-half_span, half_span, grid_points)
    density = signal_filter.transmission(grid) * idler_filter.transmission(-grid)
    integral = np.trapezoid(density, grid)
    if integral <= 0.0:
        raise DataError("empty spectrum: zero product density on the grid")
    return BiphotonSpectrum(
        signal_filter=signal_filter,
        idler_filter=idler_filter,
        pump_wavelength_nm=pump_wavelength_nm,
        detuning_rad_s=grid,
        density=density / integral,
    )


def coherence_function(spectrum: BiphotonSpectrum, delta_t_ps) -> np.ndarray | float:
    """|Fourier transform| of the spectral density at the given delays (ps).

    gamma(0) = 1 by normalization; evaluated by trapezoidal quadrature
    on the spectrum grid. Accepts a scalar or an array of delays.
    """
    dt = np.atleast_1d(np.asarray(delta_t_ps, dtype=float)) * 1e-12
    phases = np.exp(1j * np.outer(dt, spectrum.detuning_rad_s))
    gamma = np.abs(np.trapezoid(spectrum.density * phases, spectrum.detuning_rad_s, axis=-1))
    if np.isscalar(delta_t_ps) or np.asarray(delta_t_ps).ndim == 0:
        return float(gamma[0])
    return gamma


def delay_from_fibre(
    delta_l_m: float,
    delta_lambda_nm: float,
    dispersion_ps_nm_km: float,
    slope_ps_nm2_km: float = 0.0,
    reference_lambda_offset_nm: float = 0.0,
) -> float:
    """Differential group delay (ps) accumulated in an extra fibre length.

    Second-order Taylor expansion of the group delay around the
    wavelength at which the dispersion coefficient is quoted: for a pair
    separated by ``delta_lambda`` whose lower wavelength sits
    ``reference_lambda_offset`` above that reference,

        dt = L_km * (D * dl + 0.5 * S * dl * (dl + 2 * offset))

    With zero slope and offset this reduces to the linear scaling
    dt = R * delta_L with R = 1e-3 * D * delta_lambda.
    """
    if delta_l_m < 0.0:
        raise ValueError("delta_l_m must be non-negative")
    length_km = delta_l_m * 1e-3
    linear = dispersion_ps_nm_km * delta_lambda_nm
    quadratic = 0.5 * slope_ps_nm2_km * delta_lambda_nm * (
        delta_lambda_nm + 2.0 * reference_lambda_offset_nm
    )
    return length_km * (linear + quadratic)


def export_coherence_curve(path, spectrum: BiphotonSpectrum, delta_t_ps) -> None:
    """Write a (delta_t_ps, gamma) reference curve as CSV."""
    dts = np.asarray(delta_t_ps, dtype=float)
    gammas = coherence_function(spectrum, dts)
    csvio.write_rows(path, ("delta_t_ps", "gamma"), zip(dts.tolist(), np.atleast_1d(gammas).tolist()))


def import_coherence_curve(path) -> tuple[np.ndarray, np.ndarray]:
    rows = csvio.read_rows(path, ("delta_t_ps", "gamma"))
    dts = np.array([float(r[0]) for r in rows])
    gammas = np.array([float(r[1]) for r in rows])
    return dts, gammas
