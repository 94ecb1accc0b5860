"""Experiment configuration: strict JSON schema and bundled defaults.

Configs are plain JSON with a versioned ``schema_version``. Validation
is strict: unknown keys are rejected with their full path so a typo
cannot silently fall back to a default.

Two bundled configurations are provided. ``default_config_dict`` uses
detector parameters at realistic free-running settings (15 Hz dark
counts); with a 324 ps coincidence window the expected accidentals are
then far below one count per acquisition, so raw and noise-subtracted
results almost coincide. ``noise_demo_config_dict`` instead uses
deliberately noisy detectors calibrated so that accidentals are 10% of
the true coincidences, which separates the raw and net S-parameters by
about 0.25 and exercises the subtraction pipeline.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .detection import DetectorSpec, TdcSpec
from .errors import ConfigError
from .performance import SourceBudget
from .spectral import SpectralFilter
from .states import DETECTOR_LABELS, TwoPhotonState, make_source_state

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SourceSettings:
    state: TwoPhotonState
    pair_rate_hz: float
    pump_wavelength_nm: float


@dataclass(frozen=True)
class FilterSettings:
    signal: SpectralFilter
    idler: SpectralFilter
    grid_points: int


@dataclass(frozen=True)
class PhaseSettings:
    alice_phases_rad: tuple[float, ...]
    bob_phases_rad: tuple[float, ...]
    scan_points: int


@dataclass(frozen=True)
class DispersionSettings:
    delta_lambda_nm: float
    scan_lengths_m: tuple[float, ...]
    scaling_ps_per_m: float
    visibility_noise_sigma: float
    ruler_max_delay_ps: float
    ruler_samples: int
    zero_delay_visibility: float


@dataclass(frozen=True)
class PerformanceSettings:
    budget: SourceBudget
    pump_power_mw: float
    coherence_time_factor: float


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int
    seed: int
    source: SourceSettings
    filters: FilterSettings
    detectors: dict[str, DetectorSpec]
    tdc: TdcSpec
    histogram_bins: int
    settings: PhaseSettings
    acquisition_time_per_point_s: float
    dispersion: DispersionSettings | None
    performance: PerformanceSettings | None


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return dict(value)


def _pop(mapping: dict, key: str, path: str, required: bool = True, default=None):
    if key in mapping:
        return mapping.pop(key)
    if required:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return default


def _reject_unknown(mapping: dict, path: str) -> None:
    if mapping:
        offending = sorted(mapping)[0]
        raise ConfigError(f"{path}: unknown key '{offending}'")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _number_list(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_source(raw, path: str) -> SourceSettings:
    section = _require_mapping(raw, path)
    angle = _number(_pop(section, "pump_split_angle_rad", path), f"{path}.pump_split_angle_rad")
    phase = _number(_pop(section, "phase_rad", path), f"{path}.phase_rad")
    coherence = _number(_pop(section, "coherence", path), f"{path}.coherence")
    rate = _number(_pop(section, "pair_rate_hz", path), f"{path}.pair_rate_hz")
    pump = _number(_pop(section, "pump_wavelength_nm", path), f"{path}.pump_wavelength_nm")
    _reject_unknown(section, path)
    if rate < 0.0:
        raise ConfigError(f"{path}.pair_rate_hz: must be non-negative")
    if pump <= 0.0:
        raise ConfigError(f"{path}.pump_wavelength_nm: must be positive")
    try:
        state = make_source_state(angle, phase, coherence)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return SourceSettings(state=state, pair_rate_hz=rate, pump_wavelength_nm=pump)


def _parse_filter(raw, path: str) -> SpectralFilter:
    section = _require_mapping(raw, path)
    center = _number(_pop(section, "center_nm", path), f"{path}.center_nm")
    fwhm = _number(_pop(section, "fwhm_nm", path), f"{path}.fwhm_nm")
    shape = _pop(section, "shape", path, required=False, default="supergaussian")
    order = _pop(section, "order", path, required=False, default=4)
    _reject_unknown(section, path)
    if not isinstance(shape, str):
        raise ConfigError(f"{path}.shape: expected a string")
    try:
        return SpectralFilter(center_nm=center, fwhm_nm=fwhm, shape=shape, order=_integer(order, f"{path}.order"))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_filters(raw, path: str) -> FilterSettings:
    section = _require_mapping(raw, path)
    signal = _parse_filter(_pop(section, "signal", path), f"{path}.signal")
    idler = _parse_filter(_pop(section, "idler", path), f"{path}.idler")
    grid_points = _integer(_pop(section, "grid_points", path, required=False, default=2049), f"{path}.grid_points")
    _reject_unknown(section, path)
    if grid_points < 64:
        raise ConfigError(f"{path}.grid_points: must be at least 64")
    return FilterSettings(signal=signal, idler=idler, grid_points=grid_points)


def _parse_detector(raw, path: str) -> DetectorSpec:
    section = _require_mapping(raw, path)
    kwargs = {
        "efficiency": _number(_pop(section, "efficiency", path), f"{path}.efficiency"),
        "dark_count_rate_hz": _number(
            _pop(section, "dark_count_rate_hz", path, required=False, default=0.0),
            f"{path}.dark_count_rate_hz",
        ),
        "deadtime_us": _number(
            _pop(section, "deadtime_us", path, required=False, default=0.0), f"{path}.deadtime_us"
        ),
        "timing_jitter_fwhm_ps": _number(
            _pop(section, "timing_jitter_fwhm_ps", path, required=False, default=100.0),
            f"{path}.timing_jitter_fwhm_ps",
        ),
    }
    _reject_unknown(section, path)
    try:
        return DetectorSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_detectors(raw, path: str) -> dict[str, DetectorSpec]:
    section = _require_mapping(raw, path)
    detectors = {}
    for label in DETECTOR_LABELS:
        detectors[label] = _parse_detector(_pop(section, label, path), f"{path}.{label}")
    _reject_unknown(section, path)
    return detectors


def _parse_tdc(raw, path: str) -> tuple[TdcSpec, int]:
    section = _require_mapping(raw, path)
    bin_width = _number(_pop(section, "bin_width_ps", path), f"{path}.bin_width_ps")
    window_bins = _integer(
        _pop(section, "coincidence_window_bins", path), f"{path}.coincidence_window_bins"
    )
    histogram_bins = _integer(
        _pop(section, "histogram_bins", path, required=False, default=1000), f"{path}.histogram_bins"
    )
    _reject_unknown(section, path)
    try:
        tdc = TdcSpec(bin_width_ps=bin_width, coincidence_window_bins=window_bins)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if histogram_bins < 2 or histogram_bins % 2:
        raise ConfigError(f"{path}.histogram_bins: must be an even integer >= 2")
    return tdc, histogram_bins


def _parse_settings(raw, path: str) -> PhaseSettings:
    section = _require_mapping(raw, path)
    alice = _number_list(_pop(section, "alice_phases_rad", path), f"{path}.alice_phases_rad")
    bob = _number_list(_pop(section, "bob_phases_rad", path), f"{path}.bob_phases_rad")
    scan_points = _integer(
        _pop(section, "scan_points", path, required=False, default=24), f"{path}.scan_points"
    )
    _reject_unknown(section, path)
    if scan_points < 5:
        raise ConfigError(f"{path}.scan_points: must be at least 5")
    return PhaseSettings(alice_phases_rad=alice, bob_phases_rad=bob, scan_points=scan_points)


def _parse_acquisition(raw, path: str) -> float:
    section = _require_mapping(raw, path)
    time_per_point = _number(_pop(section, "time_per_point_s", path), f"{path}.time_per_point_s")
    _reject_unknown(section, path)
    if time_per_point <= 0.0:
        raise ConfigError(f"{path}.time_per_point_s: must be positive")
    return time_per_point


def _parse_dispersion(raw, path: str) -> DispersionSettings:
    section = _require_mapping(raw, path)
    settings = DispersionSettings(
        delta_lambda_nm=_number(_pop(section, "delta_lambda_nm", path), f"{path}.delta_lambda_nm"),
        scan_lengths_m=_number_list(_pop(section, "scan_lengths_m", path), f"{path}.scan_lengths_m"),
        scaling_ps_per_m=_number(_pop(section, "scaling_ps_per_m", path), f"{path}.scaling_ps_per_m"),
        visibility_noise_sigma=_number(
            _pop(section, "visibility_noise_sigma", path, required=False, default=0.02),
            f"{path}.visibility_noise_sigma",
        ),
        ruler_max_delay_ps=_number(
            _pop(section, "ruler_max_delay_ps", path), f"{path}.ruler_max_delay_ps"
        ),
        ruler_samples=_integer(
            _pop(section, "ruler_samples", path, required=False, default=200), f"{path}.ruler_samples"
        ),
        zero_delay_visibility=_number(
            _pop(section, "zero_delay_visibility", path, required=False, default=1.0),
            f"{path}.zero_delay_visibility",
        ),
    )
    _reject_unknown(section, path)
    if settings.delta_lambda_nm <= 0.0:
        raise ConfigError(f"{path}.delta_lambda_nm: must be positive")
    if settings.scaling_ps_per_m <= 0.0:
        raise ConfigError(f"{path}.scaling_ps_per_m: must be positive")
    if settings.visibility_noise_sigma < 0.0:
        raise ConfigError(f"{path}.visibility_noise_sigma: must be non-negative")
    if any(l < 0.0 for l in settings.scan_lengths_m):
        raise ConfigError(f"{path}.scan_lengths_m: lengths must be non-negative")
    return settings


def _parse_performance(raw, path: str) -> PerformanceSettings:
    section = _require_mapping(raw, path)
    kwargs = {
        "downconversion_efficiency": _number(
            _pop(section, "downconversion_efficiency", path), f"{path}.downconversion_efficiency"
        ),
        "emission_bandwidth_nm": _number(
            _pop(section, "emission_bandwidth_nm", path), f"{path}.emission_bandwidth_nm"
        ),
        "emission_center_nm": _number(
            _pop(section, "emission_center_nm", path), f"{path}.emission_center_nm"
        ),
        "pump_wavelength_nm": _number(
            _pop(section, "pump_wavelength_nm", path), f"{path}.pump_wavelength_nm"
        ),
        "propagation_loss_db": _number(
            _pop(section, "propagation_loss_db", path), f"{path}.propagation_loss_db"
        ),
    }
    pump_power = _number(_pop(section, "pump_power_mw", path), f"{path}.pump_power_mw")
    k_factor = _number(
        _pop(section, "coherence_time_factor", path, required=False, default=0.44),
        f"{path}.coherence_time_factor",
    )
    _reject_unknown(section, path)
    try:
        budget = SourceBudget(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if pump_power < 0.0:
        raise ConfigError(f"{path}.pump_power_mw: must be non-negative")
    if k_factor <= 0.0:
        raise ConfigError(f"{path}.coherence_time_factor: must be positive")
    return PerformanceSettings(budget=budget, pump_power_mw=pump_power, coherence_time_factor=k_factor)


def parse_config(data: dict) -> ExperimentConfig:
    root = _require_mapping(data, "config")
    version = _integer(_pop(root, "schema_version", "config"), "config.schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: unsupported version {version}, expected {SCHEMA_VERSION}")
    seed = _integer(_pop(root, "seed", "config"), "config.seed")
    if seed < 0:
        raise ConfigError("config.seed: must be non-negative")
    source = _parse_source(_pop(root, "source", "config"), "config.source")
    filters = _parse_filters(_pop(root, "filters", "config"), "config.filters")
    detectors = _parse_detectors(_pop(root, "detectors", "config"), "config.detectors")
    tdc, histogram_bins = _parse_tdc(_pop(root, "tdc", "config"), "config.tdc")
    settings = _parse_settings(_pop(root, "settings", "config"), "config.settings")
    acquisition = _parse_acquisition(_pop(root, "acquisition", "config"), "config.acquisition")
    dispersion_raw = _pop(root, "dispersion", "config", required=False)
    dispersion = (
        _parse_dispersion(dispersion_raw, "config.dispersion") if dispersion_raw is not None else None
    )
    performance_raw = _pop(root, "performance", "config", required=False)
    performance = (
        _parse_performance(performance_raw, "config.performance")
        if performance_raw is not None
        else None
    )
    _reject_unknown(root, "config")
    return ExperimentConfig(
        schema_version=version,
        seed=seed,
        source=source,
        filters=filters,
        detectors=detectors,
        tdc=tdc,
        histogram_bins=histogram_bins,
        settings=settings,
        acquisition_time_per_point_s=acquisition,
        dispersion=dispersion,
        performance=performance,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)


#: Ideal coherence needed for a net S-parameter of 2.75.
NET_S_TARGET_COHERENCE = 2.75 / (2.0 * math.sqrt(2.0))


def default_config_dict() -> dict:
    """Bundled defaults: free-running InGaAs-style detectors, 1 nm filters."""
    return copy.deepcopy(
        {
            "schema_version": SCHEMA_VERSION,
            "seed": 1,
            "source": {
                "pump_split_angle_rad": math.pi / 4,
                "phase_rad": 0.0,
                "coherence": NET_S_TARGET_COHERENCE,
                "pair_rate_hz": 1.0e5,
                "pump_wavelength_nm": 780.0,
            },
            "filters": {
                "signal": {"center_nm": 1574.0, "fwhm_nm": 1.0, "shape": "supergaussian", "order": 4},
                "idler": {"center_nm": 1546.0, "fwhm_nm": 1.0, "shape": "supergaussian", "order": 4},
                "grid_points": 2049,
            },
            "detectors": {
                "sV": {"efficiency": 0.15, "dark_count_rate_hz": 15.0, "deadtime_us": 20.0, "timing_jitter_fwhm_ps": 100.0},
                "sH": {"efficiency": 0.15, "dark_count_rate_hz": 15.0, "deadtime_us": 20.0, "timing_jitter_fwhm_ps": 100.0},
                "iV": {"efficiency": 0.20, "dark_count_rate_hz": 15.0, "deadtime_us": 40.0, "timing_jitter_fwhm_ps": 100.0},
                "iH": {"efficiency": 0.20, "dark_count_rate_hz": 15.0, "deadtime_us": 40.0, "timing_jitter_fwhm_ps": 100.0},
            },
            "tdc": {"bin_width_ps": 81.0, "coincidence_window_bins": 4, "histogram_bins": 1000},
            "settings": {
                "alice_phases_rad": [0.0, -math.pi / 2],
                "bob_phases_rad": [math.pi / 4, 3 * math.pi / 4],
                "scan_points": 24,
            },
            "acquisition": {"time_per_point_s": 2.0},
            "dispersion": {
                "delta_lambda_nm": 28.0,
                "scan_lengths_m": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 28.0, 32.0],
                "scaling_ps_per_m": 0.47,
                "visibility_noise_sigma": 0.02,
                "ruler_max_delay_ps": 20.0,
                "ruler_samples": 200,
                "zero_delay_visibility": 1.0,
            },
            "performance": {
                "downconversion_efficiency": 2.5e-6,
                "emission_bandwidth_nm": 40.0,
                "emission_center_nm": 1560.0,
                "pump_wavelength_nm": 780.0,
                "propagation_loss_db": 3.5,
                "pump_power_mw": 116.0,
                "coherence_time_factor": 0.44,
            },
        }
    )


def noise_demo_config_dict() -> dict:
    """Noise-demo configuration with a visible raw/net S separation.

    Dark rates are set so the expected accidentals are 10% of the true
    windowed coincidences (requires ideal efficiency, no deadtime and a
    modest pair rate); the raw S then sits about 0.25 below the net S.
    These detector parameters are deliberately unphysical for
    free-running InGaAs hardware; they exist to exercise the
    noise-subtraction pipeline at realistic statistics.
    """
    cfg = default_config_dict()
    cfg["source"]["pair_rate_hz"] = 1250.0
    for label in ("sV", "sH", "iV", "iH"):
        cfg["detectors"][label] = {
            "efficiency": 1.0,
            "dark_count_rate_hz": 308934.0,
            "deadtime_us": 0.0,
            "timing_jitter_fwhm_ps": 100.0,
        }
    return cfg


def write_config(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
