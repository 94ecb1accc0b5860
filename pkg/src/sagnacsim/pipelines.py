"""End-to-end pipelines behind the CLI commands.

Every pipeline is deterministic given (config, seed): per-acquisition
RNG seeds are derived from the root seed and the position of the
acquisition in the pipeline, and outputs carry no timestamps. Each
command writes a manifest with the config hash, the seed and the SHA-256
of every output file.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from filelock import FileLock, Timeout

from . import __version__
from .analysis import (
    CHSH_SETTINGS,
    ChshResult,
    CorrelationPoint,
    FringeScan,
    VisibilityFit,
    chsh,
    chsh_result_to_dict,
    expectation_from_counts,
    fit_fringe,
    subtract_accidentals,
    write_chsh_json,
    write_fringe_csv,
)
from .config import ExperimentConfig
from .detection import (
    ExperimentRun,
    simulate_run_with_singles,
    windowed_counts,
    write_histogram_csv,
    write_run_sidecar,
)
from .dispersion import (
    DispersionFitResult,
    LengthScan,
    RulerCurve,
    build_ruler,
    fit_dispersion,
    read_ruler_csv,
    read_scan_csv,
    write_fit_json,
    write_ruler_csv,
    write_scan_csv,
)
from .errors import ConfigError, DataError
from .performance import (
    emission_bandwidth_ghz,
    heralding_efficiency,
    pairs_per_coherence_time,
    spectral_brightness,
    total_pair_rate,
)
from .spectral import build_biphoton_spectrum
from .states import DETECTOR_LABELS, OUTCOMES, AnalysisSettings

LOCK_FILENAME = ".sagnacsim.lock"
LOCK_TIMEOUT_S = 10.0


def derive_seed(root_seed: int, *indices: int) -> int:
    """Deterministic per-acquisition seed from the root seed and a position."""
    return int(np.random.SeedSequence((root_seed, *indices)).generate_state(1)[0])


def build_run(
    config: ExperimentConfig, settings: AnalysisSettings, seed: int
) -> ExperimentRun:
    return ExperimentRun(
        state=config.source.state,
        pair_rate_hz=config.source.pair_rate_hz,
        detectors=config.detectors,
        tdc=config.tdc,
        settings=settings,
        acquisition_time_s=config.acquisition_time_per_point_s,
        rng_seed=seed,
        histogram_bins=config.histogram_bins,
    )


def analytic_singles_rates(config: ExperimentConfig) -> dict[str, float]:
    """Expected singles per detector: half the pairs reach each port.

    Pre-deadtime rates; used as the singles input of the accidental
    subtraction.
    """
    rates = {}
    for det in DETECTOR_LABELS:
        spec = config.detectors[det]
        rates[det] = 0.5 * config.source.pair_rate_hz * spec.efficiency + spec.dark_count_rate_hz
    return rates


def dark_rates(config: ExperimentConfig) -> dict[str, float]:
    return {det: config.detectors[det].dark_count_rate_hz for det in DETECTOR_LABELS}


def build_spectrum(config: ExperimentConfig):
    return build_biphoton_spectrum(
        config.filters.signal,
        config.filters.idler,
        config.source.pump_wavelength_nm,
        config.filters.grid_points,
    )


def config_ruler(config: ExperimentConfig) -> RulerCurve:
    if config.dispersion is None:
        raise ConfigError("config has no 'dispersion' section")
    return build_ruler(
        build_spectrum(config),
        config.dispersion.ruler_max_delay_ps,
        config.dispersion.ruler_samples,
        config.dispersion.zero_delay_visibility,
    )


# ---------------------------------------------------------------------------
# CHSH


@dataclass(frozen=True)
class ChshPipelineResult:
    raw: ChshResult
    net: ChshResult
    counts_per_setting: tuple[dict[str, int], ...]


def run_chsh(config: ExperimentConfig, seed: int) -> ChshPipelineResult:
    """Acquire the four canonical settings and form raw and net S values.

    The first two Alice and Bob phases from the config are combined in
    canonical order (a0 b0, a0 b1, a1 b0, a1 b1).
    """
    alice = config.settings.alice_phases_rad
    bob = config.settings.bob_phases_rad
    if len(alice) < 2 or len(bob) < 2:
        raise ConfigError("chsh needs at least two Alice and two Bob phases")
    setting_list = [
        AnalysisSettings(alice[0], bob[0]),
        AnalysisSettings(alice[0], bob[1]),
        AnalysisSettings(alice[1], bob[0]),
        AnalysisSettings(alice[1], bob[1]),
    ]

    singles = analytic_singles_rates(config)
    darks = dark_rates(config)
    window_ps = config.tdc.window_ps()

    raw_points, net_points, per_setting = [], [], []
    for idx, settings in enumerate(setting_list):
        run = build_run(config, settings, derive_seed(seed, 0, idx))
        histograms, _ = simulate_run_with_singles(run)
        counts = windowed_counts(histograms, config.tdc)
        per_setting.append(counts)

        e_raw, sigma_raw = expectation_from_counts(counts)
        raw_points.append(CorrelationPoint(settings.phi_s, settings.phi_i, e_raw, sigma_raw))

        corrected = subtract_accidentals(
            counts, darks, window_ps, config.acquisition_time_per_point_s, singles
        )
        e_net, sigma_net = expectation_from_counts(corrected)
        net_points.append(CorrelationPoint(settings.phi_s, settings.phi_i, e_net, sigma_net))

    return ChshPipelineResult(
        raw=chsh(raw_points, mode="raw"),
        net=chsh(net_points, mode="net"),
        counts_per_setting=tuple(per_setting),
    )


# ---------------------------------------------------------------------------
# Fringes


@dataclass(frozen=True)
class FringeFamily:
    alice_phase_rad: float
    scans: dict[str, FringeScan]  # keyed by outcome
    fits: dict[str, VisibilityFit]


def run_fringes(config: ExperimentConfig, seed: int) -> list[FringeFamily]:
    """Scan Bob's phase for each fixed Alice phase and fit every pair."""
    phases = np.linspace(0.0, 2.0 * math.pi, config.settings.scan_points, endpoint=False)
    families = []
    for a_idx, alice_phase in enumerate(config.settings.alice_phases_rad):
        counts_per_outcome = {outcome: [] for outcome in OUTCOMES}
        for p_idx, bob_phase in enumerate(phases):
            run = build_run(
                config,
                AnalysisSettings(alice_phase, float(bob_phase)),
                derive_seed(seed, 1, a_idx, p_idx),
            )
            histograms, _ = simulate_run_with_singles(run)
            counts = windowed_counts(histograms, config.tdc)
            for outcome in OUTCOMES:
                counts_per_outcome[outcome].append(counts[outcome])

        scans, fits = {}, {}
        for outcome in OUTCOMES:
            scan = FringeScan(
                detector_pair=tuple(outcome),
                phase_rad=phases.copy(),
                counts=np.array(counts_per_outcome[outcome], dtype=float),
                acquisition_time_per_point_s=config.acquisition_time_per_point_s,
            )
            scans[outcome] = scan
            fits[outcome] = fit_fringe(scan)
        families.append(FringeFamily(alice_phase_rad=alice_phase, scans=scans, fits=fits))
    return families


# ---------------------------------------------------------------------------
# Dispersion


def synthesize_length_scan(config: ExperimentConfig, ruler: RulerCurve, seed: int) -> LengthScan:
    """Scan generated from the ruler at the configured scaling plus noise."""
    disp = config.dispersion
    if disp is None:
        raise ConfigError("config has no 'dispersion' section")
    lengths = np.asarray(disp.scan_lengths_m, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
    clean = ruler.value(disp.scaling_ps_per_m * lengths)
    noisy = np.clip(clean + rng.normal(0.0, disp.visibility_noise_sigma, lengths.size), 0.0, 1.0)
    sigma = max(disp.visibility_noise_sigma, 1e-9)
    return LengthScan(
        delta_l_m=lengths,
        visibility=noisy,
        visibility_sigma=np.full(lengths.size, sigma),
    )


def run_dispersion_fit(
    config: ExperimentConfig,
    seed: int,
    scan: LengthScan | None = None,
    ruler: RulerCurve | None = None,
) -> tuple[DispersionFitResult, LengthScan, RulerCurve]:
    if config.dispersion is None:
        raise ConfigError("config has no 'dispersion' section")
    if ruler is None:
        ruler = config_ruler(config)
    if scan is None:
        scan = synthesize_length_scan(config, ruler, seed)
    result = fit_dispersion(scan, ruler, config.dispersion.delta_lambda_nm)
    return result, scan, ruler


# ---------------------------------------------------------------------------
# Performance


def run_performance(config: ExperimentConfig) -> dict[str, float]:
    if config.performance is None:
        raise ConfigError("config has no 'performance' section")
    perf = config.performance
    brightness = spectral_brightness(perf.budget)
    return {
        "spectral_brightness_pairs_per_s_mw_ghz": brightness,
        "emission_bandwidth_ghz": emission_bandwidth_ghz(perf.budget),
        "total_pair_rate_hz": total_pair_rate(perf.budget, perf.pump_power_mw),
        "pairs_per_coherence_time": pairs_per_coherence_time(
            brightness, perf.pump_power_mw, perf.coherence_time_factor
        ),
        "heralding_efficiency": heralding_efficiency(perf.budget.propagation_loss_db),
    }


# ---------------------------------------------------------------------------
# Output directory plumbing


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config_path, seed: int, outputs) -> Path:
    manifest = {
        "command": command,
        "config_sha256": _sha256(Path(config_path)),
        "seed": seed,
        "version": __version__,
        "outputs": {name: _sha256(out_dir / name) for name in sorted(outputs)},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class output_lock:
    """Exclusive lock on an output directory (no concurrent writers)."""

    def __init__(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(out_dir / LOCK_FILENAME)

    def __enter__(self):
        try:
            self._lock.acquire(timeout=LOCK_TIMEOUT_S)
        except Timeout as exc:
            raise DataError(
                f"output directory is locked by another process: {self._lock.lock_file}"
            ) from exc
        return self

    def __exit__(self, *exc_info):
        self._lock.release()
        return False


def write_simulate_outputs(out_dir: Path, config: ExperimentConfig, config_path, seed: int) -> list[str]:
    alice = config.settings.alice_phases_rad[0]
    bob = config.settings.bob_phases_rad[0]
    run = build_run(config, AnalysisSettings(alice, bob), derive_seed(seed, 0, 0))
    histograms, singles = simulate_run_with_singles(run)

    outputs = []
    histogram_files = {}
    for label, histogram in sorted(histograms.items()):
        name = f"histogram_{label}.csv"
        write_histogram_csv(out_dir / name, histogram)
        histogram_files[label] = name
        outputs.append(name)

    write_run_sidecar(out_dir / "simulate_metadata.json", run, histogram_files)
    outputs.append("simulate_metadata.json")

    counts = windowed_counts(histograms, config.tdc)
    summary = {
        "windowed_counts": counts,
        "singles": singles,
        "settings": {"phi_s": alice, "phi_i": bob},
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append("summary.json")
    _write_manifest(out_dir, "simulate", config_path, seed, outputs)
    return outputs


def write_fringe_outputs(out_dir: Path, config: ExperimentConfig, config_path, seed: int) -> list[str]:
    families = run_fringes(config, seed)
    outputs = []
    fits_payload = []
    for a_idx, family in enumerate(families):
        family_fits = {"alice_phase_rad": family.alice_phase_rad, "fits": {}}
        for outcome in OUTCOMES:
            name = f"fringe_a{a_idx}_{outcome}.csv"
            write_fringe_csv(out_dir / name, family.scans[outcome])
            outputs.append(name)
            fit = family.fits[outcome]
            family_fits["fits"][outcome] = {
                "visibility": fit.visibility,
                "visibility_sigma": fit.visibility_sigma,
                "mean_level": fit.mean_level,
                "phase_offset_rad": fit.phase_offset_rad,
                "chi2_per_dof": fit.chi2_per_dof,
                "clipped": fit.clipped,
            }
        fits_payload.append(family_fits)
    (out_dir / "fringe_fits.json").write_text(
        json.dumps(fits_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs.append("fringe_fits.json")
    _write_manifest(out_dir, "fringes", config_path, seed, outputs)
    return outputs


def write_chsh_outputs(out_dir: Path, config: ExperimentConfig, config_path, seed: int) -> list[str]:
    result = run_chsh(config, seed)
    write_chsh_json(out_dir / "chsh_raw.json", result.raw)
    write_chsh_json(out_dir / "chsh_net.json", result.net)
    counts_payload = [
        {"setting_index": idx, "windowed_counts": counts}
        for idx, counts in enumerate(result.counts_per_setting)
    ]
    (out_dir / "chsh_counts.json").write_text(
        json.dumps(counts_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    outputs = ["chsh_raw.json", "chsh_net.json", "chsh_counts.json"]
    _write_manifest(out_dir, "chsh", config_path, seed, outputs)
    return outputs


def write_ruler_outputs(out_dir: Path, config: ExperimentConfig, config_path, seed: int) -> list[str]:
    ruler = config_ruler(config)
    write_ruler_csv(out_dir / "ruler.csv", ruler)
    outputs = ["ruler.csv"]
    _write_manifest(out_dir, "ruler", config_path, seed, outputs)
    return outputs


def write_dispersion_outputs(
    out_dir: Path,
    config: ExperimentConfig,
    config_path,
    seed: int,
    scan_path=None,
    ruler_path=None,
) -> list[str]:
    ruler = read_ruler_csv(ruler_path) if ruler_path else None
    scan = read_scan_csv(scan_path) if scan_path else None
    result, scan_used, ruler_used = run_dispersion_fit(config, seed, scan=scan, ruler=ruler)
    write_fit_json(out_dir / "dispersion_fit.json", result)
    write_scan_csv(out_dir / "length_scan.csv", scan_used)
    write_ruler_csv(out_dir / "ruler.csv", ruler_used)
    outputs = ["dispersion_fit.json", "length_scan.csv", "ruler.csv"]
    _write_manifest(out_dir, "dispersion-fit", config_path, seed, outputs)
    return outputs


def write_performance_outputs(
    out_dir: Path, config: ExperimentConfig, config_path, seed: int, output_format: str = "json"
) -> list[str]:
    report = run_performance(config)
    if output_format == "json":
        (out_dir / "performance.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        outputs = ["performance.json"]
    else:
        lines = ["quantity,value"] + [f"{key},{value!r}" for key, value in sorted(report.items())]
        (out_dir / "performance.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs = ["performance.csv"]
    _write_manifest(out_dir, "performance", config_path, seed, outputs)
    return outputs
